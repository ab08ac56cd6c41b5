from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, List, Sequence, Set, Tuple

from mlembed.core_errors import InvalidLayerError

Adjacency = Tuple[Tuple[int, ...], ...]
Triple = Tuple[int, int, int]
Pair = Tuple[int, int]


def canonical_pair(a: int, b: int) -> Pair:
    return (a, b) if a < b else (b, a)


def _sorted_contains(values: Sequence[int], target: int) -> bool:
    pos = bisect_left(values, target)
    return pos < len(values) and values[pos] == target


def _adjacency_from_pairs(num_nodes: int, pairs: Iterable[Pair]) -> Adjacency:
    buckets: List[Set[int]] = [set() for _ in range(num_nodes)]
    for a, b in pairs:
        buckets[a].add(b)
        buckets[b].add(a)
    return tuple(tuple(sorted(bucket)) for bucket in buckets)


@dataclass(frozen=True)
class Graph:
    num_nodes: int
    adjacency: Adjacency
    edge_count: int

    def neighbors(self, node: int) -> Tuple[int, ...]:
        return self.adjacency[node]

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def has_edge(self, a: int, b: int) -> bool:
        return _sorted_contains(self.adjacency[a], b)

    def edges(self) -> Iterator[Pair]:
        for a, nbrs in enumerate(self.adjacency):
            for b in nbrs:
                if a < b:
                    yield (a, b)


@dataclass(frozen=True)
class MultilayerNetwork:
    """Shared vertex set, one simple undirected graph per layer.

    adjacency[layer][node] is a sorted tuple of neighbor ids.
    """

    num_nodes: int
    num_layers: int
    adjacency: Tuple[Adjacency, ...]
    edge_count: int
    layer_names: Tuple[str, ...] = ()
    self_loops_dropped: int = field(default=0, compare=False)
    duplicates_dropped: int = field(default=0, compare=False)

    def check_layer(self, layer: int) -> None:
        if not 0 <= layer < self.num_layers:
            raise InvalidLayerError(
                f"Capa fuera de rango: {layer} (capas validas 0..{self.num_layers - 1})"
            )

    def neighbors(self, layer: int, node: int) -> Tuple[int, ...]:
        return self.adjacency[layer][node]

    def has_edge(self, a: int, b: int, layer: int) -> bool:
        return _sorted_contains(self.adjacency[layer][a], b)

    @cached_property
    def _incident(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(
            tuple(
                layer
                for layer in range(self.num_layers)
                if self.adjacency[layer][node]
            )
            for node in range(self.num_nodes)
        )

    def incident_layers(self, node: int) -> Tuple[int, ...]:
        return self._incident[node]

    def layer_edge_counts(self) -> List[int]:
        return [
            sum(len(nbrs) for nbrs in self.adjacency[layer]) // 2
            for layer in range(self.num_layers)
        ]

    def layer_label(self, layer: int) -> str:
        if layer < len(self.layer_names):
            return self.layer_names[layer]
        return str(layer)

    def triples(self) -> List[Triple]:
        out: List[Triple] = []
        for layer in range(self.num_layers):
            for a, nbrs in enumerate(self.adjacency[layer]):
                for b in nbrs:
                    if a < b:
                        out.append((a, b, layer))
        out.sort()
        return out


def build_graph(num_nodes: int, pairs: Iterable[Pair]) -> Graph:
    clean: Set[Pair] = set()
    for a, b in pairs:
        if not (0 <= a < num_nodes and 0 <= b < num_nodes):
            raise ValueError(f"Nodo fuera de rango en arista ({a}, {b})")
        if a == b:
            continue
        clean.add(canonical_pair(a, b))
    return Graph(
        num_nodes=num_nodes,
        adjacency=_adjacency_from_pairs(num_nodes, clean),
        edge_count=len(clean),
    )


def build_multilayer(
    num_nodes: int,
    num_layers: int,
    triples: Iterable[Triple],
    layer_names: Sequence[str] = (),
) -> MultilayerNetwork:
    per_layer: List[Set[Pair]] = [set() for _ in range(num_layers)]
    self_loops = 0
    duplicates = 0
    for a, b, layer in triples:
        if not 0 <= layer < num_layers:
            raise InvalidLayerError(f"Capa fuera de rango: {layer}")
        if not (0 <= a < num_nodes and 0 <= b < num_nodes):
            raise ValueError(f"Nodo fuera de rango en arista ({a}, {b}, {layer})")
        if a == b:
            self_loops += 1
            continue
        pair = canonical_pair(a, b)
        if pair in per_layer[layer]:
            duplicates += 1
            continue
        per_layer[layer].add(pair)
    return MultilayerNetwork(
        num_nodes=num_nodes,
        num_layers=num_layers,
        adjacency=tuple(_adjacency_from_pairs(num_nodes, pairs) for pairs in per_layer),
        edge_count=sum(len(pairs) for pairs in per_layer),
        layer_names=tuple(layer_names),
        self_loops_dropped=self_loops,
        duplicates_dropped=duplicates,
    )


def merge(mn: MultilayerNetwork) -> Graph:
    pairs: Set[Pair] = set()
    for a, b, _layer in mn.triples():
        pairs.add((a, b))
    return Graph(
        num_nodes=mn.num_nodes,
        adjacency=_adjacency_from_pairs(mn.num_nodes, pairs),
        edge_count=len(pairs),
    )


def layer_graph(mn: MultilayerNetwork, layer: int) -> Graph:
    mn.check_layer(layer)
    adjacency = mn.adjacency[layer]
    return Graph(
        num_nodes=mn.num_nodes,
        adjacency=adjacency,
        edge_count=sum(len(nbrs) for nbrs in adjacency) // 2,
    )


def connected_layers(mn: MultilayerNetwork, node: int) -> int:
    return len(mn.incident_layers(node))


def incident_layers(mn: MultilayerNetwork, node: int) -> List[int]:
    return list(mn.incident_layers(node))


def remove_pairs(mn: MultilayerNetwork, pairs: Iterable[Pair]) -> MultilayerNetwork:
    """Drops every listed node pair from all layers."""
    banned = {canonical_pair(a, b) for a, b in pairs}
    kept = [(a, b, layer) for a, b, layer in mn.triples() if (a, b) not in banned]
    return build_multilayer(mn.num_nodes, mn.num_layers, kept, mn.layer_names)


def as_single_layer(g: Graph) -> MultilayerNetwork:
    return MultilayerNetwork(
        num_nodes=g.num_nodes,
        num_layers=1,
        adjacency=(g.adjacency,),
        edge_count=g.edge_count,
    )
