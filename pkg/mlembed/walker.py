from __future__ import annotations

import math
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from common.config import (
    DEFAULT_NUM_WALKS,
    DEFAULT_P,
    DEFAULT_Q,
    DEFAULT_R,
    DEFAULT_SEED,
    DEFAULT_WALK_LENGTH,
)
from mlembed.core_errors import ConfigError, DeadEndError
from mlembed.core_rng import STREAM_WALK, make_stream
from mlembed.graph_core import Graph, MultilayerNetwork, as_single_layer


@dataclass(frozen=True)
class WalkParams:
    p: float = DEFAULT_P
    q: float = DEFAULT_Q
    r: float = DEFAULT_R
    num_walks: int = DEFAULT_NUM_WALKS
    walk_length: int = DEFAULT_WALK_LENGTH
    seed: int = DEFAULT_SEED
    uniform_edge_start: bool = False
    workers: int = 1

    def validate(self) -> None:
        if not self.p > 0:
            raise ConfigError(f"--p debe ser > 0 (recibido {self.p})")
        if not self.q > 0:
            raise ConfigError(f"--q debe ser > 0 (recibido {self.q})")
        if not 0.0 <= self.r <= 1.0:
            raise ConfigError(f"--r debe estar en [0, 1] (recibido {self.r})")
        if self.num_walks < 1:
            raise ConfigError(f"--num-walks debe ser >= 1 (recibido {self.num_walks})")
        if self.walk_length < 1:
            raise ConfigError(f"--walk-length debe ser >= 1 (recibido {self.walk_length})")
        if self.workers < 1:
            raise ConfigError(f"--threads debe ser >= 1 (recibido {self.workers})")


@dataclass(frozen=True)
class WalkStep:
    prev: int
    curr: int
    layer: int


@dataclass
class WalkCorpus:
    walks: List[List[int]]
    # layers[i][k] is the layer used to go from walks[i][k] to walks[i][k + 1].
    layers: List[List[int]] = field(default_factory=list)

    @property
    def total_tokens(self) -> int:
        return sum(len(walk) for walk in self.walks)

    @property
    def singletons(self) -> int:
        return sum(1 for walk in self.walks if len(walk) == 1)

    def layer_switch_rate(self) -> Optional[float]:
        transitions = 0
        switches = 0
        for trace in self.layers:
            for before, after in zip(trace, trace[1:]):
                transitions += 1
                if before != after:
                    switches += 1
        if transitions == 0:
            return None
        return switches / transitions


def alpha_pq(
    mn: MultilayerNetwork,
    z: int,
    x_candidate: int,
    layer: int,
    p: float,
    q: float,
) -> float:
    if x_candidate == z:
        return 1.0 / p
    if mn.has_edge(z, x_candidate, layer):
        return 1.0
    return 1.0 / q


def step_distribution(
    mn: MultilayerNetwork,
    state: WalkStep,
    params: WalkParams,
) -> List[Tuple[WalkStep, float]]:
    x = state.curr
    layers = mn.incident_layers(x)
    if not layers:
        raise DeadEndError(f"Nodo sin aristas: {x}")
    n_layers = len(layers)
    candidates: List[WalkStep] = []
    weights: List[float] = []
    for layer in layers:
        if n_layers == 1:
            factor = 1.0
        elif layer == state.layer:
            factor = params.r
        else:
            factor = (1.0 - params.r) / (n_layers - 1)
        if factor <= 0.0:
            continue
        for y in mn.neighbors(layer, x):
            candidates.append(WalkStep(prev=x, curr=y, layer=layer))
            weights.append(factor * alpha_pq(mn, state.prev, y, layer, params.p, params.q))
    total = math.fsum(weights)
    return [(step, weight / total) for step, weight in zip(candidates, weights)]


def graph_step_distribution(
    g: Graph,
    prev: int,
    curr: int,
    p: float,
    q: float,
) -> List[Tuple[int, float]]:
    view = as_single_layer(g)
    params = WalkParams(p=p, q=q, r=1.0)
    return [
        (step.curr, prob)
        for step, prob in step_distribution(view, WalkStep(prev, curr, 0), params)
    ]


def sample_step(
    distribution: Sequence[Tuple[WalkStep, float]],
    rng: np.random.Generator,
) -> WalkStep:
    cumulative = list(accumulate(prob for _step, prob in distribution))
    return distribution[_draw_index(cumulative, rng)][0]


def _draw_index(cumulative: Sequence[float], rng: np.random.Generator) -> int:
    idx = bisect_right(cumulative, rng.random() * cumulative[-1])
    return min(idx, len(cumulative) - 1)


class TransitionCache:
    """Memoized step distributions keyed by (prev, curr, layer).

    Draws are identical to sample_step(step_distribution(...)).
    """

    def __init__(self, mn: MultilayerNetwork, params: WalkParams) -> None:
        self.mn = mn
        self.params = params
        self._table: Dict[Tuple[int, int, int], Tuple[List[Tuple[int, int]], List[float]]] = {}

    def __len__(self) -> int:
        return len(self._table)

    def _entry(self, key: Tuple[int, int, int]) -> Tuple[List[Tuple[int, int]], List[float]]:
        entry = self._table.get(key)
        if entry is None:
            distribution = step_distribution(self.mn, WalkStep(*key), self.params)
            entry = (
                [(step.curr, step.layer) for step, _prob in distribution],
                list(accumulate(prob for _step, prob in distribution)),
            )
            self._table[key] = entry
        return entry

    def sample(self, prev: int, curr: int, layer: int, rng: np.random.Generator) -> Tuple[int, int]:
        targets, cumulative = self._entry((prev, curr, layer))
        return targets[_draw_index(cumulative, rng)]


def _continue_walk(
    cache: TransitionCache,
    state: WalkStep,
    rng: np.random.Generator,
) -> Tuple[List[int], List[int]]:
    nodes = [state.prev, state.curr]
    layers = [state.layer]
    prev, curr, layer = state.prev, state.curr, state.layer
    walk_length = cache.params.walk_length
    while len(nodes) < walk_length:
        nxt, layer = cache.sample(prev, curr, layer, rng)
        prev, curr = curr, nxt
        nodes.append(curr)
        layers.append(layer)
    return nodes, layers


def _walk_from_node(
    cache: TransitionCache,
    start: int,
    walk_index: int,
) -> Tuple[List[int], List[int]]:
    mn = cache.mn
    params = cache.params
    rng = make_stream(params.seed, STREAM_WALK, 0, start, walk_index)
    first_steps = [
        (y, layer)
        for layer in mn.incident_layers(start)
        for y in mn.neighbors(layer, start)
    ]
    if not first_steps or params.walk_length == 1:
        return [start], []
    y, layer = first_steps[int(rng.integers(len(first_steps)))]
    return _continue_walk(cache, WalkStep(start, y, layer), rng)


def _walk_from_edge(
    cache: TransitionCache,
    edges: Sequence[Tuple[int, int, int]],
    slot: int,
) -> Tuple[List[int], List[int]]:
    rng = make_stream(cache.params.seed, STREAM_WALK, 1, slot)
    a, b, layer = edges[int(rng.integers(len(edges)))]
    if rng.random() < 0.5:
        a, b = b, a
    if cache.params.walk_length == 1:
        return [a], []
    return _continue_walk(cache, WalkStep(a, b, layer), rng)


def _run_jobs(
    jobs: Sequence[object],
    fn: Callable[[object], Tuple[List[int], List[int]]],
    workers: int,
) -> WalkCorpus:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, jobs))
    else:
        results = [fn(job) for job in jobs]
    return WalkCorpus(
        walks=[nodes for nodes, _layers in results],
        layers=[layers for _nodes, layers in results],
    )


def coanalysis_walks(mn: MultilayerNetwork, params: WalkParams) -> WalkCorpus:
    params.validate()
    if mn.num_nodes == 0:
        raise ConfigError("La red multicapa no tiene nodos")
    cache = TransitionCache(mn, params)
    edges = mn.triples() if params.uniform_edge_start else []
    if edges:
        slots = list(range(params.num_walks * mn.num_nodes))
        return _run_jobs(
            slots,
            lambda slot: _walk_from_edge(cache, edges, slot),
            params.workers,
        )
    jobs = [
        (node, walk_index)
        for walk_index in range(params.num_walks)
        for node in range(mn.num_nodes)
    ]
    return _run_jobs(
        jobs,
        lambda job: _walk_from_node(cache, job[0], job[1]),
        params.workers,
    )


def single_graph_walks(g: Graph, params: WalkParams) -> WalkCorpus:
    # With one layer every node has at most one incident layer, so r never applies.
    return coanalysis_walks(as_single_layer(g), params)
