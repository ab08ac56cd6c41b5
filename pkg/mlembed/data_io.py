from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from common.utils import dt_to_iso_z, format_float, utc_now, warn_once
from mlembed.core_errors import DatasetParseError, UnknownNodeError
from mlembed.core_rng import STREAM_SYNTHETIC, make_stream
from mlembed.graph_core import MultilayerNetwork, Triple, build_multilayer
from mlembed.sgns import EmbeddingSpace
from mlembed.walker import WalkCorpus

LAYERS_PRAGMA = "#layers:"
NODES_PRAGMA = "#nodes:"


class NameTable:
    """Insertion-ordered bijection between external names and dense ids."""

    def __init__(self, names: Iterable[str] = ()) -> None:
        self._ids: Dict[str, int] = {}
        self._names: List[str] = []
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        existing = self._ids.get(name)
        if existing is not None:
            return existing
        node_id = len(self._names)
        self._ids[name] = node_id
        self._names.append(name)
        return node_id

    def id_of(self, name: str) -> int:
        if name not in self._ids:
            raise UnknownNodeError(f"Nodo desconocido: {name}")
        return self._ids[name]

    def name_of(self, node_id: int) -> str:
        return self._names[node_id]

    def __contains__(self, name: object) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self._names)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self._names)


@dataclass
class LabelMap:
    labels: Dict[int, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)

    def counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for label in self.labels.values():
            out[label] = out.get(label, 0) + 1
        return dict(sorted(out.items()))


@dataclass(frozen=True)
class SyntheticSpec:
    num_nodes: int
    num_layers: int
    num_blocks: int
    p_in: float
    p_out: float
    layer_correlation: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("p_in", "p_out", "layer_correlation"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} debe estar en [0, 1] (recibido {value})")
        if self.num_nodes < 0 or self.num_layers < 1:
            raise ValueError("num_nodes >= 0 y num_layers >= 1 son obligatorios")
        if not 1 <= self.num_blocks <= max(1, self.num_nodes):
            raise ValueError(f"num_blocks invalido: {self.num_blocks}")


def _read_lines(path: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read().splitlines()


def load_multilayer(path: str) -> Tuple[MultilayerNetwork, NameTable]:
    names = NameTable()
    layers = NameTable()
    pinned_layers = False
    triples: List[Triple] = []
    weight_columns = 0
    for line_no, raw in enumerate(_read_lines(path), start=1):
        line = raw.strip()
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith(LAYERS_PRAGMA):
            if triples:
                raise DatasetParseError(path, line_no, "#layers: debe ir antes de las aristas")
            for token in line[len(LAYERS_PRAGMA):].split():
                layers.add(token)
            pinned_layers = True
            continue
        if lowered.startswith(NODES_PRAGMA):
            for token in line[len(NODES_PRAGMA):].split():
                names.add(token)
            continue
        if line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (3, 4):
            raise DatasetParseError(
                path, line_no, f"se esperaban 'src dst layer [peso]', hay {len(tokens)} columnas"
            )
        src, dst, layer_name = tokens[:3]
        if len(tokens) == 4:
            weight_columns += 1
        if pinned_layers and layer_name not in layers:
            raise DatasetParseError(path, line_no, f"capa no declarada en #layers: {layer_name}")
        layer = layers.add(layer_name)
        triples.append((names.add(src), names.add(dst), layer))

    network = build_multilayer(len(names), len(layers), triples, layers.names)
    if network.self_loops_dropped:
        warn_once(path, "self_loops", f"{network.self_loops_dropped} auto-lazos descartados")
    if network.duplicates_dropped:
        warn_once(path, "duplicates", f"{network.duplicates_dropped} aristas duplicadas descartadas")
    if weight_columns:
        warn_once(path, "weights", f"columna de peso ignorada en {weight_columns} lineas")
    return network, names


def write_multilayer(path: str, mn: MultilayerNetwork, names: NameTable) -> None:
    layer_names = [mn.layer_label(layer) for layer in range(mn.num_layers)]
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{LAYERS_PRAGMA} {' '.join(layer_names)}\n")
        handle.write(f"{NODES_PRAGMA} {' '.join(names.names)}\n")
        for a, b, layer in mn.triples():
            handle.write(f"{names.name_of(a)} {names.name_of(b)} {layer_names[layer]}\n")


def load_labels(path: str, names: NameTable) -> LabelMap:
    labels = LabelMap()
    for line_no, raw in enumerate(_read_lines(path), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split(None, 1)
        if len(tokens) != 2:
            raise DatasetParseError(path, line_no, "se esperaba 'nodo etiqueta'")
        node, label = tokens[0], tokens[1].strip()
        if node not in names:
            raise UnknownNodeError(f"{path}:{line_no}: nodo desconocido en etiquetas: {node}")
        labels.labels[names.id_of(node)] = label
    return labels


def _block_of(num_nodes: int, num_blocks: int) -> np.ndarray:
    return (np.arange(num_nodes) * num_blocks) // max(1, num_nodes)


def generate_synthetic(spec: SyntheticSpec) -> MultilayerNetwork:
    """Correlated multilayer SBM.

    Layer 0 is a plain SBM draw. Every other layer copies each pair's state from
    layer 0 with probability layer_correlation and redraws it otherwise, so all
    layers share the same marginal SBM law.
    """
    spec.validate()
    rng = make_stream(spec.seed, STREAM_SYNTHETIC)
    n = spec.num_nodes
    rows, cols = np.triu_indices(n, k=1)
    blocks = _block_of(n, spec.num_blocks)
    probs = np.where(blocks[rows] == blocks[cols], spec.p_in, spec.p_out)
    base = rng.random(rows.size) < probs
    triples: List[Triple] = []
    for layer in range(spec.num_layers):
        if layer == 0:
            present = base
        else:
            copy = rng.random(rows.size) < spec.layer_correlation
            fresh = rng.random(rows.size) < probs
            present = np.where(copy, base, fresh)
        for idx in np.flatnonzero(present):
            triples.append((int(rows[idx]), int(cols[idx]), layer))
    layer_names = [f"L{layer}" for layer in range(spec.num_layers)]
    return build_multilayer(n, spec.num_layers, triples, layer_names)


def synthetic_names(num_nodes: int) -> NameTable:
    return NameTable(f"n{node}" for node in range(num_nodes))


def write_embeddings(path: str, space: EmbeddingSpace, names: NameTable) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{len(space.node_ids)} {space.dim}\n")
        for row, node in enumerate(space.node_ids):
            values = " ".join(format_float(value) for value in space.vectors[row])
            handle.write(f"{names.name_of(node)} {values}\n")


def read_embeddings(
    path: str,
    names: Optional[NameTable] = None,
) -> Tuple[EmbeddingSpace, NameTable]:
    lines = [line for line in _read_lines(path) if line.strip()]
    if not lines:
        raise DatasetParseError(path, 1, "archivo de embeddings vacio")
    header = lines[0].split()
    if len(header) != 2 or not all(token.isdigit() for token in header):
        raise DatasetParseError(path, 1, "cabecera invalida, se esperaba '<num_nodes> <dim>'")
    count, dim = int(header[0]), int(header[1])
    body = lines[1:]
    if len(body) != count:
        raise DatasetParseError(
            path, None, f"la cabecera declara {count} nodos pero hay {len(body)} filas"
        )
    table = names if names is not None else NameTable()
    node_ids: List[int] = []
    vectors = np.zeros((count, dim), dtype=np.float64)
    for row, raw in enumerate(body):
        tokens = raw.split()
        line_no = row + 2
        if len(tokens) != dim + 1:
            raise DatasetParseError(path, line_no, f"se esperaban {dim} valores")
        name = tokens[0]
        node_id = table.id_of(name) if names is not None else table.add(name)
        try:
            vectors[row] = [float(token) for token in tokens[1:]]
        except ValueError as exc:
            raise DatasetParseError(path, line_no, f"valor no numerico: {exc}") from exc
        node_ids.append(node_id)
    return EmbeddingSpace(dim=dim, vectors=vectors, node_ids=tuple(node_ids)), table


def write_walks(path: str, corpus: WalkCorpus, names: NameTable) -> int:
    singletons = 0
    with open(path, "w", encoding="utf-8") as handle:
        for walk in corpus.walks:
            if len(walk) == 1:
                singletons += 1
                continue
            handle.write(" ".join(names.name_of(node) for node in walk) + "\n")
        if singletons:
            handle.write(f"# singletons={singletons}\n")
    return singletons


def read_walks(path: str, names: NameTable) -> WalkCorpus:
    walks: List[List[int]] = []
    for raw in _read_lines(path):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        walks.append([names.id_of(token) for token in line.split()])
    return WalkCorpus(walks=walks)


def write_report_text(path: str, records: Sequence[Dict[str, object]]) -> None:
    with open(path, "a", encoding="utf-8") as handle:
        for record in records:
            parts = []
            for key, value in record.items():
                if isinstance(value, dict):
                    value = ",".join(f"{k}:{format_float(v)}" for k, v in value.items())
                elif isinstance(value, float):
                    value = format_float(value)
                parts.append(f"{key}={value}")
            handle.write(" ".join(parts) + "\n")


def write_report_jsonl(path: str, records: Sequence[Dict[str, object]]) -> None:
    with open(path, "a", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def stamp_records(records: Sequence[Dict[str, object]]) -> List[Dict[str, object]]:
    created_at = dt_to_iso_z(utc_now())
    return [dict(record, created_at=created_at) for record in records]


def reset_file(path: str) -> None:
    if os.path.exists(path):
        os.remove(path)
