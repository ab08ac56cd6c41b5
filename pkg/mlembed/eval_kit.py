from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Union

import numpy as np

from common.config import (
    DEFAULT_CANDIDATE_MODE,
    DEFAULT_CANDIDATE_SAMPLE,
    DEFAULT_METRIC,
    DEFAULT_TEST_FRAC,
)
from mlembed.core_errors import (
    ConfigError,
    DegenerateSplitError,
    InsufficientCandidatesError,
)
from mlembed.core_rng import STREAM_CANDIDATES, STREAM_SPLIT, make_stream
from mlembed.graph_core import Graph, MultilayerNetwork, Pair, canonical_pair, merge, remove_pairs
from mlembed.sgns import EmbeddingSpace, distance
from mlembed.strategies import MethodConfig, embed

COMMON_NEIGHBORS = "cn"
JACCARD = "jaccard"
BASELINES = (COMMON_NEIGHBORS, JACCARD)
CANDIDATE_MODES = ("all", "sampled")


@dataclass(frozen=True)
class EdgeSplit:
    train_edges: FrozenSet[Pair]
    test_edges: FrozenSet[Pair]
    seed: int


@dataclass(frozen=True, order=True)
class ScoredPair:
    a: int
    b: int
    score: float


@dataclass
class PredictionReport:
    correct: int
    predicted: int
    test_size: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    # Harmonic mean of the global precision and recall above.
    f1_global: float
    method: str = ""
    dataset: str = ""
    seed: int = 0
    frac: float = DEFAULT_TEST_FRAC
    metric: str = DEFAULT_METRIC
    runtime_ms: int = 0
    layer_f1: Optional[float] = None
    per_layer: Dict[str, float] = field(default_factory=dict)

    def as_record(self) -> Dict[str, object]:
        record: Dict[str, object] = {
            "method": self.method,
            "dataset": self.dataset,
            "seed": self.seed,
            "frac": self.frac,
            "metric": self.metric,
            "correct": self.correct,
            "predicted": self.predicted,
            "test_size": self.test_size,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "f1_global": self.f1_global,
            "runtime_ms": self.runtime_ms,
        }
        if self.layer_f1 is not None:
            record["layer_f1"] = self.layer_f1
            record["per_layer"] = dict(self.per_layer)
        return record


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def split_edges(g: Graph, frac: float = DEFAULT_TEST_FRAC, seed: int = 0) -> EdgeSplit:
    if not 0.0 < frac < 1.0:
        raise DegenerateSplitError(f"--test-frac debe estar en (0, 1) (recibido {frac})")
    edges = sorted(g.edges())
    if not edges:
        raise DegenerateSplitError("El grafo no tiene aristas para dividir")
    k = _round_half_up(frac * len(edges))
    if k == 0:
        raise DegenerateSplitError(
            f"--test-frac {frac} deja el conjunto de prueba vacio ({len(edges)} aristas)"
        )
    order = make_stream(seed, STREAM_SPLIT).permutation(len(edges))
    test = frozenset(edges[i] for i in order[:k])
    train = frozenset(edges[i] for i in order[k:])
    return EdgeSplit(train_edges=train, test_edges=test, seed=seed)


def candidate_pairs(
    num_nodes: int,
    split: EdgeSplit,
    mode: str = DEFAULT_CANDIDATE_MODE,
    sample_size: int = DEFAULT_CANDIDATE_SAMPLE,
    seed: int = 0,
) -> List[Pair]:
    if mode == "all":
        return [
            (a, b)
            for a in range(num_nodes)
            for b in range(a + 1, num_nodes)
            if (a, b) not in split.train_edges
        ]
    if mode != "sampled":
        raise ConfigError(
            f"--candidate-mode desconocido: {mode} (opciones: {', '.join(CANDIDATE_MODES)})"
        )
    known = split.train_edges | split.test_edges
    total_pairs = num_nodes * (num_nodes - 1) // 2
    available = total_pairs - len(known)
    wanted = min(max(0, sample_size), available)
    rng = make_stream(seed, STREAM_CANDIDATES)
    sampled: Set[Pair] = set()
    while len(sampled) < wanted:
        a, b = (int(x) for x in rng.integers(0, num_nodes, size=2))
        if a == b:
            continue
        pair = canonical_pair(a, b)
        if pair in known or pair in sampled:
            continue
        sampled.add(pair)
    return sorted(split.test_edges | sampled)


def rank_candidates(
    space: EmbeddingSpace,
    candidates: Sequence[Pair],
    metric: str = DEFAULT_METRIC,
) -> List[ScoredPair]:
    scored = []
    for a, b in candidates:
        a, b = canonical_pair(a, b)
        scored.append(ScoredPair(a, b, distance(space, a, b, metric)))
    scored.sort(key=lambda item: (item.score, item.a, item.b))
    return scored


def common_neighbors(g: Graph, x: int, y: int) -> int:
    return len(set(g.neighbors(x)).intersection(g.neighbors(y)))


def jaccard(g: Graph, x: int, y: int) -> float:
    nx_, ny_ = set(g.neighbors(x)), set(g.neighbors(y))
    union = len(nx_ | ny_)
    if union == 0:
        return 0.0
    return len(nx_ & ny_) / union


def rank_by_similarity(
    g: Graph,
    candidates: Sequence[Pair],
    baseline: str,
) -> List[ScoredPair]:
    if baseline == COMMON_NEIGHBORS:
        score_fn = common_neighbors
    elif baseline == JACCARD:
        score_fn = jaccard
    else:
        raise ConfigError(f"Baseline desconocido: {baseline} (opciones: {', '.join(BASELINES)})")
    scored = []
    for a, b in candidates:
        a, b = canonical_pair(a, b)
        scored.append(ScoredPair(a, b, float(score_fn(g, a, b))))
    # Higher similarity first.
    scored.sort(key=lambda item: (-item.score, item.a, item.b))
    return scored


def predict_links(ranked: Sequence[ScoredPair], k: int) -> Set[Pair]:
    if k < 0 or k > len(ranked):
        raise InsufficientCandidatesError(
            f"Se pidieron {k} predicciones pero solo hay {len(ranked)} candidatos"
        )
    return {(item.a, item.b) for item in ranked[:k]}


def _require_test(test: Set[Pair]) -> None:
    if not test:
        raise DegenerateSplitError("El conjunto de prueba esta vacio")


def accuracy(predicted: Set[Pair], test: Set[Pair]) -> float:
    _require_test(test)
    return len(predicted & test) / len(test)


def precision(predicted: Set[Pair], test: Set[Pair]) -> float:
    if not predicted:
        return 0.0
    return len(predicted & test) / len(predicted)


def recall(predicted: Set[Pair], test: Set[Pair]) -> float:
    return accuracy(predicted, test)


def f_measure(prec: float, rec: float) -> float:
    if prec + rec == 0:
        return 0.0
    return 2.0 * prec * rec / (prec + rec)


def f1(predicted: Set[Pair], test: Set[Pair]) -> float:
    """F1 of the test-pair classification.

    Every held-out pair is a true edge, so precision over the held-out pairs is 1
    as soon as one of them is predicted; recall is the accuracy.
    """
    rec = accuracy(predicted, test)
    prec = 1.0 if predicted & test else 0.0
    return f_measure(prec, rec)


def per_layer_scores(
    mn: MultilayerNetwork,
    predicted: Set[Pair],
    test: Set[Pair],
) -> Dict[str, float]:
    scores: Dict[str, float] = {}
    for layer in range(mn.num_layers):
        layer_test = {pair for pair in test if mn.has_edge(pair[0], pair[1], layer)}
        if layer_test:
            scores[mn.layer_label(layer)] = f1(predicted, layer_test)
    return scores


def build_report(predicted: Set[Pair], test: Set[Pair]) -> PredictionReport:
    acc = accuracy(predicted, test)
    prec = precision(predicted, test)
    return PredictionReport(
        correct=len(predicted & test),
        predicted=len(predicted),
        test_size=len(test),
        accuracy=acc,
        precision=prec,
        recall=acc,
        f1=f1(predicted, test),
        f1_global=f_measure(prec, acc),
    )


def run_experiment(
    mn: MultilayerNetwork,
    method: Union[MethodConfig, str],
    frac: float = DEFAULT_TEST_FRAC,
    seed: int = 0,
    metric: str = DEFAULT_METRIC,
    candidate_mode: str = DEFAULT_CANDIDATE_MODE,
    candidate_sample: int = DEFAULT_CANDIDATE_SAMPLE,
    per_layer: bool = False,
    dataset: str = "",
    record_runtime: bool = True,
) -> PredictionReport:
    started = time.perf_counter()
    merged = merge(mn)
    split = split_edges(merged, frac, seed)
    train_mn = remove_pairs(mn, split.test_edges)
    candidates = candidate_pairs(mn.num_nodes, split, candidate_mode, candidate_sample, seed)
    if isinstance(method, MethodConfig):
        space = embed(train_mn, method.with_seed(seed))
        ranked = rank_candidates(space, candidates, metric)
        label = method.short_name
    else:
        baseline = str(method).strip().lower()
        ranked = rank_by_similarity(merge(train_mn), candidates, baseline)
        label = baseline
    predicted = predict_links(ranked, len(split.test_edges))
    test = set(split.test_edges)
    report = build_report(predicted, test)
    report.method = label
    report.dataset = dataset
    report.seed = seed
    report.frac = frac
    report.metric = metric
    if per_layer:
        report.per_layer = per_layer_scores(mn, predicted, test)
        if report.per_layer:
            report.layer_f1 = float(np.mean(list(report.per_layer.values())))
    if record_runtime:
        report.runtime_ms = int((time.perf_counter() - started) * 1000)
    return report


def summarize(reports: Iterable[PredictionReport]) -> List[Dict[str, object]]:
    grouped: Dict[str, List[PredictionReport]] = {}
    for report in reports:
        grouped.setdefault(report.method, []).append(report)
    rows: List[Dict[str, object]] = []
    for method, items in grouped.items():
        acc = np.array([item.accuracy for item in items], dtype=np.float64)
        f1s = np.array([item.f1 for item in items], dtype=np.float64)
        f1_global = np.array([item.f1_global for item in items], dtype=np.float64)
        rows.append(
            {
                "method": method,
                "runs": len(items),
                "accuracy_mean": float(acc.mean()),
                "accuracy_std": float(acc.std()),
                "f1_mean": float(f1s.mean()),
                "f1_std": float(f1s.std()),
                "f1_global_mean": float(f1_global.mean()),
                "f1_global_std": float(f1_global.std()),
            }
        )
    return rows
