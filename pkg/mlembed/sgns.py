from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from common.config import (
    DEFAULT_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_FINAL_LR,
    DEFAULT_INITIAL_LR,
    DEFAULT_NEGATIVES,
    DEFAULT_SEED,
    DEFAULT_WINDOW,
    SGNS_DENSE_MAX_NODES,
    SGNS_MAX_BATCH_TOKENS,
    SIGMOID_CLAMP,
    UNIGRAM_POWER,
)
from mlembed.core_alias import AliasTable
from mlembed.core_errors import ConfigError, EmbeddingMismatchError, EmptyCorpusError
from mlembed.core_rng import STREAM_TRAIN, make_stream
from mlembed.walker import WalkCorpus

METRICS = ("euclidean", "cosine")


@dataclass(frozen=True)
class TrainConfig:
    dim: int = DEFAULT_DIM
    window: int = DEFAULT_WINDOW
    negatives: int = DEFAULT_NEGATIVES
    epochs: int = DEFAULT_EPOCHS
    initial_lr: float = DEFAULT_INITIAL_LR
    final_lr: float = DEFAULT_FINAL_LR
    seed: int = DEFAULT_SEED
    # workers > 1 applies unsynchronized updates (results are not bit-exact).
    workers: int = 1

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"--dim debe ser >= 1 (recibido {self.dim})")
        if self.window < 1:
            raise ConfigError(f"--window debe ser >= 1 (recibido {self.window})")
        if self.negatives < 0:
            raise ConfigError(f"--negatives debe ser >= 0 (recibido {self.negatives})")
        if self.epochs < 1:
            raise ConfigError(f"--epochs debe ser >= 1 (recibido {self.epochs})")
        if not (self.initial_lr >= self.final_lr > 0):
            raise ConfigError(
                "La tasa de aprendizaje debe cumplir initial_lr >= final_lr > 0 "
                f"(recibido {self.initial_lr} -> {self.final_lr})"
            )
        if self.workers < 1:
            raise ConfigError(f"--threads debe ser >= 1 (recibido {self.workers})")


@dataclass
class EmbeddingSpace:
    dim: int
    vectors: np.ndarray
    node_ids: Tuple[int, ...]
    epoch_losses: Tuple[float, ...] = field(default=(), compare=False)

    @property
    def node_index(self) -> Dict[int, int]:
        return {node: row for row, node in enumerate(self.node_ids)}

    def vector(self, node: int) -> np.ndarray:
        if node < len(self.node_ids) and self.node_ids[node] == node:
            return self.vectors[node]
        return self.vectors[self.node_index[node]]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -SIGMOID_CLAMP, SIGMOID_CLAMP)))


def pair_loss_and_grad(
    u: np.ndarray,
    v: np.ndarray,
    positive: bool,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Loss and exact gradients of one skip-gram term.

    positive: -log sigmoid(u.v); negative: -log sigmoid(-u.v).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    sign = 1.0 if positive else -1.0
    score = float(np.dot(u, v))
    loss = float(np.logaddexp(0.0, -sign * score))
    # d loss / d score = -sign * sigmoid(-sign * score)
    coeff = -sign * 0.5 * (1.0 + math.tanh(-sign * score / 2.0))
    return loss, coeff * v, coeff * u


def _noise_probabilities(counts: np.ndarray) -> Optional[np.ndarray]:
    weights = counts.astype(np.float64) ** UNIGRAM_POWER
    total = weights.sum()
    if total <= 0:
        return None
    return weights / total


def _flatten(walks: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    if not walks:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    tokens = np.concatenate(walks)
    walk_ids = np.repeat(np.arange(len(walks)), [len(walk) for walk in walks])
    return tokens, walk_ids


def _window_pairs(
    tokens: np.ndarray,
    walk_ids: np.ndarray,
    start: int,
    stop: int,
    offsets: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """(center, context) node pairs for the centers at token positions [start, stop)."""
    pos = np.arange(start, stop)
    ctx = pos[:, None] + offsets[None, :]
    valid = (ctx >= 0) & (ctx < tokens.size)
    ctx = np.clip(ctx, 0, tokens.size - 1)
    valid &= walk_ids[ctx] == walk_ids[pos][:, None]
    centers = np.broadcast_to(tokens[pos][:, None], ctx.shape)[valid]
    return centers, tokens[ctx][valid]


def _scatter_add(matrix: np.ndarray, rows: np.ndarray, values: np.ndarray) -> None:
    order = np.argsort(rows, kind="stable")
    unique_rows, starts = np.unique(rows[order], return_index=True)
    matrix[unique_rows] += np.add.reduceat(values[order], starts, axis=0)


def _dense_update(
    w_in: np.ndarray,
    w_out: np.ndarray,
    centers: np.ndarray,
    contexts: np.ndarray,
    noise_p: Optional[np.ndarray],
    negatives: int,
    rng: np.random.Generator,
    lr: float,
) -> float:
    # Small graphs: every (center, target) term of the batch lives in an n x n count matrix.
    n = w_in.shape[0]
    positive = np.bincount(centers * n + contexts, minlength=n * n).reshape(n, n).astype(np.float64)
    if noise_p is not None and negatives > 0:
        per_center = np.bincount(centers, minlength=n) * negatives
        negative = rng.multinomial(per_center, noise_p).astype(np.float64)
    else:
        negative = np.zeros_like(positive)
    scores = w_in @ w_out.T
    sig = _sigmoid(scores)
    loss = float(
        (positive * np.logaddexp(0.0, -scores)).sum()
        + (negative * np.logaddexp(0.0, scores)).sum()
    )
    grad = (positive * (1.0 - sig) - negative * sig) * lr
    delta_in = grad @ w_out
    w_out += grad.T @ w_in
    w_in += delta_in
    return loss


def _sparse_update(
    w_in: np.ndarray,
    w_out: np.ndarray,
    centers: np.ndarray,
    contexts: np.ndarray,
    noise: Optional[AliasTable],
    negatives: int,
    rng: np.random.Generator,
    lr: float,
) -> float:
    n = w_in.shape[0]
    rows = centers
    targets = contexts
    labels = np.ones(centers.size, dtype=np.int64)
    if noise is not None and negatives > 0:
        neg_rows = np.repeat(centers, negatives)
        rows = np.concatenate((centers, neg_rows))
        targets = np.concatenate((contexts, noise.draw(rng, neg_rows.size)))
        labels = np.concatenate((labels, np.zeros(neg_rows.size, dtype=np.int64)))
    # Repeated terms collapse into one row weighted by its count.
    keys, counts = np.unique((rows * n + targets) * 2 + labels, return_counts=True)
    label = (keys % 2).astype(np.float64)
    rows = (keys // 2) // n
    targets = (keys // 2) % n
    u = w_in[rows]
    v = w_out[targets]
    scores = np.einsum("ij,ij->i", u, v)
    loss = float((counts * np.logaddexp(0.0, -(2.0 * label - 1.0) * scores)).sum())
    coeff = (label - _sigmoid(scores)) * counts * lr
    _scatter_add(w_in, rows, coeff[:, None] * v)
    _scatter_add(w_out, targets, coeff[:, None] * u)
    return loss


class _LinearDecay:
    def __init__(self, start: float, end: float, total_steps: int) -> None:
        self.start = start
        self.end = end
        self.total = max(1, total_steps)
        self.step = 0

    def advance(self, steps: int) -> float:
        frac = min(1.0, self.step / self.total)
        self.step += steps
        return max(self.end, self.start - (self.start - self.end) * frac)


@dataclass(frozen=True)
class _Noise:
    probabilities: Optional[np.ndarray]
    table: Optional[AliasTable]


def _train_tokens(
    tokens: np.ndarray,
    walk_ids: np.ndarray,
    w_in: np.ndarray,
    w_out: np.ndarray,
    noise: _Noise,
    cfg: TrainConfig,
    rng: np.random.Generator,
    lr_at: _LinearDecay,
    trained: np.ndarray,
) -> Tuple[float, int]:
    """One pass over a flattened corpus in batches of consecutive centers.

    Each batch sums the gradients of all its terms and applies them at once,
    with the learning rate of its first token.
    """
    num_nodes = w_in.shape[0]
    dense = num_nodes <= SGNS_DENSE_MAX_NODES
    batch = max(1, min(SGNS_MAX_BATCH_TOKENS, num_nodes))
    offsets = np.concatenate((np.arange(-cfg.window, 0), np.arange(1, cfg.window + 1)))
    loss_sum = 0.0
    pairs = 0
    for start in range(0, tokens.size, batch):
        stop = min(tokens.size, start + batch)
        lr = lr_at.advance(stop - start)
        centers, contexts = _window_pairs(tokens, walk_ids, start, stop, offsets)
        if centers.size == 0:
            continue
        if dense:
            loss_sum += _dense_update(
                w_in, w_out, centers, contexts, noise.probabilities, cfg.negatives, rng, lr
            )
        else:
            loss_sum += _sparse_update(
                w_in, w_out, centers, contexts, noise.table, cfg.negatives, rng, lr
            )
        pairs += centers.size
        trained[centers] = True
    return loss_sum, pairs


def train(corpus: WalkCorpus, num_nodes: int, cfg: TrainConfig) -> EmbeddingSpace:
    cfg.validate()
    if not corpus.walks or corpus.total_tokens == 0:
        raise EmptyCorpusError("El corpus de caminatas esta vacio")
    walks = [np.asarray(walk, dtype=np.int64) for walk in corpus.walks]
    tokens, walk_ids = _flatten(walks)
    if tokens.min() < 0 or tokens.max() >= num_nodes:
        raise ConfigError(
            f"El corpus contiene nodos fuera de rango (num_nodes={num_nodes})"
        )
    noise_p = _noise_probabilities(np.bincount(tokens, minlength=num_nodes))
    noise = _Noise(
        probabilities=noise_p,
        table=AliasTable(noise_p) if noise_p is not None and num_nodes > SGNS_DENSE_MAX_NODES else None,
    )

    rng = make_stream(cfg.seed, STREAM_TRAIN)
    dim = cfg.dim
    w_in = (rng.random((num_nodes, dim)) - 0.5) / dim
    w_out = np.zeros((num_nodes, dim), dtype=np.float64)
    trained = np.zeros(num_nodes, dtype=bool)

    epoch_losses: List[float] = []
    if cfg.workers == 1:
        decay = _LinearDecay(cfg.initial_lr, cfg.final_lr, cfg.epochs * int(tokens.size))
        for _epoch in range(cfg.epochs):
            loss_sum, pairs = _train_tokens(
                tokens, walk_ids, w_in, w_out, noise, cfg, rng, decay, trained
            )
            epoch_losses.append(loss_sum / pairs if pairs else 0.0)
    else:
        chunks = [_flatten(walks[i::cfg.workers]) for i in range(cfg.workers)]
        for epoch in range(cfg.epochs):
            def run_chunk(index: int) -> Tuple[float, int]:
                chunk_tokens, chunk_ids = chunks[index]
                decay = _LinearDecay(cfg.initial_lr, cfg.final_lr, cfg.epochs * chunk_tokens.size)
                decay.step = epoch * chunk_tokens.size
                chunk_rng = make_stream(cfg.seed, STREAM_TRAIN, epoch + 1, index)
                return _train_tokens(
                    chunk_tokens, chunk_ids, w_in, w_out, noise, cfg, chunk_rng, decay, trained
                )

            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(run_chunk, range(cfg.workers)))
            loss_sum = sum(loss for loss, _pairs in results)
            pairs = sum(count for _loss, count in results)
            epoch_losses.append(loss_sum / pairs if pairs else 0.0)

    # Nodes never trained (absent or only in singleton walks) get the zero vector.
    w_in[~trained] = 0.0
    return EmbeddingSpace(
        dim=dim,
        vectors=w_in,
        node_ids=tuple(range(num_nodes)),
        epoch_losses=tuple(epoch_losses),
    )


def concat(spaces: Sequence[EmbeddingSpace]) -> EmbeddingSpace:
    if not spaces:
        raise EmbeddingMismatchError("No hay espacios para concatenar")
    node_ids = spaces[0].node_ids
    for space in spaces[1:]:
        if space.node_ids != node_ids:
            raise EmbeddingMismatchError(
                "Los espacios a concatenar no comparten el mismo conjunto de nodos"
            )
    if len(spaces) == 1:
        only = spaces[0]
        return EmbeddingSpace(dim=only.dim, vectors=only.vectors.copy(), node_ids=node_ids)
    return EmbeddingSpace(
        dim=sum(space.dim for space in spaces),
        vectors=np.hstack([space.vectors for space in spaces]),
        node_ids=node_ids,
    )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    norm = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if norm == 0.0:
        return None
    return float(np.dot(a, b)) / norm


def distance(space: EmbeddingSpace, a: int, b: int, metric: str = "euclidean") -> float:
    va = space.vector(a)
    vb = space.vector(b)
    if metric == "euclidean":
        return float(np.linalg.norm(va - vb))
    if metric in ("cosine", "cosine-distance"):
        similarity = cosine_similarity(va, vb)
        # Zero vectors sit at distance 1 from everything.
        return 1.0 if similarity is None else 1.0 - similarity
    raise ConfigError(f"--metric desconocida: {metric} (opciones: {', '.join(METRICS)})")
