from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

from common.utils import log_event
from mlembed.core_errors import ConfigError
from mlembed.core_rng import STREAM_EXPERIMENT, STREAM_LAYER, derive_seed
from mlembed.graph_core import MultilayerNetwork, layer_graph, merge
from mlembed.sgns import EmbeddingSpace, TrainConfig, concat, train
from mlembed.walker import WalkCorpus, WalkParams, coanalysis_walks, single_graph_walks

NETWORK_AGGREGATION = "network-aggregation"
RESULTS_AGGREGATION = "results-aggregation"
LAYER_COANALYSIS = "layer-coanalysis"

METHOD_ALIASES: Dict[str, str] = {
    "na": NETWORK_AGGREGATION,
    "ra": RESULTS_AGGREGATION,
    "lc": LAYER_COANALYSIS,
    NETWORK_AGGREGATION: NETWORK_AGGREGATION,
    RESULTS_AGGREGATION: RESULTS_AGGREGATION,
    LAYER_COANALYSIS: LAYER_COANALYSIS,
}

SHORT_NAMES: Dict[str, str] = {
    NETWORK_AGGREGATION: "na",
    RESULTS_AGGREGATION: "ra",
    LAYER_COANALYSIS: "lc",
}


def resolve_method(name: str) -> str:
    key = str(name or "").strip().lower()
    if key not in METHOD_ALIASES:
        raise ConfigError(
            f"--method desconocido: {name} (opciones: na, ra, lc)"
        )
    return METHOD_ALIASES[key]


@dataclass(frozen=True)
class MethodConfig:
    method: str
    walk: WalkParams = field(default_factory=WalkParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    per_layer_dim: Optional[int] = None
    # Splits a fixed dimension budget across layers (results-aggregation only).
    total_dim: Optional[int] = None
    layer_workers: int = 1
    verbose: bool = False

    @property
    def short_name(self) -> str:
        return SHORT_NAMES[resolve_method(self.method)]

    def validate(self) -> None:
        method = resolve_method(self.method)
        self.walk.validate()
        self.train.validate()
        if method == RESULTS_AGGREGATION:
            if self.per_layer_dim is not None and self.per_layer_dim < 1:
                raise ConfigError(
                    f"--per-layer-dim debe ser >= 1 (recibido {self.per_layer_dim})"
                )
            if self.total_dim is not None and self.total_dim < 1:
                raise ConfigError(f"--total-dim debe ser >= 1 (recibido {self.total_dim})")
        if self.layer_workers < 1:
            raise ConfigError(f"--threads debe ser >= 1 (recibido {self.layer_workers})")

    def resolved_per_layer_dim(self, num_layers: int) -> int:
        if self.per_layer_dim is not None:
            return self.per_layer_dim
        if self.total_dim is not None:
            per_layer = self.total_dim // max(1, num_layers)
            if per_layer < 1:
                raise ConfigError(
                    f"--total-dim {self.total_dim} es menor que el numero de capas ({num_layers})"
                )
            return per_layer
        return self.train.dim

    def with_seed(self, seed: int) -> MethodConfig:
        return replace(
            self,
            walk=replace(self.walk, seed=derive_seed(seed, STREAM_EXPERIMENT, 0)),
            train=replace(self.train, seed=derive_seed(seed, STREAM_EXPERIMENT, 1)),
        )


def _log_corpus(cfg: MethodConfig, label: str, corpus: WalkCorpus) -> None:
    log_event(
        cfg.short_name,
        f"{label}: caminatas={len(corpus.walks)} tokens={corpus.total_tokens} "
        f"singletons={corpus.singletons}",
        cfg.verbose,
    )


def _log_losses(cfg: MethodConfig, label: str, space: EmbeddingSpace) -> None:
    for epoch, loss in enumerate(space.epoch_losses, start=1):
        log_event(cfg.short_name, f"{label}: epoca {epoch} perdida={loss:.6f}", cfg.verbose)


def network_aggregation(mn: MultilayerNetwork, cfg: MethodConfig) -> EmbeddingSpace:
    cfg.validate()
    merged = merge(mn)
    corpus = single_graph_walks(merged, cfg.walk)
    _log_corpus(cfg, "grafo fusionado", corpus)
    space = train(corpus, mn.num_nodes, cfg.train)
    _log_losses(cfg, "grafo fusionado", space)
    return space


def _embed_layer(mn: MultilayerNetwork, cfg: MethodConfig, layer: int) -> EmbeddingSpace:
    per_layer_dim = cfg.resolved_per_layer_dim(mn.num_layers)
    # Seeds depend on (seed, layer) only, so layer order never changes other layers.
    walk = replace(cfg.walk, seed=derive_seed(cfg.walk.seed, STREAM_LAYER, layer))
    train_cfg = replace(
        cfg.train,
        dim=per_layer_dim,
        seed=derive_seed(cfg.train.seed, STREAM_LAYER, layer),
    )
    label = f"capa {mn.layer_label(layer)}"
    corpus = single_graph_walks(layer_graph(mn, layer), walk)
    _log_corpus(cfg, label, corpus)
    space = train(corpus, mn.num_nodes, train_cfg)
    _log_losses(cfg, label, space)
    return space


def results_aggregation(mn: MultilayerNetwork, cfg: MethodConfig) -> EmbeddingSpace:
    cfg.validate()
    if mn.num_layers == 0:
        raise ConfigError("La red multicapa no tiene capas")
    layers = list(range(mn.num_layers))
    if cfg.layer_workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.layer_workers) as pool:
            spaces: List[EmbeddingSpace] = list(
                pool.map(lambda layer: _embed_layer(mn, cfg, layer), layers)
            )
    else:
        spaces = [_embed_layer(mn, cfg, layer) for layer in layers]
    return concat(spaces)


def layer_coanalysis(mn: MultilayerNetwork, cfg: MethodConfig) -> EmbeddingSpace:
    cfg.validate()
    corpus = coanalysis_walks(mn, cfg.walk)
    _log_corpus(cfg, "co-analisis", corpus)
    switch_rate = corpus.layer_switch_rate()
    if switch_rate is not None:
        log_event(cfg.short_name, f"tasa de cambio de capa={switch_rate:.4f}", cfg.verbose)
    space = train(corpus, mn.num_nodes, cfg.train)
    _log_losses(cfg, "co-analisis", space)
    return space


def embed(mn: MultilayerNetwork, cfg: MethodConfig) -> EmbeddingSpace:
    method = resolve_method(cfg.method)
    if method == NETWORK_AGGREGATION:
        return network_aggregation(mn, cfg)
    if method == RESULTS_AGGREGATION:
        return results_aggregation(mn, cfg)
    return layer_coanalysis(mn, cfg)
