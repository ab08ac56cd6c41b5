from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from common.config import DEFAULT_CANDIDATE_MODE, DEFAULT_CANDIDATE_SAMPLE, DEFAULT_SEED
from common.paths import default_output_path
from common.utils import format_optional_decimal, log_event
from mlembed.core_env_io import ENV_PATH, build_defaults, load_env
from mlembed.core_errors import (
    ConfigError,
    DatasetParseError,
    MlembedError,
    UnknownNodeError,
)
from mlembed.data_io import (
    load_labels,
    load_multilayer,
    reset_file,
    stamp_records,
    write_embeddings,
    write_report_jsonl,
    write_report_text,
    write_walks,
)
from mlembed.eval_kit import BASELINES, CANDIDATE_MODES, run_experiment, summarize
from mlembed.graph_core import merge
from mlembed.sgns import METRICS, TrainConfig
from mlembed.strategies import (
    LAYER_COANALYSIS,
    NETWORK_AGGREGATION,
    MethodConfig,
    embed,
    resolve_method,
)
from mlembed.walker import WalkParams, coanalysis_walks, single_graph_walks

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2

DEFAULT_LINKPRED_METHODS = "cn,jaccard,na,ra,lc"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message)


@dataclass
class CliConfig:
    subcommand: str
    dataset: str
    method: str = "lc"
    methods: List[str] = field(default_factory=list)
    p: float = 0.5
    q: float = 0.5
    r: float = 0.5
    num_walks: int = 10
    walk_length: int = 80
    dim: int = 128
    per_layer_dim: Optional[int] = None
    total_dim: Optional[int] = None
    window: int = 10
    negatives: int = 5
    epochs: int = 1
    metric: str = "euclidean"
    test_frac: float = 0.1
    candidate_mode: str = DEFAULT_CANDIDATE_MODE
    candidate_sample: int = DEFAULT_CANDIDATE_SAMPLE
    seeds: List[int] = field(default_factory=lambda: [DEFAULT_SEED])
    output: Optional[str] = None
    report: Optional[str] = None
    report_jsonl: Optional[str] = None
    labels: Optional[str] = None
    threads: int = 1
    deterministic: bool = False
    uniform_start: bool = False
    per_layer: bool = False
    verbose: bool = True

    @property
    def seed(self) -> int:
        return self.seeds[0]

    def walk_params(self) -> WalkParams:
        return WalkParams(
            p=self.p,
            q=self.q,
            r=self.r,
            num_walks=self.num_walks,
            walk_length=self.walk_length,
            seed=self.seed,
            uniform_edge_start=self.uniform_start,
            workers=self.threads,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            dim=self.dim,
            window=self.window,
            negatives=self.negatives,
            epochs=self.epochs,
            seed=self.seed,
            workers=1 if self.deterministic else self.threads,
        )

    def method_config(self, method: str) -> MethodConfig:
        return MethodConfig(
            method=method,
            walk=self.walk_params(),
            train=self.train_config(),
            per_layer_dim=self.per_layer_dim,
            total_dim=self.total_dim,
            layer_workers=self.threads,
            verbose=self.verbose,
        )

    def validate(self) -> None:
        self.walk_params().validate()
        self.train_config().validate()
        if self.per_layer_dim is not None and self.per_layer_dim < 1:
            raise ConfigError(f"--per-layer-dim debe ser >= 1 (recibido {self.per_layer_dim})")
        if self.total_dim is not None and self.total_dim < 1:
            raise ConfigError(f"--total-dim debe ser >= 1 (recibido {self.total_dim})")
        if self.metric not in METRICS:
            raise ConfigError(f"--metric desconocida: {self.metric} (opciones: {', '.join(METRICS)})")
        if not 0.0 < self.test_frac < 1.0:
            raise ConfigError(f"--test-frac debe estar en (0, 1) (recibido {self.test_frac})")
        if self.candidate_mode not in CANDIDATE_MODES:
            raise ConfigError(
                f"--candidate-mode desconocido: {self.candidate_mode} "
                f"(opciones: {', '.join(CANDIDATE_MODES)})"
            )
        if self.candidate_sample < 0:
            raise ConfigError(f"--candidate-sample debe ser >= 0 (recibido {self.candidate_sample})")
        if not self.seeds or any(seed < 0 for seed in self.seeds):
            raise ConfigError("--seeds debe contener enteros >= 0")
        if self.subcommand in ("embed", "walks"):
            resolve_method(self.method)
        for method in self.methods:
            if method not in BASELINES:
                resolve_method(method)


def parse_seeds(raw: str) -> List[int]:
    seeds: List[int] = []
    for token in str(raw or "").replace(" ", "").split(","):
        if not token:
            continue
        try:
            if "-" in token[1:]:
                start_raw, end_raw = token.split("-", 1)
                start, end = int(start_raw), int(end_raw)
            else:
                start = end = int(token)
        except ValueError as exc:
            raise ConfigError(f"--seeds invalido: {token}") from exc
        if end < start:
            raise ConfigError(f"--seeds rango invertido: {token}")
        seeds.extend(range(start, end + 1))
    if not seeds:
        raise ConfigError("--seeds no puede estar vacio")
    return seeds


def parse_methods(raw: str) -> List[str]:
    methods = [token.strip().lower() for token in str(raw or "").split(",") if token.strip()]
    if not methods:
        raise ConfigError("--methods no puede estar vacio")
    return methods


def _add_walk_flags(parser: argparse.ArgumentParser, defaults: Dict[str, object]) -> None:
    parser.add_argument("--p", type=float, default=defaults["p"], help="Factor de retorno")
    parser.add_argument("--q", type=float, default=defaults["q"], help="Factor entrada/salida")
    parser.add_argument("--r", type=float, default=defaults["r"], help="Probabilidad de seguir en la capa")
    parser.add_argument("--num-walks", type=int, default=defaults["num_walks"])
    parser.add_argument("--walk-length", type=int, default=defaults["walk_length"])
    parser.add_argument("--uniform-start", action="store_true", help="Inicia caminatas en aristas al azar")
    parser.add_argument("--threads", type=int, default=defaults["threads"])
    parser.add_argument("--deterministic", action="store_true")


def _add_train_flags(parser: argparse.ArgumentParser, defaults: Dict[str, object]) -> None:
    parser.add_argument("--dim", type=int, default=defaults["dim"])
    parser.add_argument("--per-layer-dim", type=int, default=None)
    parser.add_argument("--total-dim", type=int, default=None)
    parser.add_argument("--window", type=int, default=defaults["window"])
    parser.add_argument("--negatives", type=int, default=defaults["negatives"])
    parser.add_argument("--epochs", type=int, default=defaults["epochs"])


def build_parser(defaults: Dict[str, object]) -> argparse.ArgumentParser:
    parser = _Parser(description="Embeddings de redes multicapa y prediccion de enlaces.")
    parser.add_argument("--env", default=ENV_PATH, help="Ruta al archivo .env")
    parser.add_argument("--quiet", action="store_true", help="Silencia los logs de progreso")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    sub.required = True

    info = sub.add_parser("info", help="Estadisticas del dataset")
    info.add_argument("dataset")
    info.add_argument("--labels", default=None, help="Archivo 'nodo etiqueta'")

    embed_cmd = sub.add_parser("embed", help="Entrena un embedding y lo escribe a disco")
    embed_cmd.add_argument("dataset")
    embed_cmd.add_argument("--method", default="lc", help="na | ra | lc")
    embed_cmd.add_argument("--seed", type=int, default=DEFAULT_SEED)
    embed_cmd.add_argument("--output", default=None)
    _add_walk_flags(embed_cmd, defaults)
    _add_train_flags(embed_cmd, defaults)

    walks = sub.add_parser("walks", help="Genera y vuelca el corpus de caminatas")
    walks.add_argument("dataset")
    walks.add_argument("--method", default="lc", help="na (grafo fusionado) | lc (multicapa)")
    walks.add_argument("--seed", type=int, default=DEFAULT_SEED)
    walks.add_argument("--output", default=None)
    _add_walk_flags(walks, defaults)

    linkpred = sub.add_parser("linkpred", help="Experimento de prediccion de enlaces")
    linkpred.add_argument("dataset")
    linkpred.add_argument("--methods", default=DEFAULT_LINKPRED_METHODS)
    linkpred.add_argument("--seeds", default=str(DEFAULT_SEED), help="Lista '0,1,2' o rango '0-9'")
    linkpred.add_argument("--test-frac", type=float, default=defaults["test_frac"])
    linkpred.add_argument("--metric", default=defaults["metric"], help="euclidean | cosine")
    linkpred.add_argument("--candidate-mode", default=DEFAULT_CANDIDATE_MODE, help="all | sampled")
    linkpred.add_argument("--candidate-sample", type=int, default=DEFAULT_CANDIDATE_SAMPLE)
    linkpred.add_argument("--per-layer", action="store_true", help="Agrega F1 promedio por capa")
    linkpred.add_argument("--report", default=None, help="Reporte key=value")
    linkpred.add_argument("--report-jsonl", default=None, help="Reporte JSON lines")
    _add_walk_flags(linkpred, defaults)
    _add_train_flags(linkpred, defaults)
    return parser


def config_from_args(args: argparse.Namespace, verbose: bool) -> CliConfig:
    values = vars(args)
    cfg = CliConfig(subcommand=args.subcommand, dataset=args.dataset)
    for key, value in values.items():
        if key in ("subcommand", "dataset", "env", "quiet", "seed", "seeds", "methods"):
            continue
        if hasattr(cfg, key):
            setattr(cfg, key, value)
    if "seeds" in values:
        cfg.seeds = parse_seeds(values["seeds"])
    elif "seed" in values:
        cfg.seeds = [int(values["seed"])]
    if "methods" in values:
        cfg.methods = parse_methods(values["methods"])
    cfg.metric = str(cfg.metric).strip().lower()
    if cfg.metric == "cosine-distance":
        cfg.metric = "cosine"
    cfg.verbose = verbose and not args.quiet
    return cfg


def cmd_info(cfg: CliConfig) -> int:
    network, names = load_multilayer(cfg.dataset)
    merged = merge(network)
    print(
        f"nodes={network.num_nodes} layers={network.num_layers} "
        f"layer_edges={network.edge_count} merged_edges={merged.edge_count}"
    )
    for layer, count in enumerate(network.layer_edge_counts()):
        print(f"layer={network.layer_label(layer)} edges={count}")
    isolated = sum(1 for node in range(network.num_nodes) if not network.incident_layers(node))
    print(
        f"isolated_nodes={isolated} self_loops_dropped={network.self_loops_dropped} "
        f"duplicates_dropped={network.duplicates_dropped}"
    )
    if cfg.labels:
        labels = load_labels(cfg.labels, names)
        counts = " ".join(f"{label}={count}" for label, count in labels.counts().items())
        print(f"labeled_nodes={len(labels)} {counts}".rstrip())
    return EXIT_OK


def cmd_embed(cfg: CliConfig) -> int:
    network, names = load_multilayer(cfg.dataset)
    method_cfg = cfg.method_config(cfg.method)
    method_cfg.validate()
    log_event(
        "embed",
        f"{cfg.dataset}: metodo={method_cfg.short_name} nodos={network.num_nodes} "
        f"capas={network.num_layers}",
        cfg.verbose,
    )
    space = embed(network, method_cfg)
    output = cfg.output or str(default_output_path(cfg.dataset, f"{method_cfg.short_name}.emb"))
    write_embeddings(output, space, names)
    log_event("embed", f"Embedding escrito: {output} (dim={space.dim})", cfg.verbose)
    return EXIT_OK


def cmd_walks(cfg: CliConfig) -> int:
    network, names = load_multilayer(cfg.dataset)
    method = resolve_method(cfg.method)
    params = cfg.walk_params()
    if method == NETWORK_AGGREGATION:
        corpus = single_graph_walks(merge(network), params)
    elif method == LAYER_COANALYSIS:
        corpus = coanalysis_walks(network, params)
    else:
        raise ConfigError("--method para walks debe ser na o lc")
    output = cfg.output or str(default_output_path(cfg.dataset, "walks.txt"))
    singletons = write_walks(output, corpus, names)
    switch_rate = corpus.layer_switch_rate()
    log_event(
        "walks",
        f"Corpus escrito: {output} caminatas={len(corpus.walks)} tokens={corpus.total_tokens} "
        f"singletons={singletons} cambio_capa={format_optional_decimal(switch_rate, 4)}",
        cfg.verbose,
    )
    return EXIT_OK


def _print_summary(rows: Sequence[Dict[str, object]]) -> None:
    print(f"{'metodo':<10} {'runs':>4} {'accuracy':>17} {'f1':>17} {'f1_global':>17}")
    for row in rows:
        acc = f"{row['accuracy_mean']:.3f} +/- {row['accuracy_std']:.3f}"
        f1_text = f"{row['f1_mean']:.3f} +/- {row['f1_std']:.3f}"
        global_text = f"{row['f1_global_mean']:.3f} +/- {row['f1_global_std']:.3f}"
        print(f"{row['method']:<10} {row['runs']:>4} {acc:>17} {f1_text:>17} {global_text:>17}")


def cmd_linkpred(cfg: CliConfig) -> int:
    network, _names = load_multilayer(cfg.dataset)
    reports = []
    for method in cfg.methods:
        target = method if method in BASELINES else cfg.method_config(method)
        for seed in cfg.seeds:
            report = run_experiment(
                network,
                target,
                frac=cfg.test_frac,
                seed=seed,
                metric=cfg.metric,
                candidate_mode=cfg.candidate_mode,
                candidate_sample=cfg.candidate_sample,
                per_layer=cfg.per_layer,
                dataset=cfg.dataset,
                record_runtime=not cfg.deterministic,
            )
            log_event(
                "linkpred",
                f"{report.method} seed={seed} accuracy={report.accuracy:.4f} f1={report.f1:.4f}",
                cfg.verbose,
            )
            reports.append(report)

    records = [report.as_record() for report in reports]
    if not cfg.deterministic:
        records = stamp_records(records)
    report_path = cfg.report or str(default_output_path(cfg.dataset, "linkpred.txt"))
    jsonl_path = cfg.report_jsonl or str(default_output_path(cfg.dataset, "linkpred.jsonl"))
    reset_file(report_path)
    reset_file(jsonl_path)
    write_report_text(report_path, records)
    write_report_jsonl(jsonl_path, records)
    _print_summary(summarize(reports))
    log_event("linkpred", f"Reportes: {report_path} {jsonl_path}", cfg.verbose)
    return EXIT_OK


COMMANDS = {
    "info": cmd_info,
    "embed": cmd_embed,
    "walks": cmd_walks,
    "linkpred": cmd_linkpred,
}


def _pre_parse_env(argv: Sequence[str]) -> str:
    pre = _Parser(add_help=False)
    pre.add_argument("--env", default=ENV_PATH)
    known, _rest = pre.parse_known_args(list(argv))
    return known.env


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        defaults = build_defaults(load_env(_pre_parse_env(argv)))
        args = build_parser(defaults).parse_args(argv)
        cfg = config_from_args(args, verbose=bool(defaults["verbose"]))
        cfg.validate()
    except ConfigError as exc:
        print(f"ERROR: {exc}")
        return EXIT_CONFIG

    try:
        return COMMANDS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"ERROR: {exc}")
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"ERROR: no se encontro el archivo {exc.filename}")
        return EXIT_IO
    except (OSError, DatasetParseError, UnknownNodeError) as exc:
        print(f"ERROR: {exc}")
        return EXIT_IO
    except MlembedError as exc:
        print(f"ERROR: {exc}")
        return EXIT_CONFIG
