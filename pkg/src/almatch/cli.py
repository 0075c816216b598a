"""Command-line entry points: benchmark runs, the labeling service, tooling.

Subcommands:

- ``run``: one active-learning run against a labeled dataset (ground-truth
  oracle), writing reports JSONL, a summary CSV, and an F1-curve PNG next to
  each other in --out-dir.
- ``compare``: the same run once per strategy, plus a side-by-side CSV and
  an overlay figure.
- ``serve``: the HTTP labeling service (human mode by default).
- ``export-encodings`` / ``import-encodings``: move PairEncodings across the
  JSON Lines exchange format.
- ``make-benchmark``: generate the synthetic product-catalog dataset.

The config file (YAML or JSON) mirrors LoopConfig; every field is optional
and defaults match the library. An optional ``split`` section controls the
train/validation/test partition.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import yaml

from almatch.clustering import ClusterBounds
from almatch.dataset import DatasetSplit, LabelStore, load_candidate_pairs, split_dataset
from almatch.evaluation import reports_auc
from almatch.matcher import MatcherConfig, encode_all, export_encodings, import_encodings, train_baseline
from almatch.report import plot_compare, write_compare_csv, write_run_outputs
from almatch.selector import LoopConfig, run_active_learning
from almatch.service import SessionController, serve
from almatch.synth import make_benchmark, write_pairs_csv


class ConfigError(ValueError):
    pass


_LOOP_FIELDS = {f.name for f in dataclasses.fields(LoopConfig)}


def load_config(path: str | Path) -> tuple[LoopConfig, dict]:
    """Parse the config file into (LoopConfig, split options)."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping, got {type(raw).__name__}")
    split_opts = raw.pop("split", {}) or {}
    unknown = set(raw) - _LOOP_FIELDS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    if "matcher" in raw:
        raw["matcher"] = MatcherConfig(**raw["matcher"])
    if "bounds" in raw:
        raw["bounds"] = ClusterBounds(**raw["bounds"])
    try:
        config = LoopConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config, split_opts


def _build_split(dataset_path: str, split_opts: dict, default_seed: int) -> DatasetSplit:
    pairs = load_candidate_pairs(dataset_path)
    if any(p.ground_truth is None for p in pairs):
        # live dataset: no held-out metrics possible, everything is pool
        return DatasetSplit(pairs, [], [])
    ratios = tuple(split_opts.get("ratios", (3, 1, 1)))
    seed = split_opts.get("seed", default_seed)
    return split_dataset(pairs, ratios=ratios, seed=seed)


def _apply_overrides(config: LoopConfig, args: argparse.Namespace) -> LoopConfig:
    updates = {}
    if getattr(args, "strategy", None):
        updates["strategy"] = args.strategy
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    return dataclasses.replace(config, **updates) if updates else config


def cmd_run(args: argparse.Namespace) -> int:
    config, split_opts = load_config(args.config)
    config = _apply_overrides(config, args)
    if args.mode != "oracle":
        print("run is a benchmark command; use `serve` for human labeling", file=sys.stderr)
        return 1
    split = _build_split(args.dataset, split_opts, config.seed)
    if not split.test:
        print("run needs a fully labeled dataset (ground-truth oracle)", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = LabelStore(out_dir / "labels.jsonl")
    state = run_active_learning(split, config, store=store)
    paths = write_run_outputs(state.reports, out_dir, name=config.strategy)
    auc = reports_auc(state.reports)
    print(f"strategy={config.strategy} auc={auc:.2f} final_f1={state.reports[-1].f1:.4f}")
    for kind, p in paths.items():
        print(f"{kind}: {p}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config, split_opts = load_config(args.config)
    config = _apply_overrides(config, args)
    split = _build_split(args.dataset, split_opts, config.seed)
    if not split.test:
        print("compare needs a fully labeled dataset", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = {}
    for strategy in ("battleship", "random", "entropy"):
        cfg = dataclasses.replace(config, strategy=strategy)
        state = run_active_learning(split, cfg)
        runs[strategy] = state.reports
        write_run_outputs(state.reports, out_dir, name=strategy)
        print(f"{strategy}: auc={reports_auc(state.reports):.2f}")
    write_compare_csv(runs, out_dir / "compare.csv")
    plot_compare(runs, out_dir / "compare.png")
    print(f"comparison: {out_dir / 'compare.csv'}, {out_dir / 'compare.png'}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    config, split_opts = load_config(args.config)
    config = _apply_overrides(config, args)
    split = _build_split(args.dataset, split_opts, config.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    journal = out_dir / "labels.jsonl"
    store = LabelStore.load(journal) if journal.exists() else LabelStore(journal)
    controller = SessionController(split, config, store, mode=args.mode)
    print(f"serving on {args.host}:{args.port} (mode={args.mode}, journal={journal})")
    serve(controller, host=args.host, port=args.port)
    return 0


def cmd_export_encodings(args: argparse.Namespace) -> int:
    config, _ = load_config(args.config) if args.config else (LoopConfig(), {})
    pairs = load_candidate_pairs(args.dataset)
    labeled = [(p, p.ground_truth) for p in pairs if p.ground_truth is not None]
    if not labeled:
        print("export needs labeled pairs to train the matcher", file=sys.stderr)
        return 1
    matcher = train_baseline(labeled, [], config.matcher)
    encodings = encode_all(matcher, pairs)
    export_encodings(encodings, args.out)
    print(f"wrote {len(encodings)} encodings to {args.out}")
    return 0


def cmd_import_encodings(args: argparse.Namespace) -> int:
    known = None
    if args.dataset:
        known = {p.pair_id for p in load_candidate_pairs(args.dataset)}
    encodings = import_encodings(args.path, known_ids=known)
    dim = len(encodings[0].representation) if encodings else 0
    print(f"read {len(encodings)} encodings (dimension {dim}) from {args.path}")
    return 0


def cmd_make_benchmark(args: argparse.Namespace) -> int:
    pairs = make_benchmark(n_pairs=args.pairs, pos_frac=args.pos_frac, seed=args.seed or 0)
    write_pairs_csv(pairs, args.out)
    n_pos = sum(1 for p in pairs if p.ground_truth == 1)
    print(f"wrote {len(pairs)} pairs ({n_pos} positives) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="almatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True, out_dir=True):
        p.add_argument("--config", required=True, help="YAML/JSON config file")
        if dataset:
            p.add_argument("--dataset", required=True, help="candidate-pairs CSV")
        p.add_argument("--strategy", choices=("battleship", "random", "entropy"))
        p.add_argument("--seed", type=int)
        if out_dir:
            p.add_argument("--out-dir", default="almatch-out")

    p_run = sub.add_parser("run", help="one benchmark run with the ground-truth oracle")
    common(p_run)
    p_run.add_argument("--mode", choices=("oracle", "human"), default="oracle")
    p_run.set_defaults(fn=cmd_run)

    p_cmp = sub.add_parser("compare", help="run all three strategies and compare")
    common(p_cmp)
    p_cmp.set_defaults(fn=cmd_compare)

    p_srv = sub.add_parser("serve", help="HTTP labeling service")
    common(p_srv)
    p_srv.add_argument("--mode", choices=("oracle", "human"), default="human")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(fn=cmd_serve)

    p_exp = sub.add_parser("export-encodings", help="train on the labeled dataset and export encodings")
    p_exp.add_argument("--config")
    p_exp.add_argument("--dataset", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.set_defaults(fn=cmd_export_encodings)

    p_imp = sub.add_parser("import-encodings", help="validate an encodings file")
    p_imp.add_argument("--path", required=True)
    p_imp.add_argument("--dataset")
    p_imp.set_defaults(fn=cmd_import_encodings)

    p_mk = sub.add_parser("make-benchmark", help="generate the synthetic benchmark CSV")
    p_mk.add_argument("--out", required=True)
    p_mk.add_argument("--pairs", type=int, default=5000)
    p_mk.add_argument("--pos-frac", type=float, default=0.10)
    p_mk.add_argument("--seed", type=int, default=0)
    p_mk.set_defaults(fn=cmd_make_benchmark)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    needs_config = getattr(args, "config", None)
    if needs_config and not Path(args.config).exists():
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    if getattr(args, "dataset", None) and not Path(args.dataset).exists():
        print(f"dataset file not found: {args.dataset}", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError, yaml.YAMLError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
