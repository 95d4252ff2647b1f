"""Command-line entry point.

Subcommands: `run` (single configuration), `sweep` (sparsity ratios),
`ablate` (drop pipeline modules), `synth` (generate a fixture dataset),
and `gradcheck` (finite-difference gradient suite). Exit codes: 0
success, 2 config error, 3 provider/transport error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import apply_overrides, build_config, parse_config_file, variant_config
from .errors import ConfigError, DatasetError, NumericError, SparseTagError, TransportError
from .graph import save_dataset
from .synth import SyntheticSpec, gen_synthetic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_NUMERIC = 4

ABLATABLE = ("text_aug", "struct_aug", "struct_learn")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", help="flat key=value config file")
    parser.add_argument("--dataset", help="dataset JSONL path")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--ratio", type=float, help="sparsity ratio in [0, 1]")
    parser.add_argument("--seeds", help="comma-separated seed list")
    parser.add_argument("--endpoint", help="completion provider endpoint URL")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def _resolve_config(args: argparse.Namespace):
    values = parse_config_file(args.config) if args.config else {}
    direct = []
    if args.dataset is not None:
        direct.append(f"dataset={args.dataset}")
    if args.out is not None:
        direct.append(f"out_dir={args.out}")
    if getattr(args, "ratio", None) is not None:
        direct.append(f"ratio={args.ratio}")
    if args.seeds is not None:
        direct.append(f"seeds={args.seeds}")
    if args.endpoint is not None:
        direct.append(f"llm_endpoint={args.endpoint}")
    values = apply_overrides(values, direct + list(args.overrides))
    return build_config(values)


def _print_report(report) -> None:
    print(f"[{report.header}] variant={report.variant}")
    for r in report.per_seed:
        if r.error is not None:
            print(f"  seed {r.seed}: ERROR ({r.error_kind}) {r.error}")
        else:
            print(f"  seed {r.seed}: accuracy {r.accuracy:.4f} (best epoch {r.best_epoch})")
    print(f"  mean {report.mean:.4f} +/- {report.std:.4f}")


def _report_exit_code(report) -> int:
    for r in report.per_seed:
        if r.error_kind == "TransportError":
            return EXIT_TRANSPORT
        if r.error_kind == "NumericError":
            return EXIT_NUMERIC
    if report.partial:
        return EXIT_CONFIG
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    from .pipeline import run_pipeline

    cfg = _resolve_config(args)
    report = run_pipeline(cfg)
    _print_report(report)
    print(f"report written to {Path(cfg.out_dir) / 'report.json'}")
    return _report_exit_code(report)


def _cmd_sweep(args: argparse.Namespace) -> int:
    from .pipeline import run_sweep

    cfg = _resolve_config(args)
    if args.ratios:
        ratios = tuple(float(part) for part in args.ratios.split(",") if part.strip())
    else:
        ratios = cfg.ratios or ()
    if not ratios:
        raise ConfigError("sweep requires --ratios (or a ratios config key)")
    reports = run_sweep(cfg, ratios)
    code = EXIT_OK
    for report in reports:
        _print_report(report)
        code = code or _report_exit_code(report)
    print(f"sweep table written to {Path(cfg.out_dir) / 'sweep.csv'}")
    return code


def _cmd_ablate(args: argparse.Namespace) -> int:
    from .pipeline import run_pipeline

    cfg = _resolve_config(args)
    removed = []
    for name in args.without:
        if name not in ABLATABLE:
            raise ConfigError(f"--without must be one of {ABLATABLE}, got {name!r}")
        removed.append(name)
    cfg = variant_config(cfg, **{name: False for name in set(removed)})
    report = run_pipeline(cfg)
    _print_report(report)
    return _report_exit_code(report)


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        nodes=args.nodes,
        classes=args.classes,
        intra=args.intra,
        inter=args.inter,
        vocab_per_class=args.vocab,
        words_per_node=args.words,
        seed=args.seed,
        noise=args.noise,
        train_frac=args.train_frac,
        val_frac=args.val_frac,
    )
    graph = gen_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(graph, out)
    print(
        f"wrote {out}: {graph.num_nodes} nodes, {graph.num_edges} edges, "
        f"{len(graph.class_names)} classes"
    )
    return EXIT_OK


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    from .gnn.gradcheck import run_gradient_checks

    results = run_gradient_checks(epsilon=args.eps)
    worst = max(results.values())
    for name, err in sorted(results.items()):
        status = "ok" if err <= args.tolerance else "FAIL"
        print(f"gradcheck {name}: max relative error {err:.3e} [{status}]")
    if worst > args.tolerance:
        print(f"gradient check failed: {worst:.3e} > {args.tolerance:.1e}")
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsetag",
        description="Robust node classification on sparse text-attributed graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    _add_config_flags(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a sparsity-ratio sweep")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--ratios", help="comma-separated ratios, e.g. 0.2,0.5,0.8")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_ablate = sub.add_parser("ablate", help="run with pipeline modules removed")
    _add_config_flags(p_ablate)
    p_ablate.add_argument(
        "--without",
        action="append",
        required=True,
        metavar="|".join(ABLATABLE),
        help="module to disable (repeatable)",
    )
    p_ablate.set_defaults(fn=_cmd_ablate)

    p_synth = sub.add_parser("synth", help="generate a synthetic fixture dataset")
    p_synth.add_argument("--out", required=True, help="output JSONL path")
    p_synth.add_argument("--nodes", type=int, default=600)
    p_synth.add_argument("--classes", type=int, default=4)
    p_synth.add_argument("--intra", type=float, default=0.05)
    p_synth.add_argument("--inter", type=float, default=0.005)
    p_synth.add_argument("--vocab", type=int, default=30)
    p_synth.add_argument("--words", type=int, default=40)
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.add_argument("--noise", type=float, default=0.1)
    p_synth.add_argument("--train-frac", type=float, default=0.6)
    p_synth.add_argument("--val-frac", type=float, default=0.2)
    p_synth.set_defaults(fn=_cmd_synth)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p_grad.add_argument("--eps", type=float, default=1e-5)
    p_grad.add_argument("--tolerance", type=float, default=1e-4)
    p_grad.set_defaults(fn=_cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DatasetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SparseTagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
