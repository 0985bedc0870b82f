"""Command-line surface.

Exit codes: 0 holds / equivalent / valid / success, 2 fails / not equivalent /
invalid, 3 inconclusive, 1 usage or I/O error. Standard output carries only
JSON (or the bare value for `eval-dsl`); logs go to stderr.
"""
from __future__ import annotations
import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from .catalog import family_from_spec
from .coarse_order import check_controls, check_equivalent
from .config import FAMILIES_DIR, PipelineOptions
from .double_space import validate_double
from .dsl import eval_cross_expr, parse_cross_expr
from .errors import DoublesError, DoubleValidationError, InvalidInputError, NoWitnessError
from .formatting import (
    bench_to_dict,
    corollary_to_dict,
    equivalence_to_dict,
    experiment_to_dict,
    lemma_frame,
    lemma_report_to_dict,
    print_lemma_report,
    print_verdict,
    sparse_frame,
    sparse_to_dict,
    validation_to_dict,
    verdict_to_dict,
    witness_frame,
)
from .fundamentality import extract_witness, fundamentality_experiment, sparsify_witness, verify_lemma_main
from .io_loader import (
    dumps_metric,
    load_double,
    load_experiment,
    load_family_spec,
    metric_from_dict,
    report_envelope,
    save_metric,
    save_report,
    spec_to_dict,
)
from .models import ComposeOptions, FamilySpec, MetricFamily
from .tropical import bench_minplus, compose

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_FAILS, EXIT_INCONCLUSIVE = 0, 1, 2, 3

_VERDICT_EXIT = {
    "holds": EXIT_OK,
    "equivalent": EXIT_OK,
    "valid": EXIT_OK,
    "success": EXIT_OK,
    "separated": EXIT_OK,
    "fails": EXIT_FAILS,
    "not_equivalent": EXIT_FAILS,
    "invalid": EXIT_FAILS,
    "not_separated": EXIT_FAILS,
    "inconclusive": EXIT_INCONCLUSIVE,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ================================================================
# Shared helpers
# ================================================================
def _levels(text: Optional[str]) -> Optional[List[int]]:
    if not text:
        return None
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--levels expects comma-separated integers, got {text!r}")


def _resolve_family_path(ref: str) -> Path:
    path = Path(ref)
    if path.exists():
        return path
    for candidate in (FAMILIES_DIR / ref, FAMILIES_DIR / f"{ref}.toml"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"no family file {ref!r} (also looked in {FAMILIES_DIR})")


def _load_spec(ref: str, levels: Optional[List[int]]) -> FamilySpec:
    spec = load_family_spec(_resolve_family_path(ref))
    return replace(spec, levels=tuple(levels)) if levels else spec


def _options(args: argparse.Namespace, base: Optional[PipelineOptions] = None) -> PipelineOptions:
    base = base or PipelineOptions.from_env()
    return base.merged(
        penalty=getattr(args, "penalty", None),
        window=getattr(args, "window", None),
        min_witness_length=getattr(args, "min_witness", None),
        threads=getattr(args, "threads", None),
    )


def _config(command: str, opts: PipelineOptions, specs: Sequence[FamilySpec] = (), **extra: Any) -> Dict[str, Any]:
    return {"command": command, "families": [spec_to_dict(s) for s in specs], "options": opts.as_dict(), **extra}


def _emit(args: argparse.Namespace, payload: Dict[str, Any], config: Dict[str, Any], started: float) -> int:
    timings = {"wall_seconds": round(time.perf_counter() - started, 6)}
    if getattr(args, "out", None):
        save_report(Path(args.out), payload, config, timings)
        logger.info("report written to %s", args.out)
    print(json.dumps(report_envelope(payload, config), indent=2))
    return _VERDICT_EXIT.get(payload.get("verdict", "success"), EXIT_OK)


def _pair(args: argparse.Namespace) -> tuple[FamilySpec, FamilySpec, MetricFamily, MetricFamily]:
    levels = _levels(getattr(args, "levels", None))
    s1, s2 = _load_spec(args.first, levels), _load_spec(args.second, levels)
    return s1, s2, family_from_spec(s1), family_from_spec(s2)


# ================================================================
# Subcommands
# ================================================================
def cmd_validate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    with open(args.double, "r", encoding="utf-8") as f:
        data = json.load(f)
    cross = data.pop("cross", None)
    try:
        base = metric_from_dict(data)
    except InvalidInputError as exc:
        if exc.report is None:
            raise
        payload = validation_to_dict(exc.report)
        return _emit(args, payload, {"command": "validate", "input": str(args.double)}, started)
    report = validate_double(base, cross, limit=100) if cross is not None else None
    payload = validation_to_dict(report) if report is not None else {"verdict": "valid", "violations": []}
    payload["metrics"] = {"n": base.n, "double": cross is not None}
    return _emit(args, payload, {"command": "validate", "input": str(args.double)}, started)


def cmd_compose(args: argparse.Namespace) -> int:
    D1, D2 = load_double(args.first), load_double(args.second)
    opts = _options(args)
    D = compose(D1, D2, ComposeOptions(opts.penalty), threads=opts.threads)
    if args.out:
        save_metric(Path(args.out), D)
        logger.info("composed double written to %s", args.out)
    else:
        sys.stdout.write(dumps_metric(D))
    return EXIT_OK


def cmd_check_order(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    s1, s2, F, G = _pair(args)
    opts = _options(args)
    verdict = check_controls(F, G, opts)
    if args.verbose:
        print_verdict(f"controls({s1.name} ⊢ {s2.name})", verdict, file=sys.stderr)
    return _emit(args, verdict_to_dict(verdict), _config("check-order", opts, (s1, s2)), started)


def cmd_check_equiv(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    s1, s2, F, G = _pair(args)
    opts = _options(args)
    verdict = check_equivalent(F, G, opts)
    if args.verbose:
        print_verdict(f"{s1.name} ~ {s2.name}", verdict, file=sys.stderr)
    return _emit(args, equivalence_to_dict(verdict), _config("check-equiv", opts, (s1, s2)), started)


def cmd_witness(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    s1, s2, B, C = _pair(args)
    opts = _options(args)
    config = _config("witness", opts, (s1, s2))
    try:
        corollary = extract_witness(B, C, opts)
    except NoWitnessError as exc:
        missing = {
            "verdict": "inconclusive" if exc.verdict.outcome == "inconclusive" else "fails",
            "reason": str(exc),
            "controls": verdict_to_dict(exc.verdict),
        }
        return _emit(args, missing, config, started)
    payload: Dict[str, Any] = {"verdict": "success", "corollary": corollary_to_dict(corollary)}
    try:
        sparse = sparsify_witness(corollary, B, C, opts)
        payload["sparse"] = sparse_to_dict(sparse)
    except DoublesError as exc:
        payload["sparse"] = None
        payload["sparse_error"] = str(exc)
        sparse = None
    if args.emit_csv:
        out = Path(args.emit_csv)
        out.mkdir(parents=True, exist_ok=True)
        witness_frame(corollary.witness).to_csv(out / "witness.csv", index=False)
        if sparse is not None:
            sparse_frame(sparse).to_csv(out / "sparse_witness.csv", index=False)
    return _emit(args, payload, config, started)


def cmd_lemma_main(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    s1, s2, B, C = _pair(args)
    opts = _options(args)
    report = verify_lemma_main(B, C, opts=opts)
    if args.verbose:
        print_lemma_report(report, file=sys.stderr)
    if args.emit_csv:
        lemma_frame(report).to_csv(Path(args.emit_csv), index=False)
        logger.info("diagonal table written to %s", args.emit_csv)
    payload = lemma_report_to_dict(report)
    verdict = report.equivalence_verdict.outcome
    ok = report.aba_bound_ok and report.aca_strictly_increasing and verdict == "not_equivalent"
    payload["verdict"] = "inconclusive" if verdict == "inconclusive" else ("success" if ok else "fails")
    payload["equivalence_verdict"] = verdict
    return _emit(args, payload, _config("lemma-main", opts, (s1, s2)), started)


def cmd_fundamentality(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    if args.config:
        experiment = load_experiment(Path(args.config))
        opts = _options(args, experiment.options)
        if len(experiment.families) != 2:
            raise InvalidInputError("an experiment config needs exactly two families (S and T)")
        s1, s2 = experiment.families
        emit_dir = experiment.output_dir if experiment.emit_csv else None
    elif args.first and args.second:
        levels = _levels(args.levels)
        s1, s2 = _load_spec(args.first, levels), _load_spec(args.second, levels)
        opts = _options(args)
        emit_dir = args.emit_csv
    else:
        raise InvalidInputError("fundamentality needs S and T family files or --config")
    report = fundamentality_experiment(family_from_spec(s1), family_from_spec(s2), opts)
    if emit_dir and report.witness is not None:
        out = Path(emit_dir)
        out.mkdir(parents=True, exist_ok=True)
        sparse_frame(report.witness).to_csv(out / "sparse_witness.csv", index=False)
    if args.verbose and report.separation_verdict is not None:
        print_verdict("mu_s ~ mu_t", report.separation_verdict, file=sys.stderr)
    return _emit(args, experiment_to_dict(report), _config("fundamentality", opts, (s1, s2)), started)


def _coords(text: str) -> List[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def cmd_eval_dsl(args: argparse.Namespace) -> int:
    expr = parse_cross_expr(args.expr)
    value = eval_cross_expr(expr, _coords(args.x), _coords(args.y), args.dxy)
    print(value)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    report = bench_minplus(args.n, threads=args.threads or 1, seed=args.seed)
    config = {"command": "bench", "n": args.n, "threads": args.threads or 1, "seed": args.seed}
    return _emit(args, bench_to_dict(report), config, started)


# ================================================================
# Parser
# ================================================================
def _add_common(p: argparse.ArgumentParser, pair: bool = True):
    if pair:
        p.add_argument("first", help="first family (TOML path or name under Data/Families)")
        p.add_argument("second", help="second family (TOML path or name under Data/Families)")
        p.add_argument("--levels", help="override ladder level sizes, e.g. 16,32,64,128,256")
    p.add_argument("--window", type=int, help="stability window (levels)")
    p.add_argument("--min-witness", type=int, help="minimum witness length")
    p.add_argument("--penalty", type=int, help="junction penalty in quanta")
    p.add_argument("--threads", type=int, help="min-plus worker threads")
    p.add_argument("-o", "--out", help="also write the report here (timings go to a sidecar)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="doubles", description="Coarse doubles desk: metrics on X ⊔ X′ up to coarse equivalence.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug (stderr)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="validate a double (JSON artifact)")
    p.add_argument("--double", required=True)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compose", help="compose two doubles over a common base")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--penalty", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("check-order", help="controls(F ⊢ G): is G ≤ φ∘F on the ladder?")
    _add_common(p)
    p.set_defaults(func=cmd_check_order)

    p = sub.add_parser("check-equiv", help="coarse equivalence of two families")
    _add_common(p)
    p.set_defaults(func=cmd_check_equiv)

    p = sub.add_parser("witness", help="extract and sparsify a B-bounded, C-divergent witness")
    _add_common(p)
    p.add_argument("--emit-csv", help="directory for witness.csv and sparse_witness.csv")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("lemma-main", help="bounded ABA* against diverging ACA* diagonals")
    _add_common(p)
    p.add_argument("--emit-csv", help="CSV path for the per-point diagonal table")
    p.set_defaults(func=cmd_lemma_main)

    p = sub.add_parser("fundamentality", help="separate two classes by an idempotent")
    p.add_argument("first", nargs="?")
    p.add_argument("second", nargs="?")
    p.add_argument("--levels")
    p.add_argument("--config", help="experiment TOML with [pipeline], [families.*], [output]")
    p.add_argument("--emit-csv", help="directory for the sparse witness CSV")
    _add_common(p, pair=False)
    p.set_defaults(func=cmd_fundamentality)

    p = sub.add_parser("eval-dsl", help="evaluate a cross expression at one pair")
    p.add_argument("expr")
    p.add_argument("--x", default="", help="coordinates of x, comma-separated")
    p.add_argument("--y", default="", help="coordinates of y, comma-separated")
    p.add_argument("--dxy", type=int, default=0, help="base distance between x and y")
    p.set_defaults(func=cmd_eval_dsl)

    p = sub.add_parser("bench", help="time one n×n min-plus product")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_bench)
    return parser


def _configure_logging(verbose: int):
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.verbose)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except DoubleValidationError as exc:
        if args.command == "validate":
            print(json.dumps(validation_to_dict(exc.report), indent=2))
            return EXIT_FAILS
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (DoublesError, OSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    raise SystemExit(run_cli())
