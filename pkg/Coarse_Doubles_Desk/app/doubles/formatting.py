from __future__ import annotations
from fractions import Fraction
from typing import Any, Dict, Optional, TextIO, Union

import pandas as pd

from .coarse_order import control_profiles
from .models import (
    BenchReport,
    CorollaryWitness,
    DoubleValidationReport,
    EquivalenceVerdict,
    ExperimentReport,
    Fails,
    Holds,
    Homeomorphism,
    IdempotenceVerdict,
    Inconclusive,
    LemmaMainReport,
    MetricFamily,
    SparseWitness,
    ValidationReport,
    Verdict,
    Witness,
)


# ================================================================
# Report dictionaries (JSON-ready, no floats in verdict payloads)
# ================================================================
def exact(x: Union[int, Fraction]) -> Union[int, str]:
    x = Fraction(x)
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def homeomorphism_to_dict(phi: Homeomorphism) -> Dict[str, Any]:
    return {
        "breakpoints": [[exact(t), exact(v)] for t, v in phi.breakpoints],
        "tail_slope": exact(phi.tail_slope),
        "identity": phi.is_identity(),
    }


def witness_to_dict(w: Witness) -> Dict[str, Any]:
    return {
        "bound_C": w.bound_C,
        "entries": [
            {"level": e.level, "i": e.i, "j": e.j, "f_value": e.f_value, "g_value": e.g_value}
            for e in w.entries
        ],
    }


def verdict_to_dict(v: Verdict) -> Dict[str, Any]:
    out: Dict[str, Any] = {"verdict": v.outcome}
    if isinstance(v, Holds):
        out["certificate"] = homeomorphism_to_dict(v.certificate)
    elif isinstance(v, Fails):
        out["witness"] = witness_to_dict(v.witness)
    elif isinstance(v, Inconclusive):
        out["reason"] = v.reason
        out["statistic"] = dict(v.statistic)
    out["levels_used"] = list(v.levels_used)
    return out


def equivalence_to_dict(ev: EquivalenceVerdict) -> Dict[str, Any]:
    return {
        "verdict": ev.outcome,
        "forward": verdict_to_dict(ev.forward),
        "backward": verdict_to_dict(ev.backward),
    }


def idempotence_to_dict(iv: IdempotenceVerdict) -> Dict[str, Any]:
    return {
        "verdict": iv.outcome,
        "square": equivalence_to_dict(iv.square),
        "adjoint": equivalence_to_dict(iv.adjoint),
    }


def validation_to_dict(report: Union[ValidationReport, DoubleValidationReport]) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "verdict": "valid" if report.ok else "invalid",
        "violations": [
            {"kind": v.kind, "indices": list(v.indices), "lhs": v.lhs, "rhs": v.rhs}
            for v in report.violations
        ],
    }
    if isinstance(report, DoubleValidationReport):
        out["truncated"] = report.truncated
    return out


def corollary_to_dict(cw: CorollaryWitness) -> Dict[str, Any]:
    return {
        "witness": witness_to_dict(cw.witness),
        "x_radii": list(cw.x_radii),
        "y_radii": list(cw.y_radii),
        "x_unbounded": cw.x_unbounded,
        "y_unbounded": cw.y_unbounded,
        "contradiction": cw.contradiction,
    }


def sparse_to_dict(sw: SparseWitness) -> Dict[str, Any]:
    return {
        "bound_C": sw.bound_C,
        "separation_checked": sw.separation_checked,
        "points": [{"x": p.x_index, "y": p.y_index, "level": p.level} for p in sw.points],
    }


def lemma_report_to_dict(r: LemmaMainReport) -> Dict[str, Any]:
    return {
        "verdict": r.equivalence_verdict.outcome,
        "metrics": {
            "bound_C": r.bound_C,
            "penalty": r.penalty,
            "sup_diag_aba": r.sup_diag_aba,
            "aba_bound": r.aba_bound,
            "aba_bound_ok": r.aba_bound_ok,
            "diag_aba": list(r.diag_aba),
            "closed_form_bounds": list(r.closed_form_bounds),
            "closed_form_ok": r.closed_form_ok,
            "diag_aca": list(r.diag_aca_values),
            "aca_strictly_increasing": r.aca_strictly_increasing,
            "aca_exceeds_from_third": r.aca_exceeds_from_third,
            "pointwise_dominance_fraction": exact(r.pointwise_dominance_fraction),
            "junction_diag_aba": list(r.junction_diag_aba),
            "junction_sup_diag_aba": r.junction_sup_diag_aba,
        },
        "points": [{"x": p.x_index, "y": p.y_index, "level": p.level} for p in r.points],
        "equivalence": equivalence_to_dict(r.equivalence_verdict),
    }


def _family_name(F: Optional[MetricFamily]) -> Optional[str]:
    return F.describe() if F is not None else None


def experiment_to_dict(r: ExperimentReport) -> Dict[str, Any]:
    return {
        "verdict": r.outcome,
        "stage": r.stage,
        "failing_direction": r.failing_direction,
        "corollary": corollary_to_dict(r.corollary) if r.corollary else None,
        "witness": sparse_to_dict(r.witness) if r.witness else None,
        "separator": _family_name(r.separator),
        "idempotent_e": _family_name(r.idempotent_e),
        "mu_s": _family_name(r.mu_s),
        "mu_t": _family_name(r.mu_t),
        "separation": equivalence_to_dict(r.separation_verdict) if r.separation_verdict else None,
        "note": r.note,
    }


def bench_to_dict(b: BenchReport) -> Dict[str, Any]:
    return {
        "verdict": "success",
        "metrics": {"n": b.n, "threads": b.threads, "seed": b.seed, "checksum": b.checksum},
        "timings": {"seconds": b.seconds, "ns_per_op": b.ns_per_op},
    }


# ================================================================
# Tables
# ================================================================
def witness_frame(w: Witness) -> pd.DataFrame:
    return pd.DataFrame(
        [(e.level, e.i, e.j, e.f_value, e.g_value) for e in w.entries],
        columns=["level", "i", "j", "f_value", "g_value"],
    )


def sparse_frame(sw: SparseWitness) -> pd.DataFrame:
    return pd.DataFrame(
        [(k + 1, p.x_index, p.y_index, p.level) for k, p in enumerate(sw.points)],
        columns=["k", "x", "y", "level"],
    )


def lemma_frame(r: LemmaMainReport) -> pd.DataFrame:
    """One row per retained witness point: the bounded and the diverging diagonal."""
    return pd.DataFrame(
        {
            "k": range(1, len(r.points) + 1),
            "x": [p.x_index for p in r.points],
            "y": [p.y_index for p in r.points],
            "diag_aba": r.diag_aba,
            "closed_form_bound": r.closed_form_bounds,
            "diag_aca": r.diag_aca_values,
        }
    )


def profile_table(F: MetricFamily, G: MetricFamily) -> pd.DataFrame:
    """rho per threshold (rows) and level (columns); blank where no pair has F <= t yet."""
    profiles = control_profiles(F, G)
    columns: Dict[str, pd.Series] = {}
    for p in profiles:
        columns[f"n={p.level_size}"] = pd.Series(p.rho, index=p.thresholds, dtype="Int64")
    table = pd.DataFrame(columns).sort_index()
    table = table.ffill()
    table.index.name = "threshold"
    return table.astype("Int64")


# ================================================================
# Console summaries
# ================================================================
def print_verdict(label: str, v: Union[Verdict, EquivalenceVerdict], file: Optional[TextIO] = None):
    print(f"\n[{label}] {v.outcome}", file=file)
    parts = (v.forward, v.backward) if isinstance(v, EquivalenceVerdict) else (v,)
    for part in parts:
        if isinstance(part, Holds):
            phi = part.certificate
            shape = "identity" if phi.is_identity() else f"{len(phi.breakpoints)} breakpoints"
            print(f" - holds, φ: {shape}", file=file)
        elif isinstance(part, Fails):
            w = part.witness
            print(f" - fails, {len(w)} witness pairs with F < {w.bound_C}", file=file)
        else:
            print(f" - inconclusive: {part.reason}", file=file)


def print_lemma_report(r: LemmaMainReport, file: Optional[TextIO] = None):
    print(f"\n[lemma main] C={r.bound_C} penalty={r.penalty}", file=file)
    print(f" - sup diag ABA*: {r.sup_diag_aba} (bound {r.aba_bound})", file=file)
    for k, (p, a, c) in enumerate(zip(r.points, r.diag_aba, r.diag_aca_values), start=1):
        print(f"   k={k}: x={p.x_index} → ABA* {a} · ACA* {c}", file=file)
    print(f" - ACA* ≥ ABA* on {float(r.pointwise_dominance_fraction):.1%} of top-level pairs", file=file)
    print(f" - equivalence: {r.equivalence_verdict.outcome}", file=file)
