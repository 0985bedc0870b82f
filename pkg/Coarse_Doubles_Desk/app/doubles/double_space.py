from __future__ import annotations
import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .dsl import CrossExpr, eval_cross_matrix, parse_cross_expr
from .errors import DoubleValidationError, ShapeError, UnknownKindError, InvalidInputError
from .kernel import minplus
from .metric_core import as_matrix
from .models import DoubleMetric, DoubleValidationReport, FiniteMetric, Violation

logger = logging.getLogger(__name__)

CATALOG_KINDS = ("lambda", "shift", "focused", "dsl")
REPORT_LIMIT = 100


def _cross_matrix(base: FiniteMetric, cross: Any) -> np.ndarray:
    c = np.asarray(cross)
    if c.ndim != 2 or c.shape != (base.n, base.n):
        raise ShapeError(f"cross must be {base.n}x{base.n}, got shape {c.shape}")
    return as_matrix(c)


# ================================================================
# Validation of the 2n-point metric, on (base, cross) only
# ================================================================
def _clause_sides(clause: str, base: np.ndarray, cross: np.ndarray, k: int):
    """(lhs, rhs) matrices over (i, j) for intermediate point k."""
    if clause == "a":
        return cross, base[:, k, None] + cross[None, k, :]
    if clause == "b":
        return cross, cross[:, k, None] + base[None, k, :]
    if clause == "c":
        return base, cross[:, k, None] + cross[None, :, k]
    return base, cross[k, :, None] + cross[None, k, :]


def validate_double(base: FiniteMetric, cross: Any, limit: Optional[int] = None) -> DoubleValidationReport:
    """Check the cross floor and clauses (a)-(d) for all i, j, k.

    Violations are ordered floor first, then by clause, intermediate k, i, j.
    With `limit`, collection stops after that many and the report is marked
    truncated.
    """
    c = _cross_matrix(base, cross)
    b = base.dist
    found: List[Violation] = []

    def full() -> bool:
        return limit is not None and len(found) >= limit

    fi, fj = np.nonzero(c < 1)
    for i, j in zip(fi, fj):
        found.append(Violation("floor", (int(i), int(j)), int(c[i, j]), 1))
        if full():
            return DoubleValidationReport(tuple(found), truncated=True)

    # fast exact screen: each clause family holds iff a min-plus product dominates
    screens = {
        "a": bool((minplus(b, c) >= c).all()),
        "b": bool((minplus(c, b) >= c).all()),
        "c": bool((minplus(c, c.T) >= b).all()),
        "d": bool((minplus(c.T, c) >= b).all()),
    }
    for clause in ("a", "b", "c", "d"):
        if screens[clause]:
            continue
        for k in range(base.n):
            lhs, rhs = _clause_sides(clause, b, c, k)
            bi, bj = np.nonzero(lhs > rhs)
            for i, j in zip(bi, bj):
                found.append(Violation(clause, (int(i), int(j), k), int(lhs[i, j]), int(rhs[i, j])))
                if full():
                    return DoubleValidationReport(tuple(found), truncated=True)
    return DoubleValidationReport(tuple(found))


def assemble_double(base: FiniteMetric, cross: Any) -> DoubleMetric:
    c = _cross_matrix(base, cross)
    report = validate_double(base, c, limit=REPORT_LIMIT)
    if not report.ok:
        v = report.violations[0]
        more = "+" if report.truncated else ""
        raise DoubleValidationError(
            f"invalid double: {len(report.violations)}{more} violation(s); "
            f"first clause ({v.kind}) at {v.indices}: {v.lhs} > {v.rhs}"
            if v.kind != "floor"
            else f"invalid double: cross value {v.lhs} at {v.indices} is below the 1-quantum floor",
            report,
        )
    return DoubleMetric(base, c)


def transpose(D: DoubleMetric) -> DoubleMetric:
    """The pseudoinverse representative: cross*[i][j] = cross[j][i]."""
    return DoubleMetric(D.base, D.cross.T)


# ================================================================
# Catalog constructions
# ================================================================
def _lam(params: Dict[str, Any]) -> int:
    lam = int(params.get("lambda", 1))
    if lam < 1:
        raise InvalidInputError("lambda must be at least 1 quantum")
    return lam


def make_catalog_double(base: FiniteMetric, kind: str, params: Optional[Dict[str, Any]] = None) -> DoubleMetric:
    params = dict(params or {})
    d = base.dist
    n = base.n

    if kind == "lambda":
        cross = d + _lam(params)
    elif kind == "shift":
        g = np.asarray(params.get("g", []), dtype=np.int64)
        if g.shape != (n,) or (g < 0).any() or (g >= n).any():
            raise InvalidInputError(f"shift needs a self-map given as {n} indices in [0, {n})")
        cross = d[:, g] + _lam(params)
    elif kind == "focused":
        p = int(params.get("basepoint", 0))
        if not 0 <= p < n:
            raise InvalidInputError(f"basepoint {p} outside the space")
        cross = d[:, p, None] + d[None, p, :] + _lam(params)
    elif kind == "dsl":
        expr: Union[str, CrossExpr] = params.get("expr", "")
        if isinstance(expr, str):
            expr = parse_cross_expr(expr)
        cross = eval_cross_matrix(expr, base)
    else:
        raise UnknownKindError(f"unknown catalog kind {kind!r}; expected one of {CATALOG_KINDS}")

    return assemble_double(base, cross)
