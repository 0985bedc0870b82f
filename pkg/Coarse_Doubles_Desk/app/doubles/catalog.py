from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .double_space import make_catalog_double, transpose
from .dsl import CrossExpr, eval_cross_matrix, parse_cross_expr, to_text
from .errors import IncompatibleOperandsError, LadderError, UnknownKindError
from .models import ComposeOptions, DoubleMetric, FamilySpec, Ladder, MetricFamily
from .tropical import compose_chain

logger = logging.getLogger(__name__)

FAMILY_KINDS = ("lambda", "focused", "shift", "reflect")

# Families the experiments keep coming back to, as cross formulas.
NAMED_CROSS = {
    "b_line": "abs(x0 - y0) + 1",
    "c_wedge": "abs(x0 - y0) + min(x0, y0) + 1",
    "c_wedge_line": "max(abs(x0), abs(y0)) + 1",
}

_KIND_ALIASES = {
    "unit": "lambda",
    "lambda": "lambda",
    "focused": "focused",
    "focus": "focused",
    "shift": "shift",
    "translation": "shift",
    "reflect": "reflect",
    "reflection": "reflect",
}


def normalize_kind(raw: str | None) -> str | None:
    if not raw:
        return None
    return _KIND_ALIASES.get(raw.strip().lower(), raw.strip().lower())


# ================================================================
# Primitive rules: prefix-coherent, built once at the top level and sliced
# ================================================================
def _sliced(ladder: Ladder, top: DoubleMetric) -> List[DoubleMetric]:
    return [top.prefix(n) for n in ladder.level_sizes]


def _translation_expr(offset: int, lam: int) -> str:
    if offset == 0:
        return f"abs(x0 - y0) + {lam}"
    if offset > 0:
        return f"abs(x0 - y0 - {offset}) + {lam}"
    return f"abs(x0 - y0 + {-offset}) + {lam}"


@dataclass(frozen=True)
class CatalogRule:
    kind: str
    params: Tuple[Tuple[str, Any], ...] = ()

    def _args(self) -> Dict[str, Any]:
        return dict(self.params)

    def materialize(self, ladder: Ladder) -> List[DoubleMetric]:
        top_base = ladder.bases[-1]
        args = self._args()
        lam = int(args.get("lambda", 1))
        if self.kind in ("lambda", "focused"):
            top = make_catalog_double(top_base, self.kind, args)
        elif self.kind == "shift":
            # a coordinate translation keeps every level a prefix of the next
            top = make_catalog_double(top_base, "dsl", {"expr": _translation_expr(int(args.get("offset", 1)), lam)})
        elif self.kind == "reflect":
            top = make_catalog_double(top_base, "dsl", {"expr": f"abs(x0 + y0) + {lam}"})
        else:
            raise UnknownKindError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        return _sliced(ladder, top)

    def describe(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.kind}({args})"


@dataclass(frozen=True)
class DslRule:
    expr: CrossExpr
    validated: bool = True

    def materialize(self, ladder: Ladder) -> List[DoubleMetric]:
        base = ladder.bases[-1]
        if self.validated:
            top = make_catalog_double(base, "dsl", {"expr": self.expr})
        else:
            # a plain function on pairs: floor and cap only, clauses a-d unchecked
            top = DoubleMetric(base, eval_cross_matrix(self.expr, base))
        return _sliced(ladder, top)

    def describe(self) -> str:
        return to_text(self.expr)


# ================================================================
# Derived rules: evaluated level by level from the operands
# ================================================================
@dataclass(frozen=True, eq=False)
class ComposedRule:
    factors: Tuple[MetricFamily, ...]
    penalty: int = 0
    threads: int = 1
    block_rows: int = 32

    def materialize(self, ladder: Ladder) -> List[DoubleMetric]:
        opts = ComposeOptions(self.penalty)
        return [
            compose_chain([F.at(k) for F in self.factors], opts, threads=self.threads, block_rows=self.block_rows)
            for k in range(ladder.depth)
        ]

    def describe(self) -> str:
        inner = " · ".join(f"[{F.describe()}]" for F in self.factors)
        return inner if not self.penalty else f"{inner} (penalty {self.penalty})"


@dataclass(frozen=True, eq=False)
class TransposedRule:
    family: MetricFamily

    def materialize(self, ladder: Ladder) -> List[DoubleMetric]:
        return [transpose(D) for D in self.family.levels]

    def describe(self) -> str:
        return f"[{self.family.describe()}]*"


@dataclass(frozen=True, eq=False)
class ShiftedRule:
    family: MetricFamily
    amount: int

    def materialize(self, ladder: Ladder) -> List[DoubleMetric]:
        # adding a constant to the cross block keeps all four clauses and the floor
        return [DoubleMetric(D.base, D.cross + self.amount) for D in self.family.levels]

    def describe(self) -> str:
        return f"[{self.family.describe()}] + {self.amount}"


# ================================================================
# Family constructors
# ================================================================
def catalog_family(ladder: Ladder, kind: str, name: str = "", **params: Any) -> MetricFamily:
    k = normalize_kind(kind)
    if k not in FAMILY_KINDS:
        raise UnknownKindError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")
    return MetricFamily(ladder, CatalogRule(k, tuple(sorted(params.items()))), name)


def dsl_family(ladder: Ladder, text: str | CrossExpr, name: str = "") -> MetricFamily:
    expr = parse_cross_expr(text) if isinstance(text, str) else text
    return MetricFamily(ladder, DslRule(expr), name)


def function_family(ladder: Ladder, text: str | CrossExpr, name: str = "") -> MetricFamily:
    """A family of functions on pairs that need not be doubles.

    Only valid as an operand of the order checks (profiles, check_controls,
    build_homeomorphism); composition rejects it.
    """
    expr = parse_cross_expr(text) if isinstance(text, str) else text
    return MetricFamily(ladder, DslRule(expr, validated=False), name)


def is_validated(F: MetricFamily) -> bool:
    rule = F.rule
    if isinstance(rule, DslRule):
        return rule.validated
    if isinstance(rule, (TransposedRule, ShiftedRule)):
        return is_validated(rule.family)
    return True


def named_family(ladder: Ladder, name: str) -> MetricFamily:
    if name not in NAMED_CROSS:
        raise UnknownKindError(f"unknown named family {name!r}; expected one of {sorted(NAMED_CROSS)}")
    return dsl_family(ladder, NAMED_CROSS[name], name)


def require_common_ladder(*families: MetricFamily) -> Ladder:
    ladder = families[0].ladder
    for F in families[1:]:
        if F.ladder != ladder:
            raise LadderError(
                f"families {families[0].describe()!r} and {F.describe()!r} live on different ladders"
            )
    return ladder


def compose_families(
    *families: MetricFamily,
    opts: Optional[ComposeOptions] = None,
    threads: int = 1,
    block_rows: int = 32,
    name: str = "",
) -> MetricFamily:
    if len(families) < 2:
        raise ValueError("compose_families needs at least two families")
    for F in families:
        if not is_validated(F):
            raise IncompatibleOperandsError(f"{F.describe()!r} is a function family, not a family of doubles")
    ladder = require_common_ladder(*families)
    penalty = (opts or ComposeOptions()).junction_penalty
    return MetricFamily(ladder, ComposedRule(tuple(families), penalty, threads, block_rows), name)


def transpose_family(F: MetricFamily, name: str = "") -> MetricFamily:
    return MetricFamily(F.ladder, TransposedRule(F), name)


def shift_family(F: MetricFamily, amount: int, name: str = "") -> MetricFamily:
    if amount < 0:
        raise ValueError("shift amount must be nonnegative")
    return MetricFamily(F.ladder, ShiftedRule(F, int(amount)), name)


def family_from_spec(spec: FamilySpec) -> MetricFamily:
    ladder = spec.ladder
    if spec.cross is not None:
        make = dsl_family if spec.validated else function_family
        F = make(ladder, spec.cross, spec.name)
    elif spec.kind in NAMED_CROSS:
        F = named_family(ladder, spec.kind)
    else:
        F = catalog_family(ladder, spec.kind or "", spec.name, **dict(spec.kind_params))
    if spec.plus:
        F = shift_family(F, spec.plus, spec.name)
    return F


def is_prefix_coherent(F: MetricFamily) -> bool:
    levels = F.levels
    return all(hi.prefix(lo.n) == lo for lo, hi in zip(levels, levels[1:]))
