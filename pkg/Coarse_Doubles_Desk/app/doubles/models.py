from __future__ import annotations
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InternalInvariantError, LadderError

# Distances are exact integer quanta; inputs are capped so sums stay in int64.
Dist = int
MAX_QUANTA = 2 ** 40


def frozen_matrix(m: Any) -> np.ndarray:
    arr = np.array(m, dtype=np.int64, copy=True)
    arr.setflags(write=False)
    return arr


# ================================================================
# Finite metrics and doubles
# ================================================================
@dataclass(frozen=True, eq=False)
class FiniteMetric:
    dist: np.ndarray
    scale_denominator: int = 1
    labels: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        if not (isinstance(self.dist, np.ndarray) and self.dist.dtype == np.int64 and not self.dist.flags.writeable):
            object.__setattr__(self, "dist", frozen_matrix(self.dist))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(tuple(int(c) for c in lab) for lab in self.labels))

    @property
    def n(self) -> int:
        return int(self.dist.shape[0])

    @property
    def dim(self) -> int:
        if not self.labels:
            return 0
        return len(self.labels[0])

    def prefix(self, n: int) -> "FiniteMetric":
        if n == self.n:
            return self
        labels = self.labels[:n] if self.labels is not None else None
        return FiniteMetric(self.dist[:n, :n], self.scale_denominator, labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteMetric):
            return NotImplemented
        return (
            self.scale_denominator == other.scale_denominator
            and self.labels == other.labels
            and np.array_equal(self.dist, other.dist)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.scale_denominator, self.dist.tobytes()))


@dataclass(frozen=True, eq=False)
class DoubleMetric:
    """A metric on X ⊔ X′ stored as (base, cross) with cross[i][j] = d(x_i, x′_j)."""

    base: FiniteMetric
    cross: np.ndarray

    def __post_init__(self):
        if not (isinstance(self.cross, np.ndarray) and self.cross.dtype == np.int64 and not self.cross.flags.writeable):
            object.__setattr__(self, "cross", frozen_matrix(self.cross))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def floor(self) -> int:
        return int(self.cross.min())

    def diag(self, indices: Sequence[int]) -> List[int]:
        return [int(self.cross[i, i]) for i in indices]

    def prefix(self, n: int) -> "DoubleMetric":
        if n == self.n:
            return self
        return DoubleMetric(self.base.prefix(n), self.cross[:n, :n])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DoubleMetric):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.cross, other.cross)

    def __hash__(self) -> int:
        return hash((hash(self.base), self.cross.tobytes()))


@dataclass(frozen=True)
class Violation:
    kind: str                 # symmetry|diagonal|triangle|positivity or a|b|c|d|floor
    indices: Tuple[int, ...]
    lhs: Dist
    rhs: Dist


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class DoubleValidationReport:
    violations: Tuple[Violation, ...] = ()
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class ComposeOptions:
    junction_penalty: Dist = 0

    def __post_init__(self):
        if self.junction_penalty < 0:
            raise ValueError("junction_penalty must be a nonnegative number of quanta")


@dataclass(frozen=True)
class BenchReport:
    n: int
    threads: int
    seed: int
    ns_per_op: float
    seconds: float
    checksum: int


# ================================================================
# Ladders and families
# ================================================================
@dataclass(frozen=True)
class Ladder:
    """Nested truncations of one prototype space, smallest first.

    Any depth >= 1 is accepted. The order checks need window + 1 levels (four at
    the default window) and raise LadderError on shorter ladders; single-level
    ladders stay legal so witness extraction can answer NoWitnessError on them.
    """

    kind: str
    params: Tuple[Tuple[str, Any], ...]
    level_sizes: Tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.level_sizes)
        if not sizes:
            raise LadderError("a ladder needs at least one level")
        if sizes[0] < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise LadderError(f"level sizes must be positive and strictly increasing, got {list(sizes)}")
        object.__setattr__(self, "level_sizes", sizes)
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))

    @classmethod
    def of(cls, kind: str, level_sizes: Sequence[int], **params: Any) -> "Ladder":
        return cls(kind, tuple(sorted(params.items())), tuple(level_sizes))

    def param(self, name: str, default: Any = None) -> Any:
        return dict(self.params).get(name, default)

    @property
    def depth(self) -> int:
        return len(self.level_sizes)

    @property
    def top_size(self) -> int:
        return self.level_sizes[-1]

    def first_level_containing(self, index: int) -> int:
        """0-based level of the smallest truncation that contains point `index`."""
        return bisect_right(self.level_sizes, index)

    @cached_property
    def bases(self) -> Tuple[FiniteMetric, ...]:
        # prefix coherence lets every level be a slice of the top level
        from .metric_core import generate_space
        top = generate_space(self.kind, dict(self.params), self.top_size)
        return tuple(top.prefix(n) for n in self.level_sizes)


@dataclass(frozen=True, eq=False)
class MetricFamily:
    """A coarse class representative: one DoubleMetric per ladder level, produced by `rule`."""

    ladder: Ladder
    rule: Any
    name: str = ""

    @cached_property
    def levels(self) -> Tuple[DoubleMetric, ...]:
        built = tuple(self.rule.materialize(self.ladder))
        if len(built) != self.ladder.depth:
            raise InternalInvariantError(f"rule {self.describe()} produced {len(built)} levels")
        return built

    def at(self, level: int) -> DoubleMetric:
        return self.levels[level]

    @property
    def top(self) -> DoubleMetric:
        return self.levels[-1]

    def describe(self) -> str:
        return self.name or self.rule.describe()


# ================================================================
# Profiles, certificates and verdicts
# ================================================================
@dataclass(frozen=True, eq=False)
class ControlProfile:
    level: int
    level_size: int
    thresholds: np.ndarray
    rho: np.ndarray

    def at(self, t: int) -> Optional[int]:
        """max{G : F <= t}, or None when no pair has F <= t."""
        k = int(np.searchsorted(self.thresholds, t, side="right")) - 1
        return None if k < 0 else int(self.rho[k])


def _frac(x: Union[int, Fraction]) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(int(x))


@dataclass(frozen=True)
class Homeomorphism:
    """Strictly increasing piecewise-linear φ of [0, ∞) with φ(0) = 0."""

    breakpoints: Tuple[Tuple[Fraction, Fraction], ...]
    tail_slope: Fraction = Fraction(1)

    def __post_init__(self):
        pts = tuple((_frac(t), _frac(v)) for t, v in self.breakpoints)
        if not pts or pts[0] != (0, 0):
            pts = ((Fraction(0), Fraction(0)),) + pts
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if not (t1 > t0 and v1 > v0):
                raise InternalInvariantError(f"breakpoints not strictly increasing at {(t1, v1)}")
        if _frac(self.tail_slope) <= 0:
            raise InternalInvariantError("tail slope must be positive")
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "tail_slope", _frac(self.tail_slope))

    @classmethod
    def identity(cls) -> "Homeomorphism":
        return cls(((Fraction(0), Fraction(0)),), Fraction(1))

    def __call__(self, t: Union[int, Fraction]) -> Fraction:
        t = _frac(t)
        if t < 0:
            raise ValueError("φ is defined on [0, ∞)")
        ts = [p[0] for p in self.breakpoints]
        k = bisect_right(ts, t) - 1
        t0, v0 = self.breakpoints[k]
        if k == len(self.breakpoints) - 1:
            return v0 + self.tail_slope * (t - t0)
        t1, v1 = self.breakpoints[k + 1]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def inverse(self, v: Union[int, Fraction]) -> Fraction:
        v = _frac(v)
        if v < 0:
            raise ValueError("φ⁻¹ is defined on [0, ∞)")
        vs = [p[1] for p in self.breakpoints]
        k = bisect_right(vs, v) - 1
        t0, v0 = self.breakpoints[k]
        if k == len(self.breakpoints) - 1:
            return t0 + (v - v0) / self.tail_slope
        t1, v1 = self.breakpoints[k + 1]
        return t0 + (t1 - t0) * (v - v0) / (v1 - v0)

    def is_identity(self) -> bool:
        return self.tail_slope == 1 and all(t == v for t, v in self.breakpoints)


@dataclass(frozen=True)
class WitnessEntry:
    level: int
    i: int
    j: int
    f_value: Dist
    g_value: Dist


@dataclass(frozen=True)
class Witness:
    entries: Tuple[WitnessEntry, ...]
    bound_C: Dist

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for e in self.entries:
            if e.f_value >= self.bound_C:
                raise InternalInvariantError(f"witness entry {e} has f_value >= C={self.bound_C}")
        for a, b in zip(self.entries, self.entries[1:]):
            if b.g_value <= a.g_value:
                raise InternalInvariantError("witness g_values must strictly increase")
            if b.level < a.level:
                raise InternalInvariantError("witness levels must be nondecreasing")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def xs(self) -> List[int]:
        return [e.i for e in self.entries]

    @property
    def ys(self) -> List[int]:
        return [e.j for e in self.entries]


@dataclass(frozen=True)
class Holds:
    certificate: Homeomorphism
    levels_used: Tuple[int, ...] = ()
    outcome: str = field(default="holds", init=False)


@dataclass(frozen=True)
class Fails:
    witness: Witness
    levels_used: Tuple[int, ...] = ()
    outcome: str = field(default="fails", init=False)


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    statistic: Dict[str, Any] = field(default_factory=dict)
    levels_used: Tuple[int, ...] = ()
    outcome: str = field(default="inconclusive", init=False)


Verdict = Union[Holds, Fails, Inconclusive]


@dataclass(frozen=True)
class EquivalenceVerdict:
    """check_controls in both directions; forward is F ⊢ G, backward is G ⊢ F."""

    forward: Verdict
    backward: Verdict

    @property
    def outcome(self) -> str:
        if isinstance(self.forward, Holds) and isinstance(self.backward, Holds):
            return "equivalent"
        if isinstance(self.forward, Fails) or isinstance(self.backward, Fails):
            return "not_equivalent"
        return "inconclusive"

    @property
    def certificates(self) -> Optional[Tuple[Homeomorphism, Homeomorphism]]:
        if self.outcome != "equivalent":
            return None
        return (self.forward.certificate, self.backward.certificate)

    @property
    def failing(self) -> Optional[Fails]:
        for v in (self.forward, self.backward):
            if isinstance(v, Fails):
                return v
        return None


@dataclass(frozen=True)
class IdempotenceVerdict:
    square: EquivalenceVerdict      # F·F ~ F
    adjoint: EquivalenceVerdict     # F ~ F*

    @property
    def outcome(self) -> str:
        outcomes = (self.square.outcome, self.adjoint.outcome)
        if all(o == "equivalent" for o in outcomes):
            return "holds"
        if "not_equivalent" in outcomes:
            return "fails"
        return "inconclusive"


# ================================================================
# Fundamentality pipeline records
# ================================================================
@dataclass(frozen=True)
class CorollaryWitness:
    witness: Witness
    x_radii: Tuple[int, ...]
    y_radii: Tuple[int, ...]
    x_unbounded: bool
    y_unbounded: bool
    contradiction: Optional[str] = None


@dataclass(frozen=True)
class SparsePoint:
    x_index: int
    y_index: int
    level: int


@dataclass(frozen=True)
class SparseWitness:
    points: Tuple[SparsePoint, ...]
    bound_C: Dist
    separation_checked: bool = False

    @property
    def xs(self) -> List[int]:
        return [p.x_index for p in self.points]

    @property
    def ys(self) -> List[int]:
        return [p.y_index for p in self.points]


@dataclass(frozen=True)
class LemmaMainReport:
    bound_C: Dist
    penalty: int
    points: Tuple[SparsePoint, ...]
    diag_aba: Tuple[int, ...]
    sup_diag_aba: Dist
    aba_bound: Dist
    closed_form_bounds: Tuple[int, ...]
    closed_form_ok: bool
    diag_aca_values: Tuple[int, ...]
    aca_strictly_increasing: bool
    aca_exceeds_from_third: bool
    pointwise_dominance_fraction: Fraction
    equivalence_verdict: EquivalenceVerdict
    junction_diag_aba: Tuple[int, ...] = ()
    junction_sup_diag_aba: Optional[Dist] = None

    @property
    def aba_bound_ok(self) -> bool:
        return self.sup_diag_aba <= self.aba_bound


@dataclass(frozen=True)
class ExperimentReport:
    outcome: str                    # separated | not_separated | inconclusive
    stage: str
    failing_direction: Optional[str] = None
    corollary: Optional[CorollaryWitness] = None
    witness: Optional[SparseWitness] = None
    separator: Optional[MetricFamily] = None
    idempotent_e: Optional[MetricFamily] = None
    mu_s: Optional[MetricFamily] = None
    mu_t: Optional[MetricFamily] = None
    separation_verdict: Optional[EquivalenceVerdict] = None
    note: str = ""


# ================================================================
# Configs
# ================================================================
@dataclass(frozen=True)
class FamilySpec:
    name: str
    space: str
    levels: Tuple[int, ...]
    space_params: Tuple[Tuple[str, Any], ...] = ()
    cross: Optional[str] = None
    kind: Optional[str] = None
    kind_params: Tuple[Tuple[str, Any], ...] = ()
    plus: int = 0
    validated: bool = True

    @property
    def ladder(self) -> Ladder:
        return Ladder(self.space, self.space_params, self.levels)


@dataclass(frozen=True)
class ExperimentConfig:
    families: Tuple[FamilySpec, ...]
    options: Any
    output_dir: Optional[str] = None
    emit_csv: bool = False
    seed: int = 0
