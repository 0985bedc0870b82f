from __future__ import annotations
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .catalog import compose_families, require_common_ladder, transpose_family
from .config import PipelineOptions
from .coarse_order import check_controls, check_equivalent, is_idempotent
from .double_space import assemble_double
from .errors import (
    DoubleValidationError,
    InternalInvariantError,
    LadderError,
    LadderTooShortError,
    NoWitnessError,
    PreconditionError,
)
from .kernel import minplus
from .models import (
    ComposeOptions,
    CorollaryWitness,
    DoubleMetric,
    ExperimentReport,
    Fails,
    Inconclusive,
    Ladder,
    LemmaMainReport,
    MetricFamily,
    SparsePoint,
    SparseWitness,
    Witness,
)
from .tropical import compose_chain

logger = logging.getLogger(__name__)


# ================================================================
# Witness extraction
# ================================================================
def _radii(ladder: Ladder, base: np.ndarray, points: Sequence[int]) -> Tuple[int, ...]:
    """Per level, the largest base distance from point 0 to a sequence point present there."""
    out = []
    for size in ladder.level_sizes:
        present = [p for p in points if p < size]
        out.append(max((int(base[0, p]) for p in present), default=0))
    return tuple(out)


def _diverges(radii: Sequence[int], window: int, step: int) -> bool:
    tail = list(radii[-window:])
    return len(tail) >= 2 and all(b - a >= step for a, b in zip(tail, tail[1:]))


def extract_witness(
    B: MetricFamily, C_family: MetricFamily, opts: Optional[PipelineOptions] = None
) -> CorollaryWitness:
    """Pairs with B bounded and C diverging, plus the check that both point sequences are unbounded."""
    opts = opts or PipelineOptions()
    ladder = require_common_ladder(B, C_family)
    try:
        verdict = check_controls(B, C_family, opts)
    except LadderError as exc:
        verdict = Inconclusive(str(exc), {"levels": ladder.depth, "window": opts.window})
    if not isinstance(verdict, Fails):
        raise NoWitnessError(
            f"controls({B.describe()} ⊢ {C_family.describe()}) is {verdict.outcome}; no witness to extract",
            verdict,
        )

    witness = verdict.witness
    base = ladder.bases[-1].dist
    x_radii = _radii(ladder, base, witness.xs)
    y_radii = _radii(ladder, base, witness.ys)
    x_unbounded = _diverges(x_radii, opts.window, opts.divergence_step)
    y_unbounded = _diverges(y_radii, opts.window, opts.divergence_step)

    contradiction = None
    if not (x_unbounded and y_unbounded):
        side = "x" if not x_unbounded else "y"
        radius = (x_radii if side == "x" else y_radii)[-1]
        contradiction = (
            f"the {side}-sequence stays within {radius} of point 0, so C-values along the witness "
            f"are bounded by a fixed multiple of {witness.bound_C} plus that radius, "
            f"against their observed growth to {witness.entries[-1].g_value}"
        )
        logger.warning("witness sequence %s does not leave the ball of radius %d", side, radius)
    logger.info("extracted %d-entry witness with C=%d", len(witness), witness.bound_C)
    return CorollaryWitness(witness, x_radii, y_radii, x_unbounded, y_unbounded, contradiction)


# ================================================================
# Sparsification
# ================================================================
def spread_subsequence(points: Sequence[int], base: np.ndarray) -> List[int]:
    """Greedy positions whose k-th pick is more than 2^k quanta from all earlier picks."""
    kept: List[int] = []
    picks: List[int] = []
    for pos, p in enumerate(points):
        k = len(kept) + 1
        if all(int(base[p, q]) > 2 ** k for q in kept):
            kept.append(p)
            picks.append(pos)
    return picks


def sparsify_witness(
    w: Union[Witness, CorollaryWitness],
    B: MetricFamily,
    C_family: MetricFamily,
    opts: Optional[PipelineOptions] = None,
) -> SparseWitness:
    opts = opts or PipelineOptions()
    witness = w.witness if isinstance(w, CorollaryWitness) else w
    if not witness.entries:
        raise LadderTooShortError("empty witness", 0)
    ladder = require_common_ladder(B, C_family)
    base = ladder.bases[-1].dist
    c = C_family.top.cross
    bound = witness.bound_C

    spread = [witness.entries[pos] for pos in spread_subsequence(witness.xs, base)]

    kept = []
    for e in spread:
        if c[e.i, e.j] <= bound:
            continue
        if all(c[e.i, q.j] > bound and c[q.i, e.j] > bound for q in kept):
            kept.append(e)
    dropped = len(spread) - len(kept)
    logger.info("sparsified %d witness entries to %d (%d dropped by the mixed floor)", len(witness), len(kept), dropped)

    if len(kept) < opts.min_sparse_points:
        raise LadderTooShortError(
            f"only {len(kept)} sparse witness points survive at {ladder.top_size} points; "
            f"{opts.min_sparse_points} are needed",
            len(kept),
        )
    b = B.top.cross
    if any(b[e.i, e.j] >= bound for e in kept):
        raise InternalInvariantError("a retained witness pair is not B-bounded by C")
    points = tuple(SparsePoint(e.i, e.j, e.level) for e in kept)
    return SparseWitness(points, bound, separation_checked=True)


# ================================================================
# The separating metric a(x, y') = min_n d(x, x_n) + d(y_n, y) + C
# ================================================================
@dataclass(frozen=True, eq=False)
class SeparatorRule:
    witness: SparseWitness

    def _at(self, base_level) -> DoubleMetric:
        present = [p for p in self.witness.points if max(p.x_index, p.y_index) < base_level.n]
        if not present:
            raise LadderTooShortError(f"no sparse witness point lies in the first {base_level.n} points", 0)
        d = base_level.dist
        xs = [p.x_index for p in present]
        ys = [p.y_index for p in present]
        cross = minplus(d[:, xs], d[ys, :]) + self.witness.bound_C
        try:
            return assemble_double(base_level, cross)
        except DoubleValidationError as exc:
            raise InternalInvariantError(f"separating metric is not a double: {exc}") from exc

    def materialize(self, ladder: Ladder) -> List[DoubleMetric]:
        return [self._at(b) for b in ladder.bases]

    def describe(self) -> str:
        return f"separator(C={self.witness.bound_C}, points={len(self.witness.points)})"


def build_separating_metric(w: SparseWitness, ladder: Ladder, name: str = "") -> MetricFamily:
    return MetricFamily(ladder, SeparatorRule(w), name)


# ================================================================
# Bounded against diverging diagonals
# ================================================================
def _sandwich(A: MetricFamily, X: MetricFamily, opts: PipelineOptions, penalty: int) -> MetricFamily:
    return compose_families(
        A, X, transpose_family(A),
        opts=ComposeOptions(penalty), threads=opts.threads, block_rows=opts.block_rows,
    )


def verify_lemma_main(
    B: MetricFamily,
    C_family: MetricFamily,
    ladder: Optional[Ladder] = None,
    opts: Optional[PipelineOptions] = None,
) -> LemmaMainReport:
    opts = opts or PipelineOptions()
    common = require_common_ladder(B, C_family)
    if ladder is not None and ladder != common:
        raise LadderError("families do not live on the given ladder")

    corollary = extract_witness(B, C_family, opts)
    sparse = sparsify_witness(corollary, B, C_family, opts)
    A = build_separating_metric(sparse, common, "a")
    C = sparse.bound_C
    penalty = opts.penalty

    aba = _sandwich(A, B, opts, penalty)
    aca = _sandwich(A, C_family, opts, penalty)
    xs = sparse.xs
    diag_aba = tuple(aba.top.diag(xs))
    diag_aca = tuple(aca.top.diag(xs))
    aba_bound = 3 * C + 2 * penalty
    b = B.top.cross
    closed_form = tuple(2 * C + int(b[y, y]) + 2 * penalty for y in sparse.ys)

    # rerun on the top level with one quantum charged per junction
    top_a = A.top
    junction = compose_chain(
        [top_a, B.top, DoubleMetric(top_a.base, top_a.cross.T)],
        ComposeOptions(1), threads=opts.threads, block_rows=opts.block_rows,
    )
    junction_diag = tuple(junction.diag(xs))

    dominance = Fraction(int((aca.top.cross >= aba.top.cross).sum()), aba.top.cross.size)
    if dominance < 1:
        logger.warning("ACA* dominates ABA* on only %s of the top-level pairs", dominance)

    verdict = check_equivalent(aba, aca, opts)
    report = LemmaMainReport(
        bound_C=C,
        penalty=penalty,
        points=sparse.points,
        diag_aba=diag_aba,
        sup_diag_aba=max(diag_aba),
        aba_bound=aba_bound,
        closed_form_bounds=closed_form,
        closed_form_ok=all(v <= cf for v, cf in zip(diag_aba, closed_form)),
        diag_aca_values=diag_aca,
        aca_strictly_increasing=all(b2 > a2 for a2, b2 in zip(diag_aca, diag_aca[1:])),
        aca_exceeds_from_third=all(v > 3 * C + 2 for v in diag_aca[2:]),
        pointwise_dominance_fraction=dominance,
        equivalence_verdict=verdict,
        junction_diag_aba=junction_diag,
        junction_sup_diag_aba=max(junction_diag),
    )
    logger.info(
        "lemma main: sup diag ABA*=%d (bound %d), diag ACA*=%s, verdict %s",
        report.sup_diag_aba, aba_bound, list(diag_aca), verdict.outcome,
    )
    return report


# ================================================================
# The action of S on idempotents and the separation experiment
# ================================================================
def mu_action(
    S: MetricFamily, E: MetricFamily, opts: Optional[PipelineOptions] = None, check: bool = True
) -> MetricFamily:
    """S E S*, level by level."""
    opts = opts or PipelineOptions()
    require_common_ladder(S, E)
    if check:
        verdict = is_idempotent(E, opts)
        if verdict.outcome != "holds":
            logger.warning("mu_action on %s, which is not known to be idempotent (%s)", E.describe(), verdict.outcome)
    return compose_families(
        S, E, transpose_family(S),
        opts=ComposeOptions(opts.penalty), threads=opts.threads, block_rows=opts.block_rows,
        name=f"mu[{S.describe()}]({E.describe()})",
    )


def _inconclusive(stage: str, ladder: Ladder, reason: str, **kwargs) -> ExperimentReport:
    note = f"{reason}; extending the ladder to about {2 * ladder.top_size} points may resolve it"
    logger.warning("fundamentality experiment inconclusive at %s: %s", stage, reason)
    return ExperimentReport("inconclusive", stage, note=note, **kwargs)


def fundamentality_experiment(
    S: MetricFamily, T: MetricFamily, opts: Optional[PipelineOptions] = None
) -> ExperimentReport:
    """Find an idempotent e with S e S* not equivalent to T e T*."""
    opts = opts or PipelineOptions()
    ladder = require_common_ladder(S, T)

    equivalence = check_equivalent(S, T, opts)
    if equivalence.outcome == "equivalent":
        raise PreconditionError(f"{S.describe()} and {T.describe()} are coarsely equivalent; nothing to separate")
    if isinstance(equivalence.forward, Fails):
        B, C_family, direction = S, T, "S ⊢ T"
    elif isinstance(equivalence.backward, Fails):
        B, C_family, direction = T, S, "T ⊢ S"
    else:
        return _inconclusive("equivalence", ladder, "neither control direction fails")
    logger.info("controls(%s) fails; B=%s, C=%s", direction, B.describe(), C_family.describe())

    try:
        corollary = extract_witness(B, C_family, opts)
    except NoWitnessError as exc:
        return _inconclusive("extract_witness", ladder, str(exc), failing_direction=direction)
    try:
        sparse = sparsify_witness(corollary, B, C_family, opts)
    except LadderTooShortError as exc:
        return _inconclusive("sparsify", ladder, str(exc), failing_direction=direction, corollary=corollary)

    A = build_separating_metric(sparse, ladder, "a")
    try:
        levels = A.levels
    except LadderTooShortError as exc:
        return _inconclusive(
            "separator", ladder, str(exc), failing_direction=direction, corollary=corollary, witness=sparse
        )
    logger.info("separator built on %d levels", len(levels))
    e = compose_families(
        transpose_family(A), A,
        opts=ComposeOptions(opts.penalty), threads=opts.threads, block_rows=opts.block_rows, name="a*a",
    )
    mu_s = mu_action(S, e, opts, check=False)
    mu_t = mu_action(T, e, opts, check=False)
    separation = check_equivalent(mu_s, mu_t, opts)

    outcome = {
        "not_equivalent": "separated",
        "equivalent": "not_separated",
    }.get(separation.outcome, "inconclusive")
    logger.info("fundamentality experiment: %s", outcome)
    return ExperimentReport(
        outcome=outcome,
        stage="separation",
        failing_direction=direction,
        corollary=corollary,
        witness=sparse,
        separator=A,
        idempotent_e=e,
        mu_s=mu_s,
        mu_t=mu_t,
        separation_verdict=separation,
        note="" if outcome == "separated" else f"separation verdict is {separation.outcome}",
    )
