"""Coarse order and equivalence of metric families on a truncation ladder.

`controls(F ⊢ G)` means there is a homeomorphism φ of [0, ∞) with
G ≤ φ∘F on every pair. A finite ladder cannot see infinity, so every check
answers Holds (with φ), Fails (with an F-bounded, G-divergent witness) or
Inconclusive.
"""
from __future__ import annotations
import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .catalog import compose_families, require_common_ladder, transpose_family
from .config import PipelineOptions
from .errors import BandDivergenceError, InternalInvariantError, LadderError
from .models import (
    ComposeOptions,
    ControlProfile,
    EquivalenceVerdict,
    Fails,
    Holds,
    Homeomorphism,
    IdempotenceVerdict,
    Inconclusive,
    Ladder,
    MetricFamily,
    Verdict,
    Witness,
    WitnessEntry,
)

logger = logging.getLogger(__name__)


# ================================================================
# Control profiles
# ================================================================
def _profile_arrays(f: np.ndarray, g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    thresholds, inv = np.unique(f.ravel(), return_inverse=True)
    best = np.zeros(thresholds.shape[0], dtype=np.int64)
    np.maximum.at(best, inv.ravel(), g.ravel())
    return thresholds, np.maximum.accumulate(best)


def control_profile(F: MetricFamily, G: MetricFamily, level: int) -> ControlProfile:
    """rho(t) = max{G(z) : F(z) <= t} over all cross pairs z of one level."""
    ladder = require_common_ladder(F, G)
    if not 0 <= level < ladder.depth:
        raise LadderError(f"level {level} outside a ladder of depth {ladder.depth}")
    thresholds, rho = _profile_arrays(F.at(level).cross, G.at(level).cross)
    return ControlProfile(level, ladder.level_sizes[level], thresholds, rho)


def control_profiles(F: MetricFamily, G: MetricFamily) -> List[ControlProfile]:
    ladder = require_common_ladder(F, G)
    return [control_profile(F, G, k) for k in range(ladder.depth)]


# ================================================================
# Certificates
# ================================================================
def verify_certificate(phi: Homeomorphism, F: MetricFamily, G: MetricFamily) -> bool:
    """Exact check of G <= φ(F) on every pair of every level."""
    require_common_ladder(F, G)
    for k in range(F.ladder.depth):
        f, g = F.at(k).cross, G.at(k).cross
        values, inv = np.unique(f.ravel(), return_inverse=True)
        # G is integral, so G <= φ(F) iff G <= floor(φ(F))
        caps = np.array([int(phi(int(v)) // 1) for v in values], dtype=np.int64)
        if (g.ravel() > caps[inv.ravel()]).any():
            return False
    return True


def _dominated(F: MetricFamily, G: MetricFamily) -> bool:
    return all(bool((G.at(k).cross <= F.at(k).cross).all()) for k in range(F.ladder.depth))


def _staircase(profiles: Sequence[ControlProfile]) -> Homeomorphism:
    """φ through (t_k, v_k) with v_k = max(rho(t_k), v_{k-1} + 1), rho maximised over levels."""
    union = np.unique(np.concatenate([p.thresholds for p in profiles]))
    points = []
    prev = 0
    for t in union:
        t = int(t)
        rho = max((v for v in (p.at(t) for p in profiles) if v is not None), default=0)
        prev = max(rho, prev + 1)
        points.append((Fraction(t), Fraction(prev)))
    return Homeomorphism(tuple(points), Fraction(1))


def _window_levels(ladder: Ladder, window: int) -> Tuple[int, List[int]]:
    L = ladder.depth
    if L < window + 1:
        raise LadderError(f"ladder has {L} levels; a stability window of {window} needs at least {window + 1}")
    return L - window - 1, list(range(L - window, L))


# ================================================================
# The dichotomy
# ================================================================
def _witness_chain(F: MetricFamily, G: MetricFamily, t: int) -> List[WitnessEntry]:
    f, g = F.top.cross, G.top.cross
    n = f.shape[1]
    idx = np.flatnonzero(f.ravel() <= t)
    if idx.size == 0:
        return []
    gv = g.ravel()[idx]
    # np.unique returns first occurrences, i.e. the smallest (i, j) per G value
    _, first = np.unique(gv, return_index=True)
    entries: List[WitnessEntry] = []
    level = 0
    for flat in idx[first]:
        i, j = divmod(int(flat), n)
        level = max(level, F.ladder.first_level_containing(max(i, j)))
        entries.append(WitnessEntry(level, i, j, int(f[i, j]), int(g[i, j])))
    return entries


def check_controls(F: MetricFamily, G: MetricFamily, opts: Optional[PipelineOptions] = None) -> Verdict:
    opts = opts or PipelineOptions()
    ladder = require_common_ladder(F, G)
    base_level, window = _window_levels(ladder, opts.window)
    used = tuple([base_level] + window)

    if _dominated(F, G):
        logger.info("controls(%s ⊢ %s): pointwise dominance", F.describe(), G.describe())
        return Holds(Homeomorphism.identity(), tuple(range(ladder.depth)))

    profiles = control_profiles(F, G)
    thresholds = [int(t) for t in profiles[base_level].thresholds]
    rows = {t: [profiles[k].at(t) for k in window] for t in thresholds}

    unstable = [t for t, r in rows.items() if len(set(r)) != 1 or r[0] is None]
    if not unstable:
        phi = _staircase(profiles)
        if not verify_certificate(phi, F, G):
            raise InternalInvariantError("staircase certificate failed exact verification")
        logger.info("controls(%s ⊢ %s): holds on levels %s", F.describe(), G.describe(), used)
        return Holds(phi, used)

    def grows(r: List[Optional[int]]) -> bool:
        if any(v is None for v in r):
            return False
        return all(b - a >= opts.divergence_step for a, b in zip(r, r[1:]))

    candidates = [t for t in thresholds if grows(rows[t])]
    longest = 0
    for t in candidates:
        chain = _witness_chain(F, G, t)
        longest = max(longest, len(chain))
        if len(chain) >= opts.min_witness_length:
            witness = Witness(tuple(chain), t + 1)
            logger.info(
                "controls(%s ⊢ %s): fails, %d-entry witness below C=%d",
                F.describe(), G.describe(), len(chain), t + 1,
            )
            return Fails(witness, used)

    statistic: Dict[str, int] = {
        "unstable_thresholds": len(unstable),
        "diverging_thresholds": len(candidates),
        "longest_chain": longest,
        "min_witness_length": opts.min_witness_length,
        "window": opts.window,
    }
    reason = (
        "profile neither stabilises nor diverges over the window"
        if not candidates
        else f"diverging thresholds yield at most {longest} witness entries"
    )
    logger.warning("controls(%s ⊢ %s): inconclusive (%s)", F.describe(), G.describe(), reason)
    return Inconclusive(reason, statistic, used)


def check_equivalent(F: MetricFamily, G: MetricFamily, opts: Optional[PipelineOptions] = None) -> EquivalenceVerdict:
    return EquivalenceVerdict(check_controls(F, G, opts), check_controls(G, F, opts))


# ================================================================
# Band construction: φ with F >= φ∘G
# ================================================================
def _band_minima(f: np.ndarray, g: np.ndarray) -> Dict[int, int]:
    """k_n = min F over Z_n = {n-1 <= G <= n}, for every observed band n."""
    values, inv = np.unique(g.ravel(), return_inverse=True)
    lows = np.full(values.shape[0], np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(lows, inv.ravel(), f.ravel())
    per_value = {int(v): int(m) for v, m in zip(values, lows)}
    bands: Dict[int, int] = {}
    for v, m in per_value.items():
        for n in (v, v + 1):
            if n >= 1:
                bands[n] = min(bands.get(n, m), m)
    return bands


def _suffix_minima(bands: Dict[int, int]) -> List[Tuple[int, int]]:
    out: List[Tuple[int, int]] = []
    running = None
    for n in sorted(bands, reverse=True):
        running = bands[n] if running is None else min(running, bands[n])
        out.append((n, running))
    return out[::-1]


def build_homeomorphism(
    F: MetricFamily,
    G: MetricFamily,
    ladder: Optional[Ladder] = None,
    opts: Optional[PipelineOptions] = None,
) -> Homeomorphism:
    """φ with φ(n) < k_n on every observed band and F >= φ(G) on the top level."""
    opts = opts or PipelineOptions()
    ladder = ladder or require_common_ladder(F, G)
    if ladder != require_common_ladder(F, G):
        raise LadderError("families do not live on the given ladder")
    _, window = _window_levels(ladder, opts.window)

    tops = []
    for k in window:
        K = _suffix_minima(_band_minima(F.at(k).cross, G.at(k).cross))
        tops.append(K[-1][1])
    bands = _band_minima(F.top.cross, G.top.cross)
    K = _suffix_minima(bands)
    if not all(b > a for a, b in zip(tops, tops[1:])):
        bound = tops[-1]
        band = min(n for n, k in bands.items() if k == bound)
        raise BandDivergenceError(
            f"band minima of F stay at {bound} from band {band} on; F does not grow with G",
            band,
            bound,
        )

    points = []
    for (n, k), nxt in zip(K, K[1:] + [None]):
        if nxt is not None and nxt[1] == k:
            continue
        value = Fraction(k - 1) if k > 1 else Fraction(1, 2)
        points.append((Fraction(n), value))
    phi = Homeomorphism(tuple(points), Fraction(1))

    f, g = F.top.cross, G.top.cross
    values, inv = np.unique(g.ravel(), return_inverse=True)
    # F is integral, so F >= φ(G) iff F >= ceil(φ(G))
    floors = np.array([math.ceil(phi(int(v))) for v in values], dtype=np.int64)
    if (f.ravel() < floors[inv.ravel()]).any():
        raise InternalInvariantError("band certificate failed exact verification")
    logger.info("band certificate with %d breakpoints over %d bands", len(phi.breakpoints), len(bands))
    return phi


# ================================================================
# Idempotents
# ================================================================
def is_idempotent(F: MetricFamily, opts: Optional[PipelineOptions] = None) -> IdempotenceVerdict:
    """F·F ~ F and F ~ F* (idempotents of an inverse semigroup are self-adjoint)."""
    opts = opts or PipelineOptions()
    square = compose_families(
        F, F, opts=ComposeOptions(opts.penalty), threads=opts.threads, block_rows=opts.block_rows
    )
    verdict = IdempotenceVerdict(
        check_equivalent(square, F, opts),
        check_equivalent(F, transpose_family(F), opts),
    )
    logger.info("is_idempotent(%s): %s", F.describe(), verdict.outcome)
    return verdict
