from fractions import Fraction

import numpy as np
import pytest

from doubles.catalog import catalog_family, named_family, shift_family
from doubles.coarse_order import is_idempotent
from doubles.config import PipelineOptions
from doubles.double_space import make_catalog_double
from doubles.errors import LadderTooShortError, NoWitnessError, PreconditionError
from doubles.fundamentality import (
    build_separating_metric,
    extract_witness,
    fundamentality_experiment,
    mu_action,
    sparsify_witness,
    spread_subsequence,
    verify_lemma_main,
)
from doubles.models import Holds, Inconclusive, Ladder, SparsePoint, SparseWitness, Witness, WitnessEntry


def _diagonal_witness(ladder, xs, bound=2):
    entries = [WitnessEntry(ladder.first_level_containing(x), x, x, 1, x + 1) for x in xs]
    return Witness(tuple(entries), bound)


@pytest.fixture(scope="module")
def lemma(b_line, c_wedge):
    return verify_lemma_main(b_line, c_wedge)


@pytest.fixture(scope="module")
def experiment(b_line, c_wedge):
    return fundamentality_experiment(c_wedge, b_line)


# ---------- Witness extraction ----------
def test_extract_witness(b_line, c_wedge):
    cw = extract_witness(b_line, c_wedge)
    assert cw.witness.bound_C == 2
    assert cw.witness.xs[:3] == [0, 1, 2]
    assert cw.x_radii == (15, 31, 63, 127, 255)
    assert cw.x_unbounded and cw.y_unbounded
    assert cw.contradiction is None


def test_no_witness_when_control_holds(b_line):
    with pytest.raises(NoWitnessError) as exc:
        extract_witness(b_line, shift_family(b_line, 3))
    assert isinstance(exc.value.verdict, Holds)


def test_no_witness_on_a_single_level():
    ladder = Ladder.of("halfline", (64,))
    with pytest.raises(NoWitnessError) as exc:
        extract_witness(named_family(ladder, "b_line"), named_family(ladder, "c_wedge"))
    assert isinstance(exc.value.verdict, Inconclusive)


# ---------- Sparsification ----------
def test_spread_subsequence(halfline):
    base = halfline.bases[-1].dist
    points = list(range(1, 256))
    picks = spread_subsequence(points, base)
    assert [points[p] for p in picks] == [1, 6, 15, 32, 65, 130]


def test_sparsify_a_dense_diagonal(halfline, b_line, c_wedge):
    w = _diagonal_witness(halfline, range(1, 256))
    sw = sparsify_witness(w, b_line, shift_family(c_wedge, 5))
    assert sw.xs == [1, 6, 15, 32, 65, 130]
    assert sw.ys == sw.xs
    assert sw.separation_checked


def test_spread_witness_is_kept_as_is(halfline, b_line, c_wedge):
    w = _diagonal_witness(halfline, [2, 8, 32, 128])
    assert sparsify_witness(w, b_line, c_wedge).xs == [2, 8, 32, 128]


def test_mixed_floor_drops_close_pairs(halfline, b_line, c_wedge):
    w = _diagonal_witness(halfline, [0, 5, 14, 31, 64])
    assert sparsify_witness(w, b_line, c_wedge).xs == [5, 14, 31, 64]


def test_too_few_sparse_points(b_line, c_wedge):
    cw = extract_witness(b_line, c_wedge)
    with pytest.raises(LadderTooShortError) as exc:
        sparsify_witness(cw, b_line, c_wedge, PipelineOptions(min_sparse_points=10))
    assert exc.value.achievable_k == 5


# ---------- Separating metric ----------
def test_separating_metric_values():
    ladder = Ladder.of("halfline", (16,))
    points = tuple(SparsePoint(p, p, 0) for p in (1, 6, 15))
    A = build_separating_metric(SparseWitness(points, 2), ladder)
    a = A.top.cross
    assert a[3, 7] == 6
    assert [int(a[p, p]) for p in (1, 6, 15)] == [2, 2, 2]


def test_single_point_separator_is_focused():
    ladder = Ladder.of("halfline", (16,))
    A = build_separating_metric(SparseWitness((SparsePoint(4, 4, 0),), 3), ladder)
    expected = make_catalog_double(ladder.bases[0], "focused", {"basepoint": 4, "lambda": 3})
    assert A.top == expected


def test_separator_needs_a_point_on_every_level(halfline):
    A = build_separating_metric(SparseWitness((SparsePoint(129, 129, 4),), 2), halfline)
    with pytest.raises(LadderTooShortError):
        A.levels


# ---------- Bounded against diverging diagonals ----------
def test_lemma_points_and_bounds(lemma):
    assert [p.x_index for p in lemma.points] == [5, 14, 31, 64, 129]
    assert lemma.bound_C == 2
    assert lemma.diag_aba == (5, 5, 5, 5, 5)
    assert lemma.sup_diag_aba <= 6 and lemma.aba_bound == 6 and lemma.aba_bound_ok
    assert lemma.closed_form_ok


def test_lemma_diverging_diagonal(lemma):
    assert lemma.diag_aca_values == (10, 19, 36, 69, 134)
    assert lemma.aca_strictly_increasing
    assert lemma.aca_exceeds_from_third
    assert lemma.pointwise_dominance_fraction == Fraction(1)


def test_lemma_junction_rerun(lemma):
    assert lemma.junction_diag_aba == (7, 7, 7, 7, 7)
    assert lemma.junction_sup_diag_aba <= 3 * lemma.bound_C + 2


def test_lemma_classes_differ(lemma):
    ev = lemma.equivalence_verdict
    assert ev.outcome == "not_equivalent"
    w = ev.forward.witness
    assert w.bound_C == 7


def test_lemma_with_one_quantum_per_junction(b_line, c_wedge):
    charged = verify_lemma_main(b_line, c_wedge, opts=PipelineOptions(penalty=1))
    assert charged.penalty == 1
    assert charged.diag_aba == (7, 7, 7, 7, 7)
    assert charged.sup_diag_aba <= 8 and charged.aba_bound == 8 and charged.aba_bound_ok
    assert charged.closed_form_ok
    assert charged.diag_aca_values == (12, 21, 38, 71, 136)
    assert charged.aca_exceeds_from_third
    assert charged.equivalence_verdict.outcome == "not_equivalent"


# ---------- The action on idempotents ----------
def test_mu_action_of_the_unit(small_families):
    e1 = small_families["unit"]
    mu = mu_action(e1, e1)
    for k in range(e1.ladder.depth):
        assert np.array_equal(mu.at(k).cross, e1.at(k).cross + 2)


def test_separation_on_the_halfline(experiment):
    assert experiment.outcome == "separated"
    assert experiment.stage == "separation"
    assert experiment.failing_direction == "T ⊢ S"
    assert experiment.witness.xs == [5, 14, 31, 64, 129]
    assert experiment.separation_verdict.outcome == "not_equivalent"
    mu_t = experiment.mu_t.top.cross
    e = experiment.idempotent_e.top.cross
    assert np.array_equal(mu_t, e + 2)


def test_separating_idempotent_is_idempotent(experiment):
    assert is_idempotent(experiment.idempotent_e).outcome == "holds"


def test_separation_on_the_line(line):
    S = named_family(line, "c_wedge_line")
    T = named_family(line, "b_line")
    report = fundamentality_experiment(S, T)
    assert report.outcome == "separated"
    assert report.failing_direction == "T ⊢ S"
    assert report.witness.xs == [9, 27, 61, 127, 257]
    coords = [line.bases[-1].labels[i][0] for i in report.witness.xs]
    assert coords == [-5, -14, -31, -64, -129]


def test_equivalent_inputs_are_rejected(b_line):
    with pytest.raises(PreconditionError):
        fundamentality_experiment(b_line, b_line)
    with pytest.raises(PreconditionError):
        fundamentality_experiment(b_line, shift_family(b_line, 5))


def test_short_ladder_reports_inconclusive(b_line, c_wedge):
    report = fundamentality_experiment(c_wedge, b_line, PipelineOptions(min_sparse_points=50))
    assert report.outcome == "inconclusive"
    assert report.stage == "sparsify"
    assert "512" in report.note
    assert report.corollary is not None


def test_idempotent_input_to_mu_action_is_checked(small_line, caplog):
    F = catalog_family(small_line, "reflect")
    with caplog.at_level("WARNING", logger="doubles.fundamentality"):
        mu_action(F, F)
    assert "not known to be idempotent" in caplog.text
