import numpy as np
import pytest
from reference import HUBER_EPS, HUBER_INFO, I_SCALE_NORMAL

from groupfisher import distributions as dists
from groupfisher.closed import fisher_matrix
from groupfisher.minimize import (ContaminationNeighborhood, InfeasibleNeighborhood, NonConvergence,
                                  PositivityViolation, atom_grid, convexity_certificate, exp_tail_templates,
                                  grid_l1_distance, minimize_directional, minimize_trace_inverse,
                                  null_set_fractions, uniqueness_diagnostics)
from groupfisher.models import location_scale_params, make_model
from groupfisher.variational import convergence_profile

LOC1 = make_model("loc1")


@pytest.fixture(scope="module")
def huber_run():
    nbhd = ContaminationNeighborhood(dists.std_normal(1), HUBER_EPS, atom_grid() + exp_tail_templates())
    return minimize_directional(LOC1, [0.0], nbhd, [1.0], degree=10)


def small_nbhd(eps, base=None):
    cands = atom_grid(-4, 4, 17) + exp_tail_templates(np.arange(0.0, 4.01, 0.5), [0.5, 1.0, 1.5, 2.0])
    return ContaminationNeighborhood(base or dists.std_normal(1), eps, cands)


def test_eps_zero_is_the_base():
    r = minimize_directional(LOC1, [0.0], small_nbhd(0.0), [1.0])
    assert r.value == pytest.approx(1.0, abs=1e-4)
    assert r.distribution.describe() == dists.mixture([(1.0, dists.std_normal(1))]).describe()


def test_huber_least_favorable(huber_run):
    assert huber_run.value == pytest.approx(HUBER_INFO, rel=1e-2)
    assert grid_l1_distance(huber_run.distribution, dists.huber_lfd(HUBER_EPS)) <= 5e-2
    assert huber_run.gap < 1e-6 and huber_run.status == "converged"
    # atoms off K = {} were excluded as infinitely informative
    assert len(huber_run.excluded) == 401


def test_trace_is_monotone(huber_run):
    vals = np.array([v for _, v, _ in huber_run.trace])
    assert np.all(np.diff(vals) <= 1e-10)


def test_weights_form_a_probability(huber_run):
    assert huber_run.weights.min() >= 0
    assert huber_run.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert sum(w for w, _ in huber_run.support(0.0)) == pytest.approx(1.0, abs=1e-12)


def test_scale_contamination_goes_to_uninformative_atom():
    m, G, eps = make_model("scale1"), dists.std_normal(1), 0.05
    nbhd = ContaminationNeighborhood(G, eps, atom_grid(-3, 3, 61))
    r = minimize_directional(m, [1.0], nbhd, [1.0], degree=10)
    assert r.support(1e-6) == [(pytest.approx(1.0), {"kind": "atom", "location": [0.0]})]
    # the finite-basis value is a lower bound; its high-degree limit is (1 - eps) I(G)
    assert r.value <= (1 - eps) * I_SCALE_NORMAL
    prof = convergence_profile(m, [1.0], r.distribution, [1.0], [10, 400], method="stieltjes")
    assert prof.values[0] == pytest.approx(r.value, rel=1e-6)
    assert prof.final == pytest.approx((1 - eps) * I_SCALE_NORMAL, abs=1e-2)


def test_eps_monotone():
    vals = [minimize_directional(LOC1, [0.0], small_nbhd(e), [1.0]).value for e in (0.0, 0.01, 0.05, 0.1)]
    assert np.all(np.diff(vals) <= 1e-10)
    assert vals[-1] < vals[0]


def test_trace_inverse_scalar_is_reciprocal():
    nbhd = small_nbhd(0.05)
    d = minimize_directional(LOC1, [0.0], nbhd, [1.0])
    t = minimize_trace_inverse(LOC1, [0.0], nbhd)
    assert t.value == pytest.approx(1.0 / d.value, rel=1e-6)


def test_trace_inverse_locK_at_eps_zero():
    m = make_model("locK", 2)
    nbhd = ContaminationNeighborhood(dists.std_normal(2), 0.0)
    t = minimize_trace_inverse(m, [0.0, 0.0], nbhd, degree=6)
    assert t.value == pytest.approx(2.0, abs=2e-3)


def test_trace_inverse_ls1_grows_with_contamination():
    m = make_model("ls1")
    t = minimize_trace_inverse(m, [0.0, 1.0], small_nbhd(0.05))
    assert t.value > 1.5
    vals = [v for _, v, _ in t.trace]
    assert np.all(np.diff(vals) >= -1e-10)


def test_positivity_violation_names_direction():
    m = make_model("scale1")
    nbhd = ContaminationNeighborhood(dists.atom(0.0), 0.5, [dists.atom(0.0)])
    with pytest.raises(PositivityViolation) as info:
        minimize_trace_inverse(m, [1.0], nbhd, degree=4)
    assert info.value.direction.shape == (1,)


def test_non_convergence_carries_trace():
    with pytest.raises(NonConvergence) as info:
        minimize_directional(LOC1, [0.0], small_nbhd(0.05), [1.0], max_iter=1)
    assert len(info.value.trace) == 2


def test_infeasible_neighborhoods():
    for eps in (1.0, -0.1):
        with pytest.raises(InfeasibleNeighborhood):
            ContaminationNeighborhood(dists.std_normal(1), eps, atom_grid())
    nbhd = ContaminationNeighborhood(dists.std_normal(1), 0.1, atom_grid(-1, 1, 3), include_base=False)
    with pytest.raises(InfeasibleNeighborhood):
        minimize_directional(LOC1, [0.0], nbhd, [1.0])
    with pytest.raises(ValueError):
        minimize_directional(LOC1, [0.0], small_nbhd(0.1), [2.0])


def test_neighborhood_is_convex():
    nbhd = small_nbhd(0.2)
    n = len(nbhd.members)
    rng = np.random.default_rng(0)
    w0, w1 = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
    mid = nbhd.distribution(0.5 * w0 + 0.5 * w1)
    both = dists.mixture([(0.5, nbhd.distribution(w0)), (0.5, nbhd.distribution(w1))])
    edges = np.linspace(-8, 8, 81)
    np.testing.assert_allclose(mid.cell_masses(edges), both.cell_masses(edges), atol=1e-14)
    assert mid.ac_weight + mid.atom_masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_convexity_certificates():
    n1 = dists.std_normal(1)
    flat = convexity_certificate(LOC1, [0.0], n1, n1, [1.0])
    np.testing.assert_allclose(flat.values, flat.chords, atol=1e-12)
    assert flat.holds
    r = convexity_certificate(LOC1, [0.0], n1, dists.cauchy(), [1.0], t_grid=(0.0, 0.5, 1.0))
    assert r.holds and r.values[1] <= 0.75 + r.tolerance
    r = convexity_certificate(make_model("scale1"), [1.0], n1, dists.point_contaminated(n1, 0.2, 0.0), [1.0])
    assert r.holds and len(r.t) == 5


def test_convexity_violation_is_reported():
    n1 = dists.std_normal(1)
    r = convexity_certificate(LOC1, [0.0], n1, dists.cauchy(), [1.0], tolerance=-1.0)
    assert not r.holds and r.violations == r.t


def test_uniqueness_null_set():
    m = make_model("lsK", 2)
    th = location_scale_params([0.0, 0.0], np.eye(2))
    a = np.ones(m.p) / np.sqrt(m.p)
    fr = null_set_fractions(m, th, a)
    assert fr[-1] <= fr[0] and fr[-1] < 1e-2
    # scale1: the null set is {0}, one node of each odd grid
    fr = null_set_fractions(make_model("scale1"), [1.0], [1.0])
    assert fr == pytest.approx([1 / 101, 1 / 401, 1 / 1601])
    diag = uniqueness_diagnostics(LOC1, [0.0], small_nbhd(0.1), [1.0])
    assert diag["null_set_vanishes"] and diag["support_condition"] == "PASS"
    diag = uniqueness_diagnostics(LOC1, [0.0], small_nbhd(0.1, dists.point_contaminated(dists.std_normal(1), 0.1, 0.0)))
    assert diag["support_condition"] == "UNCHECKED"


def test_result_serializes(huber_run):
    d = huber_run.to_dict()
    assert d["status"] == "converged" and d["excluded_candidates"] == 401
    assert d["uniqueness"]["support_condition"] == "PASS"


def test_base_information_matches_closed_form():
    # guards the oracle used throughout this module
    assert fisher_matrix(LOC1, [0.0], dists.huber_lfd(HUBER_EPS)).matrix[0, 0] == pytest.approx(HUBER_INFO, rel=1e-10)
