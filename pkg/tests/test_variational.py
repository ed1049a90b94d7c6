import numpy as np
import pytest
from reference import I_CORR_HALF, I_LSK2_DIAG

from groupfisher import distributions as dists
from groupfisher.closed import fisher_matrix, score
from groupfisher.compact import make_basis
from groupfisher.models import location_scale_params, make_model
from groupfisher.variational import (assemble, convergence_profile, default_resolution, profile_status, solve,
                                     variational_matrix, variational_value)

CASES_1D = [
    ("loc1", [0.0], dists.std_normal),
    ("loc1", [0.3], dists.cauchy),
    ("scale1", [1.0], dists.std_normal),
    ("scale1", [2.0], lambda: dists.huber_lfd(0.1)),
    ("ls1", [0.5, 1.5], dists.std_normal),
]


def unit(p, seed):
    a = np.random.default_rng(seed).normal(size=p)
    return a / np.linalg.norm(a)


def test_loc1_degree8():
    v = variational_value(make_model("loc1"), [0.0], dists.std_normal(1), [1.0], 8)
    assert 1.0 - 1e-3 <= v.value <= 1.0 + 1e-8


def test_scale1_degree10():
    v = variational_value(make_model("scale1"), [1.0], dists.std_normal(1), [1.0], 10)
    assert 2.0 - 5e-3 <= v.value <= 2.0 + 1e-8


@pytest.mark.parametrize("tag,theta,make", CASES_1D)
def test_degree_zero_gives_zero(tag, theta, make):
    m = make_model(tag)
    assert variational_value(m, theta, make(), unit(m.p, 0), 0).value == 0.0


def test_locK_matrix():
    est = variational_matrix(make_model("locK", 2), [0.0, 0.0], dists.std_normal(2), 8)
    np.testing.assert_allclose(est.matrix, np.eye(2), atol=1e-3)
    assert est.method == "variational" and est.degree == 8


def test_lsK_matrix_blocks():
    th = location_scale_params([0, 0], np.eye(2))
    est = variational_matrix(make_model("lsK", 2), th, dists.std_normal(2), 8)
    closed = fisher_matrix(make_model("lsK", 2), th, dists.std_normal(2)).matrix
    np.testing.assert_allclose(np.diag(closed), I_LSK2_DIAG, atol=1e-6)
    np.testing.assert_allclose(est.matrix, closed, atol=5e-3)


def test_corr_matrix():
    est = variational_matrix(make_model("corr"), [0.5], dists.std_normal(2), 10)
    assert est.matrix[0, 0] == pytest.approx(I_CORR_HALF, abs=1e-2)
    assert est.matrix[0, 0] <= I_CORR_HALF + 1e-8


def test_loc1_profile_monotone_to_one():
    prof = convergence_profile(make_model("loc1"), [0.0], dists.std_normal(1), [1.0], range(1, 9), reference=1.0)
    v = np.array(prof.values)
    assert np.all(np.diff(v) >= -1e-12)
    assert abs(prof.gap) <= 1e-3 and prof.status == "finite"
    assert prof.rows()[0] == (1, v[0])


def test_single_atom_in_K_gives_zero_profile():
    prof = convergence_profile(make_model("scale1"), [1.0], dists.atom(0.0), [1.0], range(1, 11))
    assert prof.values == (0.0,) * 10


def test_contaminated_scale_profile():
    d = dists.point_contaminated(dists.std_normal(1), 0.1, 0.0)
    prof = convergence_profile(make_model("scale1"), [1.0], d, [1.0], range(1, 11), reference=1.8)
    v = np.array(prof.values)
    assert np.all(np.diff(v) >= -1e-12) and v[-1] > v[0]
    assert v[-1] <= 1.8 + 1e-8 and prof.status == "finite"


def test_atom_outside_K_profile_is_divergent():
    d = dists.point_contaminated(dists.std_normal(1), 0.1, 1.0)
    prof = convergence_profile(make_model("scale1"), [1.0], d, [1.0], range(1, 11))
    assert prof.status == "divergent"
    est = variational_matrix(make_model("scale1"), [1.0], d, 6)
    assert est.status == "infinite"


def test_profile_status_rules():
    assert profile_status([1, 2, 3], [1.0, 2.0, 2e6]) == "divergent"
    assert profile_status([10, 20, 40], [1.0, 4.0, 16.0]) == "divergent"
    assert profile_status([10, 20, 40], [1.0, 1.1, 1.12]) == "finite"
    with pytest.raises(ValueError):
        convergence_profile(make_model("loc1"), [0.0], dists.std_normal(1), [1.0], [3, 2])


@pytest.mark.parametrize("tag,theta,make", CASES_1D)
def test_lower_bound(tag, theta, make):
    m = make_model(tag)
    d = make()
    closed = fisher_matrix(m, theta, d).matrix
    a = unit(m.p, 1)
    ref = a @ closed @ a
    for deg in (1, 3, 6, 10, 14):
        r = variational_value(m, theta, d, a, deg)
        assert r.value <= ref + 2 * r.quadrature_error + 1e-10


@pytest.mark.parametrize("tag,theta,make", CASES_1D)
def test_monotone_in_degree(tag, theta, make):
    m = make_model(tag)
    prof = convergence_profile(m, theta, make(), unit(m.p, 2), range(0, 13))
    assert np.all(np.diff(prof.values) >= -1e-12)


def test_push_and_pull_routes_agree(model_case):
    model, th = model_case
    d = dists.std_normal(model.k)
    basis = make_basis(model.k, 4 if model.k == 1 else 3)
    push = solve(assemble(model, th, d, basis, route="pushforward"))[0]
    pull = solve(assemble(model, th, d, basis, route="pullback"))[0]
    np.testing.assert_allclose(push, pull, atol=1e-8)
    assert np.linalg.eigvalsh((push + push.T) / 2).min() >= -1e-8


def test_directional_is_quadratic_form(model_case):
    model, th = model_case
    d = dists.std_normal(model.k)
    deg = 5 if model.k == 1 else 3
    mat = variational_matrix(model, th, d, deg).matrix
    for seed in range(3):
        a = unit(model.p, seed)
        assert variational_value(model, th, d, a, deg).value == pytest.approx(a @ mat @ a, abs=1e-10)


def test_witness_recovers_score():
    m, d = make_model("loc1"), dists.std_normal(1)
    r = variational_value(m, [0.0], d, [1.0], 12)
    lam = score(m, [0.0], d)
    num, _ = d.integrate(lambda x: (r.witness(x) - lam(x)[:, 0]) ** 2)
    den, _ = d.integrate(lambda x: lam(x)[:, 0] ** 2)
    assert np.sqrt(num[0] / den[0]) <= 5e-2


def test_stieltjes_matches_gram_at_low_degree():
    d = dists.huber_lfd(0.1)
    m = make_model("scale1")
    g = convergence_profile(m, [1.5], d, [1.0], range(1, 13), resolution=4)
    s = convergence_profile(m, [1.5], d, [1.0], range(1, 13), resolution=4, method="stieltjes")
    np.testing.assert_allclose(s.values[1:], g.values[1:], rtol=1e-6)
    assert abs(s.values[0]) <= 1e-12 and abs(g.values[0]) <= 1e-12


def test_stieltjes_high_degree_stays_below_closed_form():
    m, d = make_model("loc1"), dists.cauchy()
    prof = convergence_profile(m, [0.0], d, [1.0], [50, 100, 200], method="stieltjes")
    assert np.all(np.diff(prof.values) >= -1e-12)
    assert 0.5 - 1e-3 <= prof.final <= 0.5 + 2 * prof.quadrature_error + 1e-10


def test_bad_direction():
    with pytest.raises(ValueError):
        variational_value(make_model("ls1"), [0.0, 1.0], dists.std_normal(1), [1.0, 1.0], 3)
    with pytest.raises(ValueError):
        variational_value(make_model("ls1"), [0.0, 1.0], dists.std_normal(1), [1.0], 3)


def test_default_resolution_grows_with_degree():
    assert default_resolution(4, 1) == 1.0
    assert default_resolution(64, 1) == 10.0
    assert default_resolution(64, 3) == 1.0


def test_result_serializes():
    r = variational_value(make_model("loc1"), [0.0], dists.std_normal(1), [1.0], 4).to_dict()
    assert r["degree"] == 4 and len(r["witness_coefficients"]) == 5
