import numpy as np
import pytest
from conftest import MODEL_CASES

from groupfisher import distributions as dists
from groupfisher.models import (AsymmetricMatrix, InvalidParameter, informative_set_complement_measure,
                                make_model, params_to_scale, pullback_forms, scale_to_params, sym_kron,
                                unvech, vech)


def random_theta(model, rng):
    """A random valid parameter for ``model``."""
    if model.tag in ("loc1", "locK"):
        return rng.normal(size=model.p) * 2
    if model.tag == "scale1":
        return rng.uniform(0.2, 5, size=1)
    if model.tag == "ls1":
        return np.array([rng.normal() * 2, rng.uniform(0.2, 5)])
    if model.tag == "corr":
        return rng.uniform(-0.95, 0.95, size=1)
    m = rng.normal(size=(model.k, model.k))
    s = m @ m.T + 0.3 * np.eye(model.k)
    u = scale_to_params(s)
    return u if model.tag == "scaleK" else np.concatenate([rng.normal(size=model.k), u])


def draws(model_case, n=200, seed=0):
    model, _ = model_case
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield random_theta(model, rng), rng.normal(size=(1, model.k)) * 3


# ---------------------------------------------------------------------------
# examples


def test_loc1_example():
    m = make_model("loc1")
    np.testing.assert_array_equal(m.D([2.0], [[5.0]]), [[[-1.0]]])
    np.testing.assert_array_equal(m.V([2.0], [[5.0]]), [[0.0]])
    assert not m.in_K([2.0], np.linspace(-10, 10, 41)[:, None]).any()


def test_scale1_example():
    m = make_model("scale1")
    assert m.D([2.0], [[4.0]])[0, 0, 0] == -2.0
    np.testing.assert_array_equal(m.in_K([2.0], [[0.0], [1e-3], [4.0]]), [True, False, False])


def test_corr_example():
    m = make_model("corr", sigma1=1.0, sigma2=1.0)
    np.testing.assert_allclose(m.D([0.5], [[1.0, 1.0]])[0, :, 0], [-2 / 3, 0.0], atol=1e-15)


def test_corr_matches_closed_form_with_sigmas():
    s1, s2, t = 1.5, 0.7, -0.3
    m = make_model("corr", sigma1=s1, sigma2=s2)
    x = np.random.default_rng(1).normal(size=(20, 2))
    want = (t * x[:, 0] - s1 / s2 * x[:, 1]) / (1 - t ** 2)
    np.testing.assert_allclose(m.D([t], x)[:, 0, 0], want, rtol=1e-12)
    np.testing.assert_allclose(m.D([t], x)[:, 1, 0], 0.0, atol=1e-15)


def test_closed_form_D_scale_and_ls():
    x = np.linspace(-4, 4, 9)[:, None]
    np.testing.assert_allclose(make_model("scale1").D([1.6], x)[:, 0, 0], -x[:, 0] / 1.6)
    d = make_model("ls1").D([0.5, 2.0], x)[:, 0, :]
    np.testing.assert_allclose(d, -np.column_stack([np.ones(9), (x[:, 0] - 0.5) / 2.0]))


def test_locK_D_is_minus_identity():
    m = make_model("locK", 3)
    d = m.D(np.zeros(3), np.random.default_rng(2).normal(size=(5, 3)))
    np.testing.assert_array_equal(d, np.broadcast_to(-np.eye(3), (5, 3, 3)))


def test_scaleK_directional_identity():
    # In pairing coordinates u = scale_to_params(a) the direction is a itself,
    # and D(x) u = -a theta^{-1} x for the affine sensitivity.
    k = 3
    m = make_model("scaleK", k)
    rng = np.random.default_rng(3)
    g = rng.normal(size=(k, k))
    th = g @ g.T + np.eye(k)
    for _ in range(20):
        a = rng.normal(size=(k, k))
        a = a + a.T
        x = rng.normal(size=k)
        got = m.D(scale_to_params(th), x[None])[0] @ scale_to_params(a)
        np.testing.assert_allclose(got, -a @ np.linalg.solve(th, x), atol=1e-8)


def test_lsK_blocks():
    k = 2
    m = make_model("lsK", k)
    loc = np.array([0.3, -0.5])
    s = np.array([[2.0, 0.4], [0.4, 1.0]])
    th = np.concatenate([loc, scale_to_params(s)])
    x = np.array([[1.0, 2.0]])
    d = m.D(th, x)[0]
    np.testing.assert_allclose(d[:, :k], -np.eye(k))
    y = np.linalg.solve(s, x[0] - loc)
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(d[:, k:] @ scale_to_params(a), -a @ y, atol=1e-12)


def test_informative_set_complement_measure():
    v, _ = informative_set_complement_measure(make_model("loc1"), [1.3], dists.std_normal(1))
    assert v == 0.0
    v, _ = informative_set_complement_measure(make_model("scale1"), [1.0], dists.std_normal(1))
    assert v == 0.0
    mix = dists.point_contaminated(dists.std_normal(1), 0.1, [0.0])
    v, err = informative_set_complement_measure(make_model("scale1"), [1.0], mix)
    assert abs(v - 0.1) <= 1e-12 and err <= 1e-12


def test_invalid_parameters():
    with pytest.raises(InvalidParameter):
        make_model("scale1").D([0.0], [[1.0]])
    with pytest.raises(InvalidParameter):
        make_model("ls1").tau([0.0, -1.0], [[1.0]])
    with pytest.raises(InvalidParameter):
        make_model("corr").D([1.0], [[1.0, 1.0]])
    with pytest.raises(InvalidParameter):
        make_model("scaleK", 2).tau(scale_to_params(np.diag([1.0, -1.0])), [[1.0, 1.0]])
    with pytest.raises(InvalidParameter):
        make_model("loc1").tau([1.0, 2.0], [[0.0]])


def test_make_model_argument_errors():
    with pytest.raises(ValueError):
        make_model("nope")
    with pytest.raises(ValueError):
        make_model("locK")
    with pytest.raises(ValueError):
        make_model("loc1", 3)
    with pytest.raises(ValueError):
        make_model("corr", sigma1=0.0)


def test_parameter_dimensions():
    assert make_model("lsK", 3).p == 3 * 6 // 2
    assert make_model("scaleK", 3).p == 6
    assert (make_model("corr").k, make_model("corr").p) == (2, 1)


# ---------------------------------------------------------------------------
# invariants over all seven models


def test_round_trip(model_case):
    model, _ = model_case
    for th, x in draws(model_case):
        np.testing.assert_allclose(model.iota(th, model.tau(th, x)), x, atol=1e-10)


def test_jacobian_inverts_forward_derivative(model_case):
    model, _ = model_case
    h = 1e-6
    for th, x in draws(model_case, n=50, seed=1):
        dtau = np.column_stack([(model.tau(th, x + h * e) - model.tau(th, x - h * e))[0] / (2 * h)
                                for e in np.eye(model.k)])
        np.testing.assert_allclose(model.jacobian(th, x) @ dtau, np.eye(model.k), atol=1e-8)


def test_D_matches_finite_differences(model_case):
    # D = (d_x iota)^{-1} d_theta iota with the theta-derivative by central differences.
    model, _ = model_case
    h = 1e-6
    for th, x in draws(model_case, n=200, seed=2):
        cols = [(model.iota(th + h * e, x) - model.iota(th - h * e, x))[0] / (2 * h) for e in np.eye(model.p)]
        want = np.linalg.solve(model.jacobian(th), np.column_stack(cols))
        np.testing.assert_allclose(model.D(th, x)[0], want, atol=1e-6 * (1 + np.abs(want).max()))


def test_V_vanishes_and_matches_finite_differences(model_case):
    # V_j = [div_x(|det d_x iota| D_.j) - d_theta_j |det d_x iota|] / |det d_x iota|
    model, _ = model_case
    h = 1e-5
    for th, x in draws(model_case, n=40, seed=3):
        np.testing.assert_array_equal(model.V(th, x), 0.0)
        det = model.abs_det_diota(th)
        fd = np.zeros(model.p)
        for j in range(model.p):
            ej = np.eye(model.p)[j]
            div = sum((model.D(th, x + h * e)[0, i, j] - model.D(th, x - h * e)[0, i, j]) / (2 * h)
                      for i, e in enumerate(np.eye(model.k)))
            ddet = (model.abs_det_diota(th + h * ej) - model.abs_det_diota(th - h * ej)) / (2 * h)
            fd[j] = div - ddet / det
        np.testing.assert_allclose(fd, 0.0, atol=1e-5 * (1 + np.abs(th).max()))


def test_pullback_consistency(model_case):
    model, th = model_case
    y = np.random.default_rng(4).normal(size=(50, model.k)) * 2
    dt, vt = pullback_forms(model, th)
    want = np.einsum("ab,nbj->naj", model.jacobian(th), model.D(th, model.tau(th, y)))
    np.testing.assert_allclose(dt(y), want, atol=1e-8)
    np.testing.assert_array_equal(vt(y), 0.0)


def test_pullback_examples():
    dt, _ = pullback_forms(make_model("loc1"), [3.0])
    np.testing.assert_array_equal(dt(np.array([[-2.0], [0.0], [7.0]]))[:, 0, 0], -1.0)
    # d_theta iota_theta(tau_theta y) = -y / theta
    dt, _ = pullback_forms(make_model("scale1"), [2.0])
    y = np.array([[-3.0], [1.0], [4.0]])
    np.testing.assert_allclose(dt(y)[:, 0, 0], -y[:, 0] / 2)
    _, vt = pullback_forms(make_model("locK", 2), [1.0, -4.0])
    np.testing.assert_array_equal(vt(np.ones((3, 2))), 0.0)
    with pytest.raises(InvalidParameter):
        pullback_forms(make_model("scale1"), [-1.0])


def test_identity_parameter(model_case):
    model, _ = model_case
    th = model.identity_parameter()
    x = np.random.default_rng(5).normal(size=(10, model.k))
    np.testing.assert_allclose(model.tau(th, x), x, atol=1e-15)


def test_location_composition():
    m = make_model("locK", 2)
    a, b = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    x = np.random.default_rng(6).normal(size=(10, 2))
    np.testing.assert_allclose(m.tau(a, m.tau(b, x)), m.tau(a + b, x))


def test_scale_composition():
    m = make_model("ls1")
    x = np.linspace(-3, 3, 7)[:, None]
    a, b = np.array([1.0, 2.0]), np.array([-0.5, 0.3])
    # (m1, s1) o (m2, s2) = (m1 + s1 m2, s1 s2)
    np.testing.assert_allclose(m.tau(a, m.tau(b, x)), m.tau([a[0] + a[1] * b[0], a[1] * b[1]], x))


# ---------------------------------------------------------------------------
# symmetric-matrix coordinates


def test_vech_examples():
    np.testing.assert_array_equal(vech([[1, 2], [2, 3]]), [1, 2, 3])
    np.testing.assert_array_equal(sym_kron(np.eye(3), np.eye(3)), np.eye(3))
    with pytest.raises(AsymmetricMatrix):
        vech([[1.0, 2.0], [2.1, 3.0]])


def test_vech_round_trip_and_sym_kron():
    rng = np.random.default_rng(7)
    for k in (1, 2, 3, 5):
        a = rng.normal(size=(k, k))
        s = a + a.T
        np.testing.assert_array_equal(unvech(vech(s)), s)
        np.testing.assert_allclose(params_to_scale(scale_to_params(s), k), s)
    a, b = rng.normal(size=(2, 3, 3))
    p = sym_kron(a, b)
    np.testing.assert_array_equal(p, p.T)
    np.testing.assert_allclose(p, (a @ b + b.T @ a.T) / 2)


def test_pairing_coordinates_pair_with_vech():
    rng = np.random.default_rng(8)
    g, s = rng.normal(size=(2, 3, 3))
    g, s = g + g.T, s + s.T
    assert vech(g) @ scale_to_params(s) == pytest.approx(np.trace(g @ s))


@pytest.mark.parametrize("tag,k,theta", MODEL_CASES)
def test_models_are_immutable(tag, k, theta):
    m = make_model(tag, k)
    with pytest.raises(AttributeError):
        m.k = 5
