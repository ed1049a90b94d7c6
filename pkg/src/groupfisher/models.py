"""Smooth affine transformation families ``P_theta = tau_theta(F)``.

Every shipped model has the form ``tau_theta(x) = A(theta) x + c(theta)``.
With ``iota = tau^{-1}`` the derived objects are

* ``J = d_x iota = A^{-1}``,
* ``D = (d_x iota)^{-1} d_theta iota``, column j equal to
  ``-(dA_j y + dc_j)`` where ``y = iota(x)``,
* ``V = 0`` (the divergence of ``|det J| D`` cancels the theta-derivative of
  ``|det J|`` for affine maps),
* the uninformative set ``K = {x : D(x) = 0}``.

Symmetric-matrix parameters (``scaleK`` and the scale block of ``lsK``) use
*pairing coordinates*: the vector ``u`` with ``u_ii = S_ii`` and
``u_ij = 2 S_ij`` for ``i < j``, packed in vech order.  In these coordinates
``vech(G) . u = tr(G S)`` for symmetric ``G``, the coordinate directions are
``E_ii`` and ``(E_ij + E_ji) / 2``, and scores are plain vech's of symmetric
matrix gradients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

#: |D(x)| at or below this counts as zero for K membership.
K_TOL = 1e-12

MODEL_TAGS = ("loc1", "locK", "scale1", "ls1", "corr", "scaleK", "lsK")


class InvalidParameter(ValueError):
    pass


class AsymmetricMatrix(ValueError):
    pass


# ---------------------------------------------------------------------------
# symmetric-matrix coordinates


def vech_indices(k: int) -> list[tuple[int, int]]:
    """(row, col) pairs of the upper triangle, column-major."""
    return [(i, j) for j in range(k) for i in range(j + 1)]


def vech(a, tol: float = 1e-10) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("vech needs a square matrix")
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        raise AsymmetricMatrix("vech input is not symmetric")
    return np.array([a[i, j] for i, j in vech_indices(a.shape[0])])


def unvech(v, k: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if k is None:
        k = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if v.size != k * (k + 1) // 2:
        raise ValueError(f"vector of length {v.size} is not a vech for k={k}")
    out = np.empty((k, k))
    for val, (i, j) in zip(v, vech_indices(k)):
        out[i, j] = out[j, i] = val
    return out


def sym_kron(a, b) -> np.ndarray:
    """Symmetrized product ``(AB + B^T A^T) / 2``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = a @ b
    return (ab + ab.T) / 2.0


def sym_basis(k: int) -> np.ndarray:
    """Matrices ``E_ii`` and ``(E_ij + E_ji)/2`` in vech order, shape (q, k, k)."""
    pairs = vech_indices(k)
    out = np.zeros((len(pairs), k, k))
    for n, (i, j) in enumerate(pairs):
        if i == j:
            out[n, i, i] = 1.0
        else:
            out[n, i, j] = out[n, j, i] = 0.5
    return out


def scale_to_params(s) -> np.ndarray:
    """Symmetric matrix -> pairing coordinates."""
    s = np.asarray(s, dtype=float)
    k = s.shape[0]
    return np.array([s[i, j] * (1.0 if i == j else 2.0) for i, j in vech_indices(k)])


def params_to_scale(u, k: int) -> np.ndarray:
    return np.einsum("n,nij->ij", np.asarray(u, dtype=float), sym_basis(k))


def _is_spd(s) -> bool:
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return False
    return True


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class GroupModel:
    """An affine transformation family and its derivative objects.

    Array conventions: points are ``(n, k)``, parameters are length-``p``
    vectors, ``D`` evaluates to ``(n, k, p)`` and ``V`` to ``(n, p)``.
    """

    tag: str
    k: int
    p: int
    _matrix: Callable = field(repr=False)  # theta -> A (k, k)
    _shift: Callable = field(repr=False)  # theta -> c (k,)
    _dmatrix: Callable = field(repr=False)  # theta -> dA (p, k, k)
    _dshift: Callable = field(repr=False)  # theta -> dc (p, k)
    _valid: Callable = field(repr=False)
    constants: dict = field(default_factory=dict)
    is_group: bool = True

    # -- parameters ---------------------------------------------------------

    def valid(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.p,) and bool(np.all(np.isfinite(theta))) and self._valid(theta)

    def check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if not self.valid(theta):
            raise InvalidParameter(f"theta={theta.tolist()} outside the parameter set of {self.tag}")
        return theta

    def identity_parameter(self) -> np.ndarray:
        """The parameter value with tau = id (reference parameter)."""
        return _IDENTITY[self.tag](self)

    # -- the transformation -------------------------------------------------

    def matrix(self, theta) -> np.ndarray:
        return np.asarray(self._matrix(self.check(theta)), dtype=float)

    def shift(self, theta) -> np.ndarray:
        return np.asarray(self._shift(self.check(theta)), dtype=float)

    def tau(self, theta, x) -> np.ndarray:
        a, c = self.matrix(theta), self.shift(theta)
        return np.atleast_2d(np.asarray(x, dtype=float)) @ a.T + c

    def iota(self, theta, x) -> np.ndarray:
        a, c = self.matrix(theta), self.shift(theta)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.linalg.solve(a, (x - c).T).T

    def jacobian(self, theta, x=None) -> np.ndarray:
        """J = d_x iota; constant in x for affine maps."""
        return np.linalg.inv(self.matrix(theta))

    def log_abs_det_diota(self, theta) -> float:
        """log |det d_x iota_theta|, constant in x."""
        return -np.linalg.slogdet(self.matrix(theta))[1]

    def abs_det_diota(self, theta) -> float:
        return float(np.exp(self.log_abs_det_diota(theta)))

    # -- derivative objects -------------------------------------------------

    def dtheta_tau_at(self, theta, y) -> np.ndarray:
        """d_theta tau_theta evaluated at central points y: (n, k, p)."""
        theta = self.check(theta)
        y = np.atleast_2d(np.asarray(y, dtype=float))
        da = np.asarray(self._dmatrix(theta), dtype=float)
        dc = np.asarray(self._dshift(theta), dtype=float)
        return np.einsum("jab,nb->naj", da, y) + dc.T[None, :, :]

    def D(self, theta, x) -> np.ndarray:
        """Parameter sensitivity ``(d_x iota)^{-1} d_theta iota``: (n, k, p)."""
        return -self.dtheta_tau_at(theta, self.iota(theta, x))

    def V(self, theta, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        self.check(theta)
        return np.zeros((x.shape[0], self.p))

    def dtheta_iota(self, theta, x) -> np.ndarray:
        """d_theta iota_theta(x): (n, k, p)."""
        return np.einsum("ab,nbj->naj", self.jacobian(theta), self.D(theta, x))

    def D_pullback(self, theta, y) -> np.ndarray:
        """``D~(y) = d_theta iota_theta(tau_theta(y))``, the F-side sensitivity."""
        return self.dtheta_iota(theta, self.tau(theta, y))

    def V_pullback(self, theta, y) -> np.ndarray:
        return self.V(theta, self.tau(theta, y))

    def in_K(self, theta, x) -> np.ndarray:
        d = self.D(theta, x)
        return np.max(np.abs(d), axis=(1, 2)) <= K_TOL


def pullback_forms(model: GroupModel, theta):
    """Evaluators ``(D~, V~)`` of the pullback variational form."""
    theta = model.check(theta)
    return (lambda y: model.D_pullback(theta, y)), (lambda y: model.V_pullback(theta, y))


def _const(value):
    return lambda theta: value


def _loc(k):
    eye = np.eye(k)
    return dict(
        _matrix=_const(eye),
        _shift=lambda t: t,
        _dmatrix=_const(np.zeros((k, k, k))),
        _dshift=_const(eye),
        _valid=lambda t: True,
    )


def _corr_matrix(t, s1, s2):
    r = np.sqrt(1.0 - t[0] ** 2)
    return np.array([[s1 * r, t[0] * s1], [0.0, s2]])


def _corr_dmatrix(t, s1, s2):
    r = np.sqrt(1.0 - t[0] ** 2)
    return np.array([[[-s1 * t[0] / r, s1], [0.0, 0.0]]])


def _lsk_parts(k):
    q = k * (k + 1) // 2
    basis = sym_basis(k)

    def matrix(t):
        return params_to_scale(t[k:], k)

    def dmatrix(t):
        return np.concatenate([np.zeros((k, k, k)), basis])

    def dshift(t):
        return np.concatenate([np.eye(k), np.zeros((q, k))])

    return matrix, dmatrix, dshift


def make_model(tag: str, k: int | None = None, sigma1: float = 1.0, sigma2: float = 1.0) -> GroupModel:
    """Build one of the seven shipped models.

    ``k`` is needed for ``locK``, ``scaleK`` and ``lsK`` (k >= 2); ``sigma1``
    and ``sigma2`` are the known scales of the correlation model.
    """
    if tag not in MODEL_TAGS:
        raise ValueError(f"unknown model tag {tag!r}; expected one of {MODEL_TAGS}")
    if tag in ("locK", "scaleK", "lsK"):
        if k is None or k < 2:
            raise ValueError(f"{tag} needs k >= 2")
    elif k not in (None, 2 if tag == "corr" else 1):
        raise ValueError(f"{tag} has fixed dimension")

    if tag == "loc1":
        return GroupModel(tag, 1, 1, **_loc(1))
    if tag == "locK":
        return GroupModel(tag, k, k, **_loc(k))
    if tag == "scale1":
        return GroupModel(
            tag, 1, 1,
            _matrix=lambda t: t.reshape(1, 1),
            _shift=_const(np.zeros(1)),
            _dmatrix=_const(np.ones((1, 1, 1))),
            _dshift=_const(np.zeros((1, 1))),
            _valid=lambda t: t[0] > 0,
        )
    if tag == "ls1":
        return GroupModel(
            tag, 1, 2,
            _matrix=lambda t: t[1:].reshape(1, 1),
            _shift=lambda t: t[:1],
            _dmatrix=_const(np.array([[[0.0]], [[1.0]]])),
            _dshift=_const(np.array([[1.0], [0.0]])),
            _valid=lambda t: t[1] > 0,
        )
    if tag == "corr":
        if not (sigma1 > 0 and sigma2 > 0):
            raise ValueError("sigma1 and sigma2 must be positive")
        return GroupModel(
            tag, 2, 1,
            _matrix=lambda t: _corr_matrix(t, sigma1, sigma2),
            _shift=_const(np.zeros(2)),
            _dmatrix=lambda t: _corr_dmatrix(t, sigma1, sigma2),
            _dshift=_const(np.zeros((1, 2))),
            _valid=lambda t: -1.0 < t[0] < 1.0,
            constants={"sigma1": float(sigma1), "sigma2": float(sigma2)},
            is_group=False,
        )
    if tag == "scaleK":
        q = k * (k + 1) // 2
        basis = sym_basis(k)
        return GroupModel(
            tag, k, q,
            _matrix=lambda t: params_to_scale(t, k),
            _shift=_const(np.zeros(k)),
            _dmatrix=_const(basis),
            _dshift=_const(np.zeros((q, k))),
            _valid=lambda t: _is_spd(params_to_scale(t, k)),
        )
    # lsK
    matrix, dmatrix, dshift = _lsk_parts(k)
    return GroupModel(
        tag, k, k + k * (k + 1) // 2,
        _matrix=matrix,
        _shift=lambda t: t[:k],
        _dmatrix=dmatrix,
        _dshift=dshift,
        _valid=lambda t: _is_spd(params_to_scale(t[k:], k)),
    )


_IDENTITY = {
    "loc1": lambda m: np.zeros(1),
    "locK": lambda m: np.zeros(m.k),
    "scale1": lambda m: np.ones(1),
    "ls1": lambda m: np.array([0.0, 1.0]),
    "corr": lambda m: np.zeros(1),  # tau_0 = diag(sigma1, sigma2), identity only for unit sigmas
    "scaleK": lambda m: scale_to_params(np.eye(m.k)),
    "lsK": lambda m: np.concatenate([np.zeros(m.k), scale_to_params(np.eye(m.k))]),
}


def location_scale_params(location, scale) -> np.ndarray:
    """Pack ``(theta_1, theta_2)`` of the multivariate location-scale model."""
    return np.concatenate([np.asarray(location, dtype=float).reshape(-1), scale_to_params(scale)])


def informative_set_complement_measure(model: GroupModel, theta, dist, rule=None):
    """Mass ``P_theta(K)`` of the uninformative set, with a standard error.

    The absolutely continuous part is integrated with its quadrature rule
    (K is Lebesgue-null for every shipped model, so this is 0 up to node
    coincidences); atoms are checked exactly.
    """
    theta = model.check(theta)

    def indicator(y):
        return model.in_K(theta, model.tau(theta, y)).astype(float)[:, None]

    value, err = dist.integrate(indicator, rule=rule)
    return float(value[0]), float(err[0])
