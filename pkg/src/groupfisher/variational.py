"""Supremal Fisher information over a finite test-function basis.

For test functions ``phi = sum_j c_j phi_j`` the ratio

    (int grad phi^T D a + phi V a dP_theta)^2 / int phi^2 dP_theta

equals ``(c^T B a)^2 / (c^T G c)`` with ``B_j = int grad phi_j^T D + phi_j V``
and the Gram matrix ``G_ij = int phi_i phi_j``, so its supremum over the span
is ``a^T B^T G^+ B a``.  The Gram matrix is factored by an ordered Cholesky
sweep that skips basis functions (numerically) inside the span of earlier
ones; because the basis is graded, the leading rows of the whitened
numerator give the value for every lower degree at once, and the resulting
profile is non-decreasing by construction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .closed import FisherEstimate, atoms_in_informative_region, log_density
from .compact import TestFunctionBasis, basis_size, forward, forward_derivative, make_basis
from .distributions import CentralDistribution, DiscreteMeasure, compact_legendre
from .models import GroupModel

#: A basis function is dropped when the squared sine of its angle to the
#: span of its predecessors (in the Gram inner product) is below this.
GRAM_RTOL = 1e-10

#: Values beyond this are treated as evidence of infinite information.
DIVERGENCE_LEVEL = 1e6

#: Log-log growth rate of the profile tail above which it counts as unbounded.
DIVERGENCE_SLOPE = 1.0

#: Quadrature nodes per unit of basis degree (per dimension) used by default.
NODES_PER_DEGREE = 10


def default_resolution(degree: int, k: int = 1) -> float:
    """Node multiplier keeping roughly ``NODES_PER_DEGREE * degree`` nodes per axis.

    With too few nodes a high-degree basis can interpolate the discrete
    measure and the supremum becomes meaningless.  Tensor rules in three or
    more dimensions keep their default size to bound memory.
    """
    if k > 2:
        return 1.0
    return max(1.0, NODES_PER_DEGREE * degree / 64.0)


class IllConditionedGram(UserWarning):
    pass


@dataclass(frozen=True)
class Assembly:
    """Numerator matrix ``B`` (m, p) and Gram matrix ``G`` (m, m) for one F."""

    B: np.ndarray
    G: np.ndarray
    basis: TestFunctionBasis
    error: float = 0.0
    nodes: int = 0

    def __add__(self, other):
        return Assembly(self.B + other.B, self.G + other.G, self.basis,
                        self.error + other.error, self.nodes + other.nodes)

    def scaled(self, w: float) -> "Assembly":
        return Assembly(w * self.B, w * self.G, self.basis, abs(w) * self.error, self.nodes)


def _measure_terms(model, theta, basis, measure: DiscreteMeasure, route: str):
    y = measure.nodes
    w = measure.weights
    if route == "pushforward":
        x = model.tau(theta, y)
        phi = basis.values(x)
        grad = basis.gradients(x)
        d = model.D(theta, x)
        v = model.V(theta, x)
    elif route == "pullback":
        # psi_j = phi_j o tau_theta, integrated directly against F
        x = model.tau(theta, y)
        a = model.matrix(theta)
        phi = basis.values(x)
        grad = np.einsum("nmi,ij->nmj", basis.gradients(x), a)
        d = model.D_pullback(theta, y)
        v = model.V_pullback(theta, y)
    else:
        raise ValueError(f"unknown route {route!r}")
    B = np.einsum("n,nmk,nkp->mp", w, grad, d) + np.einsum("n,nm,np->mp", w, phi, v)
    G = np.einsum("n,nm,nl->ml", w, phi, phi)
    return B, (G + G.T) / 2.0


def assemble(model: GroupModel, theta, dist: CentralDistribution, basis: TestFunctionBasis,
             resolution: float | None = None, route: str = "pushforward", estimate_error: bool = True) -> Assembly:
    """Integrate ``B`` and ``G`` against ``P_theta``.

    The error estimate is the largest entry change under halving the nodes
    of every smooth component.
    """
    theta = model.check(theta)
    if basis.k != model.k:
        raise ValueError("basis dimension differs from model dimension")
    if resolution is None:
        resolution = default_resolution(basis.degree, basis.k)
    fine = dist.discretize(resolution)
    B, G = _measure_terms(model, theta, basis, fine, route)
    err = 0.0
    if estimate_error and dist.parts:
        Bc, Gc = _measure_terms(model, theta, basis, dist.discretize(resolution / 2.0), route)
        err = float(max(np.abs(B - Bc).max(), np.abs(G - Gc).max()))
    return Assembly(B, G, basis, err, len(fine.weights))


@dataclass(frozen=True)
class Whitening:
    """Ordered Cholesky factor of the Gram matrix restricted to kept functions."""

    kept: np.ndarray  # indices into the basis
    L: np.ndarray  # lower triangular, G[kept][:, kept] = L L^T

    @classmethod
    def of(cls, G: np.ndarray, rtol: float = GRAM_RTOL) -> "Whitening":
        m = G.shape[0]
        L = np.zeros((m, m))
        kept: list[int] = []
        for j in range(m):
            gjj = G[j, j]
            if not gjj > 0:
                continue
            r = len(kept)
            if r:
                lj = solve_triangular(L[:r, :r], G[kept, j], lower=True, check_finite=False)
                resid = gjj - lj @ lj
            else:
                lj = np.empty(0)
                resid = gjj
            if resid > rtol * gjj:
                L[r, :r] = lj
                L[r, r] = np.sqrt(resid)
                kept.append(j)
        r = len(kept)
        return cls(np.asarray(kept, dtype=int), L[:r, :r].copy())

    def whiten(self, B: np.ndarray) -> np.ndarray:
        """``L^{-1} B[kept]``; rows are coordinates in a G-orthonormal basis."""
        if not len(self.kept):
            return np.zeros((0,) + B.shape[1:])
        return solve_triangular(self.L, B[self.kept], lower=True, check_finite=False)

    def coefficients(self, beta: np.ndarray) -> np.ndarray:
        """Map whitened coordinates back to basis coefficients ``G^+ b``."""
        if not len(self.kept):
            return np.zeros((0,) + beta.shape[1:])
        return solve_triangular(self.L.T, beta, lower=False, check_finite=False)


@dataclass(frozen=True)
class VariationalResult:
    """Outcome of a finite-basis supremum in one direction."""

    value: float
    degree: int
    coefficients: np.ndarray  # witness coefficients on the full basis
    basis: TestFunctionBasis = field(repr=False)
    quadrature_error: float = 0.0
    gram_spectrum: np.ndarray | None = field(default=None, repr=False)
    kept: int = 0
    status: str = "finite"

    def witness(self, x) -> np.ndarray:
        """Maximizing test function, signed to approximate ``a^T Lambda_theta``."""
        return -self.basis.values(x) @ self.coefficients

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "degree": self.degree,
            "status": self.status,
            "quadrature_error": self.quadrature_error,
            "kept_functions": self.kept,
            "basis_size": self.basis.size,
            "witness_coefficients": self.coefficients.tolist(),
            "gram_spectrum": None if self.gram_spectrum is None else self.gram_spectrum.tolist(),
        }


def _unit(a, p):
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.shape != (p,):
        raise ValueError(f"direction must have length {p}")
    if abs(np.linalg.norm(a) - 1.0) > 1e-10:
        raise ValueError("direction must have unit length")
    return a


def _check_conditioning(G, kept_G):
    spec = np.linalg.eigvalsh(G)
    if len(kept_G):
        smallest = np.linalg.eigvalsh(kept_G).min()
        top = max(spec.max(), 0.0)
        if smallest < 1e3 * 1e-10 * top:
            warnings.warn(f"Gram matrix nearly singular (smallest retained eigenvalue {smallest:.2e})",
                          IllConditionedGram, stacklevel=3)
    return spec


def solve(asm: Assembly, a=None, rtol: float = GRAM_RTOL):
    """Supremum over the span for an assembled problem.

    Returns ``(value_or_matrix, whitening, beta)`` where ``beta = L^{-1} B``.
    """
    wh = Whitening.of(asm.G, rtol)
    beta = wh.whiten(asm.B)
    if a is None:
        return beta.T @ beta, wh, beta
    ba = beta @ a
    return float(ba @ ba), wh, beta


def variational_value(model: GroupModel, theta, dist: CentralDistribution, a, degree: int,
                      resolution: float | None = None, route: str = "pushforward") -> VariationalResult:
    """Finite-basis lower bound of the directional Fisher information."""
    theta = model.check(theta)
    a = _unit(a, model.p)
    basis = make_basis(model.k, degree)
    asm = assemble(model, theta, dist, basis, resolution, route)
    value, wh, beta = solve(asm, a)
    spec = _check_conditioning(asm.G, asm.G[np.ix_(wh.kept, wh.kept)])
    coef = np.zeros(basis.size)
    coef[wh.kept] = wh.coefficients(beta @ a)
    return VariationalResult(value, degree, coef, basis, asm.error, spec, len(wh.kept))


def variational_matrix(model: GroupModel, theta, dist: CentralDistribution, degree: int,
                       resolution: float | None = None, route: str = "pushforward") -> FisherEstimate:
    """``B^T G^+ B``: the finite-basis information matrix."""
    theta = model.check(theta)
    basis = make_basis(model.k, degree)
    asm = assemble(model, theta, dist, basis, resolution, route)
    mat, wh, _ = solve(asm)
    spec = _check_conditioning(asm.G, asm.G[np.ix_(wh.kept, wh.kept)])
    mat = (mat + mat.T) / 2.0
    status = "infinite" if len(atoms_in_informative_region(model, theta, dist)) else "finite"
    return FisherEstimate(
        mat, "variational", None, status=status, degree=degree,
        quadrature={"nodes": asm.nodes, "max_error": asm.error},
        diagnostics={"kept_functions": int(len(wh.kept)), "basis_size": basis.size,
                     "gram_spectrum": spec.tolist()},
    )


@dataclass(frozen=True)
class ConvergenceProfile:
    degrees: tuple
    values: tuple
    status: str
    reference: float | None = None
    quadrature_error: float = 0.0

    @property
    def final(self) -> float:
        return self.values[-1]

    @property
    def gap(self) -> float | None:
        return None if self.reference is None else self.reference - self.final

    def rows(self):
        return list(zip(self.degrees, self.values))


def profile_status(degrees, values) -> str:
    """``"divergent"`` when the profile is large or still growing polynomially."""
    values = np.asarray(values, dtype=float)
    if values[-1] > DIVERGENCE_LEVEL:
        return "divergent"
    if len(values) >= 3 and values[-3] > 0:
        d = np.log(np.asarray(degrees[-3:], dtype=float))
        v = np.log(values[-3:])
        if d[-1] > d[0] and (v[-1] - v[0]) / (d[-1] - d[0]) > DIVERGENCE_SLOPE:
            return "divergent"
    return "finite"


def convergence_profile(model: GroupModel, theta, dist: CentralDistribution, a, degrees,
                        resolution: float | None = None, reference: float | None = None,
                        method: str = "gram") -> ConvergenceProfile:
    """Values of the finite-basis supremum along nested bases.

    ``method="gram"`` whitens the assembled Legendre Gram matrix.
    ``method="stieltjes"`` (k = 1 only) orthonormalizes the same polynomial
    span against ``P_theta`` by a three-term recurrence, which stays stable
    to degrees in the hundreds.
    """
    degrees = [int(d) for d in degrees]
    if any(d1 >= d2 for d1, d2 in zip(degrees, degrees[1:])) or not degrees or degrees[0] < 0:
        raise ValueError("degrees must be non-negative and strictly increasing")
    theta = model.check(theta)
    a = _unit(a, model.p)
    if method == "stieltjes":
        cum, err = _stieltjes_profile(model, theta, dist, a, degrees[-1], resolution)
        values = tuple(float(cum[d]) for d in degrees)
    elif method == "gram":
        basis = make_basis(model.k, degrees[-1])
        asm = assemble(model, theta, dist, basis, resolution)
        wh = Whitening.of(asm.G)
        contrib = np.zeros(basis.size)
        contrib[wh.kept] = (wh.whiten(asm.B) @ a) ** 2
        cum = np.cumsum(contrib)
        values = tuple(float(cum[basis_size(model.k, d) - 1]) for d in degrees)
        err = asm.error
    else:
        raise ValueError(f"unknown method {method!r}")
    status = profile_status(degrees, values)
    if status == "finite" and len(atoms_in_informative_region(model, theta, dist)):
        status = "divergent"
    return ConvergenceProfile(tuple(degrees), values, status, reference, err)


def _orthonormal_numerators(u, w, g, degree):
    """``int q_j' g dP`` for the ``P``-orthonormal polynomials ``q_j`` in ``u``.

    Stieltjes procedure with two passes of full reorthogonalization; the
    derivative of each ``q_j`` is carried along the same recurrence.
    """
    q = np.zeros((degree + 1, len(u)))
    dq = np.zeros_like(q)
    q[0] = 1.0 / np.sqrt(w.sum())
    for j in range(degree):
        r = u * q[j]
        dr = q[j] + u * dq[j]
        for _ in range(2):
            c = q[: j + 1] @ (w * r)
            r = r - c @ q[: j + 1]
            dr = dr - c @ dq[: j + 1]
        nrm = np.sqrt(np.sum(w * r * r))
        if not nrm > 0:
            break  # span exhausted by the discrete measure
        q[j + 1] = r / nrm
        dq[j + 1] = dr / nrm
    return dq @ (w * g)


def _stieltjes_measure(model, theta, dist, n):
    # One compact rule per smooth component, split at its kinks and fitted to
    # its exponential tails; tau is increasing and affine for k = 1.
    slope = float(model.matrix(theta)[0, 0])
    xs, ws = [], []
    for weight, part in dist.parts:
        if weight <= 0:
            continue
        breaks = model.tau(theta, np.asarray(part.breakpoints, dtype=float).reshape(-1, 1))[:, 0]
        rule = compact_legendre(n, breaks, tuple(r / slope for r in part.tail_rates))
        y = model.iota(theta, rule.nodes)
        xs.append(rule.nodes)
        ws.append(weight * rule.weights * np.exp(part.logpdf(y) + model.log_abs_det_diota(theta)))
    if dist.atoms:
        xs.append(model.tau(theta, dist.atom_locations))
        ws.append(dist.atom_masses)
    x, w = np.vstack(xs), np.concatenate(ws)
    keep = w > 0
    return x[keep], w[keep]


def _stieltjes_profile(model, theta, dist, a, degree, resolution):
    if model.k != 1:
        raise ValueError("the Stieltjes route is one-dimensional")
    n = int(max(256, 2 * degree) * (resolution or 1.0))
    out = []
    for m in (n, 2 * n):
        x, w = _stieltjes_measure(model, theta, dist, m)
        u = 2.0 * forward(x[:, 0]) - 1.0
        g = 2.0 * forward_derivative(x[:, 0]) * (model.D(theta, x) @ a)[:, 0]
        out.append(np.cumsum(_orthonormal_numerators(u, w, g, degree) ** 2))
    return out[0], float(np.abs(out[0] - out[1]).max())
