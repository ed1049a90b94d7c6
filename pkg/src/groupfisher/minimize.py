"""Minimum Fisher information over contamination neighborhoods.

A neighborhood is ``{(1 - eps) G + eps H}`` with ``H`` ranging over the
convex hull of finitely many candidate distributions.  The finite-basis
numerator ``B`` and Gram matrix ``G`` are linear in the mixing weights, so
the objective ``b^T G^+ b`` is a convex function of the weights with the
explicit gradient ``eps * (2 c^T b_j - c^T G_j c)``, ``c = G^+ b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .closed import atoms_in_informative_region
from .compact import make_basis
from .distributions import CentralDistribution, DistributionError, atom, exp_tail, mixture
from .models import GroupModel
from .variational import Whitening, assemble, variational_value

#: Stop once the Frank-Wolfe duality gap falls below this.
GAP_TOL = 1e-6

MAX_ITER = 5000

#: Smallest admissible eigenvalue of the information matrix for tr I^{-1}.
POSITIVITY_FLOOR = 1e-8

#: Weights below this are dropped from the active set.
ACTIVE_TOL = 1e-12


class NonConvergence(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class InfeasibleNeighborhood(ValueError):
    pass


class PositivityViolation(ValueError):
    def __init__(self, message, direction):
        super().__init__(message)
        self.direction = direction


@dataclass(frozen=True)
class ContaminationNeighborhood:
    """``{(1 - eps) base + eps H : H in conv(candidates)}``.

    The base itself is always admitted as a candidate, which makes the
    neighborhoods nested in ``eps``.
    """

    base: CentralDistribution
    eps: float
    candidates: tuple = ()
    include_base: bool = True

    def __post_init__(self):
        if not 0.0 <= self.eps < 1.0:
            raise InfeasibleNeighborhood(f"contamination fraction {self.eps} outside [0, 1)")
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.members and self.eps > 0:
            raise InfeasibleNeighborhood("no candidate contaminations")
        if any(c.k != self.base.k for c in self.candidates):
            raise DistributionError("candidate dimension differs from base")

    @property
    def members(self) -> tuple:
        return ((self.base,) if self.include_base else ()) + self.candidates

    def distribution(self, weights) -> CentralDistribution:
        """The member of the neighborhood with candidate weights ``weights``."""
        weights = np.asarray(weights, dtype=float)
        comps = [(1.0 - self.eps, self.base)]
        comps += [(self.eps * w, c) for w, c in zip(weights, self.members) if self.eps * w > 0]
        return mixture(comps)


def atom_grid(lo: float = -10.0, hi: float = 10.0, n: int = 401) -> list:
    return [atom([x]) for x in np.linspace(lo, hi, n)]


def exp_tail_templates(starts=None, rates=None) -> list:
    """Two-sided family of exponential tails over a grid of starts and rates."""
    starts = np.arange(0.0, 6.0 + 1e-9, 0.1) if starts is None else np.asarray(starts, dtype=float)
    rates = np.arange(0.5, 3.0 + 1e-9, 0.25) if rates is None else np.asarray(rates, dtype=float)
    return [exp_tail(s, r, side) for s in starts for r in rates for side in (1, -1)]


def grid_l1_distance(F0: CentralDistribution, F1: CentralDistribution, lo: float = -10.0, hi: float = 10.0,
                     n: int = 401) -> float:
    """L1 distance of two laws on R binned to the cells of an ``n``-point grid.

    Cells are bounded by grid midpoints, the outer two extending to infinity,
    so atoms on the grid and densities are compared on the same footing.
    """
    grid = np.linspace(lo, hi, n)
    edges = np.concatenate([[-np.inf], (grid[1:] + grid[:-1]) / 2.0, [np.inf]])
    return float(np.abs(F0.cell_masses(edges) - F1.cell_masses(edges)).sum())


@dataclass(frozen=True)
class MinimizationResult:
    weights: np.ndarray  # over nbhd.members
    value: float
    trace: list  # (iteration, value, gap)
    distribution: CentralDistribution = field(repr=False)
    uniqueness: dict = field(default_factory=dict)
    excluded: tuple = ()  # candidates with infinite information
    status: str = "converged"

    @property
    def gap(self) -> float:
        return self.trace[-1][2]

    def support(self, tol: float = 1e-6):
        """``(weight, description)`` for candidates carrying weight above ``tol``."""
        return [(float(w), d) for w, d in zip(self.weights, self._labels) if w > tol]

    @property
    def _labels(self):
        return self.uniqueness.get("labels", [])

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "status": self.status,
            "gap": self.gap,
            "iterations": len(self.trace) - 1,
            "support": self.support(),
            "excluded_candidates": len(self.excluded),
            "uniqueness": {k: v for k, v in self.uniqueness.items() if k != "labels"},
        }


class _LinearFamily:
    """Assembled ``B``, ``G`` for the base and every candidate."""

    def __init__(self, model, theta, nbhd, degree, resolution=None):
        self.model, self.theta, self.eps = model, theta, nbhd.eps
        basis = make_basis(model.k, degree)
        base = assemble(model, theta, nbhd.base, basis, resolution, estimate_error=False)
        self.B0, self.G0 = base.B, base.G
        # An atom where the model is informative makes the information
        # infinite, so such candidates can never carry weight at a minimum.
        bad = [_has_bad_atom(model, theta, c) for c in nbhd.members]
        self.members = nbhd.members
        self.index = np.flatnonzero(~np.asarray(bad, dtype=bool))
        self.excluded = tuple(c for c, b in zip(nbhd.members, bad) if b)
        Bs, Gs = [], []
        for i in self.index:
            asm = assemble(model, theta, nbhd.members[i], basis, resolution, estimate_error=False)
            Bs.append(asm.B)
            Gs.append(asm.G)
        self.Bs = np.array(Bs).reshape(len(self.index), basis.size, model.p)
        self.Gs = np.array(Gs).reshape(len(self.index), basis.size, basis.size)

    def at(self, v):
        B = (1.0 - self.eps) * self.B0 + self.eps * np.einsum("n,nmp->mp", v, self.Bs)
        G = (1.0 - self.eps) * self.G0 + self.eps * np.einsum("n,nij->ij", v, self.Gs)
        return B, (G + G.T) / 2.0

    def coefficients(self, B, G):
        """``C = G^+ B`` restricted to the retained basis functions."""
        wh = Whitening.of(G)
        C = np.zeros_like(B)
        if len(wh.kept):
            C[wh.kept] = wh.coefficients(wh.whiten(B))
        return C

    def full_weights(self, v):
        w = np.zeros(len(self.members))
        w[self.index] = v
        return w


def _has_bad_atom(model, theta, dist):
    return len(atoms_in_informative_region(model, theta, dist)) > 0


def _directional(fam, a):
    def fn(v):
        B, G = fam.at(v)
        b = B @ a
        c = fam.coefficients(b[:, None], G)[:, 0]
        val = float(b @ c)
        bj = fam.Bs @ a
        grad = fam.eps * (2.0 * bj @ c - np.einsum("i,nij,j->n", c, fam.Gs, c))
        return val, grad

    return fn


def _fully_corrective_fw(fn, n, start, tol, max_iter):
    """Minimize a smooth convex ``fn`` over the unit simplex.

    Each iteration adds the Frank-Wolfe vertex to the active set and then
    re-optimizes over the face spanned by the active set.  An iterate is
    accepted only when it does not increase the objective, so the trace is
    non-increasing.
    """
    v = np.zeros(n)
    v[start] = 1.0
    val, g = fn(v)
    active = [start]
    trace = []
    for it in range(max_iter + 1):
        s = int(np.argmin(g))
        gap = float(g @ v - g[s])
        trace.append((it, val, gap))
        if gap < tol or it == max_iter:
            break
        if s not in active:
            active.append(s)
        idx = np.array(active)

        def restricted(x):
            full = np.zeros(n)
            full[idx] = x
            f, gg = fn(full)
            return f, gg[idx]

        res = minimize(restricted, v[idx], jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * len(idx),
                       constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0,
                                     "jac": lambda x: np.ones_like(x)}],
                       options={"ftol": 1e-15, "maxiter": 500})
        x = np.clip(res.x, 0.0, None)
        cand = np.zeros(n)
        cand[idx] = x / x.sum()
        cval, cg = fn(cand)
        if cval > val:
            # plain Frank-Wolfe step with exact line search as fallback
            cand, cval, cg = _line_search(fn, v, s, val)
        if cval <= val:
            v, val, g = cand, cval, cg
        active = [i for i in active if v[i] > ACTIVE_TOL] or [int(np.argmax(v))]
    return v, val, trace


def _line_search(fn, v, s, val):
    d = -v.copy()
    d[s] += 1.0
    r = minimize_scalar(lambda t: fn(v + float(t) * d)[0], bounds=(0.0, 1.0), method="bounded",
                        options={"xatol": 1e-12})
    cand = v + float(r.x) * d
    cval, cg = fn(cand)
    return cand, cval, cg


def _finish(fam, nbhd, model, theta, a, v, val, trace, tol, max_iter):
    w = fam.full_weights(v)
    status = "converged" if trace[-1][2] < tol else "max_iter"
    uniq = uniqueness_diagnostics(model, theta, nbhd, a)
    uniq["labels"] = [c.describe() for c in nbhd.members]
    result = MinimizationResult(w, val, trace, nbhd.distribution(w), uniq, fam.excluded, status)
    if status != "converged":
        raise NonConvergence(f"Frank-Wolfe gap {trace[-1][2]:.3e} after {max_iter} iterations", trace)
    return result


def minimize_directional(model: GroupModel, theta, nbhd: ContaminationNeighborhood, a, degree: int = 10,
                         tol: float = GAP_TOL, max_iter: int = MAX_ITER, resolution=None) -> MinimizationResult:
    """Least favorable member of ``nbhd`` for ``I_theta(F; a)``."""
    theta = model.check(theta)
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.shape != (model.p,) or abs(np.linalg.norm(a) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector of length p")
    fam = _LinearFamily(model, theta, nbhd, degree, resolution)
    if not len(fam.index):
        raise InfeasibleNeighborhood("every candidate has infinite information")
    fn = _directional(fam, a)
    v, val, trace = _fully_corrective_fw(fn, len(fam.index), 0, tol, max_iter)
    return _finish(fam, nbhd, model, theta, a, v, val, trace, tol, max_iter)


def _information(fam, v, floor):
    B, G = fam.at(v)
    C = fam.coefficients(B, G)
    info = B.T @ C
    lam, vec = np.linalg.eigh((info + info.T) / 2.0)
    if lam[0] < floor:
        raise PositivityViolation(f"information {lam[0]:.3e} below floor in direction {vec[:, 0].tolist()}",
                                  vec[:, 0])
    return C, lam, vec


def _trace_inverse(fam, floor):
    def fn(v):
        C, lam, vec = _information(fam, v, floor)
        inv = (vec / lam) @ vec.T
        m2 = inv @ inv
        # d tr(I^{-1}) = -tr(I^{-2} dI), dI_j = eps (B_j^T C + C^T B_j - C^T G_j C)
        t1 = np.einsum("pq,nmq,mp->n", m2, fam.Bs, C)
        t2 = np.einsum("pq,ip,nij,jq->n", m2, C, fam.Gs, C)
        grad = -fam.eps * (2.0 * t1 - t2)
        return float(np.trace(inv)), grad

    return fn


def minimize_trace_inverse(model: GroupModel, theta, nbhd: ContaminationNeighborhood, degree: int = 10,
                           tol: float = GAP_TOL, max_iter: int = MAX_ITER, resolution=None,
                           floor: float = POSITIVITY_FLOOR) -> MinimizationResult:
    """Member of ``nbhd`` maximizing ``tr I_theta(F)^{-1}``.

    The positivity floor is checked on every candidate first; a violation
    raises with the offending direction.  The returned ``value`` is the
    maximal trace.
    """
    theta = model.check(theta)
    fam = _LinearFamily(model, theta, nbhd, degree, resolution)
    if not len(fam.index):
        raise InfeasibleNeighborhood("every candidate has infinite information")
    fn = _trace_inverse(fam, floor)
    for j in range(len(fam.index)):
        _information(fam, np.eye(len(fam.index))[j], floor)  # raises PositivityViolation
    neg = lambda v: tuple(-t for t in fn(v))
    v, val, trace = _fully_corrective_fw(neg, len(fam.index), 0, tol, max_iter)
    trace = [(it, -f, gap) for it, f, gap in trace]
    return _finish(fam, nbhd, model, theta, None, v, -val, trace, tol, max_iter)


def uniqueness_diagnostics(model: GroupModel, theta, nbhd: ContaminationNeighborhood, a=None,
                           sizes=(101, 401, 1601), half_width: float = 10.0) -> dict:
    """Numerical checks of the uniqueness hypotheses for the minimizer.

    ``null_fraction`` is the share of grid points where
    ``|a^T d_theta iota_theta(x)|`` vanishes, for successively finer grids;
    it should tend to zero.  Support positivity of the base density is
    reported as checked only when the base has no atoms.
    """
    theta = model.check(theta)
    fractions = null_set_fractions(model, theta, a, sizes, half_width)
    positive = not nbhd.base.atoms and nbhd.base.ac_weight > 0 and _positive_everywhere(nbhd.base)
    return {
        "null_fraction": fractions,
        "null_set_vanishes": bool(fractions[-1] <= fractions[0] and fractions[-1] < 1e-2),
        "support_condition": "PASS" if positive else "UNCHECKED",
    }


def _positive_everywhere(dist):
    probe = np.linspace(-50.0, 50.0, 2001)
    pts = np.tile(probe[:, None], (1, dist.k))
    return bool(np.all(np.isfinite(dist.logpdf(pts))))


def null_set_fractions(model: GroupModel, theta, a=None, sizes=(101, 401, 1601), half_width: float = 10.0) -> list:
    """Grid fraction where ``a^T d_theta iota_theta`` is below 1e-10 in norm.

    With ``a=None`` every direction must vanish simultaneously, i.e. the
    smallest singular value of ``d_theta iota_theta(x)`` is tested.
    """
    theta = model.check(theta)
    out = []
    for n in sizes:
        m = max(3, int(round(n ** (1.0 / model.k)))) | 1 if model.k > 1 else n
        axis = np.linspace(-half_width, half_width, m)
        pts = np.stack(np.meshgrid(*([axis] * model.k), indexing="ij"), -1).reshape(-1, model.k)
        d = model.dtheta_iota(theta, pts)  # (n, k, p)
        if a is None:
            small = np.linalg.svd(d, compute_uv=False).min(axis=-1) < 1e-10
        else:
            small = np.linalg.norm(d @ np.asarray(a, dtype=float), axis=-1) < 1e-10
        out.append(float(small.mean()))
    return out


@dataclass(frozen=True)
class ConvexityReport:
    t: tuple
    values: tuple
    chords: tuple
    tolerance: float
    violations: tuple

    @property
    def holds(self) -> bool:
        return not self.violations


def convexity_certificate(model: GroupModel, theta, F0: CentralDistribution, F1: CentralDistribution, a,
                          t_grid=(0.0, 0.25, 0.5, 0.75, 1.0), degree: int = 10, tolerance=None) -> ConvexityReport:
    """Chord check ``I(F_t) <= (1 - t) I(F_0) + t I(F_1)`` along a mixture path.

    ``tolerance`` defaults to twice the largest quadrature error estimate
    met along the path.
    """
    theta = model.check(theta)
    t_grid = tuple(float(t) for t in t_grid)
    if any(not 0.0 <= t <= 1.0 for t in t_grid):
        raise ValueError("t must lie in [0, 1]")
    ends = [variational_value(model, theta, F, a, degree) for F in (F0, F1)]
    vals, errs = [], [r.quadrature_error for r in ends]
    for t in t_grid:
        if t == 0.0:
            r = ends[0]
        elif t == 1.0:
            r = ends[1]
        else:
            r = variational_value(model, theta, mixture([(1.0 - t, F0), (t, F1)]), a, degree)
        vals.append(r.value)
        errs.append(r.quadrature_error)
    tol = 2.0 * max(errs) if tolerance is None else float(tolerance)
    chords = tuple((1.0 - t) * ends[0].value + t * ends[1].value for t in t_grid)
    bad = tuple(t for t, v, c in zip(t_grid, vals, chords) if v > c + tol)
    return ConvexityReport(t_grid, tuple(vals), chords, tol, bad)
