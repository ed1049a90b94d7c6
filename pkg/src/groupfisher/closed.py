"""Closed-form scores and Fisher information matrices of the shipped models."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distributions import CentralDistribution, DistributionError
from .models import GroupModel, params_to_scale, vech_indices

#: Node-halving change above which a Fisher matrix is flagged as unreliable.
DIVERGENCE_TOL = 1e-3


class UnsupportedDistribution(DistributionError):
    pass


class QuadratureDivergence(UserWarning):
    pass


@dataclass(frozen=True)
class FisherEstimate:
    """A Fisher information matrix with its provenance.

    ``status`` is ``"finite"``, ``"infinite"`` (an atom of F sits where the
    transformation is informative, so no density exists there) or
    ``"divergent"`` (the variational profile keeps growing).
    """

    matrix: np.ndarray
    method: str
    error: np.ndarray | None = None
    status: str = "finite"
    degree: int | None = None
    quadrature: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return self.status == "finite"

    def directional(self, a) -> float:
        if not self.finite:
            return float("inf")
        a = np.asarray(a, dtype=float)
        return float(a @ self.matrix @ a)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "status": self.status,
            "matrix": self.matrix.tolist(),
            "error": None if self.error is None else self.error.tolist(),
            "degree": self.degree,
            "quadrature": self.quadrature,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class ScoreEvaluator:
    """``Lambda_theta`` as a map (n, k) points -> (n, p) scores."""

    model: GroupModel
    theta: np.ndarray
    dist: CentralDistribution
    _fn: Callable = field(repr=False)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.model.k:
            x = x.reshape(-1, self.model.k)
        out = self._fn(x)
        if not self.dist.atoms:
            return out
        # Atoms in K carry a zero score: their mass does not move with theta.
        images = self.model.tau(self.theta, self.dist.atom_locations)
        on_atom = (x[:, None, :] == images[None, :, :]).all(axis=2).any(axis=1)
        return np.where((on_atom & self.model.in_K(self.theta, x))[:, None], 0.0, out)


def score(model: GroupModel, theta, dist: CentralDistribution) -> ScoreEvaluator:
    """Closed-form score of ``P_theta = tau_theta(F)``."""
    theta = model.check(theta)
    if not dist.parts:
        raise UnsupportedDistribution("score needs an absolutely continuous part")
    lam = dist.score
    tag = model.tag

    if tag in ("loc1", "locK"):
        fn = lambda x: lam(x - theta)
    elif tag == "scale1":
        t = theta[0]
        fn = lambda x: (1.0 / t) * ((x / t) * lam(x / t) - 1.0)
    elif tag == "ls1":
        t1, t2 = theta

        def fn(x):
            z = (x - t1) / t2
            lz = lam(z)
            return np.hstack([lz, z * lz - 1.0]) / t2
    elif tag == "corr":
        fn = _corr_score(model, theta, dist)
    elif tag == "scaleK":
        fn = _scale_score(model.k, params_to_scale(theta, model.k), np.zeros(model.k), lam)
    elif tag == "lsK":
        k = model.k
        loc, s = theta[:k], params_to_scale(theta[k:], k)
        s_inv = np.linalg.inv(s)
        scale_part = _scale_score(k, s, loc, lam)

        def fn(x):
            z = (x - loc) @ s_inv.T
            return np.hstack([lam(z) @ s_inv.T, scale_part(x)])
    else:  # pragma: no cover - make_model guards the tag
        raise ValueError(tag)
    return ScoreEvaluator(model, theta, dist, fn)


def _scale_score(k, s, loc, lam):
    """``vech[s^{-1} (.) (Lambda_f(z) z^T - I)]`` with ``z = s^{-1}(x - loc)``."""
    s_inv = np.linalg.inv(s)
    rows, cols = np.array(vech_indices(k)).T

    def fn(x):
        z = (x - loc) @ s_inv.T
        a = np.einsum("ab,nb,nc->nac", s_inv, lam(z), z) - s_inv
        sym = (a + np.swapaxes(a, 1, 2)) / 2.0
        return sym[:, rows, cols]

    return fn


def _corr_score(model, theta, dist):
    # Only the derivative of log f in the first central coordinate enters,
    # which is the conditional score of the first coordinate given the second.
    s1, s2 = model.constants["sigma1"], model.constants["sigma2"]
    t = theta[0]
    r = np.sqrt(1.0 - t**2)

    def fn(x):
        u1, u2 = x[:, 0] / s1, x[:, 1] / s2
        z = np.column_stack([(u1 - t * u2) / r, u2])
        cond = -dist.score(z)[:, 0]  # f_{1|2}'/f_{1|2}
        return ((cond * (t * u1 - u2) / r + t) / (1.0 - t**2))[:, None]

    return fn


def log_density(model: GroupModel, theta, dist: CentralDistribution, x) -> np.ndarray:
    """``log p_theta(x) = log f(iota_theta x) + log |det d_x iota_theta|``."""
    theta = model.check(theta)
    return dist.logpdf(model.iota(theta, x)) + model.log_abs_det_diota(theta)


def atoms_in_informative_region(model: GroupModel, theta, dist: CentralDistribution) -> np.ndarray:
    """Atom locations of F whose images lie outside K."""
    if not dist.atoms:
        return np.empty((0, model.k))
    locs = dist.atom_locations
    mask = ~model.in_K(theta, model.tau(theta, locs)) & (dist.atom_masses > 0)
    return locs[mask]


def fisher_matrix(model: GroupModel, theta, dist: CentralDistribution, rule=None, resolution: float = 1.0) -> FisherEstimate:
    """``I_theta = int Lambda Lambda^T dP_theta`` via the pullback to F."""
    theta = model.check(theta)
    bad = atoms_in_informative_region(model, theta, dist)
    sc = score(model, theta, dist)

    def integrand(y):
        lam = sc(model.tau(theta, y))
        return np.einsum("ni,nj->nij", lam, lam).reshape(len(y), -1)

    val, err = dist.integrate(integrand, rule=rule, resolution=resolution)
    p = model.p
    m = val.reshape(p, p)
    m = (m + m.T) / 2.0
    err = err.reshape(p, p)
    meta = {"nodes": int(len(dist.discretize(resolution, rule).weights)), "max_error": float(err.max(initial=0.0))}
    if meta["max_error"] > DIVERGENCE_TOL:
        warnings.warn(f"quadrature unstable for {model.tag}: node halving changed I by {meta['max_error']:.2e}",
                      QuadratureDivergence, stacklevel=2)
    if len(bad):
        return FisherEstimate(m, "closed", err, status="infinite", quadrature=meta,
                              diagnostics={"informative_atoms": bad.tolist()})
    return FisherEstimate(m, "closed", err, quadrature=meta)


def fisher_directional(model: GroupModel, theta, dist: CentralDistribution, a, rule=None) -> float:
    """``int (a^T Lambda_theta)^2 dP_theta`` for a unit vector ``a``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    if abs(np.linalg.norm(a) - 1.0) > 1e-10:
        raise ValueError("direction must have unit length")
    theta = model.check(theta)
    if len(atoms_in_informative_region(model, theta, dist)):
        return float("inf")
    sc = score(model, theta, dist)
    val, _ = dist.integrate(lambda y: (sc(model.tau(theta, y)) @ a) ** 2, rule=rule)
    return float(val[0])
