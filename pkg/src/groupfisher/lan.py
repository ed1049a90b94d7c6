"""Monte Carlo checks of local asymptotic normality and score moments.

For ``x_1..x_n ~ P_theta`` the remainder

    r = sum log p_{theta + h/sqrt(n)}(x_i) / p_theta(x_i)
        - n^{-1/2} sum h^T Lambda_theta(x_i) + h^T I_theta h / 2

tends to zero in probability when the model is L2-differentiable.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closed import fisher_matrix, log_density, score
from .distributions import CentralDistribution
from .models import GroupModel, InvalidParameter

#: Largest admissible share of samples dropped for zero density.
MAX_EXCLUDED_FRACTION = 0.01

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)

#: Samples kept for the score moment diagnostics.
SCORE_SAMPLE_CAP = 1_000_000


class InfiniteInformation(ValueError):
    pass


class ExcessiveExclusions(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def replication_rng(seed: int, *index: int) -> np.random.Generator:
    """Independent stream for one replication, derived from the run seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, index)]))


@dataclass(frozen=True)
class LanReport:
    tag: str
    theta: np.ndarray
    h: np.ndarray
    n_list: tuple
    replications: int
    seed: int
    remainders: dict  # n -> (R,) array
    excluded: dict  # n -> number of zero-density samples dropped
    information: np.ndarray
    score_mean: np.ndarray = field(repr=False)
    score_cov: np.ndarray = field(repr=False)
    score_cov_se: np.ndarray = field(repr=False)

    def summary(self, n: int) -> dict:
        r = self.remainders[n]
        q = np.quantile(r, QUANTILES)
        return {
            "n": n,
            "mean": float(r.mean()),
            "variance": float(r.var(ddof=1)) if len(r) > 1 else 0.0,
            "median_abs": float(np.median(np.abs(r))),
            "mean_abs": float(np.abs(r).mean()),
            "max_abs": float(np.abs(r).max()),
            "quantiles": dict(zip([f"q{int(100 * p):02d}" for p in QUANTILES], map(float, q))),
            "excluded": int(self.excluded[n]),
        }

    def variances(self) -> list:
        return [self.summary(n)["variance"] for n in self.n_list]

    def rows(self):
        """``(n, replication, remainder)`` rows in a fixed order."""
        for n in self.n_list:
            for i, r in enumerate(self.remainders[n]):
                yield n, i, float(r)

    def to_dict(self) -> dict:
        return {
            "model": self.tag,
            "theta": self.theta.tolist(),
            "h": self.h.tolist(),
            "replications": self.replications,
            "seed": self.seed,
            "information": self.information.tolist(),
            "per_n": [self.summary(n) for n in self.n_list],
            "score_mean_norm": float(np.linalg.norm(self.score_mean)),
            "score_cov_minus_information_max": float(np.abs(self.score_cov - self.information).max()),
            "score_cov_se_max": float(self.score_cov_se.max()),
        }


def lan_experiment(model: GroupModel, theta, dist: CentralDistribution, h, n_list, R: int = 200,
                   seed: int = 0, workers: int = 1) -> LanReport:
    """Simulate the LAN remainder for every ``n`` in ``n_list``, ``R`` times each.

    Replications may run on ``workers`` threads; each draws from its own
    stream derived from ``(seed, n index, replication)``, so the report does
    not depend on the thread count.  Score moments are taken from the
    samples of the largest ``n``.
    """
    theta = model.check(theta)
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.shape != (model.p,):
        raise ValueError(f"h must have length {model.p}")
    n_list = tuple(int(n) for n in n_list)
    est = fisher_matrix(model, theta, dist)
    if not est.finite:
        raise InfiniteInformation(
            "Fisher information is infinite at this parameter, so the model is not "
            "L2-differentiable there and no LAN expansion exists")
    for n in n_list:
        if not model.valid(theta + h / np.sqrt(n)):
            raise InvalidParameter(f"theta + h/sqrt(n) leaves the parameter set for n={n}")
    info = est.matrix
    quad = 0.5 * float(h @ info @ h)
    lam = score(model, theta, dist)

    def replicate(j, n, i):
        rng = replication_rng(seed, j, i)
        x = model.tau(theta, dist.sample(n, rng))
        l0 = log_density(model, theta, dist, x)
        l1 = log_density(model, theta + h / np.sqrt(n), dist, x)
        ok = np.isfinite(l0) & np.isfinite(l1)
        s = lam(x[ok])
        r = np.sum(l1[ok] - l0[ok]) - np.sum(s @ h) / np.sqrt(n) + quad
        return r, int((~ok).sum()), s

    rem, excl = {}, {}
    score_chunks = []
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        for j, n in enumerate(n_list):
            results = list(pool.map(lambda i: replicate(j, n, i), range(R)))  # ordered
            rem[n] = np.array([r for r, _, _ in results])
            excl[n] = sum(d for _, d, _ in results)
            if j == len(n_list) - 1:
                keep = max(1, SCORE_SAMPLE_CAP // n)
                score_chunks = [s for _, _, s in results[:keep]]
    scores = np.vstack(score_chunks)
    mean, cov, _, cov_se = _moments(scores)
    report = LanReport(model.tag, theta, h, n_list, R, seed, rem, excl, info, mean, cov, cov_se)
    total = sum(n * R for n in n_list)
    if sum(excl.values()) > MAX_EXCLUDED_FRACTION * total:
        raise ExcessiveExclusions(f"{sum(excl.values())} of {total} samples had zero density", report)
    return report


def _moments(scores):
    n = len(scores)
    mean = scores.mean(axis=0)
    centered = scores - mean
    prods = np.einsum("ni,nj->nij", centered, centered)
    cov = prods.mean(axis=0)
    mean_se = scores.std(axis=0, ddof=1) / np.sqrt(n)
    cov_se = prods.std(axis=0, ddof=1) / np.sqrt(n)
    return mean, cov, mean_se, cov_se


@dataclass(frozen=True)
class ScoreMoments:
    mean: np.ndarray
    cov: np.ndarray
    mean_se: np.ndarray
    cov_se: np.ndarray
    information: np.ndarray
    n: int

    @property
    def max_se(self) -> float:
        return float(max(self.mean_se.max(), self.cov_se.max()))

    @property
    def mean_ok(self) -> bool:
        return bool(np.linalg.norm(self.mean) <= 4.0 * self.max_se)

    @property
    def cov_ok(self) -> bool:
        return bool(np.abs(self.cov - self.information).max() <= 4.0 * self.max_se)

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.cov_ok

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean.tolist(),
            "covariance": self.cov.tolist(),
            "mean_se": self.mean_se.tolist(),
            "covariance_se": self.cov_se.tolist(),
            "information": self.information.tolist(),
            "passed": self.passed,
        }


def score_moments(model: GroupModel, theta, dist: CentralDistribution, N: int = 1_000_000,
                  seed: int = 0) -> ScoreMoments:
    """Monte Carlo mean and covariance of ``Lambda_theta`` under ``P_theta``."""
    theta = model.check(theta)
    x = model.tau(theta, dist.sample(int(N), replication_rng(seed, 0)))
    mean, cov, mean_se, cov_se = _moments(score(model, theta, dist)(x))
    info = fisher_matrix(model, theta, dist).matrix
    return ScoreMoments(mean, cov, mean_se, cov_se, info, int(N))
