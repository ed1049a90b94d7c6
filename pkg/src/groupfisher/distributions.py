"""Central distributions: smooth parts, atoms, samplers and quadrature.

A :class:`CentralDistribution` is a finite mixture of absolutely continuous
:class:`Density` components plus finitely many atoms.  Integrals are taken
part by part, each smooth component with its own recommended node set, so
heavy-tailed and kinked densities are integrated accurately side by side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import optimize, special, stats

LOG_DENSITY_FLOOR = np.log(1e-300)

#: scipy's Laguerre roots lose accuracy beyond a few hundred nodes.
MAX_LAGUERRE_NODES = 256


class NonFiniteIntegrand(ArithmeticError):
    pass


class DistributionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes with weights against Lebesgue measure.

    ``sum(weights * h(nodes))`` approximates ``int h dx``; deterministic rules
    have positive weights.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise ValueError("nodes and weights differ in length")

    def tensor(self, other: "QuadratureRule") -> "QuadratureRule":
        n1, n2 = len(self.nodes), len(other.nodes)
        nodes = np.hstack([np.repeat(self.nodes, n2, axis=0), np.tile(other.nodes, (n1, 1))])
        weights = np.repeat(self.weights, n2) * np.tile(other.weights, n1)
        kind = self.kind if self.kind == other.kind else f"{self.kind}x{other.kind}"
        return QuadratureRule(nodes, weights, kind)


@lru_cache(maxsize=None)
def _hermite(n):
    x, w = special.roots_hermitenorm(n)
    return x, w


@lru_cache(maxsize=None)
def _legendre(n):
    return special.roots_legendre(n)


@lru_cache(maxsize=None)
def _laguerre(n):
    with np.errstate(over="ignore", invalid="ignore"):
        return special.roots_laguerre(n)


def gauss_hermite(n: int, loc: float = 0.0, scale: float = 1.0) -> QuadratureRule:
    """Rule exact for polynomials times the N(loc, scale^2) density."""
    x, w = _hermite(n)
    keep = w > 0  # outermost weights underflow for large n
    x, w = x[keep], w[keep]
    nodes = loc + scale * x
    # Lebesgue weights: reference weight divided by the reference density
    weights = np.exp(np.log(w) + x**2 / 2.0) * scale
    return QuadratureRule(nodes[:, None], weights, "gauss_hermite")


def gauss_legendre(n: int, lo: float, hi: float) -> QuadratureRule:
    x, w = _legendre(n)
    half = (hi - lo) / 2.0
    return QuadratureRule((lo + half * (x + 1.0))[:, None], w * half, "gauss_legendre")


def exponential_tail(n: int, start: float, rate: float, side: int = 1) -> QuadratureRule:
    """Gauss-Laguerre on ``side * x > start`` for densities ~ exp(-rate |x|)."""
    s, w = _laguerre(min(n, MAX_LAGUERRE_NODES))
    keep = w > 0  # outermost weights underflow for large n
    s, w = s[keep], w[keep]
    nodes = side * (start + s / rate)
    weights = np.exp(np.log(w) + s) / rate
    return QuadratureRule(nodes[:, None], weights, "gauss_laguerre")


def tangent_legendre(n: int) -> QuadratureRule:
    """Gauss-Legendre in v after x = tan(pi (v - 1/2)); exact-weighted for Cauchy tails."""
    v, w = _legendre(n)
    v = (v + 1.0) / 2.0
    x = np.tan(np.pi * (v - 0.5))
    weights = (w / 2.0) * np.pi * (1.0 + x**2)
    return QuadratureRule(x[:, None], weights, "tangent_legendre")


def logit_grid(n: int) -> QuadratureRule:
    """Midpoint rule on (0, 1) mapped by the logit: the compactified grid."""
    u = (np.arange(n) + 0.5) / n
    x = special.logit(u)
    weights = 1.0 / (n * u * (1.0 - u))
    return QuadratureRule(x[:, None], weights, "logit_grid")


@lru_cache(maxsize=None)
def _jacobi(n, alpha, beta):
    return special.roots_jacobi(n, alpha, beta)


#: Tail exponents at or above this are left to plain Legendre panels.
JACOBI_MAX_EXPONENT = 2.0


def compact_legendre(n: int, breaks=(), tail_rates=(np.inf, np.inf)) -> QuadratureRule:
    """Gauss-Legendre in ``u = 2 l(x) - 1``, mapped back to the line.

    Polynomials in the compactified coordinate are integrated well by this
    rule whatever their degree relative to the density's scale.  With
    ``breaks`` (points where the density has a kink or jump) the u-interval
    is split there and about ``n`` nodes are shared among the panels by
    length.  A density with tail ``exp(-r |x|)`` behaves like
    ``(1 -+ u)^(r - 1)`` at the ends; given the left and right rates in
    ``tail_rates`` the end panels use Gauss-Jacobi rules for that factor.
    """
    cuts = np.unique(np.clip(2.0 * special.expit(np.asarray(breaks, dtype=float)) - 1.0, -1.0, 1.0))
    edges = np.concatenate([[-1.0], cuts[(cuts > -1.0) & (cuts < 1.0)], [1.0]])
    exps = [r - 1.0 if 0.0 < r and r - 1.0 < JACOBI_MAX_EXPONENT else 0.0 for r in tail_rates]
    us, ws = [], []
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        m = max(16, int(np.ceil(n * (hi - lo) / 2.0)))
        beta = exps[0] if i == 0 else 0.0
        alpha = exps[1] if i == len(edges) - 2 else 0.0
        if alpha or beta:
            v, w = _jacobi(m, alpha, beta)
            # divide the Jacobi weight back out so the rule is Lebesgue in u
            w = w / ((1.0 - v) ** alpha * (1.0 + v) ** beta)
        else:
            v, w = _legendre(m)
        us.append(lo + (hi - lo) * (v + 1.0) / 2.0)
        ws.append(w * (hi - lo) / 2.0)
    u, w = np.concatenate(us), np.concatenate(ws)
    x = np.log1p(u) - np.log1p(-u)
    weights = w * 2.0 / ((1.0 - u) * (1.0 + u))
    return QuadratureRule(x[:, None], weights, "compact_legendre")


def concat_rules(*rules: QuadratureRule) -> QuadratureRule:
    return QuadratureRule(
        np.vstack([r.nodes for r in rules]),
        np.concatenate([r.weights for r in rules]),
        "+".join(sorted({r.kind for r in rules})),
    )


def _scaled(n: int, resolution: float) -> int:
    return max(2, int(round(n * resolution)))


# ---------------------------------------------------------------------------
# smooth components


class Density:
    """Absolutely continuous probability law on R^k (normalized)."""

    k: int = 1
    name: str = "density"

    def logpdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def score(self, x) -> np.ndarray:
        """``-grad log f``, shape (n, k)."""
        raise NotImplementedError

    def sample(self, rng, n) -> np.ndarray:
        raise NotImplementedError

    def rule(self, resolution: float = 1.0) -> QuadratureRule:
        raise NotImplementedError

    def cdf(self, x) -> np.ndarray:
        raise NotImplementedError(f"{self.name} has no cdf")

    @property
    def breakpoints(self) -> tuple:
        """Points where a one-dimensional density is not smooth."""
        return ()

    @property
    def tail_rates(self) -> tuple:
        """``(left, right)`` exponential decay rates: inf if lighter, 0 if heavier or unknown."""
        return (0.0, 0.0)

    @property
    def factors(self):
        """One-dimensional factors when the density is a product, else None."""
        return None

    def describe(self) -> dict:
        return {"kind": self.name}


def _points(x, k):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and k == 1:
        x = x[:, None]
    x = np.atleast_2d(x)
    if x.shape[1] != k:
        raise ValueError(f"points must have {k} columns, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class Normal1(Density):
    nodes: int = 64
    name = "std_normal"
    k = 1

    def logpdf(self, x):
        x = _points(x, 1)[:, 0]
        return -0.5 * x**2 - 0.5 * np.log(2 * np.pi)

    def score(self, x):
        return _points(x, 1).copy()

    def cdf(self, x):
        return special.ndtr(np.asarray(x, dtype=float))

    def sample(self, rng, n):
        return rng.standard_normal((n, 1))

    def rule(self, resolution=1.0):
        return gauss_hermite(_scaled(self.nodes, resolution))

    @property
    def tail_rates(self):
        return (np.inf, np.inf)

    def describe(self):
        return {"kind": "std_normal", "k": 1}


@dataclass(frozen=True)
class Cauchy1(Density):
    nodes: int = 128
    name = "cauchy"
    k = 1

    def logpdf(self, x):
        x = _points(x, 1)[:, 0]
        return -np.log(np.pi) - np.log1p(x**2)

    def score(self, x):
        x = _points(x, 1)
        return 2.0 * x / (1.0 + x**2)

    def cdf(self, x):
        return 0.5 + np.arctan(np.asarray(x, dtype=float)) / np.pi

    def sample(self, rng, n):
        return rng.standard_cauchy((n, 1))

    def rule(self, resolution=1.0):
        return tangent_legendre(_scaled(self.nodes, resolution))

    def describe(self):
        return {"kind": "cauchy"}


def huber_clip_constant(eps: float) -> float:
    """Solve ``2 phi(c)/c - 2 Phi(-c) = eps/(1-eps)`` for c > 0."""
    if not 0.0 < eps < 1.0:
        raise DistributionError("contamination fraction must lie in (0, 1)")
    target = eps / (1.0 - eps)

    def excess(c):
        return 2.0 * stats.norm.pdf(c) / c - 2.0 * special.ndtr(-c) - target

    return optimize.brentq(excess, 1e-10, 60.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class HuberLFD(Density):
    """Least favorable density for location in the eps-contaminated normal."""

    eps: float
    nodes: int = 48
    name = "huber_lfd"
    k = 1

    @cached_property
    def c(self) -> float:
        return huber_clip_constant(self.eps)

    def logpdf(self, x):
        x = np.abs(_points(x, 1)[:, 0])
        c = self.c
        log_core = np.log1p(-self.eps) - 0.5 * np.log(2 * np.pi)
        return log_core - np.where(x <= c, 0.5 * x**2, 0.5 * c**2 + c * (x - c))

    def score(self, x):
        x = _points(x, 1)
        return np.clip(x, -self.c, self.c)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        c, q = self.c, 1.0 - self.eps
        tail = q * stats.norm.pdf(c) / c
        lower = tail * np.exp(-c * (np.abs(x) - c))
        mid = tail + q * (special.ndtr(np.clip(x, -c, c)) - special.ndtr(-c))
        return np.where(x < -c, lower, np.where(x > c, 1.0 - lower, mid))

    def sample(self, rng, n):
        c, q = self.c, 1.0 - self.eps
        tail = q * stats.norm.pdf(c) / c
        u = rng.random(n)
        lo, hi = special.ndtr(-c), special.ndtr(c)
        core = special.ndtri(lo + rng.random(n) * (hi - lo))
        expo = c + rng.standard_exponential(n) / c
        out = np.where(u < tail, -expo, np.where(u > 1.0 - tail, expo, core))
        return out[:, None]

    def rule(self, resolution=1.0):
        n = _scaled(self.nodes, resolution)
        c = self.c
        return concat_rules(
            gauss_legendre(n, -c, c),
            exponential_tail(n, c, c, +1),
            exponential_tail(n, c, c, -1),
        )

    @property
    def breakpoints(self):
        return (-self.c, self.c)

    @property
    def tail_rates(self):
        return (self.c, self.c)

    def describe(self):
        return {"kind": "huber_lfd", "eps": self.eps}


@dataclass(frozen=True)
class ExpTail(Density):
    """One-sided exponential template ``rate * exp(-rate (side*x - start))`` on ``side*x > start``."""

    start: float
    rate: float
    side: int = 1
    nodes: int = 24
    name = "exp_tail"
    k = 1

    def logpdf(self, x):
        z = self.side * _points(x, 1)[:, 0] - self.start
        with np.errstate(divide="ignore"):
            return np.where(z >= 0, np.log(self.rate) - self.rate * z, -np.inf)

    def score(self, x):
        z = self.side * _points(x, 1) - self.start
        return np.where(z >= 0, self.side * self.rate, 0.0)

    def cdf(self, x):
        z = self.side * np.asarray(x, dtype=float) - self.start
        upper = np.where(z > 0, -np.expm1(-self.rate * np.maximum(z, 0)), 0.0)
        return upper if self.side > 0 else 1.0 - upper

    def sample(self, rng, n):
        return (self.side * (self.start + rng.standard_exponential(n) / self.rate))[:, None]

    def rule(self, resolution=1.0):
        return exponential_tail(_scaled(self.nodes, resolution), self.start, self.rate, self.side)

    @property
    def breakpoints(self):
        return (self.side * self.start,)

    @property
    def tail_rates(self):
        return (np.inf, self.rate) if self.side > 0 else (self.rate, np.inf)

    def describe(self):
        return {"kind": "exp_tail", "start": self.start, "rate": self.rate, "side": self.side}


@dataclass(frozen=True)
class Product(Density):
    """Independent coordinates with one-dimensional factor densities."""

    parts: tuple
    name = "product"

    @property
    def k(self):
        return len(self.parts)

    @property
    def factors(self):
        return self.parts

    def logpdf(self, x):
        x = _points(x, self.k)
        return sum(f.logpdf(x[:, i : i + 1]) for i, f in enumerate(self.parts))

    def score(self, x):
        x = _points(x, self.k)
        return np.hstack([f.score(x[:, i : i + 1]) for i, f in enumerate(self.parts)])

    def sample(self, rng, n):
        return np.hstack([f.sample(rng, n) for f in self.parts])

    def rule(self, resolution=1.0):
        rule = self.parts[0].rule(resolution)
        for f in self.parts[1:]:
            rule = rule.tensor(f.rule(resolution))
        return rule

    def describe(self):
        return {"kind": "product", "factors": [f.describe() for f in self.parts]}


def _normal_nodes(k: int) -> int:
    return {1: 64, 2: 64, 3: 32, 4: 16}.get(k, 0)


@dataclass(frozen=True)
class NormalK(Product):
    """Standard normal on R^k; Monte Carlo nodes beyond k = 4."""

    mc_nodes: int = 20000

    def rule(self, resolution=1.0):
        if self.k > 4:
            rng = np.random.default_rng(12345)
            n = _scaled(self.mc_nodes, resolution)
            x = rng.standard_normal((n, self.k))
            return QuadratureRule(x, np.exp(-self.logpdf(x)) / n, "monte_carlo")
        return super().rule(resolution)

    def describe(self):
        return {"kind": "std_normal", "k": self.k}


# ---------------------------------------------------------------------------
# mixtures with atoms


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted nodes representing a distribution for integration."""

    nodes: np.ndarray
    weights: np.ndarray
    is_atom: np.ndarray
    kind: str


@dataclass(frozen=True)
class CentralDistribution:
    """``sum_j w_j f_j dx + sum_i m_i delta_{a_i}`` on R^k."""

    k: int
    parts: tuple = ()  # ((weight, Density), ...)
    atoms: tuple = ()  # ((location tuple, mass), ...)
    label: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        total = sum(w for w, _ in self.parts) + sum(m for _, m in self.atoms)
        if any(w < 0 for w, _ in self.parts) or any(m < 0 for _, m in self.atoms):
            raise DistributionError("negative mixture weight")
        if abs(total - 1.0) > 1e-12:
            raise DistributionError(f"weights sum to {total!r}, not 1")
        for _, d in self.parts:
            if d.k != self.k:
                raise DistributionError("component dimension mismatch")
        for loc, _ in self.atoms:
            if len(loc) != self.k:
                raise DistributionError("atom dimension mismatch")

    # -- structure ------------------------------------------------------------

    @property
    def ac_weight(self) -> float:
        return float(sum(w for w, _ in self.parts))

    @property
    def atom_locations(self) -> np.ndarray:
        return np.array([loc for loc, _ in self.atoms], dtype=float).reshape(-1, self.k)

    @property
    def atom_masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    @property
    def factors(self):
        """One-dimensional factors if the smooth part is a single product density."""
        if len(self.parts) == 1:
            return self.parts[0][1].factors
        return None

    @property
    def breakpoints(self) -> np.ndarray:
        """Kinks of the smooth part (k = 1)."""
        pts = [b for w, d in self.parts if w > 0 for b in d.breakpoints]
        return np.unique(np.asarray(pts, dtype=float))

    @property
    def tail_rates(self) -> tuple:
        """Slowest exponential tail rate on each side over the smooth components."""
        rates = [d.tail_rates for w, d in self.parts if w > 0]
        if not rates:
            return (np.inf, np.inf)
        return tuple(min(r[i] for r in rates) for i in (0, 1))

    def smooth_part(self) -> "CentralDistribution":
        """The absolutely continuous part renormalized to a probability."""
        w = self.ac_weight
        if w <= 0:
            raise DistributionError("distribution has no absolutely continuous part")
        return CentralDistribution(self.k, tuple((v / w, d) for v, d in self.parts))

    # -- pointwise ------------------------------------------------------------

    def _log_terms(self, x):
        x = _points(x, self.k)
        with np.errstate(divide="ignore"):
            return np.stack([np.log(w) + d.logpdf(x) for w, d in self.parts if w > 0])

    def logpdf(self, x) -> np.ndarray:
        """Log of the density of the smooth part (includes its total weight)."""
        if not self.parts:
            return np.full(_points(x, self.k).shape[0], -np.inf)
        return special.logsumexp(self._log_terms(x), axis=0)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def score(self, x) -> np.ndarray:
        """``Lambda_f = -grad f / f``; zero where the density underflows."""
        x = _points(x, self.k)
        active = [d for w, d in self.parts if w > 0]
        if not active:
            raise DistributionError("score needs an absolutely continuous part")
        if len(active) == 1:
            out = active[0].score(x)
            logf = active[0].logpdf(x)
        else:
            terms = self._log_terms(x)
            logf = special.logsumexp(terms, axis=0)
            with np.errstate(invalid="ignore"):
                resp = np.exp(terms - logf)
            resp = np.nan_to_num(resp)
            out = sum(r[:, None] * d.score(x) for r, d in zip(resp, active))
        return np.where((logf > LOG_DENSITY_FLOOR)[:, None], out, 0.0)

    # -- sampling -------------------------------------------------------------

    def sample(self, n: int, seed=None) -> np.ndarray:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        probs = np.array([w for w, _ in self.parts] + [m for _, m in self.atoms])
        counts = rng.multinomial(n, probs / probs.sum())
        chunks = []
        for c, (_, d) in zip(counts, self.parts):
            chunks.append(d.sample(rng, c) if c else np.empty((0, self.k)))
        for c, (loc, _) in zip(counts[len(self.parts):], self.atoms):
            chunks.append(np.tile(np.asarray(loc, dtype=float), (c, 1)))
        out = np.vstack(chunks) if chunks else np.empty((0, self.k))
        return out[rng.permutation(n)]

    # -- integration ----------------------------------------------------------

    def discretize(self, resolution: float = 1.0, rule: QuadratureRule | None = None) -> DiscreteMeasure:
        """Nodes and probability weights for the whole distribution.

        Each smooth component uses its own rule unless ``rule`` is given, in
        which case that rule is applied to the mixed density.
        """
        nodes, weights, kinds = [], [], set()
        if rule is not None and self.parts:
            nodes.append(rule.nodes)
            weights.append(rule.weights * self.pdf(rule.nodes))
            kinds.add(rule.kind)
        else:
            for w, d in self.parts:
                if w == 0:
                    continue
                r = d.rule(resolution)
                nodes.append(r.nodes)
                weights.append(w * r.weights * d.pdf(r.nodes))
                kinds.add(r.kind)
        n_smooth = sum(len(v) for v in nodes)
        if self.atoms:
            nodes.append(self.atom_locations)
            weights.append(self.atom_masses)
            kinds.add("atoms")
        if not nodes:
            raise DistributionError("empty distribution")
        nodes = np.vstack(nodes)
        weights = np.concatenate(weights)
        is_atom = np.arange(len(weights)) >= n_smooth
        return DiscreteMeasure(nodes, weights, is_atom, "+".join(sorted(kinds)))

    def integrate(self, g, rule: QuadratureRule | None = None, resolution: float = 1.0):
        """``int g dF`` for ``g: (n, k) -> (n, m)`` with a node-halving error estimate."""
        fine = _apply(g, self.discretize(resolution, rule))
        if rule is None and self.parts:
            coarse = _apply(g, self.discretize(resolution / 2.0))
            err = np.abs(fine - coarse)
        else:
            err = np.zeros_like(fine)
        return fine, err

    def cell_masses(self, edges) -> np.ndarray:
        """Probability of each interval ``(edges[i], edges[i+1]]`` (k = 1)."""
        if self.k != 1:
            raise DistributionError("cell masses are defined for k = 1")
        edges = np.asarray(edges, dtype=float)
        out = np.zeros(len(edges) - 1)
        for w, d in self.parts:
            out += w * np.diff(d.cdf(edges))
        for loc, m in self.atoms:
            i = np.searchsorted(edges, loc[0], side="left") - 1
            if 0 <= i < len(out):
                out[i] += m
        return out

    def self_check(self) -> float:
        """``|int f dx - w|`` for the smooth part under its recommended rules."""
        if not self.parts:
            return 0.0
        total = sum(w * np.sum(d.rule().weights * d.pdf(d.rule().nodes)) for w, d in self.parts)
        return float(abs(total - self.ac_weight))

    def describe(self) -> dict:
        if self.label:
            return dict(self.label)
        return {
            "kind": "mixture",
            "parts": [{"weight": w, "dist": d.describe()} for w, d in self.parts],
            "atoms": [{"location": list(loc), "mass": m} for loc, m in self.atoms],
        }


def _apply(g, measure: DiscreteMeasure):
    vals = np.asarray(g(measure.nodes), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    bad = ~np.isfinite(vals).all(axis=1)
    if np.any(bad & (measure.weights != 0)):
        node = measure.nodes[np.argmax(bad & (measure.weights != 0))]
        raise NonFiniteIntegrand(f"integrand not finite at node {node.tolist()}")
    vals = np.where(bad[:, None], 0.0, vals)
    return measure.weights @ vals


# ---------------------------------------------------------------------------
# constructors


def std_normal(k: int = 1) -> CentralDistribution:
    if k == 1:
        d = Normal1()
    else:
        d = NormalK(tuple(Normal1(nodes=_normal_nodes(k) or 8) for _ in range(k)))
    return CentralDistribution(k, ((1.0, d),), label={"kind": "std_normal", "k": k})


def cauchy() -> CentralDistribution:
    return CentralDistribution(1, ((1.0, Cauchy1()),), label={"kind": "cauchy"})


def huber_lfd(eps: float) -> CentralDistribution:
    d = HuberLFD(float(eps))
    d.c  # solve now so construction fails early
    return CentralDistribution(1, ((1.0, d),), label={"kind": "huber_lfd", "eps": float(eps)})


def product(*factors: CentralDistribution) -> CentralDistribution:
    """Independent product of one-dimensional smooth distributions."""
    parts = []
    for f in factors:
        if f.k != 1 or f.atoms or len(f.parts) != 1:
            raise DistributionError("product factors must be one-dimensional single densities")
        parts.append(f.parts[0][1])
    label = {"kind": "product", "factors": [f.describe() for f in factors]}
    return CentralDistribution(len(parts), ((1.0, Product(tuple(parts))),), label=label)


def exp_tail(start: float, rate: float, side: int = 1) -> CentralDistribution:
    """Exponential tail template beginning at ``side * start``."""
    if rate <= 0 or side not in (1, -1):
        raise DistributionError("exp_tail needs rate > 0 and side in {1, -1}")
    d = ExpTail(float(start), float(rate), int(side))
    return CentralDistribution(1, ((1.0, d),), label=d.describe())


def atom(location) -> CentralDistribution:
    loc = tuple(float(v) for v in np.atleast_1d(location))
    return CentralDistribution(len(loc), (), ((loc, 1.0),), label={"kind": "atom", "location": list(loc)})


def mixture(components) -> CentralDistribution:
    """Mixture of ``(weight, CentralDistribution)`` pairs."""
    components = list(components)
    if not components:
        raise DistributionError("empty mixture")
    if any(w < 0 for w, _ in components):
        raise DistributionError("negative mixture weight")
    k = components[0][1].k
    parts, atoms = [], {}
    for w, dist in components:
        if dist.k != k:
            raise DistributionError("mixture components differ in dimension")
        parts.extend((w * v, d) for v, d in dist.parts)
        for loc, m in dist.atoms:
            atoms[loc] = atoms.get(loc, 0.0) + w * m
    label = {"kind": "mixture", "components": [{"weight": w, "dist": d.describe()} for w, d in components]}
    return CentralDistribution(k, tuple(parts), tuple(atoms.items()), label=label)


def point_contaminated(base: CentralDistribution, delta: float, location) -> CentralDistribution:
    if not 0.0 <= delta < 1.0:
        raise DistributionError("delta must lie in [0, 1)")
    dist = mixture([(1.0 - delta, base), (delta, atom(location))])
    label = {"kind": "point_contaminated", "base": base.describe(), "delta": delta,
             "location": list(np.atleast_1d(location).astype(float))}
    return CentralDistribution(dist.k, dist.parts, dist.atoms, label=label)


def make_distribution(spec: dict) -> CentralDistribution:
    """Build a distribution from a plain-dict description (config format)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _KINDS:
        raise DistributionError(f"unknown distribution kind {kind!r}")
    try:
        if kind == "std_normal":
            return std_normal(int(spec.pop("k", 1)))
        if kind == "cauchy":
            return cauchy()
        if kind == "huber_lfd":
            return huber_lfd(float(spec.pop("eps")))
        if kind == "atom":
            return atom(spec.pop("location"))
        if kind == "exp_tail":
            return exp_tail(float(spec.pop("start")), float(spec.pop("rate")), int(spec.pop("side", 1)))
        if kind == "product":
            return product(*[make_distribution(f) for f in spec.pop("factors")])
        if kind == "mixture":
            comps = spec.pop("components")
            return mixture([(float(c["weight"]), make_distribution(c["dist"])) for c in comps])
        if kind == "point_contaminated":
            base = make_distribution(spec.pop("base"))
            return point_contaminated(base, float(spec.pop("delta")), spec.pop("location"))
    except KeyError as exc:
        raise DistributionError(f"distribution {kind!r} is missing key {exc.args[0]!r}") from None
    finally:
        if spec:
            raise DistributionError(f"unexpected keys for {kind!r}: {sorted(spec)}")


_KINDS = ("std_normal", "cauchy", "huber_lfd", "exp_tail", "atom", "product", "mixture", "point_contaminated")


def pushforward_sample(dist: CentralDistribution, model, theta, n: int, seed=None) -> np.ndarray:
    """``n`` draws from ``P_theta = tau_theta(F)``."""
    return model.tau(theta, dist.sample(n, seed))
