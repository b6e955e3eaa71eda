"""Biased placement distributions, conditional probabilities and KL divergences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np
from scipy import integrate

from .numerics import quad

Interval = tuple[float, float]  # (a, a) denotes the point {a}

CORR_FACTOR = 1.147
MAX_EDGES = 22


def _on_support(fn: Callable[[np.ndarray], np.ndarray], end: float) -> Callable:
    def wrapped(r):
        r = np.asarray(r, dtype=float)
        inside = (r >= 0) & (r < end)
        rc = np.where(inside, r, 0.0)
        out = np.where(inside, fn(rc), 0.0)
        return out if out.ndim else float(out)

    return wrapped


@dataclass(frozen=True)
class GammaSpec:
    """A bias function gamma with derivative phi, zero beyond support_end."""

    name: str
    gamma: Callable
    phi: Callable
    support_end: float = 0.5
    kinks: tuple[float, ...] = field(default=())

    def points(self) -> tuple[float, ...]:
        return tuple(sorted({self.support_end, *self.kinks}))

    def phi_range(self, num: int = 10_001) -> tuple[float, float]:
        r = np.linspace(0.0, self.support_end, num)
        v = self.phi(r)
        lo, hi = float(v.min()), float(v.max())
        return min(lo, 0.0), max(hi, 0.0)

    def max_abs_phi(self) -> float:
        lo, hi = self.phi_range()
        return max(-lo, hi)

    def scaled(self, c: float, name: str | None = None) -> "GammaSpec":
        g, f = self.gamma, self.phi
        return GammaSpec(
            name or f"{c}*{self.name}",
            lambda r: c * np.asarray(g(r)),
            lambda r: c * np.asarray(f(r)),
            self.support_end,
            self.kinks,
        )


def combine(specs: Sequence[tuple[float, GammaSpec]], name: str) -> GammaSpec:
    end = max(s.support_end for _, s in specs)
    kinks = tuple(sorted({p for _, s in specs for p in s.points()}))

    def g(r):
        return sum(c * np.asarray(s.gamma(r)) for c, s in specs)

    def f(r):
        return sum(c * np.asarray(s.phi(r)) for c, s in specs)

    return GammaSpec(name, g, f, end, kinks)


def _mk(name, g, f, end=0.5):
    return GammaSpec(name, _on_support(g, end), _on_support(f, end), end)


GAMMA_MAIN = _mk("main", lambda r: r * (1 - 2 * r) ** 1.5, lambda r: np.sqrt(1 - 2 * r) * (1 - 5 * r))
GAMMA_TWOCC = _mk(
    "twocc", lambda r: 25 * r**3 * (1 - 2 * r) ** 2, lambda r: 25 * r**2 * (1 - 2 * r) * (3 - 10 * r)
)
GAMMA_ID01 = _mk("id01", lambda r: 10 * r**2 * (1 - 2 * r) ** 2, lambda r: 20 * r * (1 - 2 * r) * (1 - 4 * r))
GAMMA_PID01 = _mk(
    "pid01",
    lambda r: 61 / 6 * r**3 * (1 - 2 * r) ** 2,
    lambda r: 61 / 6 * r**2 * (1 - 2 * r) * (3 - 10 * r),
)
GAMMA_TWOCC_IRR = _mk("twocc_irr", lambda r: 20 * r**3 * (1 - 2 * r), lambda r: 20 * r**2 * (3 - 8 * r))


def gamma_generalk(rho: float) -> GammaSpec:
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    return _mk(f"generalk({rho})", lambda r: r * (rho - r), lambda r: rho - 2 * r, rho)


def gamma_ij(i: float, j: float) -> GammaSpec:
    """-i * gamma_ID01 + j * gamma_pID01."""
    return combine([(-i, GAMMA_ID01), (j, GAMMA_PID01)], f"ij({i},{j})")


REGISTRY: dict[str, GammaSpec] = {
    s.name: s for s in (GAMMA_MAIN, GAMMA_TWOCC, GAMMA_ID01, GAMMA_PID01, GAMMA_TWOCC_IRR)
}


def get_gamma(name: str) -> GammaSpec:
    if name.startswith("generalk(") and name.endswith(")"):
        return gamma_generalk(float(name[9:-1]))
    try:
        return REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown gamma {name!r}; known: {sorted(REGISTRY)}") from None


# ---------------------------------------------------------------- sampling


def validate_univariate(spec: GammaSpec, eps: float) -> None:
    lo, hi = spec.phi_range()
    if 1 + eps * lo < -1e-12 or 1 + eps * hi < -1e-12:
        raise ValueError(f"density 1 + eps*phi goes negative for {spec.name}, eps={eps}")


def cdf(spec: GammaSpec, eps, r):
    return np.asarray(r) + np.asarray(eps) * np.asarray(spec.gamma(r))


def _inverse_cdf(spec: GammaSpec, eps, u: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), u.shape)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    for _ in range(int(math.ceil(math.log2(1 / tol))) + 1):
        mid = 0.5 * (lo + hi)
        below = cdf(spec, eps, mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample_univariate(spec: GammaSpec, eps: float, rng: np.random.Generator, size=None):
    """Inverse-CDF sample from the law with Pr[X < r] = r + eps*gamma(r)."""
    validate_univariate(spec, eps)
    if eps == 0:
        return rng.random(size)
    u = rng.random(size)
    out = _inverse_cdf(spec, eps, np.atleast_1d(u))
    return out.reshape(np.shape(u)) if size is not None else float(out[0])


def sample_pair(spec: GammaSpec, eps: float, rng: np.random.Generator, size=None):
    """Sample (X, Y) with density 1 + eps*phi(x)*phi(y)."""
    validate_graph(GraphShape.path(1), spec, eps)
    n = 1 if size is None else int(np.prod(size))
    x = rng.random(n)
    u = rng.random(n)
    y = _inverse_cdf(spec, eps * np.asarray(spec.phi(x)), u)
    if size is None:
        return float(x[0]), float(y[0])
    return x.reshape(size), y.reshape(size)


@dataclass(frozen=True)
class GraphShape:
    vertices: tuple[Hashable, ...]
    edges: tuple[tuple[Hashable, Hashable], ...]
    kind: str = "general"

    def __post_init__(self):
        vs = set(self.vertices)
        seen = set()
        for u, v in self.edges:
            if u == v or u not in vs or v not in vs:
                raise ValueError(f"bad edge {(u, v)}")
            key = frozenset((u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {(u, v)}")
            seen.add(key)

    @staticmethod
    def path(t: int, labels: Sequence[Hashable] | None = None) -> "GraphShape":
        vs = tuple(labels) if labels is not None else tuple(range(t + 1))
        if len(vs) != t + 1:
            raise ValueError("path with t edges needs t+1 labels")
        return GraphShape(vs, tuple((vs[i], vs[i + 1]) for i in range(t)), "path")

    @staticmethod
    def cycle(t: int, labels: Sequence[Hashable] | None = None) -> "GraphShape":
        if t < 3:
            raise ValueError("a cycle needs at least 3 edges")
        vs = tuple(labels) if labels is not None else tuple(range(t))
        if len(vs) != t:
            raise ValueError("cycle with t edges needs t labels")
        return GraphShape(vs, tuple((vs[i], vs[(i + 1) % t]) for i in range(t)), "cycle")

    @property
    def t(self) -> int:
        return len(self.edges)

    def index(self) -> dict[Hashable, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def neighbors(self, u: Hashable) -> list[Hashable]:
        return [b if a == u else a for a, b in self.edges if u in (a, b)]


def graph_min_density_bound(G: GraphShape, spec: GammaSpec, eps: float) -> float:
    """Lower bound 1 + eps*|E|*(worst product of two phi values)."""
    lo, hi = spec.phi_range()
    worst = lo * hi if eps >= 0 else max(lo * lo, hi * hi)
    return 1 + eps * G.t * worst


def validate_graph(G: GraphShape, spec: GammaSpec, eps: float) -> None:
    if graph_min_density_bound(G, spec, eps) < 0:
        raise ValueError(f"D^G density can go negative: |E|={G.t}, eps={eps}, gamma={spec.name}")


def graph_density(G: GraphShape, spec: GammaSpec, eps: float, x: np.ndarray) -> np.ndarray:
    """Density of D^G at the rows of x (columns ordered as G.vertices)."""
    idx = G.index()
    ph = np.asarray(spec.phi(x))
    s = np.zeros(x.shape[:-1])
    for u, v in G.edges:
        s = s + ph[..., idx[u]] * ph[..., idx[v]]
    return 1 + eps * s


@dataclass
class GraphSample:
    values: np.ndarray
    acceptance: float


def sample_graph(G: GraphShape, spec: GammaSpec, eps: float, rng: np.random.Generator, size: int = 1) -> GraphSample:
    """Rejection sampling of D^G from the uniform proposal."""
    validate_graph(G, spec, eps)
    M = 1 + abs(eps) * G.t * spec.max_abs_phi() ** 2
    d = len(G.vertices)
    out = []
    got = 0
    proposed = 0
    while got < size:
        batch = max(64, int((size - got) * M * 1.1))
        x = rng.random((batch, d))
        dens = graph_density(G, spec, eps, x)
        keep = rng.random(batch) * M < dens
        proposed += batch
        acc = x[keep]
        out.append(acc)
        got += len(acc)
    vals = np.concatenate(out)[:size]
    return GraphSample(vals, got / proposed)


# ---------------------------------------------------------------- samplers used by ppsz and cct


class UniformSampler:
    """Independent uniform placements; float32 trades precision for speed in large MC runs."""

    name = "uniform"

    def __init__(self, dtype=np.float64):
        self.dtype = dtype

    def sample(self, rng, labels):
        return dict(zip(labels, rng.random(len(labels))))

    def sample_matrix(self, rng, labels, size):
        return rng.random((size, len(labels)), dtype=self.dtype)


class UnivariateSampler:
    """Independent D_eps^gamma placements on the chosen labels, uniform elsewhere."""

    def __init__(self, spec: GammaSpec, eps: float, biased: set | None = None):
        validate_univariate(spec, eps)
        self.spec, self.eps, self.biased = spec, eps, biased
        self.name = f"univariate({spec.name},{eps})"

    def sample_matrix(self, rng, labels, size):
        x = rng.random((size, len(labels)))
        cols = [i for i, l in enumerate(labels) if self.biased is None or l in self.biased]
        if cols and self.eps != 0:
            x[:, cols] = _inverse_cdf(self.spec, self.eps, x[:, cols])
        return x

    def sample(self, rng, labels):
        return dict(zip(labels, self.sample_matrix(rng, labels, 1)[0]))


class GraphSampler:
    """D^G on the graph's vertices (one component per graph), uniform on other labels."""

    def __init__(self, graphs: Sequence[GraphShape], spec: GammaSpec, eps: float):
        for G in graphs:
            validate_graph(G, spec, eps)
        self.graphs, self.spec, self.eps = list(graphs), spec, eps
        self.name = f"graph({spec.name},{eps})"

    def sample_matrix(self, rng, labels, size):
        x = rng.random((size, len(labels)))
        pos = {l: i for i, l in enumerate(labels)}
        for G in self.graphs:
            vals = sample_graph(G, self.spec, self.eps, rng, size).values
            for j, v in enumerate(G.vertices):
                if v in pos:
                    x[:, pos[v]] = vals[:, j]
        return x

    def sample(self, rng, labels):
        return dict(zip(labels, self.sample_matrix(rng, labels, 1)[0]))


# ---------------------------------------------------------------- conditional probabilities


def interval_phi_mean(spec: GammaSpec, A: Interval) -> float:
    """Average of phi over an interval, or phi itself at a point."""
    a, b = A
    if not 0 <= a <= b <= 1:
        raise ValueError(f"bad interval {A}")
    if a == b:
        return float(spec.phi(a))
    return float((spec.gamma(b) - spec.gamma(a)) / (b - a))


def interval_phi_mean_quad(spec: GammaSpec, A: Interval) -> float:
    a, b = A
    if a == b:
        return float(spec.phi(a))
    return quad(lambda r: float(spec.phi(r)), a, b, spec.points()) / (b - a)


def cond_prob(
    G: GraphShape,
    K: set,
    I: set,
    intervals: Mapping[Hashable, Interval],
    spec: GammaSpec,
    eps: float,
) -> float:
    """Pr[X_k in A_k for k in K | X_i in A_i for i in I] under D^G."""
    V = set(G.vertices)
    if K & I or (K | I) != V:
        raise ValueError("K and I must partition the vertex set")
    T = {v: interval_phi_mean(spec, intervals[v]) for v in V}
    mu = 1.0
    for k in K:
        a, b = intervals[k]
        mu *= b - a
    if mu == 0.0:
        return 0.0
    s_I = sum(T[u] * T[v] for u, v in G.edges if u in I and v in I)
    s_rest = sum(T[u] * T[v] for u, v in G.edges if not (u in I and v in I))
    return mu * (1 + eps * s_rest / (1 + eps * s_I))


def cond_range_lower_bound(
    G: GraphShape,
    u: Hashable,
    intervals: Mapping[Hashable, Interval],
    spec: GammaSpec,
    eps: float,
    r: float,
) -> float:
    """Lower bound on Pr[X_u < r | X_v in A_v for v != u] for paths and cycles."""
    if G.kind not in ("path", "cycle"):
        raise ValueError("bound applies to paths and cycles only")
    if eps > 0.1 or eps < 0 or G.t > MAX_EDGES:
        raise ValueError("bound requires 0 <= eps <= 0.1 and at most 22 edges")
    allowed = {(r, r), (0.0, r), (r, 1.0), (0.0, 1.0)}
    points = 0
    for v in G.vertices:
        if v == u:
            continue
        A = tuple(map(float, intervals[v]))
        if A not in allowed:
            raise ValueError(f"interval {A} for {v} is not one of {{r}}, [0,r], [r,1], [0,1]")
        points += A[0] == A[1]
    if points > 1:
        raise ValueError("at most one point condition allowed")
    tminus = sum(min(0.0, interval_phi_mean(spec, intervals[v])) for v in G.neighbors(u))
    return r + CORR_FACTOR * eps * float(spec.gamma(r)) * tminus


# ---------------------------------------------------------------- moments and KL


def moments(spec: GammaSpec) -> dict[str, float]:
    out = {}
    for d in (1, 2, 3, 4):
        out[f"m{d}"] = quad(lambda r: float(spec.phi(r)) ** d, 0.0, spec.support_end, spec.points())
    return out


def f_kl(eps: float) -> float:
    if eps >= 1:
        return 1.0 if eps == 1 else float("nan")
    return (1 - eps) * math.log1p(-eps) + eps


def kl_univariate(spec: GammaSpec, eps: float) -> dict[str, float]:
    """KL(D_eps^gamma || U) in bits and the envelope m2 * f_kl(eps) / ln 2."""
    validate_univariate(spec, eps)

    def integrand(r):
        z = eps * float(spec.phi(r))
        return (1 + z) * math.log1p(z) if z > -1 else 0.0

    numeric = quad(integrand, 0.0, spec.support_end, spec.points()) / math.log(2)
    m2 = moments(spec)["m2"]
    return {
        "numeric": numeric,
        "bound": m2 * f_kl(eps) / math.log(2),
        "bound_valid": spec.max_abs_phi() <= 1 + 1e-12,
    }


def kl_scaled_bound(spec: GammaSpec, eps: float, scale: float) -> float:
    """Envelope m2 * f_kl(scale*eps) / (scale^2 ln 2), valid when max|phi| <= scale."""
    m2 = moments(spec)["m2"]
    return m2 * f_kl(scale * eps) / (scale**2 * math.log(2))


def _shape_kind(G: GraphShape) -> str:
    if G.kind == "cycle" and G.t == 3:
        return "triangle"
    if G.kind == "cycle" and G.t == 4:
        return "4-cycle"
    return G.kind


def kl_moment_terms(kind: str, t: int, m: Mapping[str, float], eps: float) -> dict[str, float]:
    """The three expansion terms E[z^2/2], E[-z^3/6], E[z^4/3] (natural log units)."""
    m2, m3, m4 = m["m2"], m["m3"], m["m4"]
    quad_term = eps**2 * t * m2**2 / 2
    if kind == "triangle":
        cubic = -(eps**3) * (3 * m3**2 + 6 * m2**3) / 6
        quart = eps**4 / 3 * (3 * m4**2 + 18 * m4 * m2**2 + 36 * m3**2 * m2)
    elif kind == "4-cycle":
        cubic = -(eps**3) * t * m3**2 / 6
        quart = eps**4 / 3 * (4 * m4**2 + 24 * m4 * m2**2 + 36 * m2**4)
    elif kind == "path":
        cubic = -(eps**3) * t * m3**2 / 6
        quart = eps**4 / 3 * (t * m4**2 + 3 * (t - 1) * (2 * m4 * m2**2 + (t - 2) * m2**4))
    elif kind == "cycle":
        cubic = -(eps**3) * t * m3**2 / 6
        quart = eps**4 / 3 * (t * m4**2 + 3 * t * (2 * m4 * m2**2 + (t - 3) * m2**4))
    else:
        raise ValueError(f"moment expansion not available for shape {kind!r}")
    return {"quadratic": quad_term, "cubic": cubic, "quartic": quart}


def kl_graph(
    G: GraphShape,
    spec: GammaSpec,
    eps: float,
    mode: str = "moment",
    samples: int = 200_000,
    seed: int = 0,
) -> float:
    """KL(D^G || U) in bits: moment-expansion upper bound or Monte Carlo estimate."""
    if mode == "moment":
        terms = kl_moment_terms(_shape_kind(G), G.t, moments(spec), eps)
        return sum(terms.values()) / math.log(2)
    if mode == "monte-carlo":
        validate_graph(G, spec, eps)
        rng = np.random.default_rng(seed)
        x = rng.random((samples, len(G.vertices)))
        z = graph_density(G, spec, eps, x) - 1
        # z has mean zero under the uniform law; subtracting it is a control variate
        return float(np.mean((1 + z) * np.log1p(z) - z) / math.log(2))
    raise ValueError(f"unknown mode {mode!r}")


def kl_pair_quadrature(spec: GammaSpec, eps: float) -> float:
    """KL of the single-edge law by 2-D quadrature, in bits."""
    end = spec.support_end

    def f(y, x):
        z = eps * float(spec.phi(x)) * float(spec.phi(y))
        return (1 + z) * math.log1p(z)

    val, _ = integrate.dblquad(f, 0.0, end, 0.0, end, epsabs=1e-13, epsrel=1e-11)
    return val / math.log(2)
