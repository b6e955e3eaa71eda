"""Registry of numerical constants, each recomputed by two independent routes.

Every entry carries a high-precision closed form (mpmath, 60 digits) and a
numeric route (scipy quadrature or double-precision optimisation). The two
must agree before the value is compared against the stated constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
from mpmath import mp, mpf
from scipy import integrate, optimize

from . import gw
from .dist import GAMMA_ID01, GAMMA_MAIN, GAMMA_PID01, GAMMA_TWOCC, GAMMA_TWOCC_IRR, f_kl, kl_moment_terms, moments
from .numerics import quad

DPS = 60
KNOWN_FLAGS = ("kl_twocc_m2", "hlow_component_edges")
EPS_IRR = 0.029
EPS_REG = 0.1
C_COND = 1.147  # conditional-range denominator factor
C_BIAS = 1.014  # biased-node error factor


@dataclass(frozen=True)
class AuditEntry:
    id: str
    closed_form: Callable[[], object]
    numeric: Callable[[], float]
    stated: str
    relation: str  # "=", "<=", ">=", ">", "info"
    tolerance: float = 1e-9
    relative: bool = False
    flag: str | None = None
    note: str = ""
    what: str = ""
    slack: float | None = None  # overrides the last-digit slack of ``stated``


@dataclass
class AuditResult:
    id: str
    computed: float
    numeric: float
    expected: str
    relation: str
    self_check: bool
    status: str
    discrepancy_note: str
    what: str

    @property
    def passed(self) -> bool:
        return self.status in ("PASS", "INFO")


@dataclass
class AuditReport:
    entries: list[AuditResult] = field(default_factory=list)

    def by_id(self, key: str) -> AuditResult:
        for e in self.entries:
            if e.id == key:
                return e
        raise KeyError(key)

    def statuses(self, status: str) -> list[str]:
        return [e.id for e in self.entries if e.status == status]

    @property
    def ok(self) -> bool:
        return not self.statuses("FAIL")

    def to_dict(self) -> dict:
        return {"entries": [asdict(e) for e in self.entries]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def table(self) -> str:
        w = max(len(e.id) for e in self.entries)
        lines = [f"{'id':<{w}}  status  {'computed':>22}  rel  expected"]
        for e in self.entries:
            lines.append(f"{e.id:<{w}}  {e.status:<6}  {e.computed:>22.15g}  {e.relation:<3}  {e.expected}")
            if e.discrepancy_note:
                lines.append(f"{'':<{w}}    {e.discrepancy_note}")
        return "\n".join(lines)


def stated_value(s: str) -> tuple[mpf, mpf]:
    """Parse a stated constant; decimals get one unit of slack in the last printed digit.

    Exact rationals get a slack at the working precision only.
    """
    s = s.strip()
    if "/" in s:
        fr = Fraction(s)
        return mpf(fr.numerator) / fr.denominator, mpf(10) ** (10 - DPS)
    d = Decimal(s)
    exp = d.as_tuple().exponent
    return mpf(s), mpf(10) ** exp if exp < 0 else mpf(0)


def _compare(val: mpf, rel: str, stated: str, slack=None) -> bool:
    target, slack0 = stated_value(stated)
    slack = slack0 if slack is None else mpf(slack)
    if rel == "=":
        return abs(val - target) <= slack
    if rel == "<=":
        return val <= target + slack
    if rel == ">=":
        return val >= target - slack
    if rel == ">":
        return val > target
    if rel == "info":
        return True
    raise ValueError(f"unknown relation {rel!r}")


def evaluate(e: AuditEntry) -> AuditResult:
    with mp.workdps(DPS):
        cf = mpf(e.closed_form())
        num = float(e.numeric())
        diff = abs(float(cf) - num)
        scale = abs(float(cf)) if e.relative else 1.0
        self_ok = diff <= e.tolerance * max(scale, 1e-300)
        cmp_ok = _compare(cf, e.relation, e.stated, e.slack)
    if not self_ok:
        status = "FAIL"
    elif e.relation == "info":
        status = "INFO"
    elif cmp_ok:
        status = "PASS"
    else:
        status = "FLAG" if e.flag else "FAIL"
    note = e.note
    if status == "FLAG":
        note = e.flag + (f" {e.note}" if e.note else "")
    if not self_ok:
        note = f"self-check failed: |closed - numeric| = {diff:.3g}. " + note
    return AuditResult(e.id, float(cf), num, e.stated, e.relation, self_ok, status, note.strip(), e.what)


# --------------------------------------------------------------------------
# shared functions (scalar; ``m`` is ``math`` or ``mp``)

def _L():
    return mp.log(2)


def q3(r):
    return (r / (1 - r)) ** 2 if r < 0.5 else 1 + 0 * r


def p3(r):
    return r / (1 - r) if r < 0.5 else 1 + 0 * r


def bfun(r):
    if r >= 0.5:
        return 1 + 0 * r
    return 1 + (1 - 2 * r) ** 2 * (1 - 2 * r + 2 * r * r) / (1 - r) ** 2


def gamma_main(r, m=math):
    return r * m.sqrt(1 - 2 * r) ** 3 if r < 0.5 else 0 * r


def phi_main(r, m=math):
    return m.sqrt(1 - 2 * r) * (1 - 5 * r) if r < 0.5 else 0 * r


def delta_max(r, eps, m=math):
    g = gamma_main(r, m)
    return C_COND * eps * g * max(2 * g / (1 - r), g / (1 - r) - phi_main(r, m))


def s_shift(r, eps, m=math):
    return r - delta_max(r, eps, m) / (1 - r)


def f_ocb(r):
    return r * (1 - 2 * r) / (1 - r) ** 2


def g_mlb(r):
    return (1 - 2 * r) ** 2 / (1 - r) ** 3


def mp_quad(fn, a, b, points=()):
    pts = [mpf(a), *[mpf(p) for p in sorted(points) if a < p < b], mpf(b)]
    return mp.quad(fn, pts)


def sp_quad(fn, a, b, points=(), rel=False):
    """scipy quadrature; ``rel`` switches to a pure relative tolerance."""
    if not rel:
        return quad(fn, a, b, points)
    cuts = [a, *sorted(p for p in points if a < p < b), b]
    return sum(
        integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)[0] for lo, hi in zip(cuts[:-1], cuts[1:])
    )


def _golden_max(fn, a, b, iters=140):
    a, b = mpf(a), mpf(b)
    g = (mp.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    return max(fc, fd, fn(a), fn(b))


def extremum(fn: Callable, pieces, kind="max", num=10_001, route="float"):
    """Max (or min) of a scalar function over a union of closed intervals.

    ``route="float"``: dense grid in double precision refined by scipy's bounded
    Brent search. ``route="mp"``: coarse grid refined by golden-section search
    in multiprecision arithmetic.
    """
    sign = 1 if kind == "max" else -1
    best = None
    for a, b in pieces:
        if route == "float":
            xs = np.linspace(a, b, num)
            vs = np.array([sign * float(fn(float(x))) for x in xs])
            i = int(np.argmax(vs))
            lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, num - 1)]
            res = optimize.minimize_scalar(
                lambda x: -sign * float(fn(x)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
            )
            v = max(vs[i], -res.fun)
        else:
            xs = [mpf(a) + (mpf(b) - a) * j / 400 for j in range(401)]
            vs = [sign * fn(x) for x in xs]
            i = max(range(len(vs)), key=vs.__getitem__)
            lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, 400)]
            v = _golden_max(lambda x: sign * fn(x), lo, hi)
        best = v if best is None else max(best, v)
    return sign * best


def _ext_pair(fn, pieces, kind="max"):
    return (lambda: extremum(lambda r: fn(r, mp), pieces, kind, route="mp"),
            lambda: extremum(lambda r: fn(r, math), pieces, kind, route="float"))


# --------------------------------------------------------------------------
# univariate gammas as scalar callables

def _g(spec):
    return lambda r: float(spec.gamma(r))


def _f(spec):
    return lambda r: float(spec.phi(r))


def gID(r):
    return 10 * r**2 * (1 - 2 * r) ** 2 if r < 0.5 else 0 * r


def fID(r):
    return 20 * r * (1 - 2 * r) * (1 - 4 * r) if r < 0.5 else 0 * r


def fPID(r):
    return mpf(61) / 6 * r**2 * (1 - 2 * r) * (3 - 10 * r) if r < 0.5 else 0 * r


def fA(r):
    return 20 * r**2 * (3 - 8 * r) if r < 0.5 else 0 * r


def fT(r):
    return 25 * r**2 * (1 - 2 * r) * (3 - 10 * r) if r < 0.5 else 0 * r


def _irr_integrals_mp():
    H = mpf(1) / 2
    I = lambda fn: mp_quad(fn, 0, H)  # noqa: E731
    return {
        "BFS": -I(lambda r: fID(r) * q3(r)),
        "DFC": I(lambda r: gID(r) * p3(r) * (1 - q3(r))),
        "DFS": -I(lambda r: fPID(r) * q3(r)),
        "JUNK1": -I(lambda r: fID(r) * gID(r) * p3(r) * (1 - q3(r))),
        "JUNK2": I(lambda r: fPID(r) * gID(r) * p3(r) * (1 - q3(r))),
    }


CLOSED = {
    "BFS": lambda L: 380 * L - mpf(790) / 3,
    "DFC": lambda L: mpf(915) / 4 - 330 * L,
    "DFS": lambda L: 1586 * L / 3 - mpf(52765) / 144,
    "DFB": lambda L: 596 * L / 3 - mpf(19825) / 144,
    "JUNK1": lambda L: 46800 * L - mpf(227075) / 7,
    "JUNK2": lambda L: mpf(8767591) / 192 - 65880 * L,
    "CUT2CC": lambda L: mpf(104) / 3 - 50 * L,
    "DFS2CC_IRR": lambda L: mpf(39094) / 3 - 18800 * L,
    "DFD2CC_IRR": lambda L: 11420 * L - mpf(23747) / 3,
    "JUNK2CC_IRR": lambda L: mpf(17923400) / 7 - 3694000 * L,
    "DFS2CC": lambda L: 52300 * L - mpf(1522565) / 42,
    "DFD2CC": lambda L: mpf("1.147") * (7908 * L - mpf(27407) / 5),
    "JUNK2CC": lambda L: mpf("1.147") * (9302500 * L - mpf(1624896415) / 252),
    "HLOW": lambda L: 170 * L - mpf(707) / 6,
}


def closed(name):
    return CLOSED[name](_L())


# float integrands built from the distribution registry
_q = lambda r: gw.q(3, r)  # noqa: E731
_p = lambda r: gw.p(3, r)  # noqa: E731
_B = gw.b_twocc
_gid, _fid, _fpid = _g(GAMMA_ID01), _f(GAMMA_ID01), _f(GAMMA_PID01)
_fa, _ft, _gm, _fm = _f(GAMMA_TWOCC_IRR), _f(GAMMA_TWOCC), _g(GAMMA_MAIN), _f(GAMMA_MAIN)


def _grest(r):
    return 2 * C_COND * _gm(r) ** 2 / (1 - r)


NUMERIC = {
    "BFS": lambda: -quad(lambda r: _fid(r) * _q(r), 0, 0.5),
    "DFC": lambda: quad(lambda r: _gid(r) * _p(r) * (1 - _q(r)), 0, 0.5),
    "DFS": lambda: -quad(lambda r: _fpid(r) * _q(r), 0, 0.5),
    "JUNK1": lambda: -quad(lambda r: _fid(r) * _gid(r) * _p(r) * (1 - _q(r)), 0, 0.5),
    "JUNK2": lambda: quad(lambda r: _fpid(r) * _gid(r) * _p(r) * (1 - _q(r)), 0, 0.5),
    "CUT2CC": lambda: quad(lambda r: _q(r) * _B(r), 0, 1, (0.5,)) - gw.s(3),
    "DFS2CC_IRR": lambda: -quad(lambda r: _q(r) * _B(r) * _fa(r), 0, 0.5),
    "DFD2CC_IRR": lambda: quad(lambda r: 2 * r * _gid(r) * _B(r) / (1 - r) ** 3, 0, 0.5),
    "JUNK2CC_IRR": lambda: quad(lambda r: 2 * r * _gid(r) * _B(r) * _fa(r) / (1 - r) ** 3, 0, 0.5),
    "DFS2CC": lambda: -quad(lambda r: _q(r) * _B(r) * _ft(r), 0, 0.5),
    "DFD2CC": lambda: quad(lambda r: 2 * r * _grest(r) * _B(r) / (1 - r) ** 3, 0, 0.5),
    "JUNK2CC": lambda: quad(lambda r: 2 * r * _grest(r) * _B(r) * _ft(r) / (1 - r) ** 3, 0, 0.5),
    "HLOW": lambda: quad(lambda r: _gm(r) ** 2 * (1 - _q(r)) ** 2, 0, 0.5),
}
NUMERIC["DFB"] = lambda: NUMERIC["DFC"]() + NUMERIC["DFS"]()


def _num(name):
    return NUMERIC[name]()


def f_kl_mp(eps):
    eps = mpf(eps)
    return (1 - eps) * mp.log(1 - eps) + eps


# exact moments / Psi values
M_EXACT = {"m2": Fraction(3, 32), "m3": Fraction(12, 385), "m4": Fraction(9, 224)}
PSI10, PSI01 = Fraction(5, 21), Fraction(3721, 181440)
PSI_A = Fraction(15, 14)


def _psi_num(i, j):
    return quad(lambda r: (-i * _fid(r) + j * _fpid(r)) ** 2, 0, 0.5)


# --------------------------------------------------------------------------
# gain chains

def irregular_lines(eps=EPS_IRR, exact=True) -> dict[str, float]:
    """The three per-variable gain coefficients of the irregular case."""
    if exact:
        L = _L()
        c = {k: closed(k) for k in ("BFS", "DFB", "JUNK1", "JUNK2", "CUT2CC", "DFS2CC_IRR", "DFD2CC_IRR", "JUNK2CC_IRR")}
        psi10, psi02 = mpf(PSI10.numerator) / PSI10.denominator, 4 * mpf(PSI01.numerator) / PSI01.denominator
        fk, fk5 = f_kl_mp(eps), f_kl_mp(5 * mpf(eps))
        psiA = mpf(15) / 14
    else:
        L = math.log(2)
        c = {k: _num(k) for k in ("BFS", "DFB", "JUNK1", "JUNK2", "CUT2CC", "DFS2CC_IRR", "DFD2CC_IRR", "JUNK2CC_IRR")}
        psi10, psi02 = _psi_num(1, 0), _psi_num(0, 2)
        fk, fk5 = f_kl(eps), f_kl(5 * eps)
        psiA = quad(lambda r: _fa(r) ** 2, 0, 0.5)
        eps = float(eps)
    junk = c["JUNK1"] + 2 * c["JUNK2"]
    id1 = eps * (c["BFS"] - c["DFB"]) - eps**2 * junk - (psi10 + psi02 / 2) / L * fk
    id0 = eps * c["BFS"] - psi10 / L * fk
    two = (
        c["CUT2CC"]
        - eps * (c["DFS2CC_IRR"] + c["DFD2CC_IRR"])
        - eps**2 * c["JUNK2CC_IRR"]
        - fk5 / (25 * L) * psiA
    )
    return {"ID1": id1, "ID0": id0, "TwoCC": two}


def irregular_lines_stated(eps=EPS_IRR) -> dict[str, mpf]:
    e = mpf(eps)
    fk, fk5 = f_kl_mp(e), f_kl_mp(5 * e)
    return {
        "ID1": mpf("0.030966") * e - mpf("0.0028") * e**2 - mpf("0.4027") * fk,
        "ID0": mpf("0.06259") * e - mpf("0.344") * fk,
        "TwoCC": mpf("0.009307") - mpf("0.2405") * e - mpf("0.03125") * e**2 - mpf("0.06183") * fk5,
    }


@dataclass(frozen=True)
class RegularChain:
    coefficient: float
    raw: float
    corrected: float
    thr: float
    loss: float
    combined: float
    irr_star: float
    base: float


def regular_chain(eps=EPS_REG, corrected=None, loss=None, use_mp=True) -> RegularChain:
    """Per-edge coefficient, Thr and the combined bound of the two regimes.

    ``corrected`` / ``loss`` override the derived denominator and the per-variable
    loss term (used to re-run the chain with rounded stated endpoints).
    """
    F = mpf if use_mp else float
    e = F(eps)
    coef = F("0.00168728") * e - F("0.00638") * e**2
    raw = 1 / coef
    corr = F(corrected) if corrected is not None else raw * 12 / 11
    thr = 2 / (F("0.9") * corr)
    ls = F(1) / F(loss) if loss is not None else F("0.10302") * thr
    # min over irr of max((1 - irr)/corr - ls, irr/1380): the two lines cross
    a = 1 / F(1380)
    irr = (1 / corr - ls) / (a + 1 / corr)
    comb = irr * a
    s3 = 2 - 2 * (mp.log(2) if use_mp else math.log(2))
    base = 2 ** (1 - s3 - comb)
    return RegularChain(coef, raw, corr, thr, ls, comb, irr, base)


def combined_min_grid(corr: float, loss: float, num: int = 200_001) -> float:
    irr = np.linspace(0.0, 1.0, num)
    v = np.maximum((1 - irr) / corr - loss, irr / 1380)
    i = int(np.argmin(v))
    lo, hi = irr[max(i - 1, 0)], irr[min(i + 1, num - 1)]
    res = optimize.minimize_scalar(
        lambda x: max((1 - x) / corr - loss, x / 1380), bounds=(lo, hi), method="bounded", options={"xatol": 1e-15}
    )
    return min(float(v[i]), float(res.fun))


# --------------------------------------------------------------------------
# KL of graph-correlated laws

def _shapes(tmax=22):
    out = [("path", t) for t in range(1, tmax + 1)]
    out += [("triangle", 3), ("4-cycle", 4)]
    out += [("cycle", t) for t in range(5, tmax + 1)]
    return out


def kl_constant(m, eps=EPS_REG, log=math.log):
    best = 0
    for kind, t in _shapes():
        terms = kl_moment_terms(kind, t, m, eps)
        # the cubic term is negative; the bound keeps only quadratic and quartic
        v = (terms["quadratic"] + terms["quartic"]) / (log(2) * eps**2 * t)
        best = max(best, v)
    return best


def kl_dominance(m, eps_grid, tmax=20):
    best = 0
    for eps in eps_grid:
        for kind, t in _shapes(tmax):
            terms = kl_moment_terms(kind, t, m, eps)
            best = max(best, sum(terms.values()) / terms["quadratic"])
    return best


def _m_exact():
    return {k: mpf(v.numerator) / v.denominator for k, v in M_EXACT.items()}


# --------------------------------------------------------------------------
# OCB / MLB

def ocb_star(d, route="mp"):
    if route == "mp":
        return mpf("0.8948") * mp_quad(lambda r: f_ocb(r) * r**d, 0, mpf(1) / 2)
    return 0.8948 * sp_quad(lambda r: f_ocb(r) * r**d, 0, 0.5, rel=True)


def mlb_star(d, route="mp"):
    if route == "mp":
        return mpf("0.9") * mp_quad(lambda r: g_mlb(r) * r**d, 0, mpf(1) / 2)
    return 0.9 * sp_quad(lambda r: g_mlb(r) * r**d, 0, 0.5, rel=True)


def basel_terms(d):
    return mpf(d + 1) ** (d + 1) / mpf(d + 3) ** (d + 3)


def basel_exact():
    return mp.nsum(basel_terms, [1, mp.inf])


def basel_numeric(N=200_000):
    # proof route: e^-2 (pi^2/6 - 1) + sum_{d<=N} (a_d - b_d), tail of O(1/N^2) dropped
    d = np.arange(1, N + 1, dtype=float)
    a = np.exp((d + 1) * np.log(d + 1) - (d + 3) * np.log(d + 3))
    b = math.exp(-2) / (d + 1) ** 2
    return math.exp(-2) * (math.pi**2 / 6 - 1) + float(np.sum(a - b))


def basel_proof_bound(N=100):
    return mp.exp(-2) * (mp.pi**2 / 6 - 1) + mp.fsum(basel_terms(d) - mp.exp(-2) / mpf(d + 1) ** 2 for d in range(1, N + 1))


# --------------------------------------------------------------------------
# general k

def q_mp(k, r):
    r = mpf(r)
    if r >= mpf(k - 2) / (k - 1):
        return mpf(1)
    Q = mpf(0)
    e = k - 1
    for _ in range(500):
        base = r + (1 - r) * Q
        g = base**e - Q
        dg = e * (1 - r) * base ** (e - 1) - 1
        Qn = Q - g / dg
        if abs(Qn - Q) < mpf(10) ** (-DPS + 5):
            return Qn
        Q = Qn
    return Q


def p_mp(k, r):
    Q = q_mp(k, r)
    return r + Q - r * Q


def qprime_float(k, r):
    if r >= gw.critical_r(k):
        return 0.0
    P = gw.p(k, r)
    dP = (1 - P ** (k - 1)) / (1 - (1 - r) * (k - 1) * P ** (k - 2))
    return (k - 1) * P ** (k - 2) * dP


def _gk(r, rho):
    return r * (rho - r) if r < rho else 0 * r


def benefit(k, rho, eps, route="mp"):
    if route == "mp":
        rho, eps = mpf(rho), mpf(eps)

        def fn(t):
            r = rho * t
            g = _gk(r, rho)
            dl = eps * rho * g
            return eps * g**2 * (1 - q_mp(k, r)) ** 2 * p_mp(k, r - dl) ** (k - 3) * rho

        return mp.quad(fn, [0, 1])

    def fn(t):
        r = rho * t
        g = _gk(r, rho)
        dl = eps * rho * g
        return eps * g**2 * (1 - gw.q(k, r)) ** 2 * gw.p(k, r - dl) ** (k - 3) * rho

    return sp_quad(fn, 0, 1, rel=True)


def damage(k, rho, eps, route="mp"):
    if route == "mp":
        rho, eps = mpf(rho), mpf(eps)

        def fn(t):
            r = rho * t
            dl = eps * rho * _gk(r, rho)
            dq = mp.diff(lambda x: q_mp(k, x), r)
            return (k - 1) * (1 - r) * p_mp(k, r) ** (k - 2) * dl * dq * rho

        return mp.quad(fn, [0, 1])

    def fn(t):
        r = rho * t
        dl = eps * rho * _gk(r, rho)
        return (k - 1) * (1 - r) * gw.p(k, r) ** (k - 2) * dl * qprime_float(k, r) * rho

    return sp_quad(fn, 0, 1, rel=True)


def damage_constant(k):
    return (k - 1) ** 2 * ((k - 1) / (k - 2)) ** (2 * k - 4) * 2 * (k - 1) / (k - 2)


def _benefit_ratio(route):
    vals = []
    for k in (3, 4, 5):
        rho = 0.05
        eps = rho ** (k - 3)
        ref = eps * rho ** (k + 2) / (k * (k + 1) * (k + 2))
        vals.append(benefit(k, rho, eps, route) / ref)
    return min(vals)


def _damage_ratio(route):
    vals = []
    for k in (3, 4, 5):
        rho = 0.05
        eps = rho ** (k - 3)
        ref = damage_constant(k) * eps * rho ** (2 * k) / ((2 * k - 2) * (2 * k - 1))
        vals.append(damage(k, rho, eps, route) / ref)
    return max(vals)


def _gain_ratio(route, rho=0.005):
    """min over k of ((Benefit - KL_pair) / k^2) / Damage at eps = rho^(k-3)."""
    vals = []
    for k in (3, 4, 5):
        eps = rho ** (k - 3)
        kl = eps**2 * (rho**3 / 3) ** 2 / math.log(2)
        b, d = benefit(k, rho, eps, route), damage(k, rho, eps, route)
        vals.append(((b - kl) / k**2) / d)
    return min(vals)


def _priv_integral(k, route):
    rc = gw.critical_r(k)
    if route == "mp":
        rc = mpf(k - 2) / (k - 1)
        v = mp.quad(lambda r: (1 - r) ** 2 * r ** (2 * k - 4) * (1 - q_mp(k, r)) ** 2, [0, rc])
        return v
    return sp_quad(lambda r: (1 - r) ** 2 * r ** (2 * k - 4) * (1 - gw.q(k, r)) ** 2, 0, rc, rel=True)


# --------------------------------------------------------------------------
# the registry

def _h():
    return mpf(1) / 2


def _s1(r, m=math):
    return -gamma_main(r, m) ** 2 / (r * (1 - r))


def _fclaims(r, m=math):
    g, f = gamma_main(r, m), phi_main(r, m)
    return min(-g * g / (r * (1 - r)), g * f / r, -g * f / (1 - r))


def _biased_ratio(r, m=math):
    rr = r - delta_max(r, EPS_REG, m)
    return (1 - q3(rr)) / (1 - q3(r))


def _onechild(r, m=math):
    return 2 * delta_max(r, EPS_REG, m) / (r * (1 - 2 * r))


def _ocb_leading(r, m=math):
    return 2 * delta_max(r, EPS_REG, m) * (1 - r) / (r * (1 - 2 * r))


def _twocc_cond(r, m=math):
    C = 2.028 * C_COND
    g, f = gamma_main(r, m), phi_main(r, m)
    rhs = C * g * (max(0, -f) + 2 * r * g / ((1 - r) * (1 - 2 * r)))
    return rhs / (25 * r**3 * (1 - 2 * r) ** 2)


def _sprime(r, m=math):
    h = 1e-7 if m is math else mpf(10) ** -25
    return (s_shift(r + h, EPS_REG, m) - s_shift(r - h, EPS_REG, m)) / (2 * h)


def _f_ratio(r, m=math):
    return f_ocb(r) / f_ocb(s_shift(r, EPS_REG, m))


def _g_ratio(r, m=math):
    return g_mlb(r) / g_mlb(s_shift(r, EPS_REG, m))


def _leading(r, m=math):
    return C_BIAS * C_COND * (1 - 2 * r) * (5 * r - 1)


def _nonroot_ratio_max(route):
    best = 0
    for d in range(1, 41):
        if route == "mp":
            fn = lambda r, d=d: C_BIAS * C_COND * (1 - 2 * r) ** 2 * r ** (d + 1) / (1 - r)  # noqa: E731
            mx = extremum(fn, [(0, _h())], route="mp")
            bound = mpf("4.652232") * mpf(2) ** (-d) * basel_terms(d)
        else:
            fn = lambda r, d=d: C_BIAS * C_COND * (1 - 2 * r) ** 2 * r ** (d + 1) / (1 - r)  # noqa: E731
            mx = extremum(fn, [(0, 0.5)], route="float")
            bound = 4.652232 * 2.0 ** (-d) * (d + 1) ** (d + 1) / (d + 3) ** (d + 3)
        best = max(best, mx / bound)
    return best


RB = (5 - math.sqrt(13)) / 6
OPEN = 1e-7


def _pieces(*cuts, lo=OPEN, hi=0.5 - OPEN):
    pts = [lo, *cuts, hi]
    return list(zip(pts[:-1], pts[1:]))


def build_registry() -> list[AuditEntry]:
    E = []
    add = E.append
    half = _pieces(RB)

    # irregular-case integrals
    for key, rel, stated in [
        ("BFS", ">=", "0.06259"),
        ("DFC", "<=", "0.01144"),
        ("DFS", "<=", "0.0202"),
        ("DFB", "<=", "0.03163"),
        ("JUNK1", "<=", "0.00235"),
    ]:
        add(AuditEntry(key.lower(), lambda key=key: closed(key), lambda key=key: _num(key), stated, rel, what=key))
    add(AuditEntry(
        "junk2", lambda: closed("JUNK2"), lambda: _num("JUNK2"), "0.000184", "<=",
        flag="Closed form evaluates to 2.0304e-4, above the stated decimal; the closed form itself is confirmed.",
        note="JUNK = JUNK1 + 2 JUNK2 = 0.002742 still stays under the 0.0028 used downstream.",
        what="JUNK2",
    ))
    add(AuditEntry(
        "junk_total", lambda: closed("JUNK1") + 2 * closed("JUNK2"),
        lambda: _num("JUNK1") + 2 * _num("JUNK2"), "0.0028", "<=", what="JUNK1 + 2 JUNK2",
    ))
    add(AuditEntry("cut2cc_minus_s3", lambda: closed("CUT2CC"), lambda: _num("CUT2CC"), "0.009307", "=",
                   what="Cut2CC - s3"))
    add(AuditEntry("dfs2cc_irr", lambda: closed("DFS2CC_IRR"), lambda: _num("DFS2CC_IRR"), "0.16634", "<="))
    add(AuditEntry("dfd2cc_irr", lambda: closed("DFD2CC_IRR"), lambda: _num("DFD2CC_IRR"), "0.074135", "<="))
    add(AuditEntry("junk2cc_irr", lambda: closed("JUNK2CC_IRR"), lambda: _num("JUNK2CC_IRR"), "0.03125", "<=",
                   note="stated as approximately 0.03125; true value 0.029297 is below it, so the coefficient is conservative"))
    add(AuditEntry("dfs2cc_corr", lambda: closed("DFS2CC"), lambda: _num("DFS2CC"), "0.05", "<="))
    add(AuditEntry("dfd2cc_corr", lambda: closed("DFD2CC"), lambda: _num("DFD2CC"), "0.0091", "<="))
    add(AuditEntry(
        "junk2cc_corr", lambda: closed("JUNK2CC"), lambda: _num("JUNK2CC"), "0.00034", "<=",
        flag="Closed form evaluates to 3.825e-4, above the stated decimal.",
    ))
    add(AuditEntry(
        "twocc_corr_linear", lambda: closed("DFS2CC") + closed("DFD2CC") + mpf("0.1") * closed("JUNK2CC"),
        lambda: _num("DFS2CC") + _num("DFD2CC") + 0.1 * _num("JUNK2CC"), "0.0577", "<=",
        flag="DFS2CC + DFD2CC + 0.1 JUNK2CC = 0.05903 exceeds the stated 0.0577 per-eps loss.",
        note="Impact: TwoCC coefficient at eps=0.1 drops from 1/363 to about 1/381; far above the 3/10398 needed.",
    ))

    # moments and Psi
    for key, fr in M_EXACT.items():
        d = int(key[1])
        add(AuditEntry(key, lambda fr=fr: mpf(fr.numerator) / fr.denominator,
                       lambda d=d: moments(GAMMA_MAIN)[f"m{d}"], str(fr), "="))
    add(AuditEntry("m1", lambda: mpf(0), lambda: moments(GAMMA_MAIN)["m1"], "0", "=", what="trivial: phi integrates to 0"))
    for name, (i, j), fr in [
        ("psi_1_0", (1, 0), Fraction(5, 21)),
        ("psi_1_1", (1, 1), Fraction(24961, 181440)),
        ("psi_1_2", (1, 2), Fraction(3541, 45360)),
        ("psi_0_1", (0, 1), Fraction(3721, 181440)),
    ]:
        add(AuditEntry(name,
                       lambda i=i, j=j: mp_quad(lambda r: (-i * fID(r) + j * fPID(r)) ** 2, 0, _h()),
                       lambda i=i, j=j: _psi_num(i, j), str(fr), "="))
    add(AuditEntry("psi_twocc_irr", lambda: mp_quad(lambda r: fA(r) ** 2, 0, _h()),
                   lambda: quad(lambda r: _fa(r) ** 2, 0, 0.5), "15/14", "="))
    add(AuditEntry(
        "kl_twocc_m2", lambda: mp_quad(lambda r: fT(r) ** 2, 0, _h()),
        lambda: quad(lambda r: _ft(r) ** 2, 0, 0.5), "5/48", "=",
        flag="m2(phi_TwoCC) = 125/1008 by quadrature, not the 5/48 used in the final gain;"
        " the TwoCC KL term grows by 19% and the coefficient moves from 1/363 to about 1/383.",
    ))

    # conditional ranges
    rstar = lambda m=mp: mpf(2) / 3 - mp.sqrt(10) / 6  # noqa: E731
    s1_closed = lambda: (254 - 83 * mp.sqrt(10)) / (27 * (mp.sqrt(10) + 2))  # noqa: E731
    add(AuditEntry("s1_min", s1_closed, lambda: extremum(_s1, _pieces(), "min"), "-0.06076", ">=",
                   what="min S1 on (0,1/2), attained at 2/3 - sqrt(10)/6"))
    add(AuditEntry("s1_at_rstar", lambda: _s1(rstar(), mp), lambda: _s1(2 / 3 - math.sqrt(10) / 6),
                   "-0.06076", ">=", what="S1(r*) against its closed form"))
    add(AuditEntry("cond_denominator", lambda: 1 + mpf("0.1") * 21 * s1_closed(),
                   lambda: 1 + 0.1 * 21 * extremum(_s1, _pieces(), "min"), str(1 / 1.147), ">=",
                   what="1 + 0.1*21*S1(r*) >= 1/1.147"))
    add(AuditEntry("f_claims_min", lambda: mpf(-2) / 25, lambda: extremum(_fclaims, _pieces(0.2), "min"),
                   "-2/25", "=", what="min of f1, f2, f3 over (0,1/2)"))
    add(AuditEntry("f2_at_3_10", lambda: gamma_main(mpf(3) / 10, mp) * phi_main(mpf(3) / 10, mp) / (mpf(3) / 10),
                   lambda: (1 - 0.6) ** 2 * (1 - 1.5), "-2/25", "=", what="trivial: f2(3/10)"))

    # delta_max branches and the biased-node factor
    add(AuditEntry(
        "r_bend", lambda: (5 - mp.sqrt(13)) / 6,
        lambda: optimize.brentq(lambda r: gamma_main(r) / (1 - r) + phi_main(r), 0.21, 0.3, xtol=1e-15),
        "0.2324", "=", what="crossover of the two delta_max branches",
    ))
    add(AuditEntry("biased_factor", *_ext_pair(_biased_ratio, half), "1.014", "<=",
                   what="max (1 - Q_{r-dmax}) / (1 - Q_r), eps=0.1"))
    add(AuditEntry("onechild_condition", *_ext_pair(_onechild, half), "1", "<=",
                   what="2 dmax / (r(1-2r)) <= 1 on (0,1/2), eps=0.1"))
    add(AuditEntry("ocb_leading_claim", *_ext_pair(_ocb_leading, half), "0.044", "<=",
                   what="2 dmax (1-r) / (r(1-2r)), eps=0.1"))
    add(AuditEntry(
        "onechild_irregular", lambda: mpf(5) / 2 * mpf(EPS_IRR),
        lambda: extremum(lambda r, m=math: 2 * EPS_IRR * gID(r) / (r * (1 - 2 * r)), _pieces()),
        "1", "<=", what="2 eps gamma_ID01 / (r(1-2r)) at eps=0.029; closed form 5 eps / 2",
        note="holds for eps <= 0.4 only; the remark allowing eps up to 4/5 is too generous (not used)",
    ))
    add(AuditEntry("twocc_gamma_condition", *_ext_pair(_twocc_cond, _pieces(0.2)), "1", "<=",
                   what="RHS / gamma_TwoCC, C = 2.028*1.147"))
    add(AuditEntry("twocc_claim_rhs1", lambda: 4 * mpf("2.028") * mpf("1.147"),
                   lambda: extremum(lambda r: 2 * 2.028 * 1.147 / (1 - r), [(0, 0.5)]), "9.4", "<=",
                   what="max 2C/(1-r) on [0,1/2]"))
    add(AuditEntry("twocc_claim_rhs2", lambda: mpf("2.028") * mpf("1.147"), lambda: 2.028 * 1.147, "12/5", "<=",
                   what="discriminant 25C^2 - 60C < 0 iff C < 12/5"))

    # Basel-type sum and label-density damage
    add(AuditEntry("basel_sum", basel_exact, basel_numeric, "0.0544", "<="))
    add(AuditEntry("basel_proof_bound", basel_proof_bound, lambda: basel_numeric(100) , "0.0544", "<=",
                   what="e^-2(pi^2/6-1) + sum_{d<=100}(a_d - b_d)"))
    add(AuditEntry("leading_factor_root", lambda: C_BIAS * C_COND * mpf(9) / 40,
                   lambda: extremum(_leading, [(0.2, 0.5)]), "0.26168805", "=", what="max at r = 7/20"))
    add(AuditEntry("leading_factor_root_bound", lambda: mpf("1.014") * mpf("1.147") * mpf(9) / 40,
                   lambda: 1.014 * 1.147 * 9 / 40, "0.262", "<="))
    add(AuditEntry("nonroot_max", lambda: _nonroot_ratio_max("mp"), lambda: _nonroot_ratio_max("float"), "1", "<=",
                   what="max over d<=40 of LHS / (4.652232 eps 2^-d a_d)"))
    add(AuditEntry(
        "not_in_h_total", lambda: 2 * mpf("0.262") + 2 * mpf("4.652232") * mpf("0.0544"),
        lambda: 2 * 0.262 + 2 * 4.652232 * 0.0544, "1.0302", "<=",
        note="uses 2*4.652232 = 9.304464; the intermediate 9.792 would give 1.0567",
    ))
    add(AuditEntry("hlow_benefit", lambda: closed("HLOW"), lambda: _num("HLOW"), "0.00168728", ">="))

    # OCB / MLB
    add(AuditEntry(
        "ocb_ge_mlb", lambda: min(ocb_star(d) / mlb_star(d) for d in range(5, 201)),
        lambda: min(ocb_star(d, "sp") / mlb_star(d, "sp") for d in range(5, 201)), "1", ">=",
        what="min over 5<=d<=200 of OCB*/MLB*",
    ))
    add(AuditEntry(
        "ocb_mlb_small_d", lambda: min(min(ocb_star(d), mlb_star(d)) for d in range(1, 5)),
        lambda: min(min(ocb_star(d, "sp"), mlb_star(d, "sp")) for d in range(1, 5)), "1/1131", ">=",
    ))
    add(AuditEntry("claim_s_prime", *_ext_pair(_sprime, _pieces(RB, lo=1e-4, hi=0.5 - 1e-4)), "1.047", "<=",
                   what="max s'(r), eps=0.1, one-sided at r_bend"))
    add(AuditEntry("claim_f_ratio", *_ext_pair(_f_ratio, half, "min"), "0.98", ">="))
    add(AuditEntry("claim_g_ratio", *_ext_pair(_g_ratio, half, "min"), "0.95", ">="))
    add(AuditEntry("mlb_le_half_ocb_theta", lambda: (5 - mp.sqrt(17)) / 2,
                   lambda: optimize.brentq(lambda r: g_mlb(r) - f_ocb(r) / 2, 0.3, 0.49, xtol=1e-15), "0.44", "<=",
                   what="theta where g <= f/2 starts"))

    # KL of graph laws
    add(AuditEntry("kl_graph_constant", lambda: kl_constant(_m_exact(), mpf("0.1"), mp.log),
                   lambda: kl_constant(moments(GAMMA_MAIN)), "0.00638", "<=",
                   what="max over shapes t<=22 of moment bound / (eps^2 t), eps=0.1"))
    eg = [0.13 * i / 26 for i in range(1, 27)]
    add(AuditEntry("kl_quadratic_dominates", lambda: kl_dominance(_m_exact(), [mpf(x) for x in eg]),
                   lambda: kl_dominance(moments(GAMMA_MAIN), eg), "1.01", "<=",
                   what="expansion / quadratic term, t<=20, eps<=0.13"))
    add(AuditEntry(
        "hlow_component_edges", lambda: mp.floor(mp.sqrt(5) / mpf("0.1")),
        lambda: math.floor(1 / (0.1 * -GAMMA_MAIN.phi_range()[0] * GAMMA_MAIN.phi_range()[1]) + 1e-9), "17", "=",
        flag="density positivity allows up to 22 edges per component; the prose also mentions 17."
        " The 22-edge rule with 11/12 retention is implemented.",
    ))

    # irregular gain chain
    for key, stated in [("ID1", "1/1380"), ("ID0", "1/600"), ("TwoCC", "1/617")]:
        add(AuditEntry(f"gain_irr_{key.lower()}", lambda key=key: irregular_lines()[key],
                       lambda key=key: irregular_lines(exact=False)[key], stated, ">=",
                       what=f"{key} coefficient from exact constants, eps=0.029"))
        add(AuditEntry(f"gain_irr_{key.lower()}_stated_line", lambda key=key: irregular_lines_stated()[key],
                       lambda key=key: float(irregular_lines_stated()[key]), stated, ">=",
                       what=f"{key} line with the stated coefficients, eps=0.029"))
    add(AuditEntry("coef_bfs_minus_dfb", lambda: closed("BFS") - closed("DFB"), lambda: _num("BFS") - _num("DFB"),
                   "0.030966", ">="))
    add(AuditEntry("coef_kl_id1", lambda: (mpf(5) / 21 + 2 * mpf(3721) / 181440) / _L(),
                   lambda: (_psi_num(1, 0) + _psi_num(0, 2) / 2) / math.log(2), "0.4027", "<="))
    add(AuditEntry("coef_kl_id0", lambda: mpf(5) / 21 / _L(), lambda: _psi_num(1, 0) / math.log(2), "0.344", "<="))
    add(AuditEntry("coef_twocc_linear", lambda: closed("DFS2CC_IRR") + closed("DFD2CC_IRR"),
                   lambda: _num("DFS2CC_IRR") + _num("DFD2CC_IRR"), "0.2405", "<="))
    add(AuditEntry("coef_twocc_kl", lambda: mpf(15) / 14 / (25 * _L()),
                   lambda: quad(lambda r: _fa(r) ** 2, 0, 0.5) / (25 * math.log(2)), "0.06183", "<="))

    # regular gain chain
    add(AuditEntry("regular_raw_denominator", lambda: regular_chain().raw, lambda: regular_chain(use_mp=False).raw,
                   "9531", "=", slack=1.0, note="1/(0.00168728 eps - 0.00638 eps^2) at eps=0.1 = 9530.34"))
    add(AuditEntry("regular_corrected_denominator", lambda: regular_chain().corrected,
                   lambda: regular_chain(use_mp=False).corrected, "10398", "<=",
                   note="raw * 12/11 = 10396.74; 9531 * 12/11 = 10397.45 rounds up to 10398"))
    add(AuditEntry("thr_value", lambda: 1 / regular_chain().thr, lambda: 1 / regular_chain(use_mp=False).thr,
                   "4678", ">=", what="1/Thr with Thr = 2/(0.9 corrected)"))
    add(AuditEntry("loss_per_variable", lambda: 1 / regular_chain().loss, lambda: 1 / regular_chain(use_mp=False).loss,
                   "45408", ">=", what="1/(0.10302 Thr)"))
    add(AuditEntry(
        "twocc_regular_coefficient",
        lambda: mpf("0.009307") - mpf("0.0577") * mpf("0.1") - mpf(5) / (48 * _L()) * f_kl_mp("0.1"),
        lambda: 0.009307 - 0.0577 * 0.1 - 5 / (48 * math.log(2)) * f_kl(0.1), "1/363", ">=",
        note="with m2 = 125/1008 the same line gives about 1/383",
    ))
    add(AuditEntry("combined_minimum", lambda: regular_chain().combined,
                   lambda: combined_min_grid(regular_chain(use_mp=False).corrected, regular_chain(use_mp=False).loss),
                   "1/15275", ">=", what="min over irr of the two-regime maximum, derived chain"))
    add(AuditEntry("combined_minimum_stated_endpoints", lambda: regular_chain(corrected=10398, loss=45408).combined,
                   lambda: combined_min_grid(10398.0, 1 / 45408), "1/15275", "info",
                   note="with the rounded endpoints 10398 and 45408 the minimum is 1/15276.08"))
    add(AuditEntry("improved_base", lambda: regular_chain().base, lambda: regular_chain(use_mp=False).base,
                   "1.306973", "<=", what="2^(1 - s3 - gain)"))
    add(AuditEntry("s3", lambda: 2 - 2 * _L(), lambda: gw.s(3), "0.6137056", "="))
    add(AuditEntry("s3_base", lambda: 2 ** (2 * _L() - 1), lambda: 2 ** (1 - gw.s(3)), "1.3070319", "="))

    # general k
    add(AuditEntry("generalk_benefit", lambda: _benefit_ratio("mp"), lambda: _benefit_ratio("sp"), "1", ">=",
                   tolerance=1e-8, relative=True,
                   what="min_k Benefit / (eps rho^(k+2)/(k(k+1)(k+2))), k=3..5, rho=0.05, eps=rho^(k-3)"))
    add(AuditEntry("generalk_damage", lambda: _damage_ratio("mp"), lambda: _damage_ratio("sp"), "1", "<=",
                   tolerance=1e-8, relative=True,
                   what="max_k Damage / (C_k eps rho^(2k)/((2k-2)(2k-1))), k=3..5, rho=0.05"))
    add(AuditEntry("generalk_gain", lambda: _gain_ratio("mp"), lambda: _gain_ratio("sp"), "1", ">=",
                   tolerance=1e-7, relative=True,
                   what="min_k ((Benefit - KL_pair)/k^2) / Damage at rho=0.005, eps=rho^(k-3)"))
    add(AuditEntry(
        "generalk_pair_kl", lambda: (mpf("0.05") ** 3 / 3) ** 2 / (mpf("0.05") ** 3 / 3),
        lambda: quad(lambda r: (0.05 - 2 * r) ** 2, 0, 0.05) ** 2 / (0.05**3 / 3), "1", "<=", tolerance=1e-12,
        what="(int phi^2)^2 against the stated rho^3/3 envelope, rho=0.05; exact square is rho^6/9",
    ))
    add(AuditEntry("privileged_integral_1", lambda: min(_priv_integral(k, "mp") for k in range(3, 8)),
                   lambda: min(_priv_integral(k, "sp") for k in range(3, 8)), "0", ">", relative=True,
                   what="min_k int (1-r)^2 r^(2k-4) (1-Q_r)^2"))
    add(AuditEntry(
        "privileged_integral_2",
        lambda: min((mpf(1) / 16) ** k / (2 * k) - (mpf(1) / 16) ** (2 * k - 1) / (2 * k - 1) for k in range(3, 8)),
        lambda: min(quad(lambda r, k=k: r ** (k - 1) / 2 - r ** (2 * k - 2), 0, 1 / 16, tol=1e-16) for k in range(3, 8)),
        "0", ">", relative=True, what="min_k int_0^{1/16} (r^(k-1)/2 - r^(2k-2))",
    ))
    add(AuditEntry("privileged_exp_factor", lambda: mp.exp(mp.e * 2 / mpf(16)),
                   lambda: max(math.exp(math.e * (k - 1) * (1 / 16) ** (k - 2)) for k in range(3, 8)), "1.5", "<=",
                   what="max_k exp(e (k-1) r^(k-2)) on r <= 1/16"))

    # trivial anchors
    add(AuditEntry("trivial_q3_zero", lambda: mpf(0), lambda: gw.q(3, 0.0), "0", "="))
    add(AuditEntry("trivial_fkl_zero", lambda: f_kl_mp(0), lambda: f_kl(0.0), "0", "="))
    add(AuditEntry("trivial_b_half", lambda: mpf(1), lambda: gw.b_twocc(0.5), "1", "="))
    add(AuditEntry("trivial_b_zero", lambda: mpf(2), lambda: gw.b_twocc(0.0), "2", "="))
    add(AuditEntry("trivial_gain_lines_eps0", lambda: irregular_lines(0)["ID0"] + irregular_lines(0)["ID1"],
                   lambda: irregular_lines(0.0, exact=False)["ID0"] + irregular_lines(0.0, exact=False)["ID1"],
                   "0", "="))
    return E


def run_audit(selection: str | Iterable[str] = "all") -> AuditReport:
    reg = build_registry()
    if selection != "all":
        want = list(selection)
        ids = {e.id for e in reg}
        missing = [w for w in want if w not in ids]
        if missing:
            raise KeyError(f"unknown audit ids: {missing}")
        reg = [e for e in reg if e.id in set(want)]
    return AuditReport([evaluate(e) for e in reg])


def registry_ids() -> list[str]:
    return [e.id for e in build_registry()]
