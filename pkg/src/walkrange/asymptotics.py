"""Large-length asymptotics: singular expansions, tail laws, limit moments.

The scaled tail sums

    g_k(s) = (sqrt(1-s))^{k+1} * sum_{f>=1} f^k b(s)^f / (1 - b(s)^f),
    b(s)   = (1 - sqrt(1-s)) / (1 + sqrt(1-s)),

extend continuously to s = 1 with value k! zeta(k+1) / 2^{k+1}; interpreting
the f-sum as a trapezoidal approximation and applying the Euler-Maclaurin
correction turns the approach to that value into an expansion in powers of
(1 - s), with a sqrt(1-s) branch appearing only for k = 1.  This module
derives those expansion coefficients exactly (rationals paired with a zeta
value), and builds on them: the doublepoint tail law, the singlepoint 1/n
polynomials, limit covariances of the point counts, the Riemann-xi limits of
range moments, plus the generic numeric tools (Richardson extrapolation in
1/n and linear-recurrence rate fitting) used to recover tail rates
empirically for multiplicities where no closed form is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .errors import DomainError, IllConditioned
from .pseries import EXACT, TruncatedSeries

# ---------------------------------------------------------------------------
# Bernoulli numbers and the zeta function
# ---------------------------------------------------------------------------

_BERNOULLI = [Fraction(1)]


def bernoulli(m):
    """Exact Bernoulli number B_m (B_1 = -1/2), by the defining recurrence."""
    while len(_BERNOULLI) <= m:
        j = len(_BERNOULLI)
        acc = Fraction(0)
        for i in range(j):
            acc += comb(j + 1, i) * _BERNOULLI[i]
        _BERNOULLI.append(-acc / (j + 1))
    return _BERNOULLI[m]


@lru_cache(maxsize=None)
def _chebyshev_weights(nterms):
    """Integer weights d_k = n sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)."""
    term = Fraction(1, nterms)
    acc = term
    out = []
    for i in range(1, nterms + 1):
        out.append(acc)
        term = term * 4 * (nterms + i - 1) * (nterms - i + 1)
        term /= (2 * i - 1) * (2 * i)
        acc += term
    out.append(acc)
    ints = []
    for v in out:
        v = v * nterms
        if v.denominator != 1:
            raise AssertionError("acceleration weights must be integers")
        ints.append(v.numerator)
    return ints


@lru_cache(maxsize=None)
def _zeta_fraction(s, digits):
    """zeta(s) as a Fraction with error below 10^-digits.

    Alternating-series acceleration with exact integer Chebyshev weights;
    the error after n terms is below 3 (3 + sqrt 8)^{-n} / (1 - 2^{1-s}).
    """
    if s < 2:
        raise DomainError("zeta(s) implemented for integer s >= 2")
    nterms = int(digits * math.log(10) / math.log(3 + math.sqrt(8))) + 8
    d = _chebyshev_weights(nterms)
    dn = d[nterms]
    scale = 10 ** (digits + 4)
    num = 0
    for j in range(nterms):
        num += (-1) ** j * ((d[j] - dn) * scale) // (j + 1) ** s
    two = 2 ** (s - 1)
    return Fraction(-num * two, scale * dn * (two - 1))


def zeta(s):
    """zeta(s) for integer s >= 2, accurate to better than 1e-14 relative."""
    return float(_zeta_fraction(s, 25))


def zeta_fraction(s, digits):
    return _zeta_fraction(s, digits)


def zeta_em(s, terms=40, correction_order=12):
    """Independent Euler-Maclaurin evaluation of zeta(s), for cross-checks."""
    if s < 2:
        raise DomainError("zeta_em needs s >= 2")
    N = terms
    acc = sum(Fraction(1, j ** s) for j in range(1, N + 1))
    acc += Fraction(1, (s - 1) * N ** (s - 1))
    acc -= Fraction(1, 2 * N ** s)
    rising = Fraction(s)
    for i in range(1, correction_order + 1):
        acc += bernoulli(2 * i) / factorial(2 * i) * rising / N ** (s + 2 * i - 1)
        rising *= (s + 2 * i - 1) * (s + 2 * i)
    return float(acc)


# ---------------------------------------------------------------------------
# divisor sums and direct tail evaluation
# ---------------------------------------------------------------------------

def sigma_table(k, fmax):
    """sigma_k(f) for f = 1..fmax by sieving."""
    table = np.zeros(fmax + 1)
    for f in range(1, fmax + 1):
        fk = float(f) ** k
        table[f:: f] += fk
    return table


def tail_sum_direct(k, b, rel_tol=1e-16):
    """sum_{f>=1} f^k b^f/(1-b^f) = sum_f sigma_k(f) b^f for 0 <= b < 1."""
    if not 0 <= b < 1:
        raise DomainError("need 0 <= b < 1")
    if b == 0:
        return 0.0
    # f^k e^{f log b} negligible beyond fmax
    log_b = math.log(b)
    fmax = 64
    while fmax ** k * math.exp(fmax * log_b) > rel_tol and fmax < 5 * 10 ** 7:
        fmax *= 2
    table = sigma_table(k, fmax)
    powers = np.exp(np.arange(fmax + 1) * log_b)
    return float(np.dot(table[1:], powers[1:]))


def singular_scaled_sum(k, varsigma):
    """g_k(s) = (sqrt(1-s))^{k+1} sum_f f^k b^f/(1-b^f) for real s < 1."""
    u = math.sqrt(1.0 - varsigma)
    b = (1.0 - u) / (1.0 + u)
    return u ** (k + 1) * tail_sum_direct(k, b)


# ---------------------------------------------------------------------------
# expansion of g_k around the singular point
# ---------------------------------------------------------------------------

@dataclass
class EMExpansion:
    """Expansion g_k(s) ~ const - sum_l lam_l (1-s)^l - [k=1] sqrt(1-s)(1/4 + ...).

    Each lam_l is stored as (rational, zeta_multiplier) with value
    rational + zeta_multiplier * zeta(k+1); the constant is
    k! zeta(k+1) / 2^{k+1}.
    """

    k: int
    order: int
    constant_zeta_multiple: Fraction
    lambda_terms: list      # l = 1..order: (Fraction rational, Fraction zeta coef)
    lambda_tilde: list      # k = 1 only, l = 1..order: Fraction

    @property
    def constant(self):
        return float(self.constant_zeta_multiple) * zeta(self.k + 1)

    def lambda_value(self, l):
        rat, zc = self.lambda_terms[l - 1]
        return float(rat) + float(zc) * zeta(self.k + 1)

    def evaluate(self, varsigma):
        x = 1.0 - varsigma
        acc = self.constant
        for l in range(1, self.order + 1):
            acc -= self.lambda_value(l) * x ** l
        if self.k == 1:
            branch = 0.25
            for l in range(1, self.order + 1):
                branch += float(self.lambda_tilde[l - 1]) * x ** l
            acc -= math.sqrt(x) * branch
        return acc


def em_expansion(k, M):
    """Expansion data for g_k to order M in (1 - s).

    Write u = sqrt(1-s) and L = -log b = 2 artanh u = 2 u sig(u^2).  Then

      g_k = (u/L)^{k+1} (k! zeta(k+1) - sum_j B_{2j} B_{2j-k} L^{2j}/(2j (2j-k)!))
            - [k=1] u^2/(2L),

    and every term is sig-rational in x = u^2 except the odd u-power for
    k = 1, which supplies the sqrt branch.  All series work happens in the
    exact backend at truncation order M.
    """
    if k < 1 or M < 1:
        raise DomainError("need k >= 1 and M >= 1")
    sig = TruncatedSeries(
        [Fraction(1, 2 * j + 1) for j in range(M + 1)], EXACT, M)
    inv_sig = sig.inverse()
    # coefficient series multiplying zeta(k+1): k! (2 sig)^-(k+1)
    w_series = inv_sig.pow(k + 1).scaled(Fraction(factorial(k), 2 ** (k + 1)))
    # pure-rational part from the Bernoulli corrections
    p_series = TruncatedSeries.zero(M, EXACT)
    x_mono = TruncatedSeries.monomial(1, 1, M, EXACT)
    for j in range(max(1, (k + 1) // 2), M + 1):
        b2j = bernoulli(2 * j)
        bk = bernoulli(2 * j - k)
        if b2j == 0 or bk == 0:
            continue
        coef = b2j * bk / (2 * j * factorial(2 * j - k))
        # (u/L)^{k+1} L^{2j} = 2^{2j-k-1} x^j sig^{2j-k-1}
        expo = 2 * j - k - 1
        ser = sig.pow(expo) if expo >= 0 else inv_sig.pow(-expo)
        ser = ser * x_mono.pow(j)
        p_series = p_series - ser.scaled(coef * Fraction(2) ** (2 * j - k - 1))
    lam = []
    for l in range(1, M + 1):
        lam.append((-p_series[l], -w_series[l]))
    tilde = []
    if k == 1:
        v = inv_sig.scaled(Fraction(1, 4))
        tilde = [v[l] for l in range(1, M + 1)]
    assert p_series[0] == 0, "expansion constant must be pure zeta"
    return EMExpansion(k, M, w_series[0], lam, tilde)


# ---------------------------------------------------------------------------
# tail laws for the point-count distributions
# ---------------------------------------------------------------------------

@dataclass
class TailModel:
    """Pr(N = l) ~ sum_i rates[i]^l (theta0_i + l theta1_i) + cross terms."""

    rates: list
    weights: list = field(default_factory=list)   # (theta0, theta1) per rate
    cross: dict = field(default_factory=dict)     # (i, j) -> theta2
    residual: float = 0.0

    def predict(self, l):
        acc = 0.0
        for i, a in enumerate(self.rates):
            t0, t1 = self.weights[i] if i < len(self.weights) else (0.0, 0.0)
            acc += a ** l * (t0 + l * t1)
        for (i, j), t2 in self.cross.items():
            ai, aj = self.rates[i], self.rates[j]
            acc += t2 * sum(ai ** m * aj ** (l - m) for m in range(1, l))
        return acc


def doublepoint_tail():
    """Limit law Pr(N_4 = l) -> alpha^l (theta0 + l theta1) for l > 2."""
    pi2 = math.pi ** 2
    z3 = zeta(3)
    alpha = pi2 / (24.0 + pi2)
    c = pi2 / 3.0 - z3
    denom = 1.0 + pi2 / 24.0
    theta0 = (216.0 / math.pi ** 6) * (c ** 2 / denom) * (
        (4.0 + pi2 / 3.0) / c
        - (3.0 + pi2 / 24.0) / ((pi2 / 6.0) * denom)
        - 3.0 / (4.0 * denom))
    theta1 = (1296.0 / math.pi ** 8) * (c / denom) ** 2
    return TailModel(rates=[alpha], weights=[(theta0, theta1)])


def singlepoint_expansion(n):
    """The 1/n expansions of Pr_n(N_2 = l) for l = 0, 1, 2 (error O(1/n^5))."""
    n = float(n)
    p0 = 0.25 - 1 / (4 * n) - 1 / (48 * n ** 2) + 13 / (144 * n ** 3) \
        + 421 / (2880 * n ** 4)
    p1 = 0.5 - 5 / (24 * n ** 2) - 11 / (36 * n ** 3) - 511 / (1440 * n ** 4)
    p2 = 0.25 + 1 / (4 * n) + 11 / (48 * n ** 2) + 31 / (144 * n ** 3) \
        + 601 / (2880 * n ** 4)
    return p0, p1, p2


# ---------------------------------------------------------------------------
# limit second moments of the point counts
# ---------------------------------------------------------------------------

def second_moment_limit(k1, k2):
    """Limit covariance of (N_{2k1}, N_{2k2}); exact zeta bookkeeping.

    The double sum is collected into exact rational coefficients of each
    zeta value before any rounding: the coefficients reach ~C(2k-2, k-1)^2
    for k1 = k2 = k, so float summation would lose everything to
    cancellation at k around 100.
    """
    zeta_coeffs = {}
    for r1 in range(1, k1 + 1):
        for r2 in range(1, k2 + 1):
            s = r1 + r2
            base = Fraction(comb(k1 - 1, r1 - 1) * comb(k2 - 1, r2 - 1)
                            * comb(s, r1) * (-1) ** s, 2 ** s)
            w1 = base * Fraction(k1 + k2 - s, s)
            if w1:
                zeta_coeffs[s] = zeta_coeffs.get(s, Fraction(0)) + 2 * w1
            if s > 2:
                w2 = base * Fraction(comb(r1, 2) + comb(r2, 2), comb(s, 2))
                if w2:
                    zeta_coeffs[s - 1] = zeta_coeffs.get(s - 1, Fraction(0)) + 2 * w2
    if not zeta_coeffs:
        return float((1 if k1 == k2 else 0) - Fraction(1, 2))
    maxmag = max(abs(c.numerator / c.denominator) for c in zeta_coeffs.values())
    digits = 30 + int(math.log10(max(maxmag, 1.0))) + 1
    acc = Fraction((1 if k1 == k2 else 0)) - Fraction(1, 2)
    for s, c in zeta_coeffs.items():
        acc += c * zeta_fraction(s, digits)
    return float(acc)


def range_moment_limit(r):
    """xi(r) = r (r-1) zeta(r) Gamma(r/2) pi^{-r/2}: limit of E(ran^r)/E(ran)^r."""
    if r < 2:
        raise DomainError("range moment limits start at r = 2")
    return (r * (r - 1) * zeta(r) * math.gamma(r / 2.0)
            * math.pi ** (-r / 2.0))


# ---------------------------------------------------------------------------
# Richardson extrapolation and rate fitting
# ---------------------------------------------------------------------------

def richardson(ns, values):
    """Polynomial-in-1/n extrapolation to n = infinity (Neville tableau).

    Returns (estimate, tolerance); the tolerance is the difference between
    the final extrapolate and the corner of the previous tableau column.
    """
    hs = [1.0 / n for n in ns]
    order = sorted(range(len(ns)), key=lambda i: hs[i])
    hs = [hs[i] for i in order]
    tab = [float(values[i]) for i in order]
    m = len(tab)
    corners = [tab[0]]
    for level in range(1, m):
        new = []
        for i in range(m - level):
            num = hs[i + level] * tab[i] - hs[i] * tab[i + 1]
            new.append(num / (hs[i + level] - hs[i]))
        tab = new
        corners.append(tab[0])
    tol = abs(corners[-1] - corners[-2]) if m > 1 else math.inf
    return corners[-1], tol


def fit_linear_recurrence(values, order):
    """Least-squares linear recurrence; returns (roots, relative residual)."""
    y = np.asarray(values, dtype=np.float64)
    if len(y) < 2 * order:
        raise IllConditioned("not enough sequence values for the fit order")
    rows = len(y) - order
    A = np.empty((rows, order))
    for i in range(rows):
        A[i] = y[i: i + order]
    b = y[order:]
    coef, res, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    fitted = A @ coef
    scale = np.linalg.norm(b)
    residual = np.linalg.norm(fitted - b) / scale if scale > 0 else np.inf
    charpoly = np.concatenate(([1.0], -coef[::-1]))
    roots = np.roots(charpoly)
    return roots, residual


def _cluster_roots(roots, tol=0.08):
    """Merge near-coincident roots (double roots from l * a^l terms)."""
    roots = sorted(roots, key=lambda r: -abs(r))
    merged = []
    for r in roots:
        for i, (s, cnt) in enumerate(merged):
            if abs(r - s / cnt) <= tol * max(abs(r), 1e-12):
                merged[i] = (s + r, cnt + 1)
                break
        else:
            merged.append((r, 1))
    return [s / cnt for s, cnt in merged]


def _probability_table(k, ns, l_max, engine=None):
    """Pr_n(N_{2k} = l) for every n in ns.

    k <= 2 runs through the closed-form series engine; higher multiplicities
    use the crossing-profile dynamic program from the walks module, whose
    all-positive float arithmetic stays accurate where the series route for
    k >= 3 loses digits to cancellation at large truncation orders.
    """
    from .genfun import Engine
    from .walks import local_time_probabilities

    nmax = max(ns)
    if k <= 2:
        if engine is None:
            engine = Engine(2 * nmax, backend="float", scale=Fraction(1, 2))
        if engine.K < 2 * nmax:
            raise ValueError("engine truncation order too small")
        return engine, {n: engine.probabilities(n, k, l_max) for n in ns}
    return engine, {n: local_time_probabilities(n, k, l_max) for n in ns}


def extrapolate_probability(k, l, n_grid, engine=None):
    """Richardson limit of Pr_n(N_{2k} = l) over the 1/n grid.

    Returns (estimate, tolerance) with the tolerance taken from the last two
    extrapolation levels.
    """
    engine, table = _probability_table(k, sorted(set(n_grid)), l, engine)
    ns = sorted(table)
    return richardson(ns, [table[n][l] for n in ns])


def default_n_grid(n, levels=4):
    return [max(2, n // 2 ** i) for i in range(levels)]


def tail_rate_fit(k, n, l_range=None, levels=4, fit_order=None, engine=None,
                  residual_tol=1e-3):
    """Recover the geometric tail rates of Pr(N_{2k} = l) empirically.

    Pr_n values on an n-grid are Richardson-extrapolated pointwise in l, a
    linear recurrence of order min(2(k-1), window) is fitted to the limits,
    and the recurrence roots (clustered, since each rate is a double root of
    the l * rate^l tail form) are returned sorted by decreasing magnitude.
    """
    if n < 500:
        raise DomainError("rate fitting needs n >= 500")
    if l_range is None:
        l_range = range(3, 3 + max(12, 4 * (k - 1) + 8))
    ls = list(l_range)
    ns = default_n_grid(n, levels)
    engine, table = _probability_table(k, ns, max(ls), engine)
    pr_inf = []
    for l in ls:
        est, _tol = richardson(ns, [table[nn][l] for nn in ns])
        pr_inf.append(est)
    order = fit_order if fit_order is not None else min(2 * (k - 1), len(ls) // 2)
    roots, residual = fit_linear_recurrence(pr_inf, order)
    if not np.all(np.isfinite(roots)) or residual > residual_tol:
        raise IllConditioned(f"rate fit residual {residual:.2e} over tolerance")
    # tail rates of a decaying distribution lie strictly inside the unit
    # disk; anything else is a noise direction of the least-squares problem
    roots = [r for r in roots if abs(r) < 0.999]
    rates = [complex(r) for r in _cluster_roots(roots)]
    reals = []
    for r in rates:
        if abs(r.imag) <= 0.2 * max(abs(r), 1e-12):
            reals.append(r.real)
        else:
            reals.append(math.copysign(abs(r), r.real))

    def fit_weights(rs):
        cols = []
        for a in rs:
            cols.append([a ** l for l in ls])
            cols.append([l * a ** l for l in ls])
        A = np.array(cols).T
        sol, _, _, _ = np.linalg.lstsq(A, np.array(pr_inf), rcond=None)
        return [(sol[2 * i], sol[2 * i + 1]) for i in range(len(rs))]

    # rates whose fitted contribution is negligible over the window are
    # least-squares noise modes, not part of the tail law
    reals = [s / c for s, c in _dedupe(reals)]
    weights = fit_weights(reals)
    contrib = [max(abs((t0 + l * t1) * a ** l) for l in ls)
               for a, (t0, t1) in zip(reals, weights)]
    top = max(contrib) if contrib else 0.0
    reals = [a for a, c in zip(reals, contrib) if c > 1e-4 * top]
    reals.sort(key=lambda v: -abs(v))
    weights = fit_weights(reals)
    return TailModel(rates=reals, weights=weights, residual=float(residual))


def _dedupe(reals, tol=0.05):
    merged = []
    for r in sorted(reals, key=lambda v: -abs(v)):
        for i, (s, cnt) in enumerate(merged):
            if abs(r - s / cnt) <= tol * max(abs(r), 1e-12):
                merged[i] = (s + r, cnt + 1)
                break
        else:
            merged.append((r, 1))
    return merged
