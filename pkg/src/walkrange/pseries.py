"""Truncated formal power series in z with exact-rational and float backends.

A series is a dense coefficient vector c[0..K]; every arithmetic result is
re-projected onto the truncation order of its operands.  The module also
builds the base series used throughout the package:

    A  = sqrt(1 - 4 z^2)            (square-root factor of the walk kernel)
    B  = 2z / (1 + A)               (z times the Catalan generating function)
    h0 = (1 - A) / A                (closed-walk count series, empty walk removed)

together with the geometric tails B^{2f}/(1 - B^{2f}) and weighted sums over
them.  Coefficients of B-powers come from the ballot-number closed form

    [z^m] B^j = (j/m) C(m, (m-j)/2),

so no series division is ever needed to build the cache.  A cache may be
built at a scale 0 < s <= 1: stored coefficients are s^m times the true ones,
which keeps float coefficients bounded for large truncation orders.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import comb

import numpy as np

from .errors import BackendMismatch, DivByNonUnit, NonFiniteCoefficient

EXACT = "exact"
FLOAT = "float"

# Above this order exact rational arithmetic gets expensive; callers that do
# not override the backend get floats instead.
EXACT_ORDER_LIMIT = 512

_FFT_THRESHOLD = 384


def choose_backend(K, override=None):
    if override is not None:
        if override not in (EXACT, FLOAT):
            raise ValueError(f"unknown backend {override!r}")
        return override
    return EXACT if K <= EXACT_ORDER_LIMIT else FLOAT


def _check_finite(arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteCoefficient("float series coefficient is NaN or infinite")
    return arr


class TruncatedSeries:
    """Immutable truncated power series; all ops return new instances."""

    __slots__ = ("backend", "K", "coeffs")

    def __init__(self, coeffs, backend, K=None):
        if backend == EXACT:
            data = [Fraction(c) for c in coeffs]
            if K is None:
                K = len(data) - 1
            if len(data) < K + 1:
                data += [Fraction(0)] * (K + 1 - len(data))
            self.coeffs = data[: K + 1]
        elif backend == FLOAT:
            data = np.asarray(coeffs, dtype=np.float64)
            if K is None:
                K = len(data) - 1
            if len(data) < K + 1:
                data = np.concatenate([data, np.zeros(K + 1 - len(data))])
            arr = np.array(data[: K + 1], dtype=np.float64)
            arr.flags.writeable = False
            self.coeffs = _check_finite(arr)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self.K = K

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, K, backend):
        if backend == EXACT:
            return cls([Fraction(0)] * (K + 1), EXACT, K)
        return cls(np.zeros(K + 1), FLOAT, K)

    @classmethod
    def one(cls, K, backend):
        return cls.monomial(1, 0, K, backend)

    @classmethod
    def monomial(cls, c, m, K, backend):
        if backend == EXACT:
            coeffs = [Fraction(0)] * (K + 1)
            if m <= K:
                coeffs[m] = Fraction(c)
        else:
            coeffs = np.zeros(K + 1)
            if m <= K:
                coeffs[m] = float(c)
        return cls(coeffs, backend, K)

    # -- helpers -----------------------------------------------------------

    def _binop_check(self, other):
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"expected TruncatedSeries, got {type(other)!r}")
        if self.backend != other.backend:
            raise BackendMismatch(
                f"cannot combine {self.backend} and {other.backend} series")
        return min(self.K, other.K)

    def __getitem__(self, m):
        if m < 0 or m > self.K:
            return Fraction(0) if self.backend == EXACT else 0.0
        return self.coeffs[m]

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if self.backend != other.backend or self.K != other.K:
            return False
        if self.backend == EXACT:
            return self.coeffs == other.coeffs
        return bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return id(self)

    def __repr__(self):
        head = ", ".join(str(c) for c in list(self.coeffs[:6]))
        tail = ", ..." if self.K >= 6 else ""
        return f"TruncatedSeries({self.backend}, K={self.K}, [{head}{tail}])"

    def is_zero(self):
        if self.backend == EXACT:
            return all(c == 0 for c in self.coeffs)
        return not np.any(self.coeffs)

    def as_floats(self):
        return [float(c) for c in self.coeffs]

    # -- ring operations ---------------------------------------------------

    def project(self, K):
        """Discard coefficients above order K (the z-diamond-K projection)."""
        if K < 0:
            raise ValueError("projection order must be >= 0")
        if K >= self.K:
            return self
        return TruncatedSeries(self.coeffs[: K + 1], self.backend, K)

    def __add__(self, other):
        K = self._binop_check(other)
        if self.backend == EXACT:
            return TruncatedSeries(
                [self.coeffs[i] + other.coeffs[i] for i in range(K + 1)], EXACT, K)
        return TruncatedSeries(self.coeffs[: K + 1] + other.coeffs[: K + 1], FLOAT, K)

    def __sub__(self, other):
        K = self._binop_check(other)
        if self.backend == EXACT:
            return TruncatedSeries(
                [self.coeffs[i] - other.coeffs[i] for i in range(K + 1)], EXACT, K)
        return TruncatedSeries(self.coeffs[: K + 1] - other.coeffs[: K + 1], FLOAT, K)

    def __neg__(self):
        return self.scaled(-1)

    def scaled(self, c):
        if self.backend == EXACT:
            c = Fraction(c)
            return TruncatedSeries([c * x for x in self.coeffs], EXACT, self.K)
        return TruncatedSeries(float(c) * self.coeffs, FLOAT, self.K)

    def __mul__(self, other):
        K = self._binop_check(other)
        if self.backend == EXACT:
            a, b = self.coeffs, other.coeffs
            out = [Fraction(0)] * (K + 1)
            for i in range(min(len(a) - 1, K) + 1):
                ai = a[i]
                if ai == 0:
                    continue
                for j in range(min(len(b) - 1, K - i) + 1):
                    bj = b[j]
                    if bj != 0:
                        out[i + j] += ai * bj
            return TruncatedSeries(out, EXACT, K)
        a = self.coeffs[: K + 1]
        b = other.coeffs[: K + 1]
        if K + 1 >= _FFT_THRESHOLD:
            n = 2 * K + 1
            size = 1 << (n - 1).bit_length()
            fa = np.fft.rfft(a, size)
            fb = np.fft.rfft(b, size)
            full = np.fft.irfft(fa * fb, size)[: K + 1]
        else:
            full = np.convolve(a, b)[: K + 1]
        return TruncatedSeries(full, FLOAT, K)

    def __truediv__(self, other):
        """Division by a unit (nonzero constant term)."""
        K = self._binop_check(other)
        b0 = other.coeffs[0]
        if b0 == 0:
            raise DivByNonUnit("division by a series with zero constant term")
        if self.backend == EXACT:
            a, b = self.coeffs, other.coeffs
            out = [Fraction(0)] * (K + 1)
            for n in range(K + 1):
                acc = a[n] if n < len(a) else Fraction(0)
                for i in range(max(0, n - len(b) + 1), n):
                    if out[i] != 0:
                        acc -= out[i] * b[n - i]
                out[n] = acc / b0
            return TruncatedSeries(out, EXACT, K)
        a = np.asarray(self.coeffs[: K + 1])
        b = np.asarray(other.coeffs[: K + 1])
        out = np.zeros(K + 1)
        for n in range(K + 1):
            acc = a[n]
            if n:
                acc -= np.dot(out[:n], b[n:0:-1])
            out[n] = acc / b0
        return TruncatedSeries(out, FLOAT, K)

    def inverse(self):
        return TruncatedSeries.one(self.K, self.backend) / self

    def log(self):
        """log of a unit series; exact backend additionally needs c0 == 1."""
        c0 = self.coeffs[0]
        if c0 == 0:
            raise DivByNonUnit("log of a series with zero constant term")
        K = self.K
        if self.backend == EXACT:
            if c0 != 1:
                raise DivByNonUnit("exact-backend log needs constant term 1")
            a = self.coeffs
            out = [Fraction(0)] * (K + 1)
            for n in range(1, K + 1):
                acc = a[n]
                for i in range(1, n):
                    if out[i] != 0:
                        acc -= Fraction(i, n) * out[i] * a[n - i]
                out[n] = acc
            return TruncatedSeries(out, EXACT, K)
        if c0 < 0:
            raise DivByNonUnit("log of a series with negative constant term")
        a = self.coeffs
        out = np.zeros(K + 1)
        out[0] = math.log(c0)
        w = np.arange(K + 1, dtype=np.float64)
        for n in range(1, K + 1):
            acc = a[n]
            if n > 1:
                acc -= np.dot(w[1:n] * out[1:n], a[n - 1:0:-1]) / n
            out[n] = acc / c0
        return TruncatedSeries(out, FLOAT, K)

    def zddz(self):
        """Apply z d/dz: multiply the m-th coefficient by m."""
        if self.backend == EXACT:
            return TruncatedSeries(
                [Fraction(m) * c for m, c in enumerate(self.coeffs)], EXACT, self.K)
        return TruncatedSeries(
            np.arange(self.K + 1, dtype=np.float64) * self.coeffs, FLOAT, self.K)

    def pow(self, m):
        if m < 0:
            raise ValueError("negative powers are not supported")
        result = TruncatedSeries.one(self.K, self.backend)
        base = self
        while m:
            if m & 1:
                result = result * base
            m >>= 1
            if m:
                base = base * base
        return result


def project(series, K):
    return series.project(K)


_ARITH_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div-by-unit": lambda a, b: a / b,
    "log-of-unit": lambda a, _b: a.log(),
    "z-d/dz": lambda a, _b: a.zddz(),
}


def arith(lhs, rhs, op):
    """Dispatch table over the ring operations; unary ops ignore rhs."""
    try:
        fn = _ARITH_OPS[op]
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None
    return fn(lhs, rhs)


# ---------------------------------------------------------------------------
# base series cache
# ---------------------------------------------------------------------------

def _catalan(m):
    return comb(2 * m, m) // (m + 1)


class BaseSeriesCache:
    """Holds A, B, h0 and the B-power/geometric-tail machinery at one order.

    All stored series share one (K, backend, scale).  Immutable once built;
    the lazy caches are fill-once and safe to share across threads doing
    read-mostly work.
    """

    def __init__(self, K, backend=None, scale=1):
        backend = choose_backend(K, backend)
        self.K = K
        self.backend = backend
        self.scale = Fraction(scale)
        if not 0 < self.scale <= 1:
            raise ValueError("scale must be in (0, 1]")
        self._even_rows = None          # float backend: matrix of B^{2F} rows
        self._even_rows_exact = {}      # exact backend: F -> coefficient list
        self._tail_cache = {}
        half = K // 2
        sc = self._scale_powers(K)

        if backend == EXACT:
            a = [Fraction(0)] * (K + 1)
            a[0] = Fraction(1)
            inv = [Fraction(0)] * (K + 1)
            inv[0] = Fraction(1)
            for m in range(1, half + 1):
                a[2 * m] = Fraction(-2 * _catalan(m - 1)) * sc[2 * m]
                inv[2 * m] = Fraction(comb(2 * m, m)) * sc[2 * m]
            self.A = TruncatedSeries(a, EXACT, K)
            self.inv_A = TruncatedSeries(inv, EXACT, K)
        else:
            a = np.zeros(K + 1)
            inv = np.zeros(K + 1)
            a[0] = 1.0
            inv[0] = 1.0
            val_a, val_i = 1.0, 1.0
            s2 = float(self.scale) ** 2
            for m in range(1, half + 1):
                # ratios of successive Catalan / central-binomial numbers
                val_a *= s2 * (4 * m - 6) / m if m > 1 else s2
                val_i *= s2 * (4 * m - 2) / m
                a[2 * m] = -2.0 * val_a
                inv[2 * m] = val_i
            self.A = TruncatedSeries(a, FLOAT, K)
            self.inv_A = TruncatedSeries(inv, FLOAT, K)

        self.one = TruncatedSeries.one(K, backend)
        self.one_minus_A = self.one - self.A
        self.h0 = self.inv_A - self.one
        self.B = self._b_power(1)

    # -- scaffolding ---------------------------------------------------------

    def _scale_powers(self, upto):
        sc = [Fraction(1)] * (upto + 1)
        for m in range(1, upto + 1):
            sc[m] = sc[m - 1] * self.scale
        return sc

    def monomial(self, c, m):
        """c * z^m as a series at this cache's scale."""
        if self.backend == EXACT:
            coeff = Fraction(c) * self.scale ** m
        else:
            coeff = float(c) * float(self.scale) ** m
        return TruncatedSeries.monomial(coeff, m, self.K, self.backend)

    def zero(self):
        return TruncatedSeries.zero(self.K, self.backend)

    def _b_power(self, j):
        """B^j via the ballot closed form [z^m] B^j = (j/m) C(m,(m-j)/2)."""
        K = self.K
        if self.backend == EXACT:
            out = [Fraction(0)] * (K + 1)
            sp = self._scale_powers(K)
            for m in range(j, K + 1):
                if (m - j) % 2 == 0:
                    out[m] = Fraction(j * comb(m, (m - j) // 2), m) * sp[m]
            return TruncatedSeries(out, EXACT, K)
        out = np.zeros(K + 1)
        ls = math.log(float(self.scale))
        for m in range(j, K + 1):
            if (m - j) % 2 == 0:
                h = (m - j) // 2
                lg = (math.log(j / m) + math.lgamma(m + 1) - math.lgamma(h + 1)
                      - math.lgamma(m - h + 1) + m * ls)
                out[m] = math.exp(lg) if lg > -745 else 0.0
        return TruncatedSeries(out, FLOAT, K)

    # -- B^{2F} rows ---------------------------------------------------------

    def _ensure_even_rows(self):
        """Coefficient table row[F][n'] = [z^{2n'}] (scaled B)^{2F}."""
        if self.backend == FLOAT:
            if self._even_rows is None:
                half = self.K // 2
                rows = np.zeros((half + 1, half + 1))
                ls2 = 2.0 * math.log(float(self.scale))
                np_ = np.arange(1, half + 1, dtype=np.float64)
                for F in range(1, half + 1):
                    # log v(F,n') accumulated over n' = F..half
                    npr = np_[F - 1: half - 1]  # n' = F .. half-1
                    ratios = np.log(npr * (2 * npr + 1) * (2 * npr + 2)) - \
                        np.log((npr + 1) * (npr + 1 - F) * (npr + 1 + F))
                    logs = np.concatenate(([F * ls2], ratios + ls2)).cumsum()
                    rows[F, F:] = np.where(logs > -745.0, np.exp(logs), 0.0)
                self._even_rows = rows
            return self._even_rows
        return None

    def b_even_power(self, F):
        """(scaled B)^{2F} as a series."""
        K = self.K
        if 2 * F > K:
            return self.zero()
        if self.backend == EXACT:
            if F not in self._even_rows_exact:
                sp = self._scale_powers(K)
                out = [Fraction(0)] * (K + 1)
                for n in range(F, K // 2 + 1):
                    out[2 * n] = Fraction(F * comb(2 * n, n - F), n) * sp[2 * n]
                self._even_rows_exact[F] = out
            return TruncatedSeries(self._even_rows_exact[F], EXACT, K)
        rows = self._ensure_even_rows()
        out = np.zeros(K + 1)
        out[2 * F:: 2] = rows[F, F:]
        return TruncatedSeries(out, FLOAT, K)

    def tail(self, f):
        """Geometric tail B^{2f} / (1 - B^{2f}) = sum_j B^{2fj}."""
        if f in self._tail_cache:
            return self._tail_cache[f]
        K = self.K
        half = K // 2
        if self.backend == EXACT:
            acc = [Fraction(0)] * (K + 1)
            j = 1
            while f * j <= half:
                row = self._even_rows_exact_get(f * j)
                for n in range(f * j, half + 1):
                    acc[2 * n] += row[2 * n]
                j += 1
            ser = TruncatedSeries(acc, EXACT, K)
        else:
            rows = self._ensure_even_rows()
            acc = np.zeros(half + 1)
            j = 1
            while f * j <= half:
                acc += rows[f * j]
                j += 1
            out = np.zeros(K + 1)
            out[0:: 2] = acc
            ser = TruncatedSeries(out, FLOAT, K)
        self._tail_cache[f] = ser
        return ser

    def _even_rows_exact_get(self, F):
        if F not in self._even_rows_exact:
            self.b_even_power(F)
        return self._even_rows_exact[F]

    def lambert_sum(self, weight):
        """sum_f weight(f) * B^{2f}/(1 - B^{2f}) with f cut at K//2.

        Computed through the divisor rearrangement
        sum_f w_f sum_j B^{2fj} = sum_F (sum_{f | F} w_f) B^{2F}.
        """
        half = self.K // 2
        acc_w = [None] * (half + 1)
        for f in range(1, half + 1):
            wf = weight(f)
            if wf == 0:
                continue
            for F in range(f, half + 1, f):
                acc_w[F] = wf if acc_w[F] is None else acc_w[F] + wf
        if self.backend == EXACT:
            out = [Fraction(0)] * (self.K + 1)
            for F in range(1, half + 1):
                if acc_w[F] is None:
                    continue
                w = Fraction(acc_w[F])
                row = self._even_rows_exact_get(F)
                for n in range(F, half + 1):
                    if row[2 * n]:
                        out[2 * n] += w * row[2 * n]
            return TruncatedSeries(out, EXACT, self.K)
        rows = self._ensure_even_rows()
        wvec = np.array([0.0 if w is None else float(w) for w in acc_w])
        acc = wvec @ rows
        out = np.zeros(self.K + 1)
        out[0:: 2] = acc
        return TruncatedSeries(out, FLOAT, self.K)

    # -- lattice visit series -----------------------------------------------

    def point_visits_series(self, p):
        """Counting series h(p,1,z) for walks from 0 to p, empty walk removed.

        Equals B^{|p|} / A - [p == 0].
        """
        if p == 0:
            return self.h0
        return self.inv_A * self._b_power(abs(p))

    # -- coefficient extraction ----------------------------------------------

    def count_at(self, series, n):
        """True [z^{2n}] coefficient (undoes the scale).  Exact backend."""
        c = series[2 * n]
        if self.backend == EXACT:
            return c / self.scale ** (2 * n)
        return float(c) / float(self.scale) ** (2 * n)

    def closed_walk_total(self, n):
        """C(2n, n) at this cache's scale, as an exact Fraction."""
        return Fraction(comb(2 * n, n)) * self.scale ** (2 * n)

    def probability(self, series, n):
        """[z^{2n}] series / C(2n,n), scale-free."""
        denom = self.closed_walk_total(n)
        c = series[2 * n]
        if self.backend == EXACT:
            return c / denom
        return float(c) / float(denom)


def base_series(K, backend=None, scale=1):
    """Build the base-series cache (A, B, h0, tails) at truncation order K.

    Float caches above order ~1000 need scale < 1 (1/2 is the natural
    choice), or the raw 4^n coefficient growth overflows float64 and raises
    NonFiniteCoefficient on first use.
    """
    return BaseSeriesCache(K, backend, scale)
