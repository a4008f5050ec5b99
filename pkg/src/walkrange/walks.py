"""Ground-truth oracle over closed simple lattice walks.

Exhaustive enumeration (small lengths, any small dimension) and uniform Monte
Carlo sampling (larger lengths, d <= 3) of closed walks starting at the
origin, with bookkeeping of visit multiplicities: a lattice point visited by
an interior time step counts twice, the start and end points count once each,
so every multiplicity is even and a point visited "k times" has multiplicity
2k.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import BudgetExceeded

DEFAULT_ENUM_BUDGET = 10 ** 8


@dataclass(frozen=True)
class Walk:
    """Closed lattice path: signed axis steps, start fixed at the origin."""

    dim: int
    steps: tuple

    def __post_init__(self):
        for s in self.steps:
            if s == 0 or abs(s) > self.dim:
                raise ValueError(f"step {s} invalid for dimension {self.dim}")

    @property
    def length(self):
        return len(self.steps)

    def points(self):
        """All visited points p_0 .. p_n as coordinate tuples."""
        pos = [0] * self.dim
        pts = [tuple(pos)]
        for s in self.steps:
            pos[abs(s) - 1] += 1 if s > 0 else -1
            pts.append(tuple(pos))
        return pts

    def is_closed(self):
        return self.points()[-1] == tuple([0] * self.dim)


@dataclass
class RangeProfile:
    """Per-walk summary: counts[k] = number of points of multiplicity 2k."""

    counts: dict = field(default_factory=dict)
    range_: int = 0

    def count(self, k):
        return self.counts.get(k, 0)


def multiplicity(q, w: Walk):
    """delta(q,p0) + delta(q,pn) + 2 * interior visits of q."""
    if isinstance(q, int):
        q = (q,)
    pts = w.points()
    mu = (1 if pts[0] == q else 0) + (1 if pts[-1] == q else 0)
    mu += 2 * sum(1 for p in pts[1:-1] if p == q)
    return mu


def profile(w: Walk) -> RangeProfile:
    if not w.is_closed():
        raise ValueError("profile is defined for closed walks")
    pts = w.points()
    mu = Counter()
    mu[pts[0]] += 1
    mu[pts[-1]] += 1
    for p in pts[1:-1]:
        mu[p] += 2
    counts = Counter()
    for m in mu.values():
        counts[m // 2] += 1
    return RangeProfile(dict(counts), sum(counts.values()))


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------

def _profiles_d1(n):
    """Profiles of all closed 1-d walks of length 2n, by up-step positions."""
    length = 2 * n
    for ups in combinations(range(length), n):
        upset = set(ups)
        pos = 0
        mu = Counter()
        mu[0] += 1
        for i in range(length):
            pos += 1 if i in upset else -1
            if i == length - 1:
                mu[pos] += 1
            else:
                mu[pos] += 2
        counts = Counter()
        for m in mu.values():
            counts[m // 2] += 1
        yield counts


def _profiles_dfs(n, d):
    """Pruned depth-first enumeration over step sequences for d >= 2."""
    length = 2 * n
    step_vecs = []
    for axis in range(d):
        for sign in (1, -1):
            v = [0] * d
            v[axis] = sign
            step_vecs.append(tuple(v))
    origin = tuple([0] * d)
    visits = Counter({origin: 1})

    def rec(pos, remaining):
        if remaining == 0:
            if pos == origin:
                mu = Counter()
                for p, c in visits.items():
                    mu[p] = 2 * c
                mu[origin] -= 2  # start and end each count once, not twice
                counts = Counter()
                for m in mu.values():
                    counts[m // 2] += 1
                yield counts
            return
        if sum(abs(x) for x in pos) > remaining:
            return
        for v in step_vecs:
            np_ = tuple(a + b for a, b in zip(pos, v))
            visits[np_] += 1
            yield from rec(np_, remaining - 1)
            visits[np_] -= 1
            if visits[np_] == 0:
                del visits[np_]

    yield from rec(origin, length)


def iter_profiles(n, d, budget=DEFAULT_ENUM_BUDGET):
    """Profiles (Counter k -> N_{2k}) of every closed walk of length 2n."""
    if (2 * d) ** (2 * n) > budget:
        raise BudgetExceeded(
            f"(2d)^(2n) = {(2 * d) ** (2 * n)} exceeds budget {budget}")
    if d == 1:
        yield from _profiles_d1(n)
    else:
        yield from _profiles_dfs(n, d)


def oracle_counts(n, d, tracked=(), include_range=False,
                  budget=DEFAULT_ENUM_BUDGET):
    """Exact joint counts over all closed walks of length exactly 2n.

    Returns a Counter keyed by the tuple of N_{2k} for k in `tracked`,
    extended with ran(w) when include_range is set.
    """
    tracked = tuple(tracked)
    out = Counter()
    for counts in iter_profiles(n, d, budget):
        key = tuple(counts.get(k, 0) for k in tracked)
        if include_range:
            key = key + (sum(counts.values()),)
        out[key] += 1
    return out


def oracle_mixed_moment(n, d, spec, budget=DEFAULT_ENUM_BUDGET):
    """sum over walks of prod_k C(N_{2k}, m_k) for spec = {k: m_k}."""
    total = 0
    for counts in iter_profiles(n, d, budget):
        v = 1
        for k, m in spec.items():
            v *= math.comb(counts.get(k, 0), m)
            if v == 0:
                break
        total += v
    return total


# ---------------------------------------------------------------------------
# edge-crossing (local time) oracle for d = 1
# ---------------------------------------------------------------------------
#
# A closed 1-d walk of length 2n is determined by its window of visited
# points, the number u_e >= 1 of up-crossings of each edge e of the window
# (down-crossings match by closure, so sum u_e = n), and an interleaving
# choice at every point.  The number of walks with a given profile
# factorizes into per-point binomials:
#     below the root:  C(u + u' - 1, u)
#     at the root:     C(u + u', u')
#     above the root:  C(u + u' - 1, u')
# where u, u' are the crossing numbers of the edges below/above the point.
# The visit count of a point is k(q) = u + u' (boundary points: the single
# adjacent u).  Everything is a sum of nonnegative terms, so the float
# variant below has no cancellation and stays accurate at large n where
# series-based evaluation of high multiplicities loses precision.

def local_time_distribution(n, k, l_max=None):
    """Exact counts {l: #closed walks of length 2n with N_{2k} = l}.

    Dynamic program over crossing profiles with exact integers; memory and
    time grow like n^3, so this is a mid-size-n oracle (n up to ~60).
    """
    from collections import defaultdict

    if l_max is None:
        l_max = 2 * n

    def mark(kq):
        return 1 if kq == k else 0

    state = defaultdict(lambda: defaultdict(int))
    for u in range(1, n + 1):
        m = mark(u)
        state[(0, u, u)][m] += 1
        state[(1, u, u)][m] += 1
    results = defaultdict(int)
    for s in range(1, n + 1):
        for phase in (0, 1):
            for u in range(1, s + 1):
                pol = state.pop((phase, u, s), None)
                if not pol:
                    continue
                if s == n:
                    mtop = mark(u)
                    for m, c in pol.items():
                        if m + mtop <= l_max:
                            results[m + mtop] += c
                    continue
                for up in range(1, n - s + 1):
                    mpt = mark(u + up)
                    if phase == 0:
                        w = math.comb(u + up - 1, u)
                        if w:
                            dst = state[(0, up, s + up)]
                            for m, c in pol.items():
                                dst[m + mpt] += c * w
                        w = math.comb(u + up, up)
                        dst = state[(1, up, s + up)]
                        for m, c in pol.items():
                            dst[m + mpt] += c * w
                    else:
                        w = math.comb(u + up - 1, up)
                        if w:
                            dst = state[(1, up, s + up)]
                            for m, c in pol.items():
                                dst[m + mpt] += c * w
    return dict(results)


def local_time_probabilities(n, k, l_max, u_cap=None):
    """Pr_n(N_{2k} = l) for l = 0..l_max by the crossing-profile DP in floats.

    All DP weights are nonnegative, so double precision keeps ~12 accurate
    digits at any n; crossing numbers are capped at u_cap ~ 8 sqrt(n) (the
    neglected profiles carry e^{-O(u_cap^2/n)} mass) and the transition
    weights carry 4^{-u'} so every partial state stays in float range.
    Layers are kept in a dict keyed by accumulated crossing total s, at most
    u_cap of them alive at a time.
    """
    if u_cap is None:
        u_cap = int(8 * math.sqrt(n)) + 16
    u_cap = min(u_cap, n)
    L = l_max + 1
    log4 = math.log(4.0)

    lgam = np.vectorize(math.lgamma, otypes=[np.float64])
    uu, vv = np.meshgrid(np.arange(1.0, u_cap + 1), np.arange(1.0, u_cap + 1),
                         indexing="ij")
    # per-point factors, scaled by 4^{-u'}:
    #   below root C(u+u'-1, u); at root C(u+u', u'); above root C(u+u'-1, u')
    w_below = np.exp(lgam(uu + vv) - lgam(uu + 1) - lgam(vv) - vv * log4)
    w_root = np.exp(lgam(uu + vv + 1) - lgam(uu + 1) - lgam(vv + 1) - vv * log4)
    w_above = np.exp(lgam(uu + vv) - lgam(vv + 1) - lgam(uu) - vv * log4)

    def mark(kq):
        return 1 if kq == k else 0

    layers = {}

    def get_layer(s):
        lay = layers.get(s)
        if lay is None:
            lay = np.zeros((2, u_cap, L))
            layers[s] = lay
        return lay

    for uval in range(1, u_cap + 1):
        m = mark(uval)
        if m <= l_max:
            w0 = math.exp(-uval * log4)
            lay = get_layer(uval)
            lay[0, uval - 1, m] += w0
            lay[1, uval - 1, m] += w0

    out = np.zeros(L)
    for s in range(1, n + 1):
        lay = layers.pop(s, None)
        if lay is None:
            continue
        if s == n:
            for uval in range(1, u_cap + 1):
                mtop = mark(uval)
                vec = lay[0, uval - 1] + lay[1, uval - 1]
                if mtop == 0:
                    out += vec
                else:
                    out[mtop:] += vec[: L - mtop]
            continue
        up_max = min(u_cap, n - s)
        # dense transitions, marker shift handled as a correction below
        t_below = w_below[:, :up_max].T @ lay[0]          # (up_max, L)
        t_above = (w_root[:, :up_max].T @ lay[0]
                   + w_above[:, :up_max].T @ lay[1])
        for vprime in range(max(1, k - u_cap), min(up_max, k - 1) + 1):
            uval = k - vprime
            c0 = w_below[uval - 1, vprime - 1] * lay[0, uval - 1]
            c1 = (w_root[uval - 1, vprime - 1] * lay[0, uval - 1]
                  + w_above[uval - 1, vprime - 1] * lay[1, uval - 1])
            t_below[vprime - 1] -= c0
            t_above[vprime - 1] -= c1
            t_below[vprime - 1, 1:] += c0[: L - 1]
            t_above[vprime - 1, 1:] += c1[: L - 1]
        for vprime in range(1, up_max + 1):
            dst = get_layer(s + vprime)
            dst[0, vprime - 1] += t_below[vprime - 1]
            dst[1, vprime - 1] += t_above[vprime - 1]

    cb = float(Fraction(math.comb(2 * n, n), 4 ** n))
    return out / cb

def _axis_count_distribution(n, d):
    """Distribution of per-axis up-step counts for a uniform closed walk.

    A closed walk of length 2n with j_i up-steps (and j_i down-steps) on axis
    i has multiplicity (2n)! / prod_i (j_i!)^2, so the axis-count vector is
    sampled with probability proportional to that weight.  Weights are
    normalized in log space; the double-precision rounding is far below any
    Monte Carlo resolution.
    """
    if d == 1:
        return [(n,)], np.array([1.0])
    supports = []
    logw = []
    if d == 2:
        for j in range(n + 1):
            supports.append((j, n - j))
            logw.append(2 * (math.lgamma(n + 1) - math.lgamma(j + 1)
                             - math.lgamma(n - j + 1)))
    elif d == 3:
        for j in range(n + 1):
            for k in range(n - j + 1):
                supports.append((j, k, n - j - k))
                logw.append(2 * (math.lgamma(n + 1) - math.lgamma(j + 1)
                                 - math.lgamma(k + 1)
                                 - math.lgamma(n - j - k + 1)))
    else:
        raise ValueError("sampling supports d <= 3")
    logw = np.array(logw)
    w = np.exp(logw - logw.max())
    return supports, w / w.sum()


def sample_moments(n, d, samples, seed, k_max=3):
    """Monte Carlo estimates of E(N_{2k}) for k <= k_max and E(ran).

    Walks are exactly uniform over closed walks of length 2n: a balanced
    per-axis step multiset is drawn from its conditional distribution and
    then shuffled.  Returns a dict with means and standard errors,
    reproducible for a given seed.
    """
    if d > 3:
        raise ValueError("sampling supports d <= 3")
    rng = np.random.default_rng(seed)
    supports, probs = _axis_count_distribution(n, d)
    if len(supports) > 1:
        idxs = rng.choice(len(supports), size=samples, p=probs)
    else:
        idxs = np.zeros(samples, dtype=np.int64)
    sums = np.zeros(k_max + 1)
    sumsq = np.zeros(k_max + 1)

    # encode d-dimensional points into one integer for fast uniqueness
    span = 2 * n + 1
    rows = np.arange(2 * n)

    for idx in idxs:
        jvec = supports[idx]
        steps = []
        for axis, j in enumerate(jvec):
            steps.append(np.full(j, axis + 1))
            steps.append(np.full(j, -(axis + 1)))
        seq = np.concatenate(steps)
        rng.shuffle(seq)
        axes = np.abs(seq) - 1
        sign = np.sign(seq)
        disp = np.zeros((2 * n, d), dtype=np.int64)
        disp[rows, axes] = sign
        pos = np.cumsum(disp, axis=0)
        code = pos[:, 0] + n
        for a in range(1, d):
            code = code * span + (pos[:, a] + n)
        # multiset of p_1 .. p_2n.  For q != origin the count equals the
        # interior visits, so k(q) = count; for the origin, p_2n adds the two
        # endpoint half-weights, so k(origin) = interior + 1 = count as well.
        uniq, cnt = np.unique(code, return_counts=True)
        stats = np.zeros(k_max + 1)
        stats[0] = len(uniq)  # the range
        for k in range(1, k_max + 1):
            stats[k] = np.count_nonzero(cnt == k)
        sums += stats
        sumsq += stats * stats

    means = sums / samples
    var = np.maximum(sumsq / samples - means ** 2, 0.0)
    sterr = np.sqrt(var / samples)
    out = {"range": (means[0], sterr[0])}
    for k in range(1, k_max + 1):
        out[k] = (means[k], sterr[k])
    return out
