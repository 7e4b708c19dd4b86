"""Leftmost preimages, folds, horseshoes, coded orbits and plateaus.

Everything here works at a finite resolution: scans on grids, refined by
bisection.  Results certify what they find (a fold, a covering relation, a
plateau) but absence only means "not seen at this resolution".
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Optional, Sequence

import numpy as np

from .circle import LiftedCircleMap, conjugate_by_rotation, iterate_lift
from .semiconj import SemiconjugacyEvaluator, make_evaluator

SCAN_DENSITY = 100_000
PREIMAGE_TOL = 1e-12
FOLD_TOL = 1e-9
COVER_TOL = 1e-6
CELL_GRID = 4096


class NumericalFailure(RuntimeError):
    """A numerical procedure could not produce a trustworthy answer."""


class NoCrossingError(NumericalFailure):
    pass


class CoveringError(NumericalFailure):
    def __init__(self, eta, message):
        self.eta = eta
        super().__init__(f"covering relation for {eta!r} failed: {message}")


class EmptyPullbackError(NumericalFailure):
    pass


def _bisect(pred, a, b, tol, max_iter=200):
    """Shrink ``[a, b]`` with ``pred(a)`` false and ``pred(b)`` true (vectorised)."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    for _ in range(max_iter):
        if np.all(b - a <= tol):
            break
        mid = 0.5 * (a + b)
        stuck = (mid <= a) | (mid >= b)
        if np.all(stuck):
            break
        t = np.asarray(pred(mid), dtype=bool)
        b = np.where(t & ~stuck, mid, b)
        a = np.where(~t & ~stuck, mid, a)
    return a, b


# ---------------------------------------------------------------------------
# leftmost preimages


@lru_cache(maxsize=16)
def _alpha_table(e: SemiconjugacyEvaluator, scan: int) -> np.ndarray:
    return e(np.arange(scan) / scan)


def _scan_preimages(e, rs, scan, tol):
    """Leftmost grid crossing of ``r - tail_bound`` followed by bisection."""
    nrm = e.map.phi_sup_norm
    thr = rs - e.tail_bound
    j0 = math.floor((rs.min() - nrm - 1.0) * scan)
    j1 = math.ceil((rs.max() + nrm + 1.0) * scan)
    js = np.arange(j0, j1 + 1)
    q, i = np.divmod(js, scan)
    values = _alpha_table(e, scan)[i] + q
    xs = js / scan
    run_max = np.maximum.accumulate(values)

    idx = np.searchsorted(run_max, thr, side="left")
    if np.any(idx >= js.size) or np.any(idx == 0):
        bad = rs[(idx >= js.size) | (idx == 0)][0]
        raise NoCrossingError(f"no crossing of level {bad!r} inside the search window")
    lo = xs[idx - 1]
    hi = xs[idx].copy()

    near = np.searchsorted(run_max, thr - 10.0 * tol, side="left")
    h = 1.0 / scan
    for n in np.nonzero(near < idx)[0]:
        cand = np.nonzero(values[near[n]:idx[n]] >= thr[n] - 10.0 * tol)[0][:256] + near[n]
        for c in cand:
            sub = xs[c] - h + h * np.arange(1, 20) / 10.0
            hit = np.nonzero(e(sub) >= thr[n])[0]
            if hit.size:
                k = hit[0]
                lo[n] = sub[k - 1] if k > 0 else xs[c] - h
                hi[n] = sub[k]
                break

    _, b = _bisect(lambda x: e(x) >= thr, lo, hi, tol)
    return b


@lru_cache(maxsize=64)
def _increasing_laps(m: LiftedCircleMap):
    bounds = np.array([0.0, *m.turning_points, 1.0])
    vals = m(bounds)
    up = vals[1:] > vals[:-1]
    left, right = bounds[:-1][up], bounds[1:][up]
    tops = np.maximum.accumulate(vals[1:][up])
    return left, right, tops, float(vals.max()) - m.degree


def leftmost_lift_preimage(m: LiftedCircleMap, y):
    """``min g^{-1}(y)``, i.e. the first ``x`` at which the lift reaches ``y``.

    The lift never exceeds ``D k + max_{[-1, 0]} g`` left of ``k``, which pins
    the period; inside it the first increasing lap whose top reaches ``y``
    holds the answer.
    """
    y = np.asarray(y, dtype=float)
    D = m.degree
    left, right, tops, g_before = _increasing_laps(m)
    k = np.ceil((y - g_before) / D) - 1.0
    yy = y - D * k
    # keep g_before < yy <= g_before + D against round-off in the division
    k = np.where(yy <= g_before, k - 1.0, np.where(yy > g_before + D, k + 1.0, k))
    yy = y - D * k
    j = np.minimum(np.searchsorted(tops, yy, side="left"), tops.size - 1)
    _, b = _bisect(lambda x: m(x) >= yy, left[j], right[j], 0.0)
    return k + b


def leftmost_preimages(e: SemiconjugacyEvaluator, rs, scan: int = SCAN_DENSITY,
                       tol: float = PREIMAGE_TOL, refine: Optional[int] = None) -> np.ndarray:
    """``p_r = min alpha^{-1}(r)`` for every ``r`` in ``rs``.

    ``alpha`` is scanned at ``scan`` points per unit over
    ``[r - |phi| - 1, r + |phi| + 1]``; the first grid value reaching
    ``r - tail_bound`` is bracketed and bisected to width ``tol``.  Values just
    short of the level get one extra pass at ten times the density, since a
    tangential touch between grid points would otherwise be missed.

    When ``alpha`` is not monotone, ``alpha - r`` typically changes sign
    infinitely often just right of ``p_r``, so the grid can only place
    ``p_r`` to within a cell.  The scan therefore seeds ``p_{D^n r}`` and
    ``p_r`` is recovered through ``p_r = min g^{-1}(p_{D r})`` applied ``n``
    times, each step dividing the seed error by the local slope.
    ``refine=0`` returns the plain scan.
    """
    if scan < 1000:
        raise ValueError("scan must be >= 1000")
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    if rs.size == 0:
        return rs.copy()
    m = e.map
    D = m.degree
    if refine is None:
        refine = int(40 // math.log2(D))
    direct = _scan_preimages(e, rs, scan, tol)
    if refine == 0:
        return direct
    lifted = rs * float(D) ** refine
    whole = np.floor(lifted)
    frac = lifted - whole
    y = whole + _scan_preimages(e, frac, scan, tol)
    for _ in range(refine):
        y = leftmost_lift_preimage(m, y)
    # the refined point must still sit on the level and no later than the scan's
    ok = (np.abs(e(y) - rs) <= _level_slack(m)) & (y <= direct + 1.0 / scan)
    return np.where(ok, y, direct)


def _level_slack(m: LiftedCircleMap) -> float:
    """How far ``alpha`` may move when its input moves by a few ulps.

    ``alpha`` is Holder with exponent about ``log D / log Lip``, so a rounding
    of ``1e-15`` in an orbit point can shift it by ``1e-15 ** kappa``.
    """
    kappa = math.log(m.degree) / math.log(max(m.lipschitz, m.degree + 1.0))
    return max(1e-9, 100.0 * 1e-15**kappa)


def p_r(e: SemiconjugacyEvaluator, r: float, scan: int = SCAN_DENSITY, tol: float = PREIMAGE_TOL,
        refine: Optional[int] = None) -> float:
    """Leftmost ``x`` with ``alpha(x) = r``."""
    return float(leftmost_preimages(e, [r], scan, tol, refine)[0])


def normalize(m: LiftedCircleMap, e: Optional[SemiconjugacyEvaluator] = None,
              scan: int = SCAN_DENSITY) -> LiftedCircleMap:
    """Conjugate by the rotation that moves ``p_0`` to 0."""
    if e is None:
        e = make_evaluator(m)
    elif e.map != m:
        raise ValueError("evaluator was built for a different map")
    return conjugate_by_rotation(m, p_r(e, 0.0, scan))


# ---------------------------------------------------------------------------
# folds


@dataclass(frozen=True)
class FoldWitness:
    """``p_left < x_hat < p_right`` with ``g^N(x_hat) = K - 1``."""

    N: int
    K: int
    x_hat: float
    p_left: float
    p_right: float
    residual: float
    degree: int = 2

    def to_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "x_hat": self.x_hat, "p_left": self.p_left,
                "p_right": self.p_right, "residual": self.residual, "degree": self.degree}


def find_fold(e: SemiconjugacyEvaluator, n_max: int = 10, cell_grid: int = CELL_GRID,
              scan: int = SCAN_DENSITY, fold_tol: float = FOLD_TOL) -> Optional[FoldWitness]:
    """First ``(N, K)`` (lexicographic) whose cell ``[p_{K,N}, p_{K+1,N}]`` folds below ``K - 1``.

    ``e.map`` must be normalized.  ``None`` means no fold up to ``n_max`` at
    this grid resolution.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    m = e.map
    D = m.degree
    p0 = p_r(e, 0.0, scan)
    if abs(p0) > 1e-6:
        raise ValueError(f"map is not normalized (p_0 = {p0!r}); call normalize() first")
    t = np.linspace(0.0, 1.0, cell_grid)
    for N in range(1, n_max + 1):
        cells = D**N
        ps = leftmost_preimages(e, np.arange(cells + 1) / cells, scan)
        left, right = ps[:-1], ps[1:]
        xs = left[:, None] + (right - left)[:, None] * t[None, :]
        vals = iterate_lift(m, xs, N)
        levels = np.arange(cells)[:, None] - 1.0
        folded = np.nonzero(np.any(vals <= levels, axis=1))[0]
        if folded.size == 0:
            continue
        K = int(folded[0])
        i = int(np.argmax(vals[K] <= K - 1))
        if i == 0:
            # g^N(p_{K,N}) = K, so the first grid point can only qualify through round-off
            continue
        target = K - 1.0

        def g_n(x):
            return iterate_lift(m, x, N)

        a, b = float(xs[K, i - 1]), float(xs[K, i])
        for _ in range(200):
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if g_n(mid) <= target:
                b = mid
            else:
                a = mid
            if abs(g_n(b) - target) <= fold_tol * 1e-3:
                break
        x_hat = b if abs(g_n(b) - target) <= abs(g_n(a) - target) else a
        residual = abs(g_n(x_hat) - target)
        if residual > fold_tol:
            raise NumericalFailure(f"fold bisection did not converge (residual {residual:.3g})")
        return FoldWitness(N, K, x_hat, float(left[K]), float(right[K]), residual, D)
    return None


# ---------------------------------------------------------------------------
# horseshoes


@dataclass(frozen=True)
class HorseshoeCover:
    """Intervals ``I_eta`` whose ``g^N`` images cover ``[0, 1] + address[eta]``.

    Letters are the integers ``k != K`` below ``D^N`` and, when built from a
    fold, ``"a"``, ``"b"``, ``"c"``.
    """

    N: int
    K: Optional[int]
    degree: int
    intervals: dict
    address: dict

    @property
    def alphabet(self) -> tuple:
        return tuple(self.intervals)

    @property
    def trivial_letters(self) -> frozenset:
        """Letters that may repeat forever in two codings of one point."""
        top = self.degree**self.N - 1
        if self.K == 0:
            return frozenset({top, "a"})
        if self.K == top:
            return frozenset({"c", 0})
        return frozenset({top, 0})

    @property
    def nontrivial_letters(self) -> tuple:
        return tuple(s for s in self.alphabet if s not in self.trivial_letters)

    def has_nontrivial_tail(self, word: Sequence[Hashable]) -> bool:
        """Finite-word version of the tail condition: the last letter is nontrivial."""
        return bool(word) and word[-1] not in self.trivial_letters

    def verify(self, m: LiftedCircleMap, tol: float = COVER_TOL) -> dict:
        """Failed covering relations, keyed by letter (empty when all hold)."""
        failures = {}
        for eta, (lo, hi) in self.intervals.items():
            ends = iterate_lift(m, np.array([lo, hi]), self.N)
            want = self.address[eta]
            if not (lo < hi and ends.min() <= want + tol and ends.max() >= want + 1 - tol):
                failures[eta] = (float(ends[0]), float(ends[1]))
        return failures

    def to_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "degree": self.degree,
                "intervals": {str(k): list(v) for k, v in self.intervals.items()},
                "address": {str(k): v for k, v in self.address.items()}}


def dyadic_cover(N: int = 1, degree: int = 2) -> HorseshoeCover:
    """The cover of ``x -> D x`` by ``[k/D^N, (k+1)/D^N]``."""
    n = degree**N
    intervals = {k: (k / n, (k + 1) / n) for k in range(n)}
    return HorseshoeCover(N, None, degree, intervals, {k: k for k in range(n)})


def _first_reach(f, lo, hi, pred, grid, tol):
    xs = np.linspace(lo, hi, grid)
    ok = pred(f(xs))
    if not ok.any():
        return None
    i = int(np.argmax(ok))
    if i == 0:
        return lo
    _, b = _bisect(lambda x: pred(f(x)), xs[i - 1], xs[i], tol)
    return float(b)


def _last_reach(f, lo, hi, pred, grid, tol):
    xs = np.linspace(lo, hi, grid)
    ok = pred(f(xs))
    if not ok.any():
        return None
    i = grid - 1 - int(np.argmax(ok[::-1]))
    if i == grid - 1:
        return hi
    a, _ = _bisect(lambda x: np.logical_not(pred(f(x))), xs[i], xs[i + 1], tol)
    return float(a)


def build_horseshoe(m: LiftedCircleMap, w: FoldWitness, grid: int = CELL_GRID,
                    tol: float = 1e-14, cover_tol: float = COVER_TOL) -> HorseshoeCover:
    """The ``(D^N + 2)``-letter cover attached to a fold witness.

    Inside the critical cell ``g^N`` runs from ``K`` down through ``K - 1`` at
    ``x_hat`` and back up to ``K + 1``; ``I_a`` is the last descent from ``K``
    to ``K - 1``, ``I_b`` the first ascent after it, ``I_c`` the first climb
    from ``K`` to ``K + 1`` after that.  Every other cell is ``I_k`` itself.
    """
    N, K, D = w.N, w.K, m.degree
    cells = D**N

    def f(x):
        return iterate_lift(m, x, N)

    def need(v, name):
        if v is None:
            raise CoveringError(name, "level not reached inside the critical cell")
        return v

    # levels met exactly at a cell end are only met up to round-off
    slack = 1e-12 * (1 + abs(K))
    a1 = need(_last_reach(f, w.p_left, w.x_hat, lambda v: v >= K - slack, grid, tol), "a")
    u = need(_first_reach(f, w.x_hat, w.p_right, lambda v: v >= K - slack, grid, tol), "b")
    b0 = need(_last_reach(f, w.x_hat, u, lambda v: v <= K - 1 + slack, grid, tol), "b")
    c1 = need(_last_reach(f, u, w.p_right, lambda v: v <= K + slack, grid, tol), "c")
    c2 = need(_first_reach(f, c1, w.p_right, lambda v: v >= K + 1 - slack, grid, tol), "c")

    others = [k for k in range(cells) if k != K]
    ps = {}
    if others:
        e = make_evaluator(m)
        vals = leftmost_preimages(e, np.arange(cells + 1) / cells)
        ps = {k: (float(vals[k]), float(vals[k + 1])) for k in others}
    intervals = dict(ps)
    intervals.update({"a": (a1, w.x_hat), "b": (b0, u), "c": (c1, c2)})
    address = {k: k for k in others}
    address.update({"a": K - 1, "b": K - 1, "c": K})
    cover = HorseshoeCover(N, K, D, intervals, address)
    failures = cover.verify(m, cover_tol)
    if failures:
        eta = next(iter(failures))
        raise CoveringError(eta, f"endpoint images {failures[eta]} miss [0, 1] + {address[eta]}")
    return cover


# ---------------------------------------------------------------------------
# coded orbits


@dataclass(frozen=True)
class CodedInterval:
    lo: float
    hi: float
    word: tuple = field(default=())

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _pullback(f, dom, target, grid=4096, max_grid=2**20, tol=1e-15, slack=1e-12):
    """Subinterval ``J`` of ``dom`` with ``f(J) = target`` (first one from the left)."""
    lo, hi = target
    while grid <= max_grid:
        xs = np.linspace(dom[0], dom[1], grid)
        F = f(xs)
        kind = np.where(F <= lo + slack, -1, np.where(F >= hi - slack, 1, 0))
        ext = np.nonzero(kind)[0]
        if ext.size >= 2:
            ks = kind[ext]
            ch = np.nonzero(ks[1:] != ks[:-1])[0]
            if ch.size:
                i, j = int(ext[ch[0]]), int(ext[ch[0] + 1])
                first_level = lo if kind[i] < 0 else hi
                second_level = hi if kind[i] < 0 else lo
                if kind[i] < 0:
                    left = _bisect(lambda x: f(x) > first_level, xs[i], xs[i + 1], tol)[1]
                    start = max(float(left), xs[j - 1])
                    right = _bisect(lambda x: f(x) >= second_level, start, xs[j], tol)[0]
                else:
                    left = _bisect(lambda x: f(x) < first_level, xs[i], xs[i + 1], tol)[1]
                    start = max(float(left), xs[j - 1])
                    right = _bisect(lambda x: f(x) <= second_level, start, xs[j], tol)[0]
                left, right = float(left), float(right)
                if right < left:
                    left, right = right, left
                return left, right
        grid *= 8
    raise EmptyPullbackError(f"target {target} not covered by the image of {dom}")


def coded_point(cover: HorseshoeCover, m: LiftedCircleMap, word: Sequence[Hashable]) -> CodedInterval:
    """Interval ``J`` in ``I_{s_0}`` whose ``g^{N i}`` images follow the word.

    ``g^{N i}(J)`` lies in ``I_{s_i} + sum_{l<i} D^{N(i-l-1)} address(s_l)``.
    Built by pulling the last interval back one block at a time; the
    translation is carried separately so the arithmetic stays near ``[0, 1]``.
    """
    word = tuple(word)
    if not word:
        raise ValueError("word must be non-empty")
    for s in word:
        if s not in cover.intervals:
            raise KeyError(f"letter {s!r} not in the alphabet {cover.alphabet}")
    N = cover.N

    def f(x):
        return iterate_lift(m, x, N)

    J = cover.intervals[word[-1]]
    for s in reversed(word[:-1]):
        shift = cover.address[s]
        J = _pullback(f, cover.intervals[s], (J[0] + shift, J[1] + shift))
    return CodedInterval(float(J[0]), float(J[1]), word)


def itinerary_shifts(cover: HorseshoeCover, word: Sequence[Hashable]) -> list:
    """Translations ``t_i = sum_{l<i} D^{N(i-l-1)} address(s_l)``."""
    t = [0]
    for s in word[:-1]:
        t.append(cover.degree**cover.N * t[-1] + cover.address[s])
    return t


def words(cover: HorseshoeCover, length: int, letters: Optional[Sequence] = None):
    return itertools.product(letters if letters is not None else cover.alphabet, repeat=length)


# ---------------------------------------------------------------------------
# plateaus (monotone-light decomposition)


@dataclass(frozen=True)
class PlateauDecomposition:
    """Maximal intervals of ``[0, 1]`` on which ``alpha`` is constant to ``eps``.

    ``monotone`` collapses each plateau to a point of ``[0, 1]``; ``light``
    evaluates ``alpha`` on the collapsed circle.
    """

    plateaus: tuple
    eps: float
    evaluator: SemiconjugacyEvaluator

    @property
    def collapsed_length(self) -> float:
        return float(sum(b - a for a, b in self.plateaus))

    def _gaps(self):
        starts = [0.0] + [b for _, b in self.plateaus]
        ends = [a for a, _ in self.plateaus] + [1.0]
        lengths = np.array(ends) - np.array(starts)
        return np.array(starts), np.concatenate([[0.0], np.cumsum(lengths)])

    def monotone(self, x):
        x = np.asarray(x, dtype=float)
        whole = np.floor(x)
        u = x - whole
        removed = np.zeros_like(u)
        for a, b in self.plateaus:
            removed += np.clip(u - a, 0.0, b - a)
        return whole + (u - removed) / (1.0 - self.collapsed_length)

    def monotone_inverse(self, z):
        """A preimage under ``monotone`` (a plateau's left end for collapsed points)."""
        z = np.asarray(z, dtype=float)
        whole = np.floor(z)
        s = (z - whole) * (1.0 - self.collapsed_length)
        starts, cum = self._gaps()
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, starts.size - 1)
        return whole + starts[k] + (s - cum[k])

    def light(self, z):
        return self.evaluator(self.monotone_inverse(z))

    def recompose(self, x):
        return self.light(self.monotone(x))


def plateau_decomposition(e: SemiconjugacyEvaluator, resolution: int = 2**12,
                          eps: Optional[float] = None) -> PlateauDecomposition:
    """Scan ``alpha`` on ``resolution + 1`` points of ``[0, 1]`` and merge flat runs.

    ``eps`` defaults to ten times the evaluator's tail bound; below that a flat
    stretch cannot be told apart from truncation error.
    """
    if resolution < 2**10:
        raise ValueError("resolution must be >= 2**10")
    if eps is None:
        eps = 10.0 * e.tail_bound
    xs = np.arange(resolution + 1) / resolution
    A = e(xs)
    flat = np.abs(np.diff(A)) <= eps
    plateaus = []
    i = 0
    n = resolution
    while i < n:
        if not flat[i]:
            i += 1
            continue
        j = i
        lo = hi = A[i]
        while j < n:
            lo2, hi2 = min(lo, A[j + 1]), max(hi, A[j + 1])
            if hi2 - lo2 > eps:
                break
            lo, hi = lo2, hi2
            j += 1
        plateaus.append((float(xs[i]), float(xs[j])))
        i = j + 1
    return PlateauDecomposition(tuple(plateaus), float(eps), e)


# ---------------------------------------------------------------------------
# locally eventually onto


def leo_test(m: LiftedCircleMap, U: Sequence[float], n_max: int = 25, grid: int = 1000) -> Optional[int]:
    """First ``n >= 1`` with ``g^n(U)`` spanning a full unit, or ``None``.

    ``g^n(U)`` is an interval containing every sampled image, so a sampled
    spread of at least one certifies ``g^n(U)`` covers the circle.
    """
    lo, hi = float(U[0]), float(U[1])
    if not hi > lo:
        raise ValueError("U must be a nontrivial interval")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    x = np.linspace(lo, hi, grid)
    k = np.floor(x)
    f = x - k
    for n in range(1, n_max + 1):
        k, f = _step_split(m, k, f)
        v = k + f
        if v.max() - v.min() >= 1.0:
            return n
    return None


def _step_split(m, k, f):
    y = m(f)
    fl = np.floor(y)
    return m.degree * k + fl, y - fl
