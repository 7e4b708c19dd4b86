"""Complexity measurements: entropy, variation, fibers and graph dimension."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circle import LiftedCircleMap, iterate_split
from .semiconj import SemiconjugacyEvaluator, make_evaluator
from .structure import FoldWitness, NumericalFailure, _bisect, find_fold, normalize

VARIATION_CAP = 10**7
PROFILE_MAX_POINTS = 2**22


class VariationCapExceeded(NumericalFailure):
    """The monotone-piece count of ``g^n`` passed the cap; ``n_achieved`` is the last full step."""

    def __init__(self, n_achieved: int, pieces: int, cap: int, values=()):
        self.n_achieved = n_achieved
        self.pieces = pieces
        self.cap = cap
        self.values = tuple(values)
        super().__init__(f"{pieces} monotone pieces at n = {n_achieved + 1} exceed the cap {cap}")


# ---------------------------------------------------------------------------
# entropy


def entropy_lower_bound(w: FoldWitness) -> float:
    """``log(D^N + 2) / N`` from the horseshoe of a fold witness."""
    return math.log(w.degree**w.N + 2) / w.N


def _laps(m: LiftedCircleMap):
    bounds = np.array([0.0, *m.turning_points, 1.0])
    bounds = np.unique(bounds)
    return bounds[:-1], bounds[1:]


def _invert_linear_lap(m: LiftedCircleMap, lo, hi, ys, rising):
    """Exact inverse on a lap of a piecewise-linear lift, or None."""
    if m.phi.kind == "standard":
        return None
    knots = np.mod(np.asarray(m.phi.xs) - m.rotation_offset, 1.0)
    nodes = np.unique(np.concatenate([[lo, hi], knots[(knots > lo) & (knots < hi)]]))
    vals = m(nodes)
    if not rising:
        nodes, vals = nodes[::-1], vals[::-1]
    if np.any(np.diff(vals) <= 0):
        return None
    return np.interp(ys, vals, nodes)


def _lap_ranges(m: LiftedCircleMap):
    for lo, hi in zip(*_laps(m)):
        ga, gb = m(np.array([lo, hi]))
        yield lo, hi, gb > ga, min(ga, gb), max(ga, gb)


def _preimage_count(m: LiftedCircleMap, targets: np.ndarray) -> int:
    """Size of :func:`_preimages_mod1` without building it."""
    total = 0
    for _, _, _, ymin, ymax in _lap_ranges(m):
        # number of integers k with ymin < t + k < ymax
        total += int(np.sum(np.maximum(np.ceil(ymax - targets) - np.floor(ymin - targets) - 1, 0)))
    return total


def _preimages_mod1(m: LiftedCircleMap, targets: np.ndarray) -> np.ndarray:
    """Points of ``[0, 1)`` sent by the lift into ``targets + Z`` (targets in ``[0, 1)``)."""
    out = []
    for lo, hi, rising, ymin, ymax in _lap_ranges(m):
        ks = np.arange(math.floor(ymin), math.ceil(ymax) + 1, dtype=float)
        ys = (targets[None, :] + ks[:, None]).ravel()
        ys = ys[(ys > ymin) & (ys < ymax)]
        if ys.size == 0:
            continue
        x = _invert_linear_lap(m, lo, hi, ys, rising)
        if x is None:
            pred = (lambda x: m(x) >= ys) if rising else (lambda x: m(x) <= ys)
            _, x = _bisect(pred, np.full(ys.size, lo), np.full(ys.size, hi), 0.0)
        out.append(x)
    if not out:
        return np.empty(0)
    return np.concatenate(out)


def _turning_sets(m: LiftedCircleMap, n_max: int, cap: int):
    """Yield ``(n, T_n)``: turning points of ``g^n`` in ``[0, 1)``.

    ``T_n = T_1 + g^{-1}(T_{n-1} + Z)`` since ``g^{n-1}`` has period-one turning
    structure.
    """
    base = np.mod(np.asarray(m.turning_points, dtype=float), 1.0)
    T = np.unique(base)
    for n in range(1, n_max + 1):
        if n > 1:
            count = _preimage_count(m, T) + base.size
            if count > cap:
                raise VariationCapExceeded(n - 1, count, cap)
            pre = _preimages_mod1(m, T)
            T = np.unique(np.concatenate([base, pre]))
        yield n, T


def _variation_on(m: LiftedCircleMap, n: int, T: np.ndarray) -> float:
    pts = np.unique(np.concatenate([[0.0], T, [1.0]]))
    k, f = iterate_split(m, pts, n)
    # differences of split values keep the integer parts exact
    return float(np.sum(np.abs(np.diff(k) + np.diff(f))))


def variation_sequence(m: LiftedCircleMap, n_max: int, cap: int = VARIATION_CAP) -> list:
    """``[var(g^1), ..., var(g^n_max)]`` on ``[0, 1]``.

    Raises :class:`VariationCapExceeded` (carrying the values reached) once the
    piece count passes ``cap``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    values = []
    try:
        for n, T in _turning_sets(m, n_max, cap):
            values.append(_variation_on(m, n, T))
    except VariationCapExceeded as exc:
        raise VariationCapExceeded(exc.n_achieved, exc.pieces, cap, values) from None
    return values


def variation_of_iterate(m: LiftedCircleMap, n: int, cap: int = VARIATION_CAP) -> float:
    """Exact total variation of ``g^n`` on ``[0, 1]``.

    The monotone pieces of ``g^n`` are cut at preimages of turning points, so
    the variation is the sum of piece image lengths.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1.0
    return variation_sequence(m, n, cap)[-1]


@dataclass(frozen=True)
class EntropyEstimate:
    horseshoe_lb: Optional[float]
    variation_rate: float
    n_range: tuple
    residual: float
    values: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_range"] = list(self.n_range)
        d["values"] = list(self.values)
        return d


def entropy_from_variation(m: LiftedCircleMap, n_min: int = 6, n_max: int = 14,
                           cap: int = VARIATION_CAP, witness: Optional[FoldWitness] = None) -> EntropyEstimate:
    """Least-squares slope of ``log var(g^n)`` over ``n_min..n_max``.

    When the piece cap cuts the run short the window ends at the last complete
    ``n`` and slides down to keep five points; the abort propagates only when
    fewer than five complete steps exist.  ``n_range`` reports the window used.
    """
    if n_min < 1 or n_max - n_min < 4:
        raise ValueError("need n_min >= 1 and n_max - n_min >= 4")
    try:
        values = variation_sequence(m, n_max, cap)
    except VariationCapExceeded as exc:
        if exc.n_achieved < 5:
            raise
        values = list(exc.values)
    hi = len(values)
    n_min = min(n_min, hi - 4)
    ns = np.arange(n_min, hi + 1)
    logs = np.log(np.asarray(values[n_min - 1:hi]))
    slope, icpt = np.polyfit(ns, logs, 1)
    resid = float(np.sqrt(np.mean((logs - (slope * ns + icpt)) ** 2)))
    hs = entropy_lower_bound(witness) if witness is not None else None
    return EntropyEstimate(hs, float(slope), (int(n_min), int(hi)), resid, tuple(values))


# ---------------------------------------------------------------------------
# variation of the semiconjugacy


@dataclass(frozen=True)
class VariationProfile:
    """Variation of ``alpha`` on the dyadic partitions of mesh ``2^-(M j)``."""

    depths: tuple
    values: tuple
    M: int
    bound: Optional[tuple] = None
    bound_check: Optional[tuple] = None

    @property
    def ratios(self) -> np.ndarray:
        v = np.asarray(self.values)
        return v[1:] / v[:-1]

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


def profile_exponent(m: LiftedCircleMap, N: int = 1) -> int:
    """Smallest ``M`` with ``2^M >= Lip^N``: one depth step then resolves one horseshoe level."""
    return max(1, math.ceil(N * math.log2(max(m.lipschitz, 2.0)) - 1e-12))


def variation_profile_alpha(e: SemiconjugacyEvaluator, j_max: int, witness: Optional[FoldWitness] = None,
                            M: Optional[int] = None, slack: float = 0.05,
                            max_points: int = PROFILE_MAX_POINTS) -> VariationProfile:
    """``sum_k |alpha((k+1)/2^{Mj}) - alpha(k/2^{Mj})|`` for ``j = 1..j_max``.

    Depths whose partition would exceed ``max_points`` cells are dropped.
    With a witness, depth ``j`` is compared against
    ``(1 - slack) ((D^N + 2)/D^N)^j``.
    """
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    if M is None:
        M = profile_exponent(e.map, witness.N if witness is not None else 1)
    depths = [j for j in range(1, j_max + 1) if 2 ** (M * j) <= max_points]
    if not depths:
        raise ValueError(f"even depth 1 needs more than {max_points} cells at M = {M}")
    finest = 2 ** (M * depths[-1])
    A = e(np.arange(finest + 1) / finest)
    values = []
    for j in depths:
        step = finest // 2 ** (M * j)
        values.append(float(np.sum(np.abs(np.diff(A[::step])))))
    bound = check = None
    if witness is not None:
        q = (witness.degree**witness.N + 2) / witness.degree**witness.N
        bound = tuple(q**j for j in depths)
        check = tuple(bool(v >= (1 - slack) * b) for v, b in zip(values, bound))
    return VariationProfile(tuple(depths), tuple(values), int(M), bound, check)


# ---------------------------------------------------------------------------
# fibers


@dataclass(frozen=True)
class FiberReport:
    theta: float
    resolutions: tuple
    component_counts: tuple
    gap_threshold: float
    phase: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["resolutions"] = list(self.resolutions)
        d["component_counts"] = list(self.component_counts)
        return d


def _alpha_on_grid(e: SemiconjugacyEvaluator, R: int, phase: float) -> np.ndarray:
    return e((np.arange(R + 1) + phase) / R)


def _count_components(A: np.ndarray, theta: float, thr: float) -> int:
    """Components of ``{alpha = theta mod 1}`` seen on a closed periodic grid.

    Items alternate grid point, cell, grid point, ...; a point belongs to the
    fiber when it is within ``thr`` of a level, a cell when a level lies strictly
    between its end values.  Components are cyclic runs of fiber items.
    """
    w = A - theta
    near = np.abs(w - np.round(w)) <= thr
    lo = np.minimum(w[:-1], w[1:])
    hi = np.maximum(w[:-1], w[1:])
    # integers strictly between the end values
    inside = np.maximum(np.ceil(hi) - np.floor(lo) - 1.0, 0.0)
    pts = near[:-1]
    cells = inside > 0
    R = cells.size
    items = np.empty(2 * R, dtype=bool)
    items[0::2] = pts
    items[1::2] = cells
    if items.all():
        return 1
    # rotate so the sequence starts on a non-fiber item, then count run starts
    start = int(np.argmin(items))
    seq = np.roll(items, -start)
    runs = int(np.count_nonzero(seq[1:] & ~seq[:-1]))
    # a cell crossing several levels holds that many separate fiber points
    extra = int(np.sum(np.maximum(inside - 1.0, 0.0)))
    return runs + extra


def fiber_components(e: SemiconjugacyEvaluator, theta: float, resolutions: Sequence[int],
                     phase: float = 0.0) -> FiberReport:
    """Component counts of ``alpha^{-1}(theta)`` on ``R``-point grids of the circle.

    Crossings are separated when some grid point between them stays more than
    ``10 * tail_bound`` away from every level ``theta + k``.
    """
    return fiber_survey(e, [theta], resolutions, phase)[0]


def fiber_survey(e: SemiconjugacyEvaluator, thetas: Sequence[float], resolutions: Sequence[int],
                 phase: float = 0.0) -> list:
    """:func:`fiber_components` for several angles, sharing one scan per resolution."""
    resolutions = [int(r) for r in resolutions]
    if not resolutions or any(r < 2 for r in resolutions):
        raise ValueError("resolutions must be integers >= 2")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("resolutions must be increasing")
    if not 0.0 <= phase < 1.0:
        raise ValueError("phase must lie in [0, 1)")
    thr = 10.0 * e.tail_bound
    counts = [[] for _ in thetas]
    for R in resolutions:
        A = _alpha_on_grid(e, R, phase)
        for i, th in enumerate(thetas):
            counts[i].append(_count_components(A, float(th), thr))
    return [FiberReport(float(th), tuple(resolutions), tuple(c), thr, float(phase))
            for th, c in zip(thetas, counts)]


# ---------------------------------------------------------------------------
# box dimension


@dataclass(frozen=True)
class DimensionEstimate:
    dimension: float
    depths: tuple
    counts: tuple
    residual: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["depths"] = list(self.depths)
        d["counts"] = list(self.counts)
        return d


def box_counts(e: SemiconjugacyEvaluator, depths: Sequence[int], oversample: int = 4) -> list:
    """Occupied ``2^-j`` boxes of the graph of ``alpha`` in the unit torus.

    Each column is sampled at ``2^oversample`` sub-points (ends included); the
    graph is connected there, so every box between the lowest and highest
    value in a column is hit.  Working with the lift wraps the ``y`` seam.
    """
    depths = [int(j) for j in depths]
    jmax = max(depths)
    n = 2 ** (jmax + oversample)
    A = e(np.arange(n + 1) / n)
    out = []
    for j in depths:
        cols = 2**j
        per = n // cols
        blocks = np.lib.stride_tricks.sliding_window_view(A, per + 1)[::per]
        lo = np.floor(blocks.min(axis=1) * cols)
        hi = np.ceil(blocks.max(axis=1) * cols)
        occupied = np.minimum(np.maximum(hi - lo, 1.0), cols)
        out.append(int(occupied.sum()))
    return out


def box_dimension_graph(e: SemiconjugacyEvaluator, depths: Sequence[int] = tuple(range(6, 15)),
                        oversample: int = 4) -> DimensionEstimate:
    """Slope of ``log2(box count)`` against ``j``."""
    depths = sorted(int(j) for j in depths)
    if len(depths) < 3 or depths[0] < 1:
        raise ValueError("need at least three depths >= 1")
    counts = box_counts(e, depths, oversample)
    js = np.asarray(depths, dtype=float)
    logs = np.log2(np.asarray(counts, dtype=float))
    slope, icpt = np.polyfit(js, logs, 1)
    resid = float(np.sqrt(np.mean((logs - (slope * js + icpt)) ** 2)))
    return DimensionEstimate(float(slope), tuple(depths), tuple(counts), resid)


# ---------------------------------------------------------------------------
# one-stop report


@dataclass(frozen=True)
class AnalysisConfig:
    tol: float = 1e-12
    depth: Optional[int] = None
    n_min: int = 6
    n_max: int = 14
    var_cap: int = VARIATION_CAP
    fold_n_max: int = 8
    profile_j_max: int = 7
    fiber_thetas: int = 20
    fiber_resolutions: tuple = (2**12, 2**15, 2**18)
    box_depths: tuple = tuple(range(6, 15))
    seed: int = 0


@dataclass
class AnalysisReport:
    map: dict
    depth_used: int
    tail_bound: float
    lift_monotone: bool
    fold: Optional[dict]
    entropy: dict
    variation_profile: dict
    fibers: dict
    dimension: dict
    config: dict
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def fiber_thetas(seed: int, count: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 1.0, count)


def lift_nondecreasing(m: LiftedCircleMap) -> bool:
    """No turning points and no negative slope (the derivative-sign test)."""
    return not m.turning_points and m._min_slope() >= 0


def analyze(m: LiftedCircleMap, cfg: AnalysisConfig = AnalysisConfig()) -> AnalysisReport:
    e = make_evaluator(m, cfg.depth, cfg.tol)
    mn = normalize(m)
    w = find_fold(make_evaluator(mn, cfg.depth, cfg.tol), cfg.fold_n_max)
    ent = entropy_from_variation(m, cfg.n_min, cfg.n_max, cfg.var_cap, w)
    prof = variation_profile_alpha(e, cfg.profile_j_max, w)
    thetas = fiber_thetas(cfg.seed, cfg.fiber_thetas)
    fibers = fiber_survey(e, thetas, cfg.fiber_resolutions)
    counts = np.array([f.component_counts for f in fibers])
    medians = [float(v) for v in np.median(counts, axis=0)]
    dim = box_dimension_graph(e, cfg.box_depths)
    D = m.degree
    checks = {
        "entropy_var_at_least_log_degree": ent.variation_rate >= math.log(D) - 0.02,
        "entropy_var_at_least_horseshoe": (w is None or ent.variation_rate >= ent.horseshoe_lb - 0.02),
        "profile_nondecreasing": bool(np.all(np.diff(prof.values) >= -1e-9)),
        "fiber_counts_positive": bool(counts.min() >= 1),
        "monotone_implies_no_fold": not (m.is_monotone and w is not None),
    }
    return AnalysisReport(
        map=m.to_spec(),
        depth_used=e.depth,
        tail_bound=e.tail_bound,
        lift_monotone=lift_nondecreasing(m),
        fold=w.to_dict() if w is not None else None,
        entropy=ent.to_dict(),
        variation_profile=prof.to_dict(),
        fibers={"seed": cfg.seed, "thetas": [float(t) for t in thetas],
                "resolutions": list(cfg.fiber_resolutions), "counts": counts.tolist(),
                "median": medians, "gap_threshold": 10.0 * e.tail_bound},
        dimension=dim.to_dict(),
        config={k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        checks=checks,
    )
