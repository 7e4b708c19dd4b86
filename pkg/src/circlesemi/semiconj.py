"""The degree-one semiconjugacy to angle multiplication.

For a lift ``g = D*id + phi`` the semiconjugacy lift is ``alpha = id + gamma``
with ``gamma = sum_i phi(g^i) / D^(i+1)``.  Evaluation is pointwise: the orbit
is followed on the circle (``phi`` is periodic) so the terms keep full
precision, and truncating after ``depth`` terms costs at most
``|phi| / ((D - 1) * D^depth)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import LiftedCircleMap, iterate_lift

DEFAULT_TOL = 1e-12
DEPTH_CAP = 60


@dataclass(frozen=True)
class SemiconjugacyEvaluator:
    map: LiftedCircleMap
    depth: int
    capped: bool = False

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    @property
    def tail_bound(self) -> float:
        D = self.map.degree
        return self.map.phi_sup_norm / ((D - 1) * float(D) ** self.depth)

    def gamma(self, x):
        """Truncated periodic part ``gamma_n(x)``."""
        m = self.map
        D = m.degree
        u = np.mod(np.asarray(x, dtype=float), 1.0)
        acc = np.zeros_like(u)
        w = 1.0 / D
        for _ in range(self.depth):
            p = m.periodic(u)
            acc += w * p
            w /= D
            u = np.mod(D * u + p, 1.0)
        return acc

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x + self.gamma(x)


def depth_for_tolerance(m: LiftedCircleMap, eps: float) -> int:
    """Smallest ``n`` with ``|phi| / ((D-1) D^n) <= eps`` (0 when ``phi == 0``)."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    norm = m.phi_sup_norm
    if norm == 0.0:
        return 0
    D = m.degree
    n = 0
    while norm / ((D - 1) * float(D) ** n) > eps:
        n += 1
    return n


def make_evaluator(m: LiftedCircleMap, depth: int | None = None, tol: float = DEFAULT_TOL,
                   cap: int = DEPTH_CAP) -> SemiconjugacyEvaluator:
    """Evaluator at an explicit depth, or the depth meeting ``tol`` capped at ``cap``."""
    if depth is not None:
        return SemiconjugacyEvaluator(m, int(depth))
    n = depth_for_tolerance(m, tol)
    return SemiconjugacyEvaluator(m, min(n, cap), capped=n > cap)


def alpha_eval(e: SemiconjugacyEvaluator, x):
    out = e(x)
    return float(out) if out.ndim == 0 else out


def operator_G_step(m: LiftedCircleMap, sigma) -> np.ndarray:
    """``(phi + sigma o g) / D`` on the uniform grid of ``[0, 1)`` carrying ``sigma``.

    ``sigma o g`` is read off by 1-periodic linear interpolation.
    """
    sigma = np.asarray(sigma, dtype=float)
    M = sigma.size
    xs = np.arange(M) / M
    u = m.circle_step(xs)
    sig_at = np.interp(u, np.append(xs, 1.0), np.append(sigma, sigma[0]))
    return (m.periodic(xs) + sig_at) / m.degree


def gamma_by_operator_iteration(m: LiftedCircleMap, grid: int, steps: int) -> np.ndarray:
    """``G^steps(0)`` sampled on ``grid`` points of ``[0, 1)``."""
    sigma = np.zeros(grid)
    for _ in range(steps):
        sigma = operator_G_step(m, sigma)
    return sigma


def alpha_by_lift_iteration(m: LiftedCircleMap, x, n: int):
    """``g^n(x) / D^n``, the iteration of the lift operator started at the identity."""
    return iterate_lift(m, x, n) / float(m.degree) ** n


def semiconjugacy_defect(e: SemiconjugacyEvaluator, grid: int = 10_000) -> float:
    """``max |alpha(g(x)) - D alpha(x)|`` over ``grid`` points of ``[0, 1)``."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    x = np.arange(grid) / grid
    lhs = e(e.map(x))
    rhs = e.map.degree * e(x)
    return float(np.max(np.abs(lhs - rhs)))


def shadow_check(e: SemiconjugacyEvaluator, x: float, n_max: int) -> float:
    """Largest ``|g^k(x) - alpha(g^k(x))| = |gamma(g^k(x))|`` for ``k <= n_max``.

    Bounded by ``|phi| + tail_bound``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    m = e.map
    u = np.empty(n_max + 1)
    u[0] = float(np.mod(x, 1.0))
    for k in range(n_max):
        u[k + 1] = m.circle_step(u[k])
    return float(np.max(np.abs(e.gamma(u))))
