"""Lifts of continuous degree-D circle maps.

A lift is stored as ``g(x) = D*x + phi(x)`` with ``phi`` 1-periodic.  Maps are
immutable; conjugation by a rigid rotation is recorded as an offset and applied
on evaluation rather than by resampling.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
# float64 represents every integer up to 2**53; beyond that the integer part of
# an iterate no longer carries its fractional part.
_MAX_EXACT_INT = float(2**53)

KINDS = ("standard", "pwl", "table")
MIN_TABLE_SAMPLES = 16


class MapSpecError(ValueError):
    """A map specification is malformed.  ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class PeriodicPart:
    """The 1-periodic part ``phi`` of a lift.

    ``standard`` is ``omega + b*sin(2*pi*x)``.  ``pwl`` and ``table`` are both
    linear interpolation through ``(xs, ys)`` on ``[0, 1]``; a table is the
    special case of a uniform grid that includes both endpoints.
    """

    kind: str
    b: float = 0.0
    omega: float = 0.0
    xs: tuple = ()
    ys: tuple = ()

    @classmethod
    def standard(cls, b: float, omega: float = 0.0) -> "PeriodicPart":
        return cls("standard", b=float(b), omega=float(omega))

    @classmethod
    def zero(cls) -> "PeriodicPart":
        return cls.standard(0.0, 0.0)

    @classmethod
    def piecewise_linear(cls, points: Sequence[Sequence[float]]) -> "PeriodicPart":
        pts = [(float(x), float(y)) for x, y in points]
        xs = tuple(p[0] for p in pts)
        ys = tuple(p[1] for p in pts)
        _check_breakpoints(xs, ys, "points")
        return cls("pwl", xs=xs, ys=ys)

    @classmethod
    def tabulated(cls, samples: Sequence[float]) -> "PeriodicPart":
        ys = tuple(float(y) for y in samples)
        if len(ys) < MIN_TABLE_SAMPLES:
            raise MapSpecError("samples", f"need at least {MIN_TABLE_SAMPLES} samples, got {len(ys)}")
        xs = tuple(np.linspace(0.0, 1.0, len(ys)).tolist())
        _check_breakpoints(xs, ys, "samples")
        return cls("table", xs=xs, ys=ys)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = np.mod(x, 1.0)
        if self.kind == "standard":
            return self.omega + self.b * np.sin(TWO_PI * u)
        return np.interp(u, self.xs, self.ys)

    def sup_norm(self, shift: float = 0.0) -> float:
        """Exact ``sup |phi + shift|``.

        Linear interpolation cannot exceed its node values, so for the
        piecewise kinds the node maximum is already exact.
        """
        if self.kind == "standard":
            return abs(self.omega + shift) + abs(self.b)
        return float(np.max(np.abs(np.asarray(self.ys) + shift)))

    def slopes(self) -> np.ndarray:
        """Segment slopes of a piecewise part."""
        if self.kind == "standard":
            raise TypeError("standard family is not piecewise linear")
        return np.diff(self.ys) / np.diff(self.xs)


def _check_breakpoints(xs, ys, name):
    if len(xs) < 2:
        raise MapSpecError(name, "need at least two breakpoints")
    if not all(math.isfinite(v) for v in xs + ys):
        raise MapSpecError(name, "values must be finite")
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise MapSpecError(name, "breakpoints must start at x=0 and end at x=1")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise MapSpecError(name, "breakpoint x values must be strictly increasing")
    if ys[0] != ys[-1]:
        raise MapSpecError(name, f"phi(0)={ys[0]!r} and phi(1)={ys[-1]!r} must be equal")


@dataclass(frozen=True)
class LiftedCircleMap:
    """Lift ``x -> D*x + phi(x)``, optionally conjugated by ``R_{-c} g R_c``.

    With rotation offset ``c`` the effective periodic part is
    ``(D - 1)*c + phi(x + c)``.
    """

    degree: int
    phi: PeriodicPart
    rotation_offset: float = 0.0

    def __post_init__(self):
        if isinstance(self.degree, bool) or int(self.degree) != self.degree or self.degree < 2:
            raise MapSpecError("D", f"degree must be an integer >= 2, got {self.degree!r}")

    @cached_property
    def phi_sup_norm(self) -> float:
        return self.phi.sup_norm((self.degree - 1) * self.rotation_offset)

    def periodic(self, x):
        """Effective periodic part at ``x``."""
        c = self.rotation_offset
        if c == 0.0:
            return self.phi(x)
        return (self.degree - 1) * c + self.phi(np.asarray(x, dtype=float) + c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.degree * x + self.periodic(x)

    def circle_step(self, u):
        """One step on the circle for points ``u`` in ``[0, 1)``."""
        return np.mod(self.degree * u + self.periodic(u), 1.0)

    @cached_property
    def lipschitz(self) -> float:
        """``sup |g'|`` (exact for every supported kind)."""
        if self.phi.kind == "standard":
            return self.degree + TWO_PI * abs(self.phi.b)
        return float(np.max(np.abs(self.degree + self.phi.slopes())))

    @cached_property
    def turning_points(self) -> tuple:
        """Sorted points of ``[0, 1)`` where the lift changes direction."""
        base = _turning_points_base(self.degree, self.phi)
        c = self.rotation_offset
        if c == 0.0 or not base:
            return tuple(base)
        return tuple(sorted(float(v) for v in np.mod(np.asarray(base) - c, 1.0)))

    @property
    def is_monotone(self) -> bool:
        return not self.turning_points and self._min_slope() > 0

    def _min_slope(self) -> float:
        if self.phi.kind == "standard":
            return self.degree - TWO_PI * abs(self.phi.b)
        return float(np.min(self.degree + self.phi.slopes()))

    def to_spec(self) -> dict:
        return map_to_spec(self)


def _turning_points_base(degree, phi):
    if phi.kind == "standard":
        if phi.b == 0.0:
            return []
        ratio = -degree / (TWO_PI * phi.b)
        # |ratio| == 1 is an inflection, not a turn
        if abs(ratio) >= 1.0:
            return []
        u = math.acos(ratio) / TWO_PI
        return sorted({u % 1.0, (1.0 - u) % 1.0})
    signs = np.sign(degree + phi.slopes())
    nonzero = [(i, s) for i, s in enumerate(signs) if s != 0]
    if not nonzero:
        return []
    points = []
    # walk the segments cyclically; a turn sits where a new direction starts
    prev = nonzero[-1][1]
    for i, s in nonzero:
        if s != prev:
            points.append(phi.xs[i] % 1.0)
        prev = s
    return sorted(set(points))


# ---------------------------------------------------------------------------
# operations


def eval_lift(m: LiftedCircleMap, x):
    return m(x)


def iterate_split(m: LiftedCircleMap, x, n: int):
    """Return ``(k, f)`` with ``g^n(x) = k + f``, ``k`` integral and ``f`` in ``[0, 1)``.

    Equivariance ``g(k + f) = D*k + g(f)`` keeps the fractional part at full
    precision however large the iterate grows.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    x = np.asarray(x, dtype=float)
    k = np.floor(x)
    f = x - k
    D = m.degree
    for step in range(n):
        y = m(f)
        fl = np.floor(y)
        k = D * k + fl
        f = y - fl
        if np.any(np.abs(k) > _MAX_EXACT_INT):
            raise OverflowError(f"integer part of the iterate exceeds 2**53 after {step + 1} steps")
    # y - floor(y) can round up to exactly 1.0
    wrap = f >= 1.0
    if np.any(wrap):
        k = np.where(wrap, k + 1.0, k)
        f = np.where(wrap, 0.0, f)
    return k, f


def iterate_lift(m: LiftedCircleMap, x, n: int):
    """``g^n(x)``; raises ``OverflowError`` once the integer part leaves float range."""
    k, f = iterate_split(m, x, n)
    out = k + f
    return float(out) if out.ndim == 0 else out


def sup_norm_phi(p: PeriodicPart) -> float:
    return p.sup_norm()


def degree_check(m: LiftedCircleMap, grid: int = 1000) -> int:
    """Measured degree ``round(g(x+1) - g(x))``, verified constant on the grid."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    x = np.arange(grid) / grid
    jumps = m(x + 1.0) - m(x)
    degs = np.rint(jumps)
    if np.any(degs != degs[0]) or np.max(np.abs(jumps - degs)) > 1e-9:
        raise ValueError("lift is not equivariant: g(x+1) - g(x) is not a constant integer")
    deg = int(degs[0])
    if deg != m.degree:
        raise ValueError(f"measured degree {deg} differs from declared degree {m.degree}")
    return deg


def conjugate_by_rotation(m: LiftedCircleMap, c: float) -> LiftedCircleMap:
    """Lift of ``R_{-c} g R_c``, i.e. ``x -> g(x + c) - c``."""
    return LiftedCircleMap(m.degree, m.phi, m.rotation_offset + float(c))


# ---------------------------------------------------------------------------
# map specification files


def _number(d, key):
    if key not in d:
        raise MapSpecError(key, "missing")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise MapSpecError(key, f"expected a finite number, got {v!r}")
    return float(v)


def map_from_spec(spec: dict) -> LiftedCircleMap:
    """Build a map from its JSON-style description.

    ``{"type": "standard", "D": 2, "b": 0.5, "omega": 0.0}``,
    ``{"type": "pwl", "D": 2, "points": [[0, 0], ..., [1, 0]]}`` or
    ``{"type": "table", "D": 2, "samples": [...]}``; points and samples give phi.
    """
    if not isinstance(spec, dict):
        raise MapSpecError("spec", "expected a JSON object")
    kind = spec.get("type")
    if kind not in KINDS:
        raise MapSpecError("type", f"expected one of {KINDS}, got {kind!r}")
    D = spec.get("D", 2)
    if isinstance(D, bool) or not isinstance(D, int) or D < 2:
        raise MapSpecError("D", f"expected an integer >= 2, got {D!r}")
    if kind == "standard":
        omega = _number(spec, "omega") if "omega" in spec else 0.0
        phi = PeriodicPart.standard(_number(spec, "b"), omega)
    elif kind == "pwl":
        pts = spec.get("points")
        if not isinstance(pts, list) or not all(isinstance(p, (list, tuple)) and len(p) == 2 for p in pts):
            raise MapSpecError("points", "expected a list of [x, y] pairs")
        phi = PeriodicPart.piecewise_linear(pts)
    else:
        samples = spec.get("samples")
        if not isinstance(samples, list):
            raise MapSpecError("samples", "expected a list of numbers")
        phi = PeriodicPart.tabulated(samples)
    c = _number(spec, "rotation_offset") if "rotation_offset" in spec else 0.0
    return LiftedCircleMap(D, phi, c)


def map_to_spec(m: LiftedCircleMap) -> dict:
    p = m.phi
    if p.kind == "standard":
        out = {"type": "standard", "D": m.degree, "b": p.b, "omega": p.omega}
    elif p.kind == "pwl":
        out = {"type": "pwl", "D": m.degree, "points": [[x, y] for x, y in zip(p.xs, p.ys)]}
    else:
        out = {"type": "table", "D": m.degree, "samples": list(p.ys)}
    if m.rotation_offset:
        out["rotation_offset"] = m.rotation_offset
    return out


def load_map(path) -> LiftedCircleMap:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MapSpecError("spec", f"cannot read {path}: {exc}") from exc
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapSpecError("spec", f"invalid JSON: {exc}") from exc
    return map_from_spec(spec)


def standard_map(b: float, omega: float = 0.0, degree: int = 2) -> LiftedCircleMap:
    return LiftedCircleMap(degree, PeriodicPart.standard(b, omega))


def pwl_map(points, degree: int = 2) -> LiftedCircleMap:
    return LiftedCircleMap(degree, PeriodicPart.piecewise_linear(points))


def lift_pwl_map(lift_points, degree: int = 2) -> LiftedCircleMap:
    """Piecewise-linear map from breakpoints of the lift itself (``g(0)``, ..., ``g(1) = g(0) + D``)."""
    pts = [(float(x), float(y) - degree * float(x)) for x, y in lift_points]
    return pwl_map(pts, degree)
