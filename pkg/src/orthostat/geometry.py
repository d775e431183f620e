"""Upper half-plane geometry on ideal endpoints.

Geodesics are stored by their two ideal endpoints on the extended real
line (``math.inf`` is the point at infinity).  Isometries are real 2x2
matrices with determinant +1 (Mobius) or -1 (anti-Mobius, z -> M(conj z));
both act on ideal points by the same linear fractional formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INF = math.inf


class GeometryError(ValueError):
    """Degenerate configuration: crossing, asymptotic or coincident lines."""


def _mobius_real(m: np.ndarray, x: float) -> float:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if x == INF:
        return INF if c == 0 else a / c
    den = c * x + d
    if den == 0:
        return INF
    return (a * x + b) / den


@dataclass(frozen=True)
class Geodesic:
    """Oriented geodesic from ``start`` to ``end`` (distinct ideal points)."""

    start: float
    end: float

    def __post_init__(self):
        if self.start == self.end:
            raise GeometryError("geodesic endpoints must be distinct")
        if self.start == -INF or self.end == -INF:
            # a single point at infinity
            object.__setattr__(self, "start", INF if self.start == -INF else self.start)
            object.__setattr__(self, "end", INF if self.end == -INF else self.end)

    def reversed(self) -> "Geodesic":
        return Geodesic(self.end, self.start)

    def canonical(self) -> tuple:
        """Unoriented key: smaller endpoint first, infinity last."""
        a, b = self.start, self.end
        return (a, b) if a < b else (b, a)

    def same_line(self, other: "Geodesic", tol: float = 1e-9) -> bool:
        def close(u, v):
            if u == INF or v == INF:
                return u == v
            return abs(u - v) <= tol * max(1.0, abs(u), abs(v))
        (a, b), (c, d) = self.canonical(), other.canonical()
        return close(a, c) and close(b, d)


@dataclass(frozen=True, eq=False)
class Isometry:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float).reshape(2, 2)
        ad, bc = m[0, 0] * m[1, 1], m[0, 1] * m[1, 0]
        det = float(ad - bc)
        scale = abs(ad) + abs(bc)
        # the determinant is only resolvable while rounding in ad - bc is small;
        # past that, rescaling by a noisy value would do more harm than good
        if abs(det) <= scale * 1e-12:
            if scale < 1e3:
                raise GeometryError("singular matrix")
        elif abs(abs(det) - 1.0) > 1e-15:
            m = m / math.sqrt(abs(det))
        object.__setattr__(self, "matrix", m)

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def orientation_preserving(self) -> bool:
        return self.det > 0

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    def is_hyperbolic(self) -> bool:
        return self.orientation_preserving and abs(self.trace) > 2.0

    def translation_length(self) -> float:
        return 2.0 * math.acosh(abs(self.trace) / 2.0)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        return Isometry(np.linalg.inv(self.matrix))

    def renormalized(self) -> "Isometry":
        return Isometry(self.matrix / math.sqrt(abs(self.det)))

    def positive_trace(self) -> "Isometry":
        return Isometry(-self.matrix) if self.trace < 0 else self

    def act_ideal(self, x: float) -> float:
        return _mobius_real(self.matrix, x)

    def act_point(self, z: complex) -> complex:
        (a, b), (c, d) = self.matrix
        if not self.orientation_preserving:
            z = z.conjugate()
        w = (a * z + b) / (c * z + d)
        if w.imag < 0:
            # det -1 matrices flip half-planes; fold back
            w = w.conjugate()
        return w

    def act(self, g: Geodesic) -> Geodesic:
        return Geodesic(self.act_ideal(g.start), self.act_ideal(g.end))

    def axis(self) -> Geodesic:
        """Oriented axis, repelling fixed point first."""
        if not self.is_hyperbolic():
            raise GeometryError("only hyperbolic elements have an axis")
        m = self.matrix if self.trace > 0 else -self.matrix
        (a, b), (c, d) = m
        if abs(c) < 1e-300:
            fix = b / (d - a)
            # z -> (a/d) z + ...: infinity attracts when a > d
            return Geodesic(fix, INF) if a > d else Geodesic(INF, fix)
        disc = math.sqrt((a + d) ** 2 - 4.0)
        f1 = (a - d + disc) / (2.0 * c)
        f2 = (a - d - disc) / (2.0 * c)
        # derivative at fixed point f is 1/(c f + d)^2; < 1 means attracting
        if abs(c * f1 + d) > 1.0:
            return Geodesic(f2, f1)
        return Geodesic(f1, f2)

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(2))

    @classmethod
    def reflection(cls, g: Geodesic) -> "Isometry":
        """Reflection in the line g, as an anti-Mobius map."""
        u, v = g.canonical()
        if v == INF:
            return cls(np.array([[-1.0, 2.0 * u], [0.0, 1.0]]))
        m, rho = 0.5 * (u + v), 0.5 * (v - u)
        return cls(np.array([[m, rho * rho - m * m], [1.0, -m]]) / rho)

    @classmethod
    def to_zero_infinity(cls, g: Geodesic) -> "Isometry":
        """An isometry sending g.start -> 0 and g.end -> infinity."""
        s, e = g.start, g.end
        if e == INF:
            m = np.array([[1.0, -s], [0.0, 1.0]])
        elif s == INF:
            m = np.array([[0.0, 1.0], [1.0, -e]])
        else:
            m = np.array([[1.0, -s], [1.0, -e]])
        return cls(m)


def point_to_line_distance(z: complex, g: Geodesic) -> float:
    frame = Isometry.to_zero_infinity(g)
    (a, b), (c, d) = frame.matrix
    w = (a * z + b) / (c * z + d)
    return math.asinh(abs(w.real) / abs(w.imag))


def crossing(a: Geodesic, b: Geodesic) -> bool:
    frame = Isometry.to_zero_infinity(a)
    p, q = frame.act_ideal(b.start), frame.act_ideal(b.end)
    return p * q < 0


def _frame_pair(a: Geodesic, b: Geodesic):
    frame = Isometry.to_zero_infinity(a)
    p, q = frame.act_ideal(b.start), frame.act_ideal(b.end)
    if p == 0 or q == 0 or p == INF or q == INF or p * q <= 0:
        raise GeometryError("geodesics cross or share an endpoint")
    return frame, abs(p), abs(q)


def axis_distance(a: Geodesic, b: Geodesic) -> float:
    """Length of the common perpendicular between disjoint geodesics."""
    _, p, q = _frame_pair(a, b)
    lo, hi = min(p, q), max(p, q)
    # cosh d = (hi + lo)/(hi - lo), i.e. tanh(d/2)^2 = lo/hi
    return 2.0 * math.atanh(math.sqrt(lo / hi))


def perpendicular_foot(a: Geodesic, b: Geodesic) -> complex:
    """Foot on ``a`` of the common perpendicular to ``b``."""
    frame, p, q = _frame_pair(a, b)
    return frame.inverse().act_point(complex(0.0, math.sqrt(p * q)))


def signed_position(a: Geodesic, b: Geodesic) -> float:
    """Arclength coordinate along ``a`` of the foot of the perpendicular to ``b``.

    Measured in the frame sending a to (0, inf), so the coordinate is the
    log of the foot's height there; only differences are meaningful.
    """
    _, p, q = _frame_pair(a, b)
    return 0.5 * math.log(p * q)


def distance(z: complex, w: complex) -> float:
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(z.imag * w.imag)))
