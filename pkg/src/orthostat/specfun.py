"""Special functions used by the orthospectrum kernels.

Everything here is real-valued.  The branch-shifted dilogarithm only
enters through its real part, which is all the moment formulas need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

PI2_6 = math.pi ** 2 / 6.0


@dataclass(frozen=True)
class EvalConfig:
    rel_tol: float = 1e-15
    max_terms: int = 4000

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-6):
            raise ValueError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")
        if self.max_terms < 64:
            raise ValueError(f"max_terms must be >= 64, got {self.max_terms}")


DEFAULT_EVAL = EvalConfig()


class ConvergenceError(ArithmeticError):
    """A series or quadrature did not reach its tolerance."""


def sphere_volume(n: int) -> float:
    """Volume of the unit n-sphere in R^{n+1}."""
    if n < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {n}")
    # 2 pi^{(n+1)/2} / Gamma((n+1)/2)
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def _sinh_power_integral(m: int, r: float) -> float:
    """int_0^r sinh(t)^m dt."""
    if m == 0:
        return r
    if m == 1:
        return 2.0 * math.sinh(r / 2.0) ** 2
    if r < 1.0:
        # the by-parts recurrence cancels badly for small r
        val, _ = integrate.quad(lambda t: math.sinh(t) ** m, 0.0, r,
                                epsabs=1e-300, epsrel=1e-13, limit=200)
        return val
    prev2, prev1 = r, 2.0 * math.sinh(r / 2.0) ** 2
    sh, ch = math.sinh(r), math.cosh(r)
    for j in range(2, m + 1):
        cur = sh ** (j - 1) * ch / j - (j - 1) / j * prev2
        prev2, prev1 = prev1, cur
    return prev1


def spot_radius(ell: float) -> float:
    """log coth(ell/2), written as log1p(2/expm1(ell)) to keep precision at large ell."""
    if ell <= 0:
        raise ValueError(f"length must be positive, got {ell}")
    return math.log1p(2.0 / math.expm1(ell))


def ball_volume(n: int, r: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Volume of the hyperbolic n-ball of radius r."""
    if n < 1:
        raise ValueError(f"ball dimension must be >= 1, got {n}")
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    if r == 0.0:
        return 0.0
    if n == 1:
        return 2.0 * r
    if n == 2:
        return 4.0 * math.pi * math.sinh(r / 2.0) ** 2
    if n == 3:
        x = 2.0 * r
        if x < 1e-2:
            # sinh(x) - x by its Taylor series
            s, term, j = 0.0, x, 1
            while True:
                term *= x * x / ((2 * j) * (2 * j + 1))
                s += term
                if abs(term) <= 1e-17 * s:
                    break
                j += 1
            return math.pi * s
        return math.pi * (math.sinh(x) - x)
    return sphere_volume(n - 1) * _sinh_power_integral(n - 1, r)


def _dilog_series(x: float, cfg: EvalConfig) -> float:
    total, power = 0.0, 1.0
    for k in range(1, cfg.max_terms + 1):
        power *= x
        term = power / (k * k)
        total += term
        if abs(term) <= cfg.rel_tol * abs(total) * 0.1:
            return total
    raise ConvergenceError(f"dilog series at {x} did not converge")


def dilog(x: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Real dilogarithm Li_2(x) for x <= 1."""
    if x > 1.0:
        raise ValueError(f"dilog is real only for x <= 1, got {x}; use re_dilog_inv")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return PI2_6
    if abs(x) <= 0.5:
        return _dilog_series(x, cfg)
    if x > 0.5:
        # reflection x <-> 1 - x
        return PI2_6 - math.log(x) * math.log1p(-x) - _dilog_series(1.0 - x, cfg)
    if x >= -1.0:
        # Landen: x/(x-1) lies in [1/3, 1/2)
        return -_dilog_series(x / (x - 1.0), cfg) - 0.5 * math.log1p(-x) ** 2
    # inversion maps (-inf, -1) into (-1, 0)
    return -PI2_6 - 0.5 * math.log(-x) ** 2 - dilog(1.0 / x, cfg)


def re_dilog_inv(y: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Real part of the shifted-branch dilogarithm at y > 1.

    With log(-1) = i*pi the inversion identity gives
    Re D(y) = -Li_2(1/y) - log(y)^2 / 2 + pi^2 / 3.
    """
    if y <= 1.0:
        raise ValueError(f"re_dilog_inv needs y > 1, got {y}")
    ly = math.log(y)
    return -dilog(1.0 / y, cfg) - 0.5 * ly * ly + 2.0 * PI2_6


def re_dilog(z: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Re D(z) on the whole real line, dispatching on z <= 1."""
    return dilog(z, cfg) if z <= 1.0 else re_dilog_inv(z, cfg)


def h_x(x: float, r: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Real part of the four-term dilogarithm combination H_x(r).

    Its r-derivative is the full-log length kernel, so differences of
    h_x integrate the surface moment kernel in closed form.
    """
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    rmax = spot_radius(x)
    if r < 0 or r > rmax * (1 + 1e-12):
        raise ValueError(f"r={r} outside [0, {rmax}]")
    r = min(r, rmax)
    a = math.exp(-r) / math.tanh(x / 2.0)
    b = math.exp(-r) * math.tanh(x / 2.0)
    if r == rmax:
        a = 1.0
    return (re_dilog(-a, cfg) - re_dilog(a, cfg)
            + re_dilog(-b, cfg) - re_dilog(b, cfg))


def hyp2f1(a: float, b: float, c: float, z: float,
           cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Gauss hypergeometric series 2F1(a, b; c; z) for real |z| < 1."""
    if c <= 0 and float(c).is_integer():
        raise ValueError(f"c must not be a nonpositive integer, got {c}")
    if abs(z) >= 1.0:
        raise ValueError(f"series needs |z| < 1, got {z}")
    total, term = 1.0, 1.0
    for n in range(cfg.max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if term == 0.0:
            return total
        # once the ratio has settled below 1 the tail is geometric
        ratio = abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2)) * z)
        if ratio < 1.0 and abs(term) * ratio / (1.0 - ratio) <= cfg.rel_tol * abs(total):
            return total
    raise ConvergenceError(f"2F1({a}, {b}; {c}; {z}) did not converge in {cfg.max_terms} terms")


def beta(a: float, b: float) -> float:
    """Complete beta function B(a, b) for positive a, b."""
    if a <= 0 or b <= 0:
        raise ValueError("complete beta needs a, b > 0")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def inc_beta(x: float, a: float, b: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Incomplete beta B(x; a, b) = int_0^x s^{a-1} (1-s)^{b-1} ds (unregularized)."""
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 1.0 and b <= 0:
        raise ValueError("B(1; a, b) diverges for b <= 0")
    if x == 0.0:
        return 0.0
    if x <= 0.5:
        return x ** a / a * hyp2f1(a, 1.0 - b, a + 1.0, x, cfg)
    if b <= 0:
        raise ValueError("reflection for x > 1/2 needs b > 0")
    if x == 1.0:
        return beta(a, b)
    return beta(a, b) - inc_beta(1.0 - x, b, a, cfg)


def harmonic(n: int) -> float:
    if n < 0:
        raise ValueError(f"harmonic number needs n >= 0, got {n}")
    return math.fsum(1.0 / k for k in range(1, n + 1))
