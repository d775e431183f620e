"""Per-length kernels: hitting length, moment kernels F_{n,k}, MGF terms."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import partial

from scipy import integrate

from .specfun import (
    DEFAULT_EVAL,
    ConvergenceError,
    EvalConfig,
    ball_volume,
    dilog,
    harmonic,
    hyp2f1,
    inc_beta,
    sphere_volume,
    spot_radius,
)


class LengthConvention(enum.Enum):
    """Which logarithm normalization the length kernel uses.

    GEOMETRIC is the true hitting length (a half-log); PAPER_LITERAL is the
    full log, under which the printed closed forms hold.  Moment kernels of
    order k differ by exactly 2**k.
    """

    GEOMETRIC = "geometric"
    PAPER_LITERAL = "paper"

    @property
    def log_factor(self) -> float:
        return 0.5 if self is LengthConvention.GEOMETRIC else 1.0

    @classmethod
    def parse(cls, value) -> "LengthConvention":
        if isinstance(value, cls):
            return value
        v = str(value).lower()
        for c in cls:
            if v in (c.value, c.name.lower()):
                return c
        raise ValueError(f"unknown convention {value!r}")


GEOMETRIC = LengthConvention.GEOMETRIC
PAPER = LengthConvention.PAPER_LITERAL


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-13
    abs_tol: float = 1e-300
    max_depth: int = 200

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-6) or not (0.0 < self.abs_tol <= 1e-6):
            raise ValueError("rel_tol and abs_tol must lie in (0, 1e-6]")
        if self.max_depth < 10:
            raise ValueError("max_depth must be >= 10")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class KernelParams:
    n: int
    k: int
    convention: LengthConvention = field(default=PAPER)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"dimension n must be >= 2, got {self.n}")
        if self.k < 0:
            raise ValueError(f"moment order k must be >= 0, got {self.k}")


def _log_ratio_from_gap(ell: float, gap: float) -> float:
    """log((coth l + cosh r)/(coth l - cosh r)) at r = spot_radius(l) - gap.

    Uses coth l - cosh(R - gap) = 2 sinh(R - gap/2) sinh(gap/2), exact since
    cosh R = coth l, so the denominator never cancels.
    """
    R = spot_radius(ell)
    r = R - gap
    den = 2.0 * math.sinh(R - 0.5 * gap) * math.sinh(0.5 * gap)
    return math.log((1.0 / math.tanh(ell) + math.cosh(r)) / den)


def length_kernel(r: float, ell: float, convention: LengthConvention = GEOMETRIC) -> float:
    """Length of the normal ray at distance r from the orthogeodesic foot."""
    if ell <= 0:
        raise ValueError(f"orthogeodesic length must be positive, got {ell}")
    R = spot_radius(ell)
    if r < 0 or r > R:
        raise ValueError(f"r={r} outside the spot [0, {R}]")
    if r == R:
        return math.inf
    return LengthConvention.parse(convention).log_factor * _log_ratio_from_gap(ell, R - r)


def _quad(f, a, b, qc: QuadratureConfig) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(f, a, b, epsabs=qc.abs_tol, epsrel=qc.rel_tol,
                                        limit=qc.max_depth, full_output=1)[:3]
    if err > max(qc.abs_tol, 1e3 * qc.rel_tol * abs(val)):
        raise ConvergenceError(f"quadrature on [{a}, {b}] stalled: estimate {val}, error {err}")
    return val


def _fnk_integrand_gap(gap, ell, n, k, factor):
    r = spot_radius(ell) - gap
    return (factor * _log_ratio_from_gap(ell, gap)) ** k * math.sinh(r) ** (n - 2)


def fnk_quadrature(params: KernelParams, x: float, qc: QuadratureConfig = DEFAULT_QUAD) -> float:
    """F_{n,k}(x) by quadrature over the spot radius.

    The log^k blow-up at the spot edge is flattened by writing the distance
    to the edge as exp(-s) and integrating s out to infinity.
    """
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    n, k = params.n, params.k
    factor = params.convention.log_factor
    R = spot_radius(x)
    omega = sphere_volume(n - 2)
    if k == 0:
        return ball_volume(n - 1, R)
    eta = 0.5 * R
    inner = partial(_fnk_integrand_gap, ell=x, n=n, k=k, factor=factor)

    # gap in [eta, R], i.e. r in [0, R - eta]
    body = _quad(inner, eta, R, qc)

    def edge(s):
        g = math.exp(-s)
        return inner(g) * g

    # past s0 + 80 the integrand is below e^-80 of its value at s0
    s0 = -math.log(eta)
    tail = _quad(edge, s0, s0 + 80.0, qc)
    return omega * (body + tail)


def f21_closed(x: float) -> float:
    """Closed form of F_{2,1} (full-log convention) via dilogarithms."""
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    t2 = math.tanh(x / 2.0) ** 2
    return 2.0 * (dilog(-t2) - dilog(t2) + math.pi ** 2 / 4.0)


def fm_closed(m: int, x: float) -> float:
    """int_1^{coth x} u^m log((coth x + u)/(coth x - u)) du for even m."""
    if m < 0 or m % 2:
        raise ValueError(f"m must be a nonnegative even integer, got {m}")
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    th = math.tanh(x)
    inner = math.log(2.0 * math.cosh(x)) - x * th ** (m + 1)
    inner += math.fsum((1.0 - th ** (2 * k)) / (2 * k) for k in range(1, m // 2 + 1))
    return 2.0 / (th ** (m + 1) * (m + 1)) * inner


def fn1_odd_closed(n: int, x: float) -> float:
    """F_{n,1}(x) for odd n (full-log convention) as a binomial sum of fm_closed."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= 3, got {n}")
    J = (n - 3) // 2
    s = math.fsum((-1) ** (J - j) * math.comb(J, j) * fm_closed(2 * j, x) for j in range(J + 1))
    return sphere_volume(n - 2) * s


def asymptotic_constant(n: int, k: int) -> float:
    """C_{n,k} = 2^{n+k-1} Omega_{n-2} / (n-1), full-log convention."""
    return 2.0 ** (n + k - 1) * sphere_volume(n - 2) / (n - 1)


def fnk_asymptotic(params: KernelParams, x: float) -> float:
    """Large-x form C_{n,k} x^k exp(-(n-1) x) of F_{n,k}."""
    n, k = params.n, params.k
    c = asymptotic_constant(n, k) * params.convention.log_factor ** k
    return c * x ** k * math.exp(-(n - 1) * x)


@dataclass(frozen=True)
class SmallXReport:
    n: int
    estimate: float
    richardson: tuple
    raw: tuple
    printed_constant: float
    corrected_constant: float

    @property
    def stable_digits(self) -> bool:
        a, b = self.richardson[-2:]
        return abs(a - b) <= 5e-4 * abs(b)


def small_x_constant(n: int, qc: QuadratureConfig = DEFAULT_QUAD,
                     xs=(1e-2, 1e-3, 1e-4)) -> SmallXReport:
    """Empirical limit of x^{n-2} F_{n,1}(x) as x -> 0 for odd n.

    The remainder is even in x, so Richardson steps assume an x^2 error.
    Alongside the measurement we report the printed constant
    2/(n-2) [log 2 + H_{(n-1)/2}/2] and the value the binomial sum itself
    produces, Omega_{n-2} * 2/(n-2) [log 2 + H_{(n-3)/2}/2].
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= 3, got {n}")
    raw = tuple(x ** (n - 2) * fn1_odd_closed(n, x) for x in xs)
    rich = []
    for (x1, f1), (x2, f2) in zip(zip(xs, raw), zip(xs[1:], raw[1:])):
        q = (x1 / x2) ** 2
        rich.append((q * f2 - f1) / (q - 1.0))
    if len(rich) >= 2 and abs(rich[-1] - rich[-2]) > 1e-3 * abs(rich[-1]):
        raise ConvergenceError(f"Richardson estimates {rich} did not settle")
    printed = 2.0 / (n - 2) * (math.log(2.0) + 0.5 * harmonic((n - 1) // 2))
    corrected = sphere_volume(n - 2) * 2.0 / (n - 2) * (math.log(2.0) + 0.5 * harmonic((n - 3) // 2))
    return SmallXReport(n, rich[-1], tuple(rich), raw, printed, corrected)


def _mgf_beta_arg(ell: float) -> float:
    # (1 - tanh l)/2 without cancellation
    return 1.0 / (1.0 + math.exp(2.0 * ell))


def mgf_term(ell: float, t: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Per-length contribution 4 pi coth(l) B((1 - tanh l)/2; 1 - t, 1 + t)."""
    if ell <= 0:
        raise ValueError(f"length must be positive, got {ell}")
    if t >= 1:
        raise ValueError(f"mgf term diverges for t >= 1, got {t}")
    return 4.0 * math.pi / math.tanh(ell) * inc_beta(_mgf_beta_arg(ell), 1.0 - t, 1.0 + t, cfg)


def g_antiderivative(u: float, a: float, t: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """Antiderivative in u of ((a + u)/(a - u))^t on 0 <= u < a."""
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")
    if not (-1.0 < t < 1.0):
        raise ValueError(f"t must lie in (-1, 1), got {t}")
    if not (0.0 <= u < a):
        raise ValueError(f"u must lie in [0, a), got u={u}, a={a}")
    z = (a + u) / (2.0 * a)
    return (a + u) ** (t + 1.0) * (2.0 * a) ** (-t) / (1.0 + t) * hyp2f1(1.0 + t, t, 2.0 + t, z, cfg)
