"""Global identities: moments A_k, Basmajian sums, the dimension-3 MGF."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Optional

from scipy import special

from .kernels import (
    DEFAULT_QUAD,
    GEOMETRIC,
    PAPER,
    KernelParams,
    LengthConvention,
    QuadratureConfig,
    asymptotic_constant,
    f21_closed,
    fn1_odd_closed,
    fnk_quadrature,
    mgf_term,
    spot_radius,
)
from .specfun import DEFAULT_EVAL, EvalConfig, ball_volume
from .spectrum import OrthoSpectrum


class Method(enum.Enum):
    QUADRATURE = "quadrature"
    CLOSED_SURFACE = "closed-surface"
    CLOSED_ODD = "closed-odd"
    MGF_DERIVATIVE = "mgf-derivative"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("_", "-")
        if v == "quad":
            return cls.QUADRATURE
        for m in cls:
            if v in (m.value, m.name.lower().replace("_", "-")):
                return m
        raise ValueError(f"unknown method {value!r}")


class IncompatibleMethod(ValueError):
    """Method cannot evaluate the requested (dimension, order)."""


@dataclass(frozen=True)
class TailParams:
    delta: float
    prefactor: float = 1.0

    def check(self, n: int):
        if not (0.0 < self.delta < n - 1):
            raise ValueError(f"delta must lie in (0, {n - 1}), got {self.delta}")
        if self.prefactor <= 0:
            raise ValueError("prefactor must be positive")


@dataclass(frozen=True)
class MomentReport:
    k: int
    value: float
    convention: LengthConvention
    method: Method
    terms_used: int
    tail_estimate: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["convention"] = self.convention.value
        d["method"] = self.method.value
        return d


def _spot_sum(s: OrthoSpectrum, values) -> float:
    # fsum is correctly rounded, so the total does not depend on term order
    return s.spots_per_length * math.fsum(values)


def basmajian_sum(s: OrthoSpectrum) -> float:
    """Total volume of the boundary balls swept by the listed orthogeodesics."""
    n = s.dimension
    return _spot_sum(s, (ball_volume(n - 1, spot_radius(x)) for x in s.lengths))


def resolve_method(n: int, k: int, method) -> Method:
    """Map the generic 'closed' request onto the closed form valid for (n, k)."""
    if str(method).lower() == "closed":
        if (n, k) == (2, 1):
            return Method.CLOSED_SURFACE
        if n % 2 == 1 and k == 1:
            return Method.CLOSED_ODD
        raise IncompatibleMethod(f"no closed form for n={n}, k={k}")
    return Method.parse(method)


def kernel_value(n: int, k: int, x: float, convention: LengthConvention, method: Method,
                 qc: QuadratureConfig = DEFAULT_QUAD) -> float:
    scale = convention.log_factor ** k
    if method is Method.QUADRATURE:
        return fnk_quadrature(KernelParams(n, k, convention), x, qc)
    if method is Method.CLOSED_SURFACE:
        if (n, k) != (2, 1):
            raise IncompatibleMethod(f"the surface closed form needs (n, k) = (2, 1), got ({n}, {k})")
        return scale * f21_closed(x)
    if method is Method.CLOSED_ODD:
        if n % 2 == 0 or k != 1:
            raise IncompatibleMethod(f"the odd-dimension closed form needs odd n and k = 1, got ({n}, {k})")
        return scale * fn1_odd_closed(n, x)
    raise IncompatibleMethod(f"{method} is not a per-length kernel method")


def moment(s: OrthoSpectrum, k: int, convention=GEOMETRIC, method=Method.QUADRATURE,
           qc: QuadratureConfig = DEFAULT_QUAD, tail: Optional[TailParams] = None,
           h: float = 1e-4) -> MomentReport:
    """k-th moment of the boundary hitting length over the truncated spectrum."""
    if k < 0:
        raise ValueError("moment order must be >= 0")
    if not s.lengths:
        raise ValueError("empty spectrum")
    convention = LengthConvention.parse(convention)
    method = resolve_method(s.dimension, k, method)
    if method is Method.MGF_DERIVATIVE:
        return mgf_derivative_moment(s, k, h, convention=convention)
    n = s.dimension
    total = _spot_sum(s, (kernel_value(n, k, x, convention, method, qc) for x in s.lengths))
    tail_val = None
    if tail is not None:
        cutoff = s.truncation_cutoff if s.truncation_cutoff is not None else max(s.lengths)
        tail_val = tail_estimate(n, cutoff, k, tail, convention) / s.boundary_volume
    return MomentReport(k, total / s.boundary_volume, convention, method, len(s), tail_val)


def mgf(s: OrthoSpectrum, t: float, cfg: EvalConfig = DEFAULT_EVAL,
        convention=PAPER) -> float:
    """E[exp(t L)] for a 3-dimensional spectrum.

    The closed form is written in the full-log normalization; the geometric
    hitting length has MGF equal to that evaluated at t/2.
    """
    if s.dimension != 3:
        raise IncompatibleMethod(f"the MGF formula needs dimension 3, got {s.dimension}")
    convention = LengthConvention.parse(convention)
    tt = t * convention.log_factor
    if tt >= 1:
        raise ValueError(f"MGF terms diverge for t >= {1 / convention.log_factor}, got {t}")
    return _spot_sum(s, (mgf_term(x, tt, cfg) for x in s.lengths)) / s.boundary_volume


def mgf_derivative_moment(s: OrthoSpectrum, k: int, h: float = 1e-4,
                          cfg: EvalConfig = DEFAULT_EVAL, convention=PAPER) -> MomentReport:
    """First or second moment from central differences of the MGF at 0."""
    if s.dimension != 3:
        raise IncompatibleMethod(f"the MGF formula needs dimension 3, got {s.dimension}")
    convention = LengthConvention.parse(convention)
    if k == 1:
        val = (mgf(s, h, cfg, convention) - mgf(s, -h, cfg, convention)) / (2.0 * h)
    elif k == 2:
        val = (mgf(s, h, cfg, convention) - 2.0 * mgf(s, 0.0, cfg, convention)
               + mgf(s, -h, cfg, convention)) / (h * h)
    else:
        raise IncompatibleMethod("MGF differences are implemented for k = 1, 2")
    return MomentReport(k, val, convention, Method.MGF_DERIVATIVE, len(s), None)


def tail_estimate(n: int, cutoff: float, k: int, tp: TailParams,
                  convention=PAPER) -> float:
    """Bound on the kernel mass beyond ``cutoff``.

    prefactor * int_cutoff^inf e^{delta x} C_{n,k} x^k e^{-(n-1) x} dx, i.e.
    prefactor * C_{n,k} * Gamma(k+1, lam * cutoff) / lam^{k+1}, lam = n-1-delta.
    """
    tp.check(n)
    convention = LengthConvention.parse(convention)
    lam = n - 1 - tp.delta
    c = asymptotic_constant(n, k) * convention.log_factor ** k
    upper_gamma = special.gammaincc(k + 1, lam * cutoff) * math.gamma(k + 1)
    return tp.prefactor * c * upper_gamma / lam ** (k + 1)


def default_tail(n: int) -> TailParams:
    return TailParams(delta=0.5 * (n - 1))


def mgf_domain(delta: float) -> dict:
    """Per-term t-bound and the spectrum-level heuristic (full-log units)."""
    return {"per_term_t_max": 1.0, "heuristic_t_max": 1.0 - delta / 2.0}
