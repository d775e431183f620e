import math
import random

import numpy as np
import pytest
from scipy import integrate

from orthostat.kernels import GEOMETRIC, PAPER, asymptotic_constant, spot_radius
from orthostat.moments import (
    IncompatibleMethod,
    Method,
    TailParams,
    basmajian_sum,
    default_tail,
    mgf,
    mgf_derivative_moment,
    mgf_domain,
    moment,
    resolve_method,
    tail_estimate,
)
from orthostat.spectrum import OrthoSpectrum, PantsParams, enumerate_orthospectrum
from orthostat.verification import synthetic_spectrum

P222 = PantsParams(2.0, 2.0, 2.0)


@pytest.fixture(scope="module")
def pants():
    s10 = enumerate_orthospectrum(P222, 10.0)
    return {c: s10.truncated(c) for c in (6.0, 8.0, 10.0)}


@pytest.fixture(scope="module")
def dim3():
    # dimension-3 test spectra: the normalized fixture and a genuine-looking one
    s = synthetic_spectrum()
    t = OrthoSpectrum(3, 40.0, (0.7, 0.9, 1.3, 1.3, 2.2, 3.0, 4.1), synthetic=True)
    return [s, t]


def test_zeroth_moment_increases_below_one(pants):
    vals = [moment(pants[c], 0).value for c in sorted(pants)]
    assert all(v < 1 for v in vals)
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.98


def test_zeroth_moment_is_basmajian_ratio(pants):
    s = pants[10.0]
    assert moment(s, 0).value == pytest.approx(basmajian_sum(s) / 6.0, rel=1e-9)


@pytest.mark.parametrize("cutoff", [6.0, 8.0, 10.0])
def test_surface_quadrature_matches_closed_form(pants, cutoff):
    s = pants[cutoff]
    for conv in (GEOMETRIC, PAPER):
        q = moment(s, 1, conv, Method.QUADRATURE).value
        c = moment(s, 1, conv, "closed").value
        assert c == pytest.approx(q, abs=1e-8)


def test_odd_closed_form_matches_quadrature(dim3):
    for s in dim3:
        q = moment(s, 1, PAPER, Method.QUADRATURE).value
        c = moment(s, 1, PAPER, Method.CLOSED_ODD).value
        assert c == pytest.approx(q, abs=1e-8)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_convention_scaling(pants, k):
    s = pants[8.0]
    g = moment(s, k, GEOMETRIC).value
    p = moment(s, k, PAPER).value
    assert g == pytest.approx(2.0 ** -k * p, rel=1e-13)


def test_moments_nondecreasing_in_cutoff(pants):
    for k in range(4):
        vals = [moment(pants[c], k).value for c in sorted(pants)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_sum_independent_of_order(pants):
    s = pants[10.0]
    ref = moment(s, 2).value
    # kernels per term do not depend on position, fsum removes order dependence
    shuffled = list(s.lengths)
    random.Random(4).shuffle(shuffled)
    t = OrthoSpectrum(2, 6.0, tuple(reversed(shuffled)), 10.0, False, 2)
    assert moment(t, 2).value == ref


def test_report_fields(pants):
    r = moment(pants[6.0], 1, tail=default_tail(2))
    assert r.terms_used == len(pants[6.0])
    assert r.value > 0 and r.tail_estimate > 0
    d = r.to_dict()
    assert d["convention"] == "geometric" and d["method"] == "quadrature"


def test_basmajian_per_term_forms():
    s2 = OrthoSpectrum(2, 100.0, (0.5, 1.0, 3.0))
    want = sum(2 * math.log(1 / math.tanh(x / 2)) for x in s2.lengths)
    assert basmajian_sum(s2) == pytest.approx(want, rel=1e-13)
    s3 = OrthoSpectrum(3, 100.0, (0.5, 1.0, 3.0))
    want = sum(2 * math.pi * (1 / math.tanh(x) - 1) for x in s3.lengths)
    assert basmajian_sum(s3) == pytest.approx(want, rel=1e-12)
    doubled = OrthoSpectrum(2, 100.0, (0.5, 1.0, 3.0), spots_per_length=2)
    assert basmajian_sum(doubled) == pytest.approx(2 * basmajian_sum(s2), rel=1e-15)


def test_basmajian_pants(pants):
    b8, b10 = basmajian_sum(pants[8.0]), basmajian_sum(pants[10.0])
    assert b8 < b10 < 6.0


def test_mgf_at_zero(dim3):
    s = dim3[0]
    assert mgf(s, 0.0) == pytest.approx(1.0, abs=1e-12)
    for t in dim3:
        assert mgf(t, 0.0) == pytest.approx(basmajian_sum(t) / t.boundary_volume, rel=1e-10)


def test_mgf_convex_and_nondecreasing(dim3):
    for s in dim3:
        assert mgf(s, 0.2) + mgf(s, -0.2) >= 2 * mgf(s, 0.0)
        vals = [mgf(s, t) for t in np.linspace(0.0, 0.5, 11)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_mgf_geometric_is_half_argument(dim3):
    s = dim3[1]
    assert mgf(s, 0.4, convention=GEOMETRIC) == pytest.approx(mgf(s, 0.2), rel=1e-14)
    mgf(s, 1.9, convention=GEOMETRIC)


def test_mgf_errors(pants, dim3):
    with pytest.raises(IncompatibleMethod):
        mgf(pants[6.0], 0.1)
    with pytest.raises(ValueError):
        mgf(dim3[0], 1.0)
    with pytest.raises(IncompatibleMethod):
        mgf_derivative_moment(pants[6.0], 1)
    with pytest.raises(IncompatibleMethod):
        mgf_derivative_moment(dim3[0], 3)


@pytest.mark.parametrize("k,tol", [(1, 1e-5), (2, 1e-4)])
def test_mgf_derivative_matches_quadrature(dim3, k, tol):
    for s in dim3:
        d = mgf_derivative_moment(s, k, h=1e-4)
        assert d.method is Method.MGF_DERIVATIVE
        q = moment(s, k, PAPER, Method.QUADRATURE).value
        assert d.value == pytest.approx(q, abs=tol)


def test_mgf_derivative_second_order(dim3):
    s = dim3[0]
    q = moment(s, 1, PAPER).value
    e3 = abs(mgf_derivative_moment(s, 1, h=1e-3).value - q)
    e4 = abs(mgf_derivative_moment(s, 1, h=1e-4).value - q)
    assert e4 < e3


def test_mgf_derivative_via_moment(dim3):
    s = dim3[0]
    r = moment(s, 1, PAPER, "mgf-derivative")
    assert r.method is Method.MGF_DERIVATIVE
    assert r.value == pytest.approx(moment(s, 1, PAPER).value, abs=1e-5)


@pytest.mark.parametrize("n,k,method", [(2, 1, Method.CLOSED_ODD), (3, 1, Method.CLOSED_SURFACE),
                                        (2, 2, Method.CLOSED_SURFACE), (3, 2, Method.CLOSED_ODD)])
def test_incompatible_methods(n, k, method):
    s = OrthoSpectrum(n, 100.0, (1.0, 2.0), synthetic=True)
    with pytest.raises(IncompatibleMethod):
        moment(s, k, method=method)


def test_closed_resolves_by_dimension():
    assert resolve_method(2, 1, "closed") is Method.CLOSED_SURFACE
    assert resolve_method(5, 1, "closed") is Method.CLOSED_ODD
    with pytest.raises(IncompatibleMethod):
        resolve_method(4, 1, "closed")
    with pytest.raises(ValueError):
        Method.parse("simpson")


def test_moment_bad_order(pants):
    with pytest.raises(ValueError):
        moment(pants[6.0], -1)


def test_tail_delta_to_zero():
    for n, k in ((2, 0), (2, 1), (3, 2)):
        lam = n - 1
        c = asymptotic_constant(n, k)
        want = c * integrate.quad(lambda x: x ** k * math.exp(-lam * x), 6.0, np.inf)[0]
        got = tail_estimate(n, 6.0, k, TailParams(1e-10), convention=PAPER)
        assert got == pytest.approx(want, rel=1e-8)


@pytest.mark.parametrize("n,k,delta", [(2, 0, 0.5), (2, 1, 0.5), (2, 2, 0.9), (3, 0, 1.0), (3, 1, 1.5)])
def test_tail_doubling_cutoff(n, k, delta):
    lam = n - 1 - delta
    ratio = tail_estimate(n, 12.0, k, TailParams(delta)) / tail_estimate(n, 6.0, k, TailParams(delta))
    # shifting the integral by 6 multiplies it by e^{-6 lam} (x+6)^k / x^k in [1, 2^k] for x >= 6
    assert ratio >= math.exp(-6 * lam) * (1 - 1e-12)
    assert ratio <= 2 ** k * math.exp(-6 * lam) * (1 + 1e-12)
    if k == 0:
        assert ratio == pytest.approx(math.exp(-6 * lam), rel=1e-12)


def test_tail_monotone_in_cutoff():
    vals = [tail_estimate(3, c, 1, default_tail(3)) for c in np.linspace(1, 15, 30)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_tail_majorizes_true_gap(pants):
    gap = 6.0 - basmajian_sum(pants[10.0])
    assert gap > 0
    assert tail_estimate(2, 10.0, 0, TailParams(0.9)) > gap


def test_tail_params_validation():
    with pytest.raises(ValueError):
        TailParams(1.0).check(2)
    with pytest.raises(ValueError):
        TailParams(0.0).check(3)
    with pytest.raises(ValueError):
        TailParams(0.5, prefactor=0.0).check(3)
    assert default_tail(3).delta == 1.0


def test_mgf_domain():
    d = mgf_domain(1.0)
    assert d["per_term_t_max"] == 1.0 and d["heuristic_t_max"] == 0.5


def test_spot_radius_reexport():
    assert spot_radius(1.0) == pytest.approx(math.log(1 / math.tanh(0.5)), rel=1e-14)
