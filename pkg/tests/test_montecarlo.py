import math

import numpy as np
import pytest
from scipy import stats

from orthostat.geometry import Isometry, point_to_line_distance
from orthostat.kernels import GEOMETRIC, length_kernel, spot_radius
from orthostat.montecarlo import (
    CensoringError,
    Hexagon,
    RayTraceConfig,
    empirical_moments,
    mink,
    sample_boundary_point,
    sample_boundary_points,
    sample_lengths,
    save_lengths_csv,
    trace_normal_ray,
)
from orthostat.moments import moment
from orthostat.spectrum import PantsParams, enumerate_orthospectrum, pants_geometry

P222 = PantsParams(2.0, 2.0, 2.0)
PASYM = PantsParams(1.0, 2.0, 3.5)
SHORTEST_222 = 1.7049128323580138


def test_config_validation():
    with pytest.raises(ValueError):
        RayTraceConfig(max_length=0.0)
    with pytest.raises(ValueError):
        RayTraceConfig(unfold_depth=3)


def test_component_frequencies():
    rng = np.random.default_rng(1)
    n = 100_000
    side, pos = sample_boundary_points(PASYM, n, rng)
    L = np.array(PASYM.lengths)
    probs = L / L.sum()
    for i in range(3):
        count = np.count_nonzero(side == i)
        sd = math.sqrt(n * probs[i] * (1 - probs[i]))
        assert abs(count - n * probs[i]) < 4 * sd
        on = pos[side == i]
        assert on.min() >= 0 and on.max() < L[i]


def test_positions_uniform():
    rng = np.random.default_rng(2)
    side, pos = sample_boundary_points(PASYM, 50_000, rng)
    on = pos[side == 2] / PASYM.L3
    assert stats.kstest(on, "uniform").pvalue > 1e-3


def test_sampler_determinism():
    a = sample_boundary_points(PASYM, 1000, np.random.default_rng(9))
    b = sample_boundary_points(PASYM, 1000, np.random.default_rng(9))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    i, s = sample_boundary_point(PASYM, np.random.default_rng(9))
    assert 0 <= i < 3 and 0 <= s < PASYM.lengths[i]


def test_hexagon_normals():
    hx = Hexagon.from_geometry(pants_geometry(PASYM))
    for v in hx.normals:
        assert mink(v, v) == pytest.approx(1.0, abs=1e-12)
    for i, (c0, c1) in enumerate(hx.corners):
        for c in (c0, c1):
            assert mink(c, c) == pytest.approx(-1.0, abs=1e-10)
            assert mink(c, hx.normals[i]) == pytest.approx(0.0, abs=1e-10)


def corner_seams(geo, i):
    """Seams through the two hexagon corners on side i, in corner order."""
    return tuple(min(geo.adjacent_seams(i), key=lambda k: point_to_line_distance(c, geo.seams[k]))
                 for c in geo.corners[i])


@pytest.mark.parametrize("p", [P222, PASYM])
def test_ray_at_foot_is_the_seam(p):
    geo = pants_geometry(p)
    for i in range(3):
        L = p.lengths[i]
        k0, k1 = corner_seams(geo, i)
        for s, k in ((0.0, k0), (L / 2, k1), (L, k0)):
            length, cens = trace_normal_ray(p, (i, s))
            assert not cens
            assert length == pytest.approx(geo.seam_lengths[k], abs=1e-8)
    if p == P222:
        assert trace_normal_ray(p, (0, 0.0))[0] == pytest.approx(SHORTEST_222, abs=1e-8)


@pytest.mark.parametrize("p", [P222, PASYM])
def test_ray_offset_matches_length_kernel(p):
    geo = pants_geometry(p)
    for i in range(3):
        k0, _ = corner_seams(geo, i)
        ell = geo.seam_lengths[k0]
        R = spot_radius(ell)
        for frac in (0.05, 0.3, 0.6, 0.9, 0.99):
            r = frac * R
            want = length_kernel(r, ell, GEOMETRIC)
            for s in (r, p.lengths[i] - r):
                got, cens = trace_normal_ray(p, (i, s))
                assert not cens
                assert got == pytest.approx(want, abs=1e-6)


def test_isometry_invariance():
    rng = np.random.default_rng(7)
    geo = pants_geometry(PASYM)
    points = [(int(i), float(s)) for i, s in zip(*sample_boundary_points(PASYM, 40, rng))]
    base = [trace_normal_ray(geo, pt)[0] for pt in points]
    for _ in range(3):
        m = rng.normal(size=(2, 2))
        if np.linalg.det(m) < 0:
            m[:, 0] *= -1
        moved = geo.transformed(Isometry(m))
        hx = Hexagon.from_geometry(moved)
        for pt, b in zip(points, base):
            # the flow is chaotic: rounding in the moved coordinates grows like e^L,
            # so 1e-9 is attainable only for rays shorter than about 7
            tol = max(1e-9, 1e-11 * math.exp(b))
            assert trace_normal_ray(moved, pt, hexagon=hx)[0] == pytest.approx(b, abs=tol)
    assert sum(b < 7 for b in base) > 0.8 * len(base)


@pytest.fixture(scope="module")
def report_222():
    return empirical_moments(P222, 3, 60_000, RayTraceConfig(seed=3), truncation_cutoff=8.0)


def test_zeroth_moment_and_fields(report_222):
    r = report_222
    assert r.moments[0] == 1.0
    assert r.censored_fraction == 0.0
    assert r.samples == 60_000
    assert r.moments[1] == pytest.approx(r.mean, rel=1e-14)
    assert r.moments[2] == pytest.approx(r.second_moment, rel=1e-14)
    d = r.to_dict()
    assert d["samples"] == 60_000 and len(d["moments"]) == 4


def test_no_sample_below_shortest(report_222):
    assert report_222.min_length >= SHORTEST_222 - 1e-8


def test_truncated_mass_matches_zeroth_moment(report_222):
    # fraction of rays whose spot is listed below the cutoff is A_0 of that truncation
    s8 = enumerate_orthospectrum(P222, 8.0)
    a0 = moment(s8, 0).value
    n = report_222.samples
    sd = math.sqrt(a0 * (1 - a0) / n)
    assert abs(report_222.truncated_mass - a0) < 4 * sd


def test_censoring_monotone():
    fr_len = []
    for ml in (2.0, 3.0, 5.0, 9.0):
        _, _, c = sample_lengths(P222, 20_000, RayTraceConfig(max_length=ml, seed=4))
        fr_len.append(c.mean())
    assert all(a >= b for a, b in zip(fr_len, fr_len[1:]))
    assert fr_len[0] > fr_len[-1]
    fr_depth = []
    for depth in (4, 8, 16, 64):
        _, _, c = sample_lengths(P222, 20_000, RayTraceConfig(unfold_depth=depth, seed=4))
        fr_depth.append(c.mean())
    assert all(a >= b for a, b in zip(fr_depth, fr_depth[1:]))
    assert fr_depth[0] > fr_depth[-1]


def test_too_much_censoring_raises():
    with pytest.raises(CensoringError):
        empirical_moments(P222, 1, 10_000, RayTraceConfig(max_length=1.0))
    with pytest.raises(ValueError):
        empirical_moments(P222, 1, 9_999)


def test_stderr_scaling():
    a = empirical_moments(P222, 1, 40_000, RayTraceConfig(seed=5))
    b = empirical_moments(P222, 1, 80_000, RayTraceConfig(seed=6))
    assert b.stderr_mean / a.stderr_mean == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_thread_count_independence():
    cfg = RayTraceConfig(seed=8)
    one = sample_lengths(P222, 140_000, cfg, threads=1)
    three = sample_lengths(P222, 140_000, cfg, threads=3)
    for x, y in zip(one, three):
        assert np.array_equal(x, y)


def test_seed_changes_stream():
    a = sample_lengths(P222, 1000, RayTraceConfig(seed=1))[0]
    b = sample_lengths(P222, 1000, RayTraceConfig(seed=2))[0]
    assert not np.array_equal(a, b)


def test_csv_dump(tmp_path):
    lengths, _, cens = sample_lengths(P222, 500, RayTraceConfig(max_length=3.0, seed=1))
    path = tmp_path / "l.csv"
    save_lengths_csv(lengths, cens, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "length"
    assert len(rows) - 1 == np.count_nonzero(~cens)
    assert np.array_equal(np.array([float(r) for r in rows[1:]]), lengths[~cens])
