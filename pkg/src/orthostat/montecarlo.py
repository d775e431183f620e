"""Monte Carlo hitting lengths on a pair of pants.

The normal geodesic from a boundary point is followed as a billiard in
the right-angled hexagon: crossing a seam is reflected back into the
hexagon, and the ray stops when it meets one of the three boundary sides.
Unfolding the reflections gives the geodesic in the universal cover, so
the accumulated length is the hitting length.  Computations are done in
the hyperboloid model, where lines are unit spacelike normals and every
step is a handful of Minkowski inner products, vectorized over samples.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .geometry import INF, Geodesic
from .spectrum import PantsGeometry, PantsParams, pants_geometry

J = np.array([-1.0, 1.0, 1.0])
CHUNK = 1 << 16


class CensoringError(RuntimeError):
    """Too many rays failed to return to the boundary."""


@dataclass(frozen=True)
class RayTraceConfig:
    max_length: float = 60.0
    unfold_depth: int = 400  # cap on seam crossings per ray
    seed: int = 0

    def __post_init__(self):
        if not self.max_length > 0:
            raise ValueError("max_length must be positive")
        if self.unfold_depth < 4:
            raise ValueError("unfold_depth must be >= 4")


@dataclass(frozen=True)
class EmpiricalReport:
    samples: int
    mean: float
    second_moment: float
    stderr_mean: float
    censored_fraction: float
    moments: tuple = ()
    truncation_cutoff: Optional[float] = None
    truncated_mean: Optional[float] = None
    truncated_stderr: Optional[float] = None
    truncated_mass: Optional[float] = None
    min_length: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["moments"] = list(self.moments)
        return d


def mink(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b * J, axis=-1)


def uhp_to_hyperboloid(z: complex) -> np.ndarray:
    x, y = z.real, z.imag
    r = x * x + y * y
    return np.array([(r + 1.0) / (2.0 * y), (r - 1.0) / (2.0 * y), x / y])


def ideal_to_light(u: float) -> np.ndarray:
    if u == INF:
        return np.array([1.0, 1.0, 0.0])
    return np.array([(u * u + 1.0) / 2.0, (u * u - 1.0) / 2.0, u])


def line_normal(g: Geodesic, inside: np.ndarray) -> np.ndarray:
    """Unit normal of the line g, signed positive on the side of ``inside``."""
    a, b = ideal_to_light(g.start), ideal_to_light(g.end)
    n = np.cross(a, b) * J
    n = n / math.sqrt(mink(n, n))
    return n if mink(inside, n) > 0 else -n


@dataclass(frozen=True)
class Hexagon:
    """Hyperboloid data for the pants hexagon.

    ``normals`` rows 0..2 are the boundary sides b1..b3, rows 3..5 the seams
    s1..s3, all signed inward.
    """

    params: PantsParams
    normals: np.ndarray
    corners: tuple  # per boundary side, (P0, P1) hyperboloid points

    @classmethod
    def from_geometry(cls, geo: PantsGeometry) -> "Hexagon":
        pts = [uhp_to_hyperboloid(z) for pair in geo.corners for z in pair]
        c = np.sum(pts, axis=0)
        c = c / math.sqrt(-mink(c, c))
        normals = np.array([line_normal(g, c) for g in geo.boundary + geo.seams])
        corners = tuple((uhp_to_hyperboloid(p0), uhp_to_hyperboloid(p1)) for p0, p1 in geo.corners)
        return cls(geo.params, normals, corners)

    def start_state(self, side: np.ndarray, s: np.ndarray):
        """Points and inward unit tangents at arclength s along boundary sides.

        s is measured along the closed boundary curve from the first corner of
        the side; the second half of the curve is the mirror-image side of
        the other hexagon, which folds back onto this one.
        """
        side = np.asarray(side, dtype=int)
        L = np.asarray(self.params.lengths)[side]
        s = np.mod(np.asarray(s, dtype=float), L)
        s = np.where(s > L / 2, L - s, s)
        P0 = np.array([self.corners[i][0] for i in range(3)])[side]
        P1 = np.array([self.corners[i][1] for i in range(3)])[side]
        d = np.arccosh(np.maximum(-mink(P0, P1), 1.0))[:, None]
        T = (P1 - np.cosh(d) * P0) / np.sinh(d)
        P = np.cosh(s)[:, None] * P0 + np.sinh(s)[:, None] * T
        V = self.normals[side]
        return P, V.copy()


def trace_rays(hexagon: Hexagon, P: np.ndarray, V: np.ndarray, side: np.ndarray,
               cfg: RayTraceConfig):
    """Follow rays until they hit a boundary side.

    Returns (length, orthogeodesic length of the spot, censored mask).  The
    spot length is the distance between the starting boundary lift and the
    lift that was hit, found by carrying the starting line through the
    same reflections as the ray.
    """
    N = P.shape[0]
    P, V = P.copy(), V.copy()
    start = hexagon.normals[np.asarray(side, dtype=int)].copy()
    acc = np.zeros(N)
    out_len = np.full(N, np.nan)
    out_spot = np.full(N, np.nan)
    censored = np.zeros(N, dtype=bool)
    active = np.arange(N)
    normals = hexagon.normals
    for _ in range(cfg.unfold_depth + 1):
        if active.size == 0:
            break
        p, v = P[active], V[active]
        a = (p * J) @ normals.T
        b = (v * J) @ normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = -a / b
        ok = (b < 0) & (ratio > 1e-13) & (ratio < 1.0)
        t = np.where(ok, np.arctanh(np.where(ok, ratio, 0.0)), np.inf)
        which = np.argmin(t, axis=1)
        tmin = t[np.arange(active.size), which]
        lost = ~np.isfinite(tmin) | (acc[active] + np.where(np.isfinite(tmin), tmin, 0.0) > cfg.max_length)
        hit = ~lost & (which < 3)
        bounce = ~lost & (which >= 3)

        idx = active[hit]
        out_len[idx] = acc[idx] + tmin[hit]
        m = normals[which[hit]]
        out_spot[idx] = np.arccosh(np.maximum(np.abs(mink(start[idx], m)), 1.0))
        censored[active[lost]] = True

        idx = active[bounce]
        tb = tmin[bounce][:, None]
        pb, vb = P[idx], V[idx]
        newp = np.cosh(tb) * pb + np.sinh(tb) * vb
        newv = np.sinh(tb) * pb + np.cosh(tb) * vb
        n = normals[which[bounce]]
        # reflect the direction in the seam; the ray point lies on it
        newv = newv - 2.0 * mink(newv, n)[:, None] * n
        st = start[idx]
        start[idx] = st - 2.0 * mink(st, n)[:, None] * n
        # drift control
        newp = newp / np.sqrt(-mink(newp, newp))[:, None]
        newv = newv + mink(newv, newp)[:, None] * newp
        newv = newv / np.sqrt(mink(newv, newv))[:, None]
        P[idx], V[idx] = newp, newv
        acc[idx] += tmin[bounce]
        active = idx
    censored[active] = True
    return out_len, out_spot, censored


def sample_boundary_points(p: PantsParams, n: int, rng: np.random.Generator):
    """Boundary index chosen in proportion to length, position uniform on it."""
    L = np.asarray(p.lengths)
    side = rng.choice(3, size=n, p=L / L.sum())
    pos = rng.uniform(0.0, 1.0, size=n) * L[side]
    return side, pos


def sample_boundary_point(p: PantsParams, rng: np.random.Generator):
    side, pos = sample_boundary_points(p, 1, rng)
    return int(side[0]), float(pos[0])


def trace_normal_ray(p, point, cfg: RayTraceConfig = RayTraceConfig(), hexagon: Optional[Hexagon] = None):
    """Hitting length of the normal ray from (boundary index, arclength).

    Returns (length, censored).  ``p`` may be PantsParams or a PantsGeometry
    (for instance one moved by an isometry).
    """
    if hexagon is None:
        geo = p if isinstance(p, PantsGeometry) else pants_geometry(p)
        hexagon = Hexagon.from_geometry(geo)
    i, s = point
    P, V = hexagon.start_state(np.array([i]), np.array([s]))
    length, _, cens = trace_rays(hexagon, P, V, np.array([i]), cfg)
    return (math.inf, True) if cens[0] else (float(length[0]), False)


def sample_lengths(p: PantsParams, n_samples: int, cfg: RayTraceConfig = RayTraceConfig(),
                   threads: int = 1):
    """Raw (length, spot length, censored) arrays for n_samples rays.

    Samples are drawn in fixed-size chunks, each from its own child stream
    of ``cfg.seed``, so the output does not depend on ``threads``.
    """
    hexagon = Hexagon.from_geometry(pants_geometry(p))
    n_chunks = -(-n_samples // CHUNK)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_chunks)

    def run(c):
        size = min(CHUNK, n_samples - c * CHUNK)
        rng = np.random.default_rng(seeds[c])
        side, pos = sample_boundary_points(p, size, rng)
        P, V = hexagon.start_state(side, pos)
        return trace_rays(hexagon, P, V, side, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, range(n_chunks)))
    else:
        parts = [run(c) for c in range(n_chunks)]
    return tuple(np.concatenate([part[j] for part in parts]) for j in range(3))


def empirical_moments(p: PantsParams, k_max: int, n_samples: int,
                      cfg: RayTraceConfig = RayTraceConfig(), threads: int = 1,
                      truncation_cutoff: Optional[float] = None,
                      max_censored: float = 0.10) -> EmpiricalReport:
    """Sample moments of the hitting length, censored rays excluded.

    With ``truncation_cutoff`` the report also estimates E[L; spot length <=
    cutoff], the quantity a spectrum truncated at that cutoff computes.
    """
    if n_samples < 10_000:
        raise ValueError("empirical_moments needs at least 10^4 samples")
    lengths, spot, cens = sample_lengths(p, n_samples, cfg, threads)
    frac = float(cens.mean())
    if frac > max_censored:
        raise CensoringError(f"censored fraction {frac:.3g} exceeds {max_censored}")
    x = lengths[~cens]
    m = x.size
    moments = tuple([1.0] + [float(np.mean(x ** k)) for k in range(1, k_max + 1)])
    mean = float(x.mean())
    second = float(np.mean(x * x))
    stderr = float(x.std(ddof=1) / math.sqrt(m))
    tm = ts = tmass = None
    if truncation_cutoff is not None:
        inside = spot[~cens] <= truncation_cutoff
        y = np.where(inside, x, 0.0)
        tm = float(y.mean())
        ts = float(y.std(ddof=1) / math.sqrt(m))
        tmass = float(inside.mean())
    return EmpiricalReport(m, mean, second, stderr, frac, moments,
                           truncation_cutoff, tm, ts, tmass, float(x.min()))


def save_lengths_csv(lengths: np.ndarray, censored: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write("length\n")
        for v in lengths[~censored]:
            fh.write(f"{float(v)!r}\n")
