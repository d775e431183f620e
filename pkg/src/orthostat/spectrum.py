"""Orthospectra: exact enumeration for pairs of pants, and JSON/CSV I/O.

A pair of pants with boundary lengths (L1, L2, L3) is the double of a
right-angled hexagon along its three seams.  Reflections in the seam lines
generate a group whose orientation-preserving half is the pants group, and
whose translates of the hexagon-containing region tile the universal cover.
Lifts of the boundary are the images of the three boundary sides under
that reflection group, and each orthogeodesic from boundary i is one
orbit, under the stabilizer of b_i, of lifts other than b_i itself.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import INF, Geodesic, GeometryError, Isometry, _mobius_real
from .specfun import ball_volume, spot_radius


class SchemaError(ValueError):
    """Spectrum file or object violates the schema."""


class UnstableEnumeration(RuntimeError):
    """Enumeration did not stabilize below the cutoff within the depth cap."""


@dataclass(frozen=True)
class PantsParams:
    L1: float
    L2: float
    L3: float

    def __post_init__(self):
        for name in ("L1", "L2", "L3"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite length, got {v}")

    @property
    def lengths(self) -> tuple:
        return (self.L1, self.L2, self.L3)

    @property
    def perimeter(self) -> float:
        return self.L1 + self.L2 + self.L3


@dataclass(frozen=True)
class OrthoSpectrum:
    """Truncated orthospectrum with the metadata the identities need.

    ``spots_per_length`` is the number of boundary balls each listed length
    accounts for: 2 when every unoriented orthogeodesic is listed once (it
    leaves the boundary at both ends), 1 when the list already counts each
    end separately, as in hand-made synthetic spectra.
    """

    dimension: int
    boundary_volume: float
    lengths: tuple
    truncation_cutoff: Optional[float] = None
    synthetic: bool = False
    spots_per_length: int = 1

    def __post_init__(self):
        lengths = tuple(sorted(float(x) for x in self.lengths))
        object.__setattr__(self, "lengths", lengths)
        if not isinstance(self.dimension, int) or self.dimension < 2:
            raise SchemaError(f"dimension must be an integer >= 2, got {self.dimension!r}")
        if not (self.boundary_volume > 0 and math.isfinite(self.boundary_volume)):
            raise SchemaError(f"boundary_volume must be positive, got {self.boundary_volume}")
        if not lengths:
            raise SchemaError("spectrum has no lengths")
        if not all(x > 0 and math.isfinite(x) for x in lengths):
            raise SchemaError("orthogeodesic lengths must be positive and finite")
        if self.spots_per_length not in (1, 2):
            raise SchemaError("spots_per_length must be 1 or 2")
        if self.truncation_cutoff is not None and self.truncation_cutoff <= 0:
            raise SchemaError("truncation_cutoff must be positive")
        if not self.synthetic:
            total = self.spots_per_length * math.fsum(
                ball_volume(self.dimension - 1, spot_radius(x)) for x in lengths)
            if total > self.boundary_volume * (1 + 1e-9):
                raise SchemaError(
                    f"Basmajian bound violated: spots cover {total} > boundary volume "
                    f"{self.boundary_volume}")

    def __len__(self):
        return len(self.lengths)

    def truncated(self, cutoff: float) -> "OrthoSpectrum":
        keep = tuple(x for x in self.lengths if x <= cutoff)
        return OrthoSpectrum(self.dimension, self.boundary_volume, keep, cutoff,
                             self.synthetic, self.spots_per_length)

    def normalized(self) -> "OrthoSpectrum":
        """Copy whose boundary volume is replaced by the Basmajian sum."""
        from .moments import basmajian_sum
        return OrthoSpectrum(self.dimension, basmajian_sum(self), self.lengths,
                             self.truncation_cutoff, True, self.spots_per_length)

    def to_dict(self) -> dict:
        d = {
            "dimension": self.dimension,
            "boundary_volume": self.boundary_volume,
            "synthetic": self.synthetic,
            "lengths": list(self.lengths),
        }
        if self.truncation_cutoff is not None:
            d["truncation_cutoff"] = self.truncation_cutoff
        d["spots_per_length"] = self.spots_per_length
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OrthoSpectrum":
        if not isinstance(d, dict):
            raise SchemaError("spectrum document must be a JSON object")
        missing = {"dimension", "boundary_volume", "lengths"} - d.keys()
        if missing:
            raise SchemaError(f"missing keys: {sorted(missing)}")
        lengths = d["lengths"]
        if not isinstance(lengths, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in lengths):
            raise SchemaError("lengths must be a list of numbers")
        dim = d["dimension"]
        if isinstance(dim, bool) or not isinstance(dim, int):
            raise SchemaError("dimension must be an integer")
        return cls(
            dimension=dim,
            boundary_volume=float(d["boundary_volume"]),
            lengths=tuple(lengths),
            truncation_cutoff=d.get("truncation_cutoff"),
            synthetic=bool(d.get("synthetic", False)),
            spots_per_length=int(d.get("spots_per_length", 1)),
        )


def save_spectrum(s: OrthoSpectrum, path) -> None:
    # repr-precision floats round-trip exactly through json
    Path(path).write_text(json.dumps(s.to_dict(), indent=1) + "\n")


def load_spectrum(path) -> OrthoSpectrum:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return OrthoSpectrum.from_dict(doc)


def export_csv(s: OrthoSpectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["length"])
        for x in s.lengths:
            w.writerow([repr(x)])


# --- pants geometry -------------------------------------------------------

def seam_length(a: float, b: float, opposite: float) -> float:
    """Hexagon side between boundary half-lengths a, b, facing half-length c."""
    return math.acosh((math.cosh(opposite) + math.cosh(a) * math.cosh(b))
                      / (math.sinh(a) * math.sinh(b)))


def _perpendicular_to_unit_circle(theta: float, scale: float) -> Geodesic:
    # geodesic meeting |z| = scale orthogonally at scale * e^{i theta}
    s, c = math.sin(theta), math.cos(theta)
    return Geodesic(scale * (1 - s) / c, scale * (1 + s) / c)


def common_perpendicular(a: Geodesic, b: Geodesic) -> Geodesic:
    frame = Isometry.to_zero_infinity(a)
    p, q = frame.act_ideal(b.start), frame.act_ideal(b.end)
    if p * q <= 0:
        raise GeometryError("geodesics are not ultraparallel")
    r = math.copysign(math.sqrt(p * q), p)
    inv = frame.inverse()
    return Geodesic(inv.act_ideal(-r), inv.act_ideal(r))


@dataclass(frozen=True)
class PantsGeometry:
    """Hexagon data for a pair of pants in the upper half-plane.

    ``boundary[i]`` is the full line through hexagon side b_{i+1};
    ``seams[k]`` is the seam line opposite boundary k (it joins the other two).
    ``corners[i]`` are the two hexagon vertices on b_{i+1}.
    """

    params: PantsParams
    boundary: tuple
    seams: tuple
    corners: tuple
    seam_lengths: tuple

    def reflection(self, k: int) -> Isometry:
        return Isometry.reflection(self.seams[k])

    def adjacent_seams(self, i: int) -> tuple:
        return tuple(k for k in range(3) if k != i)

    def transformed(self, T: Isometry) -> "PantsGeometry":
        return PantsGeometry(
            self.params,
            tuple(T.act(g) for g in self.boundary),
            tuple(T.act(g) for g in self.seams),
            tuple(tuple(T.act_point(z) for z in pair) for pair in self.corners),
            self.seam_lengths,
        )


def pants_geometry(p: PantsParams) -> PantsGeometry:
    a, b, c = (x / 2.0 for x in p.lengths)
    R = math.exp(a)
    d12 = seam_length(a, b, c)  # seam opposite b3
    d13 = seam_length(a, c, b)  # seam opposite b2
    d23 = seam_length(b, c, a)  # seam opposite b1
    b1 = Geodesic(0.0, INF)
    s3 = Geodesic(-1.0, 1.0)  # joins b1, b2
    s2 = Geodesic(-R, R)  # joins b1, b3
    th2 = math.asin(1.0 / math.cosh(d12))
    th3 = math.asin(1.0 / math.cosh(d13))
    b2 = _perpendicular_to_unit_circle(th2, 1.0)
    b3 = _perpendicular_to_unit_circle(th3, R)
    s1 = common_perpendicular(b2, b3)
    c1 = (1j, 1j * R)
    c2 = (complex(math.cos(th2), math.sin(th2)), _line_intersection(b2, s1))
    c3 = (R * complex(math.cos(th3), math.sin(th3)), _line_intersection(b3, s1))
    return PantsGeometry(p, (b1, b2, b3), (s1, s2, s3), (c1, c2, c3), (d23, d13, d12))


def _circle(g: Geodesic):
    u, v = g.canonical()
    return 0.5 * (u + v), 0.5 * (v - u)


def _line_intersection(g: Geodesic, h: Geodesic) -> complex:
    (m1, r1), (m2, r2) = _circle(g), _circle(h)
    x = (r1 * r1 - r2 * r2 - m1 * m1 + m2 * m2) / (2.0 * (m2 - m1))
    y2 = r1 * r1 - (x - m1) ** 2
    if y2 <= 0:
        raise GeometryError("lines do not cross")
    return complex(x, math.sqrt(y2))


def pants_group(p: PantsParams):
    """Generators g1, g2, g3 = (g1 g2)^{-1} and their axes b1, b2, b3.

    g_i is the product of reflections in the two seams meeting b_i, so it
    translates along b_i by L_i.
    """
    geo = pants_geometry(p)
    r = [geo.reflection(k) for k in range(3)]
    g1 = (r[1] @ r[2]).positive_trace()
    g2 = (r[2] @ r[0]).positive_trace()
    g3 = (g1 @ g2).inverse()
    axes = tuple(g.axis() for g in (g1, g2, g3))
    for i, (ax, line) in enumerate(zip(axes, geo.boundary)):
        if not ax.same_line(line, 1e-8):
            raise GeometryError(f"axis of g{i + 1} does not match boundary line")
    return (g1, g2, g3), axes


# --- enumeration ---------------------------------------------------------

@dataclass(frozen=True)
class Orthogeodesic:
    length: float
    source: int            # boundary index 0..2 of the first end
    target: int            # boundary index 0..2 of the second end
    source_position: float  # arclength of the first foot, in [0, L_source)
    target_position: float
    word: tuple            # seam-reflection word of the tile holding the target lift


@dataclass
class EnumerationResult:
    params: PantsParams
    cutoff: float
    depth: int
    complete: bool
    oriented: list = field(default_factory=list)
    nodes: int = 0

    def unoriented(self, tol: float = 1e-7) -> list:
        """One record per unoriented orthogeodesic (the end with the smaller key)."""
        out = []
        for o in self.oriented:
            if o.source < o.target:
                out.append(o)
            elif o.source == o.target and o.source_position < o.target_position - tol:
                out.append(o)
        return out


class _Frame:
    """Coordinates along one boundary line: b_i -> (0, inf), arclength = log height."""

    def __init__(self, geo: PantsGeometry, i: int):
        self.i = i
        self.L = geo.params.lengths[i]
        self.iso = Isometry.to_zero_infinity(geo.boundary[i])
        self.m = self.iso.matrix
        # origin at the corner with the lower-index seam
        k = geo.adjacent_seams(i)[0]
        p, q = self._ends(geo.seams[k].start, geo.seams[k].end)
        self.h0 = math.sqrt(abs(p * q))

    def _map(self, x: float) -> float:
        (a, b), (c, d) = self.m
        if x == INF:
            return a / c if c != 0 else INF
        den = c * x + d
        return (a * x + b) / den if den != 0 else INF

    def _ends(self, u: float, v: float):
        return self._map(u), self._map(v)

    def position(self, p: float, q: float) -> float:
        pos = 0.5 * math.log(abs(p * q)) - math.log(self.h0)
        pos = math.fmod(pos, self.L)
        if pos < 0:
            pos += self.L
        if self.L - pos < 1e-10:
            pos = 0.0
        return pos


def _ideal_side_inside(x: float, p: float, q: float) -> bool:
    """Whether ideal point x lies under the semicircle with endpoints p, q."""
    lo, hi = (p, q) if p < q else (q, p)
    return lo < x < hi


def _segment_halfplane_distance(y0: float, y1: float, p: float, q: float,
                                far_inside: bool) -> float:
    """Distance from {iy : y0 <= y <= y1} to one side of the line (p, q).

    ``far_inside`` selects the half-plane under the semicircle; otherwise
    the outside.  Returns 0 when the segment meets that half-plane.
    """
    if p == INF or q == INF:
        return 0.0  # cannot happen for disjoint lifts; never prune
    pq = p * q
    if pq < 0:
        h = math.sqrt(-pq)
        if y0 <= h <= y1:
            return 0.0
        inside = y0 < h  # whole segment below the crossing lies inside
        if inside == far_inside:
            return 0.0
        return min(_pl_dist(complex(0, y), p, q) for y in (y0, y1))
    # same-sign endpoints: the imaginary axis lies outside the semicircle
    if not far_inside:
        return 0.0
    f = math.sqrt(pq)
    if y0 <= f <= y1:
        lo, hi = sorted((abs(p), abs(q)))
        return 2.0 * math.atanh(math.sqrt(lo / hi))
    return min(_pl_dist(complex(0, y), p, q) for y in (y0, y1))


def _pl_dist(z: complex, p: float, q: float) -> float:
    w = (z - p) / (z - q)
    return math.asinh(abs(w.real) / abs(w.imag))


def enumerate_orthogeodesics(p: PantsParams, cutoff: float, word_depth: int,
                             geo: Optional[PantsGeometry] = None) -> EnumerationResult:
    """All oriented orthogeodesics of length <= cutoff reached within word_depth.

    For each boundary b_i, a depth-first walk over seam-reflection words
    visits tiles; a subtree is pruned when the half-plane containing it is
    farther than ``cutoff`` from a fundamental segment of b_i.  The result
    is complete exactly when no branch was cut by the depth cap.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if word_depth < 1:
        raise ValueError("word_depth must be >= 1")
    geo = geo or pants_geometry(p)
    refl = [geo.reflection(k).matrix for k in range(3)]
    seam_ends = [(s.start, s.end) for s in geo.seams]
    bnd_ends = [(b.start, b.end) for b in geo.boundary]
    frames = [_Frame(geo, i) for i in range(3)]
    result = EnumerationResult(p, cutoff, word_depth, True)
    slack = 1e-9 * max(1.0, cutoff)

    for i in range(3):
        fr = frames[i]
        y0, y1 = fr.h0, fr.h0 * math.exp(fr.L)
        stab = set(geo.adjacent_seams(i))
        found = []
        stack = [((), np.eye(2))]
        while stack:
            word, W = stack.pop()
            result.nodes += 1
            M = fr.m @ W
            for k in range(3):
                if k == i and all(x in stab for x in word):
                    continue  # W b_i = b_i
                pp, qq = (_mobius_real(M, e) for e in bnd_ends[k])
                if pp * qq <= 0 or pp in (0.0, INF) or qq in (0.0, INF):
                    raise GeometryError("boundary lifts intersect; geometry is inconsistent")
                lo, hi = sorted((abs(pp), abs(qq)))
                ell = 2.0 * math.atanh(math.sqrt(lo / hi))
                if ell > cutoff + slack:
                    continue
                pos = fr.position(pp, qq)
                if pos >= fr.L:
                    continue
                # reverse end: lift W^{-1} b_i, seen from b_k
                Winv = np.linalg.inv(W)
                Mk = frames[k].m @ Winv
                rp, rq = (_mobius_real(Mk, e) for e in bnd_ends[i])
                back = frames[k].position(rp, rq)
                if len(word) % 2:
                    # W is orientation-reversing; the deck transformation onto
                    # W b_k is W composed with the seam reflection fixing
                    # position 0 on b_k, which mirrors the foot
                    back = (-back) % frames[k].L
                    if frames[k].L - back < 1e-10:
                        back = 0.0
                found.append(Orthogeodesic(ell, i, k, pos, back, word))
            last = word[-1] if word else None
            for y in range(3):
                if y == last:
                    continue
                lp, lq = (_mobius_real(M, e) for e in seam_ends[y])
                z = next(zz for zz in range(3) if zz != y)
                ref = _mobius_real(M, seam_ends[z][0])
                ref_inside = INF not in (ref, lp, lq) and _ideal_side_inside(ref, lp, lq)
                bound = _segment_halfplane_distance(y0, y1, lp, lq, far_inside=not ref_inside)
                if bound > cutoff + slack:
                    continue
                if len(word) >= word_depth:
                    result.complete = False
                    continue
                stack.append((word + (y,), W @ refl[y]))
        result.oriented.extend(_dedupe(found, fr.L))
    result.oriented.sort(key=lambda o: (o.length, o.source, o.source_position))
    return result


def _dedupe(found: Sequence[Orthogeodesic], L: float) -> list:
    """Merge repeated sightings of one orthogeodesic.

    Distinct orthogeodesics have disjoint spots, so their feet are at least
    R(l_a) + R(l_b) apart (R the spot radius); sightings whose feet are
    closer than half that are the same orthogeodesic seen through different
    tiles.  This tolerates the rounding that long tile words accumulate.
    Among duplicates the sighting with the shortest word is kept.
    """
    def same(a, b):
        d = abs(a.source_position - b.source_position)
        d = min(d, L - d)
        return d <= 0.5 * (spot_radius(a.length) + spot_radius(b.length))

    items = sorted(found, key=lambda o: o.source_position)
    groups: list = []
    for o in items:
        for g in reversed(groups[-8:]):
            if same(g[0], o):
                g.append(o)
                break
        else:
            groups.append([o])
    # wrap-around between the last and first groups
    if len(groups) > 1 and same(groups[0][0], groups[-1][0]):
        groups[0].extend(groups.pop())
    return [min(g, key=lambda o: (len(o.word), o.word)) for g in groups]


def spectrum_from_enumeration(res: EnumerationResult, cutoff: Optional[float] = None) -> OrthoSpectrum:
    cutoff = res.cutoff if cutoff is None else cutoff
    lengths = tuple(o.length for o in res.unoriented() if o.length <= cutoff)
    return OrthoSpectrum(2, res.params.perimeter, lengths, cutoff, False, 2)


def spectra_match(a: Sequence[float], b: Sequence[float], tol: float = 1e-9) -> bool:
    a, b = sorted(a), sorted(b)
    return len(a) == len(b) and all(abs(x - y) <= tol * max(1.0, abs(x)) for x, y in zip(a, b))


def enumerate_orthospectrum(p: PantsParams, length_cutoff: float, word_depth: int = 6,
                            max_depth: int = 512, return_result: bool = False):
    """Orthospectrum of the pants below ``length_cutoff``, checked for depth stability.

    Starts at ``word_depth`` and doubles until the walk completes, then
    confirms that one extra level of depth leaves the spectrum unchanged.
    """
    geo = pants_geometry(p)
    depth = word_depth
    while True:
        res = enumerate_orthogeodesics(p, length_cutoff, depth, geo)
        if res.complete:
            break
        if depth >= max_depth:
            raise UnstableEnumeration(
                f"enumeration below {length_cutoff} not complete at depth {depth}")
        depth = min(2 * depth, max_depth)
    check = enumerate_orthogeodesics(p, length_cutoff, depth + 1, geo)
    s1, s2 = spectrum_from_enumeration(res), spectrum_from_enumeration(check)
    if not spectra_match(s1.lengths, s2.lengths):
        raise UnstableEnumeration(f"spectrum changed between depth {depth} and {depth + 1}")
    if 2 * len(res.unoriented()) != len(res.oriented):
        raise UnstableEnumeration("oriented orthogeodesics do not pair up into unoriented ones")
    return (s1, res) if return_result else s1
