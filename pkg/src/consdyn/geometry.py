"""Hull geometry for agent profiles.

A profile is the joint state of n agents in R^d, stored as an (n, d) array.
Profiles get summarized by generalized hulls: the convex hull of the agent
points, the componentwise interval box, or a polytope whose faces are normal
to a fixed positively spanning set of directions.  Everything downstream
(certification, trajectory monitoring, consensus detection) is phrased in
terms of containment, inclusion gaps, and Hausdorff distances between these
hulls, so this module is deliberately self contained.

Convex and direction hulls are supported in d = 1 and d = 2; interval hulls
work in any dimension.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
# a hull vertex within this fraction of its neighbors' span counts as collinear
COLLINEAR_TOL = 1e-12

HULL_KINDS = ("convex", "interval", "direction")


class GeometryError(ValueError):
    """Base class for geometry failures."""


class DimensionMismatchError(GeometryError):
    pass


class UnsupportedDimensionError(GeometryError):
    pass


class EmptyProfileError(GeometryError):
    pass


def _as_points(coords) -> np.ndarray:
    arr = np.asarray(coords, dtype=float)
    if arr.ndim != 2:
        raise GeometryError(f"expected an (n, d) array, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyProfileError("profile has no agents")
    if arr.shape[1] == 0:
        raise GeometryError("points need at least one coordinate")
    if not np.isfinite(arr).all():
        raise GeometryError("coordinates must be finite")
    return arr


@dataclass(frozen=True)
class Profile:
    """Joint state of n agents: one row per agent."""

    coords: np.ndarray

    def __post_init__(self):
        arr = _as_points(self.coords).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def agent(self, i: int) -> np.ndarray:
        return self.coords[i]

    def centroid(self) -> np.ndarray:
        return self.coords.mean(axis=0)

    def diameter(self) -> float:
        return _pairwise_diameter(self.coords)

    def __eq__(self, other):
        if not isinstance(other, Profile):
            return NotImplemented
        return self.coords.shape == other.coords.shape and bool(
            (self.coords == other.coords).all()
        )

    def __hash__(self):
        return hash(self.coords.tobytes())


def _pairwise_diameter(pts: np.ndarray) -> float:
    if pts.shape[0] < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


@dataclass(frozen=True)
class CoordinateMapSpec:
    """Recipe for turning a profile into hull generators.

    kind "identity" uses the agent points themselves (convex hull),
    "interval" uses componentwise extrema (box hull), and "direction"
    uses support values along a fixed positively spanning family of unit
    directions in the plane.
    """

    kind: str
    directions: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "interval", "direction"):
            raise GeometryError(f"unknown coordinate map kind {self.kind!r}")
        if self.kind != "direction":
            if self.directions is not None:
                raise GeometryError("directions are only meaningful for kind 'direction'")
            return
        if self.directions is None or len(self.directions) < 3:
            raise GeometryError("a direction spec needs at least three directions")
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.ndim != 2 or dirs.shape[1] != 2:
            raise GeometryError("directions must be 2-vectors")
        norms = np.linalg.norm(dirs, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-9):
            raise GeometryError("directions must be unit vectors")
        dirs = dirs / norms[:, None]
        angles = np.sort(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * np.pi))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        # positive span of the plane <=> no open half plane free of directions
        if gaps.max() >= np.pi - 1e-12:
            raise GeometryError("directions do not positively span the plane")
        object.__setattr__(
            self, "directions", tuple(tuple(map(float, row)) for row in dirs)
        )

    @property
    def hull_kind(self) -> str:
        return {"identity": "convex", "interval": "interval", "direction": "direction"}[
            self.kind
        ]

    def generator_count(self, n: int, d: int) -> int:
        if self.kind == "identity":
            return n
        if self.kind == "interval":
            return 2**d
        return len(self.directions)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "direction":
            out["directions"] = [list(u) for u in self.directions]
        return out

    @staticmethod
    def from_dict(data: dict) -> "CoordinateMapSpec":
        kind = data.get("kind")
        if kind == "direction":
            return CoordinateMapSpec(
                "direction", tuple(tuple(u) for u in data["directions"])
            )
        return CoordinateMapSpec(kind)


def identity_spec() -> CoordinateMapSpec:
    return CoordinateMapSpec("identity")


def interval_spec() -> CoordinateMapSpec:
    return CoordinateMapSpec("interval")


def direction_spec(directions: Iterable[Sequence[float]]) -> CoordinateMapSpec:
    return CoordinateMapSpec("direction", tuple(tuple(u) for u in directions))


def axis_direction_spec() -> CoordinateMapSpec:
    """Direction spec along +/- coordinate axes; its hulls coincide with boxes."""
    return direction_spec([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)])


@dataclass(frozen=True)
class Hull:
    """Compact convex region stored as its extreme points.

    Vertices are in counterclockwise order for d = 2 and ascending for
    d = 1.  Degenerate regions are fine: a single vertex is a point, two
    vertices a segment.
    """

    vertices: np.ndarray
    kind: str
    dimension: int

    def __post_init__(self):
        arr = _as_points(self.vertices).copy()
        if self.kind not in HULL_KINDS:
            raise GeometryError(f"unknown hull kind {self.kind!r}")
        if arr.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"vertices are {arr.shape[1]}-dimensional, hull says {self.dimension}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "vertices", arr)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "vertices": [[float(c) for c in v] for v in self.vertices],
        }


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def monotone_chain(points: np.ndarray) -> np.ndarray:
    """Planar convex hull, counterclockwise, starting at the lexicographic
    minimum.

    Two phases: an exact-predicate chain (pops on cross <= 0, so true
    extreme points are never lost, whatever the lexicographic order does on
    near-degenerate input), then a pruning pass that removes any vertex
    lying within the collinearity tolerance of its neighbors' segment,
    relative to that segment's length.  The relative form keeps tiny but
    honest triangles alive while still collapsing collinear and
    near-collinear profiles to their two extreme points (one when all
    points coincide)."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[0] == 1:
        return pts

    def half(seq):
        chain: list[np.ndarray] = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0.0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]

    changed = True
    while changed and len(hull) > 2:
        changed = False
        for i in range(len(hull)):
            u = hull[i - 1]
            v = hull[i]
            w = hull[(i + 1) % len(hull)]
            base = float(np.linalg.norm(w - u))
            if _segment_distance(v, u, w) <= COLLINEAR_TOL * base:
                hull.pop(i)
                changed = True
                break
    return np.array(hull)


def _dedup_rows(rows: list) -> np.ndarray:
    kept: list = []
    for r in rows:
        if not any(np.array_equal(r, k) for k in kept):
            kept.append(np.asarray(r, dtype=float))
    return np.array(kept)


def _direction_hull_vertices(pts: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    support = (pts @ dirs.T).max(axis=0)  # h_j = max_i x_i . u_j
    scale = max(1.0, float(np.abs(support).max()))
    feas_tol = 1e-9 * scale
    cand: list[np.ndarray] = []
    m = dirs.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            det = dirs[i, 0] * dirs[j, 1] - dirs[i, 1] * dirs[j, 0]
            if abs(det) <= 1e-12:
                continue
            z = np.linalg.solve(dirs[[i, j]], support[[i, j]])
            if np.all(dirs @ z <= support + feas_tol):
                cand.append(z)
    if not cand:
        raise GeometryError("direction hull has no feasible corner")
    return monotone_chain(np.array(cand))


def build_hull(profile: Profile, spec: CoordinateMapSpec) -> Hull:
    """Generalized hull of a profile under a coordinate map spec."""
    pts = profile.coords
    d = profile.d
    if spec.kind == "identity":
        if d == 1:
            lo, hi = float(pts.min()), float(pts.max())
            verts = np.array([[lo]]) if lo == hi else np.array([[lo], [hi]])
        elif d == 2:
            verts = monotone_chain(pts)
        else:
            raise UnsupportedDimensionError("convex hulls are implemented for d <= 2")
        return Hull(verts, "convex", d)
    if spec.kind == "interval":
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        if d == 1:
            rows = [[lo[0]], [hi[0]]]
        elif d == 2:
            # counterclockwise box corners, degeneracies collapse on dedup
            rows = [
                [lo[0], lo[1]],
                [hi[0], lo[1]],
                [hi[0], hi[1]],
                [lo[0], hi[1]],
            ]
        else:
            rows = [list(c) for c in itertools.product(*zip(lo, hi))]
        return Hull(_dedup_rows(rows), "interval", d)
    # direction
    if d != 2:
        raise UnsupportedDimensionError("direction hulls are planar only")
    dirs = np.asarray(spec.directions, dtype=float)
    return Hull(_direction_hull_vertices(pts, dirs), "direction", 2)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    s = float((p - a) @ ab) / denom
    s = min(1.0, max(0.0, s))
    return float(np.linalg.norm(p - (a + s * ab)))


def point_to_hull_distance(point, hull: Hull) -> float:
    """Euclidean distance from a point to a hull, 0 inside."""
    p = np.asarray(point, dtype=float).reshape(-1)
    if p.shape[0] != hull.dimension:
        raise DimensionMismatchError(
            f"point is {p.shape[0]}-dimensional, hull is {hull.dimension}"
        )
    verts = hull.vertices
    if hull.dimension == 1:
        lo, hi = float(verts.min()), float(verts.max())
        return max(lo - p[0], p[0] - hi, 0.0)
    if hull.dimension == 2:
        k = verts.shape[0]
        if k == 1:
            return float(np.linalg.norm(p - verts[0]))
        if k == 2:
            return _segment_distance(p, verts[0], verts[1])
        inside = all(
            _cross(verts[i], verts[(i + 1) % k], p) >= 0.0 for i in range(k)
        )
        if inside:
            return 0.0
        return min(
            _segment_distance(p, verts[i], verts[(i + 1) % k]) for i in range(k)
        )
    if hull.kind != "interval":
        raise UnsupportedDimensionError(
            "only interval hulls support dimensions above two"
        )
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    return float(np.linalg.norm(np.clip(p, lo, hi) - p))


def hull_contains(hull: Hull, point, tol: float = DEFAULT_TOL) -> bool:
    return point_to_hull_distance(point, hull) <= tol


def inclusion_excess(inner: Hull, outer: Hull) -> tuple[float, np.ndarray]:
    """How far the inner hull pokes out of the outer one.

    Returns the largest vertex-to-outer distance together with the offending
    vertex; (0.0, vertex) certifies inclusion for convex regions because the
    maximum over a polytope of a convex function sits at a vertex.
    """
    if inner.dimension != outer.dimension:
        raise DimensionMismatchError("hulls live in different dimensions")
    dists = [point_to_hull_distance(v, outer) for v in inner.vertices]
    worst = int(np.argmax(dists))
    return float(dists[worst]), inner.vertices[worst].copy()


def hull_included(inner: Hull, outer: Hull, tol: float = DEFAULT_TOL) -> bool:
    excess, _ = inclusion_excess(inner, outer)
    return excess <= tol


def hausdorff(a: Hull, b: Hull) -> float:
    """Hausdorff distance between two hulls.

    Symmetric two-sided form; each directed part is a maximum of a convex
    function over a polytope, hence attained at a vertex, so scanning
    vertices is exact.  For nested hulls the inner-to-outer part vanishes
    and the distance reduces to the maximal outer-vertex distance to the
    inner hull.
    """
    if a.dimension != b.dimension:
        raise DimensionMismatchError("hulls live in different dimensions")
    d_ab = max(point_to_hull_distance(v, b) for v in a.vertices)
    d_ba = max(point_to_hull_distance(v, a) for v in b.vertices)
    return max(d_ab, d_ba)


def hull_diameter(hull: Hull) -> float:
    return _pairwise_diameter(hull.vertices)


def profile_diameter(profile: Profile) -> float:
    return profile.diameter()
