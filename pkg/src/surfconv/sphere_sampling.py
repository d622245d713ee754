"""Point sampling schemes on the unit sphere and their coarsening rules.

The polar axis is y: the poles sit at (0, +1, 0) and (0, -1, 0), which are
also the two directions where the tangent-frame construction needs its
fallback.  Azimuth theta in [0, 2pi) and polar angle phi in [0, pi] map to
Cartesian coordinates as

    x = sin(phi) * cos(theta)
    y = cos(phi)
    z = -sin(phi) * sin(theta)

The sign on z makes "east" in a node's tangent frame coincide with the
direction of increasing azimuth, so equirectangular image columns and graph
selections agree on orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LimitExceeded, TooCoarse
from .graphs import ClusterAssignment

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

MAX_ICOSPHERE_SUBDIVISIONS = 8

SAMPLING_METHODS = ("layering", "fibonacci", "icosphere", "equirect", "random")


def sph_to_cart(theta, phi):
    """Cartesian coordinates for azimuth/polar angles, y as polar axis."""
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    sin_phi = np.sin(phi)
    return np.stack(
        [sin_phi * np.cos(theta), np.cos(phi), -sin_phi * np.sin(theta)], axis=-1
    )


def cart_to_sph(points):
    """Inverse of :func:`sph_to_cart`; returns (theta, phi)."""
    points = np.asarray(points, dtype=np.float64)
    theta = np.mod(np.arctan2(-points[..., 2], points[..., 0]), 2.0 * math.pi)
    phi = np.arccos(np.clip(points[..., 1], -1.0, 1.0))
    return theta, phi


@dataclass(frozen=True)
class SphericalPointSet:
    """Unit-sphere sample points with the method and parameters behind them."""

    points: np.ndarray
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        norms = np.linalg.norm(pts, axis=1)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {pts.shape}")
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("points must lie on the unit sphere")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def _round_half_up(x) -> int:
    return int(math.floor(x + 0.5))


def sample_layering(n_phi: int) -> SphericalPointSet:
    """Latitude-ring sampling with near-equal area per point.

    The sphere is cut into ``M_phi`` rings of angular height ``d_phi``; ring
    ``m`` sits at ``phi = pi (m + 0.5) / M_phi`` and carries
    ``round(2 pi sin(phi) / d_theta)`` evenly spaced points starting at
    ``theta = 0``, where ``d_theta = a / d_phi`` and ``a = pi^2 / n_phi^2``
    is the target area per point.  Rounding is half-up throughout.
    """
    if n_phi < 1:
        raise TooCoarse(f"n_phi must be at least 1, got {n_phi}")
    area = math.pi**2 / n_phi**2
    d = math.sqrt(area)
    m_phi = max(1, _round_half_up(math.pi / d))
    d_phi = math.pi / m_phi
    d_theta = area / d_phi
    thetas = []
    phis = []
    for m in range(m_phi):
        phi = math.pi * (m + 0.5) / m_phi
        m_theta = max(1, _round_half_up(2.0 * math.pi * math.sin(phi) / d_theta))
        for n in range(m_theta):
            thetas.append(2.0 * math.pi * n / m_theta)
            phis.append(phi)
    return SphericalPointSet(
        sph_to_cart(np.array(thetas), np.array(phis)), "layering", {"n_phi": int(n_phi)}
    )


def layering_row_counts(n_phi: int) -> list[int]:
    """Points per latitude ring for :func:`sample_layering`."""
    if n_phi < 1:
        raise TooCoarse(f"n_phi must be at least 1, got {n_phi}")
    area = math.pi**2 / n_phi**2
    d = math.sqrt(area)
    m_phi = max(1, _round_half_up(math.pi / d))
    d_phi = math.pi / m_phi
    d_theta = area / d_phi
    return [
        max(1, _round_half_up(2.0 * math.pi * math.sin(math.pi * (m + 0.5) / m_phi) / d_theta))
        for m in range(m_phi)
    ]


def sample_fibonacci(count: int) -> SphericalPointSet:
    """Fibonacci spiral: uniform polar-axis offsets and golden-angle azimuths."""
    if count < 1:
        raise TooCoarse(f"count must be at least 1, got {count}")
    k = np.arange(count, dtype=np.float64)
    y = 1.0 - 2.0 * (k + 0.5) / count
    radius = np.sqrt(np.maximum(0.0, 1.0 - y * y))
    azimuth = k * GOLDEN_ANGLE
    points = np.stack(
        [radius * np.cos(azimuth), y, -radius * np.sin(azimuth)], axis=1
    )
    return SphericalPointSet(points, "fibonacci", {"count": int(count)})


_ICO_BASE_PHI = (1.0 + math.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array(
    [
        [-1, _ICO_BASE_PHI, 0],
        [1, _ICO_BASE_PHI, 0],
        [-1, -_ICO_BASE_PHI, 0],
        [1, -_ICO_BASE_PHI, 0],
        [0, -1, _ICO_BASE_PHI],
        [0, 1, _ICO_BASE_PHI],
        [0, -1, -_ICO_BASE_PHI],
        [0, 1, -_ICO_BASE_PHI],
        [_ICO_BASE_PHI, 0, -1],
        [_ICO_BASE_PHI, 0, 1],
        [-_ICO_BASE_PHI, 0, -1],
        [-_ICO_BASE_PHI, 0, 1],
    ],
    dtype=np.float64,
)

_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def _subdivide_once(verts, faces):
    """Split each triangle in four; midpoints merge exactly via edge keys."""
    edge_pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edge_pairs = np.sort(edge_pairs, axis=1)
    unique_edges, inverse = np.unique(edge_pairs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    mids = verts[unique_edges[:, 0]] + verts[unique_edges[:, 1]]
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    mid_index = len(verts) + inverse
    f = len(faces)
    ab, bc, ca = mid_index[:f], mid_index[f : 2 * f], mid_index[2 * f :]
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([b, bc, ab], axis=1),
            np.stack([c, ca, bc], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )
    return np.concatenate([verts, mids]), new_faces


def icosphere_vertices_faces(subdivisions: int):
    """Vertices and faces of a subdivided icosahedron on the unit sphere."""
    if subdivisions < 0:
        raise TooCoarse(f"subdivisions must be nonnegative, got {subdivisions}")
    if subdivisions > MAX_ICOSPHERE_SUBDIVISIONS:
        raise LimitExceeded(
            f"subdivisions capped at {MAX_ICOSPHERE_SUBDIVISIONS}, got {subdivisions}"
        )
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    faces = _ICO_FACES
    for _ in range(subdivisions):
        verts, faces = _subdivide_once(verts, faces)
    return verts, faces


def sample_icosphere(subdivisions: int) -> SphericalPointSet:
    """Icosphere vertices: 10 * 4**s + 2 points."""
    verts, _ = icosphere_vertices_faces(subdivisions)
    return SphericalPointSet(verts, "icosphere", {"subdivisions": int(subdivisions)})


def sample_equirect(width: int, height: int) -> SphericalPointSet:
    """One point per pixel center of a width x height equirectangular grid.

    Row-major order: node r * width + c maps to pixel (row r, col c).
    """
    if width < 1 or height < 1:
        raise TooCoarse(f"grid must be at least 1x1, got {width}x{height}")
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    theta = 2.0 * math.pi * (cols.ravel() + 0.5) / width
    phi = math.pi * (rows.ravel() + 0.5) / height
    pts = sph_to_cart(theta, phi)
    return SphericalPointSet(pts, "equirect", {"width": int(width), "height": int(height)})


def equirect_source_pixels(width: int, height: int) -> np.ndarray:
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return np.stack([rows.ravel(), cols.ravel()], axis=1)


def sample_random(count: int, seed: int = 0) -> SphericalPointSet:
    """Uniform points from normalized Gaussian draws, reproducible per seed."""
    if count < 1:
        raise TooCoarse(f"count must be at least 1, got {count}")
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((count, 3))
    norms = np.linalg.norm(pts, axis=1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        pts[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(pts, axis=1)
    return SphericalPointSet(pts / norms[:, None], "random", {"count": int(count), "seed": int(seed)})


def nearest_assignment(fine: np.ndarray, coarse: np.ndarray) -> ClusterAssignment:
    """Assign each fine point to the angularly nearest coarse point.

    Angular nearest on unit vectors is the argmax of the dot product; exact
    ties go to the lowest coarse index.
    """
    parents = np.empty(len(fine), dtype=np.int64)
    chunk = max(1, 8_000_000 // max(len(coarse), 1))
    for start in range(0, len(fine), chunk):
        block = fine[start : start + chunk]
        parents[start : start + len(block)] = np.argmax(block @ coarse.T, axis=1)
    return ClusterAssignment(parents, len(coarse))


def coarse_params(method: str, params: dict) -> dict:
    """Parameters of the 1/4-count coarse set for each sampling method."""
    if method == "layering":
        n_phi = params["n_phi"]
        if n_phi < 2:
            raise TooCoarse("layering with n_phi=1 cannot be coarsened")
        return {"n_phi": max(1, n_phi // 2)}
    if method in ("fibonacci", "random"):
        count = params["count"]
        if count < 4:
            raise TooCoarse(f"{method} set of {count} points cannot be coarsened")
        out = {"count": max(1, count // 4)}
        if method == "random":
            out["seed"] = params.get("seed", 0) + 1
        return out
    if method == "icosphere":
        s = params["subdivisions"]
        if s < 1:
            raise TooCoarse("icosphere at subdivision 0 cannot be coarsened")
        return {"subdivisions": s - 1}
    if method == "equirect":
        w, h = params["width"], params["height"]
        if w < 2 or h < 2:
            raise TooCoarse(f"equirect grid {w}x{h} cannot be coarsened")
        return {"width": max(1, w // 2), "height": max(1, h // 2)}
    raise ValueError(f"unknown sampling method {method!r}")


def sample(method: str, params: dict) -> SphericalPointSet:
    """Sample by method name with its parameter dict."""
    if method == "layering":
        return sample_layering(params["n_phi"])
    if method == "fibonacci":
        return sample_fibonacci(params["count"])
    if method == "icosphere":
        return sample_icosphere(params["subdivisions"])
    if method == "equirect":
        return sample_equirect(params["width"], params["height"])
    if method == "random":
        return sample_random(params["count"], params.get("seed", 0))
    raise ValueError(f"unknown sampling method {method!r}")


def cluster_resample(points: SphericalPointSet):
    """Coarse point set at roughly a quarter of the count, plus assignments.

    Coarsening keeps the sampling method: layering halves ``n_phi``,
    icosphere drops one subdivision, fibonacci and random quarter their
    counts (random re-draws with the seed advanced by one), and equirect
    halves both grid dimensions.
    """
    params = coarse_params(points.method, points.params)
    coarse = sample(points.method, params)
    return coarse, nearest_assignment(points.points, coarse.points)


def params_for_target(method: str, target_count: int, seed: int = 0) -> dict:
    """Parameters that bring a method's point count close to ``target_count``."""
    if target_count < 1:
        raise TooCoarse(f"target count must be positive, got {target_count}")
    if method == "layering":
        # total count grows like 4 n_phi^2 / pi
        return {"n_phi": max(1, _round_half_up(math.sqrt(math.pi * target_count) / 2.0))}
    if method == "fibonacci":
        return {"count": int(target_count)}
    if method == "random":
        return {"count": int(target_count), "seed": int(seed)}
    if method == "equirect":
        h = max(1, _round_half_up(math.sqrt(target_count / 2.0)))
        return {"width": 2 * h, "height": h}
    if method == "icosphere":
        best = min(
            range(MAX_ICOSPHERE_SUBDIVISIONS + 1),
            key=lambda s: abs(10 * 4**s + 2 - target_count),
        )
        return {"subdivisions": best}
    raise ValueError(f"unknown sampling method {method!r}")


_EDGE_ARC_CACHE: dict[int, float] = {}


def icosphere_edge_arc(subdivisions: int) -> float:
    """Mean edge length, as an angle, of the icosphere at a subdivision level."""
    if subdivisions not in _EDGE_ARC_CACHE:
        verts, faces = icosphere_vertices_faces(subdivisions)
        pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)
        dots = np.clip(np.sum(verts[pairs[:, 0]] * verts[pairs[:, 1]], axis=1), -1.0, 1.0)
        _EDGE_ARC_CACHE[subdivisions] = float(np.mean(np.arccos(dots)))
    return _EDGE_ARC_CACHE[subdivisions]


@dataclass(frozen=True)
class ResolutionChoice:
    """Sampling parameters matching a field of view's angular resolution."""

    method: str
    params: dict
    requested: float
    achieved: float


def resolution_for(method: str, fov: float, n: int) -> ResolutionChoice:
    """Pick sampling parameters whose spacing best matches ``fov / n``.

    ``fov`` is in radians.  Layering and equirect match the ring spacing
    ``pi / n_phi``; fibonacci and random match the equal-area spacing
    ``sqrt(4 pi / count)``; icosphere takes the smallest subdivision level
    whose mean edge arc fits, reporting the spacing it actually achieves.
    """
    if fov <= 0.0 or n < 1:
        raise TooCoarse(f"need positive fov and n, got fov={fov}, n={n}")
    delta = fov / n
    if method == "layering":
        n_phi = max(1, _round_half_up(math.pi / delta))
        return ResolutionChoice(method, {"n_phi": n_phi}, delta, math.pi / n_phi)
    if method == "equirect":
        h = max(1, _round_half_up(math.pi / delta))
        return ResolutionChoice(
            method, {"width": 2 * h, "height": h}, delta, math.pi / h
        )
    if method in ("fibonacci", "random"):
        count = max(1, _round_half_up(4.0 * math.pi / delta**2))
        return ResolutionChoice(
            method, {"count": count}, delta, math.sqrt(4.0 * math.pi / count)
        )
    if method == "icosphere":
        for s in range(MAX_ICOSPHERE_SUBDIVISIONS + 1):
            arc = icosphere_edge_arc(s)
            if arc <= delta:
                return ResolutionChoice(method, {"subdivisions": s}, delta, arc)
        raise LimitExceeded(
            f"icosphere cannot reach spacing {delta:.6f} within "
            f"{MAX_ICOSPHERE_SUBDIVISIONS} subdivisions"
        )
    raise ValueError(f"unknown sampling method {method!r}")
