"""Selection-graph construction on spherical point sets.

Each node gets a tangent frame whose x axis points east (increasing azimuth)
and whose y axis points north (toward the +y pole).  Neighbors found by
k-nearest-neighbor search are projected into that frame, and the projected
offset is split across the nine directional selections by the configured
interpolation scheme.  Raw edges then pass through the two normalization
stages and replicate padding from :mod:`surfconv.graphs`.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, TooFewPoints
from .graphs import (
    GraphLevel,
    GraphPyramid,
    NodeSet,
    SelectionEdges,
    add_replicate_padding,
    normalize_interpolation,
    normalize_rows,
)
from .interp import (
    CENTER,
    SCHEMES,
    InterpolationResult,
    angular_weights_batch,
    assign_selections,
    barycentric_weights_batch,
)
from .sphere_sampling import (
    SphericalPointSet,
    cluster_resample,
    equirect_source_pixels,
    nearest_assignment,
    params_for_target,
    sample,
)

NEAR_CENTER_FACTOR = 0.1

_POLE_EPS = 1e-6

DEFAULT_NEIGHBORS = 8


def frames_from_normals(normals: np.ndarray, up=(0.0, 1.0, 0.0)) -> np.ndarray:
    """Right-handed orthonormal frames oriented by an up direction.

    Row 0 (local x) is ``up x normal`` normalized, row 1 (local y) completes
    the frame, row 2 is the normal.  Normals within ``1e-6`` of parallel to
    ``up`` fall back to a perpendicular reference so the cross product stays
    well conditioned.
    """
    z = np.asarray(normals, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    up = up / np.linalg.norm(up)
    fallback = np.array([0.0, 0.0, 1.0])
    if abs(up @ fallback) > 0.9:
        fallback = np.array([0.0, 1.0, 0.0])
    a = np.cross(np.broadcast_to(up, z.shape), z)
    norms = np.linalg.norm(a, axis=1)
    polar = norms < _POLE_EPS
    if np.any(polar):
        a[polar] = np.cross(fallback, z[polar])
        norms[polar] = np.linalg.norm(a[polar], axis=1)
    x = a / norms[:, None]
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)


def tangent_frames(points: np.ndarray) -> np.ndarray:
    """Frames on the unit sphere: x east (increasing azimuth), y north."""
    return frames_from_normals(points)


def knn_indices(positions: np.ndarray, k: int):
    """Indices and distances of the k nearest neighbors of every point.

    Self matches are removed; each row is ordered by (distance, index) so
    exact ties resolve to the lower index.
    """
    n = len(positions)
    if k < 1 or k > n - 1:
        raise TooFewPoints(f"need 1 <= k <= {n - 1} for {n} points, got k={k}")
    tree = cKDTree(positions)
    dist, idx = tree.query(positions, k=k + 1)
    rows = np.arange(n)
    self_mask = idx == rows[:, None]
    has_self = self_mask.any(axis=1)
    drop_col = np.where(has_self, self_mask.argmax(axis=1), idx.shape[1] - 1)
    keep = np.ones_like(idx, dtype=bool)
    keep[rows, drop_col] = False
    idx = idx[keep].reshape(n, k)
    dist = dist[keep].reshape(n, k)
    order = np.lexsort((idx, dist), axis=1)
    return np.take_along_axis(idx, order, axis=1), np.take_along_axis(dist, order, axis=1)


def spherical_selection(frame, neighbor, spacing, scheme) -> InterpolationResult:
    """Selection weights for one neighbor seen from one node's frame.

    Offsets shorter than ``0.1 * spacing`` collapse onto the center
    selection instead of an unstable direction estimate.
    """
    p = np.asarray(frame, dtype=np.float64) @ np.asarray(neighbor, dtype=np.float64)
    offset = p[:2]
    if float(np.hypot(offset[0], offset[1])) < NEAR_CENTER_FACTOR * spacing:
        return InterpolationResult((CENTER,), (1.0,))
    return assign_selections(offset, scheme, spacing)


def selection_entries(px, py, spacing, scheme):
    """Per-offset selection ids and weights, zero entries kept for later dropping."""
    radius = np.hypot(px, py)
    center = radius < NEAR_CENTER_FACTOR * spacing
    offsets = np.stack([np.where(center, 1.0, px), np.where(center, 0.0, py)], axis=1)
    if scheme == "angular":
        sels, weights = angular_weights_batch(offsets)
    elif scheme == "barycentric":
        sels, weights = barycentric_weights_batch(offsets, spacing)
    else:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if np.any(center):
        sels[center] = 0
        weights[center] = 0.0
        sels[center, 0] = CENTER
        weights[center, 0] = 1.0
    return sels, weights


def build_sphere_level(pts: SphericalPointSet, k: int, scheme: str) -> GraphLevel:
    """One normalized, padded graph level over a spherical point set."""
    n = len(pts)
    if n < 2:
        raise TooFewPoints(f"need at least 2 points, got {n}")
    k_eff = min(k, n - 1)
    nbr_idx, chord = knn_indices(pts.points, k_eff)
    angles = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
    spacing = float(np.mean(angles[:, 0]))
    frames = tangent_frames(pts.points)
    nbr_pts = pts.points[nbr_idx]
    px = np.einsum("nd,nkd->nk", frames[:, 0, :], nbr_pts).ravel()
    py = np.einsum("nd,nkd->nk", frames[:, 1, :], nbr_pts).ravel()
    sels, weights = selection_entries(px, py, spacing, scheme)
    entries = sels.shape[1]
    src = np.repeat(nbr_idx.ravel(), entries)
    dst = np.repeat(np.repeat(np.arange(n), k_eff), entries)
    edges = SelectionEdges(src, dst, sels.ravel(), weights.ravel())
    edges = normalize_interpolation(edges)
    edges = normalize_rows(edges)
    edges = add_replicate_padding(edges, n)
    source_pixel = None
    if pts.method == "equirect":
        source_pixel = equirect_source_pixels(pts.params["width"], pts.params["height"])
    nodes = NodeSet(pts.points, normals=pts.points, source_pixel=source_pixel)
    return GraphLevel(nodes, edges, spacing)


def build_sphere_graph(
    points: SphericalPointSet,
    k: int = DEFAULT_NEIGHBORS,
    scheme: str = "angular",
    levels: int = 1,
    cluster_method: str | None = None,
    seed: int = 0,
) -> GraphPyramid:
    """Multi-level selection graph over a spherical point set.

    ``levels`` counts the input level; each coarser level holds roughly a
    quarter of the points.  Coarsening keeps the sampling method unless
    ``cluster_method`` names a different one, in which case the coarse set is
    drawn from that method at the matching count and fine points attach to
    their angularly nearest coarse point.
    """
    if levels < 1:
        raise ConfigError(f"levels must be at least 1, got {levels}")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    level_sets = [points]
    assignments = []
    current = points
    for step in range(levels - 1):
        if cluster_method is None or cluster_method == current.method:
            coarse, assign = cluster_resample(current)
        else:
            params = params_for_target(
                cluster_method, max(1, len(current) // 4), seed=seed + step + 1
            )
            coarse = sample(cluster_method, params)
            assign = nearest_assignment(current.points, coarse.points)
        level_sets.append(coarse)
        assignments.append(assign)
        current = coarse
    graph_levels = [build_sphere_level(s, k, scheme) for s in level_sets]
    meta = {
        "surface": "sphere",
        "scheme": scheme,
        "k": int(k),
        "method": points.method,
        "params": dict(points.params),
        "cluster_method": cluster_method or points.method,
    }
    return GraphPyramid(graph_levels, assignments, meta)
