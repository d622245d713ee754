"""Selection graphs over planar pixel grids.

On a regular grid every neighbor offset aligns exactly with one of the
eight directions, so interpolation degenerates to a single selection per
edge.  Off-grid taps at the border are redirected to the clamped pixel
(replicate padding), which makes selection convolution over the graph match
a dense 3x3 convolution with edge padding exactly.  Node order is row-major;
the y axis points up, so north is the row above.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, TooCoarse
from .graphs import (
    ClusterAssignment,
    GraphLevel,
    GraphPyramid,
    NodeSet,
    SelectionEdges,
    add_replicate_padding,
    normalize_interpolation,
    normalize_rows,
)

# selection id -> (row step, col step); rows grow downward so north is -1
GRID_STEPS = {
    1: (0, 1),
    2: (-1, 1),
    3: (-1, 0),
    4: (-1, -1),
    5: (0, -1),
    6: (1, -1),
    7: (1, 0),
    8: (1, 1),
}


def _grid_nodes(height: int, width: int, pitch: float) -> NodeSet:
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    positions = np.stack(
        [
            pitch * (cols.ravel() + 0.5),
            -pitch * (rows.ravel() + 0.5),
            np.zeros(height * width),
        ],
        axis=1,
    )
    normals = np.tile(np.array([0.0, 0.0, 1.0]), (height * width, 1))
    source_pixel = np.stack([rows.ravel(), cols.ravel()], axis=1)
    return NodeSet(positions, normals, source_pixel=source_pixel)


def _grid_edges(height: int, width: int) -> SelectionEdges:
    n = height * width
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    r, c = rows.ravel(), cols.ravel()
    src_parts, dst_parts, sel_parts = [], [], []
    for sel in range(1, 9):
        dr, dc = GRID_STEPS[sel]
        src = np.clip(r + dr, 0, height - 1) * width + np.clip(c + dc, 0, width - 1)
        src_parts.append(src)
        dst_parts.append(r * width + c)
        sel_parts.append(np.full(n, sel, dtype=np.int64))
    edges = SelectionEdges(
        np.concatenate(src_parts),
        np.concatenate(dst_parts),
        np.concatenate(sel_parts),
        np.ones(8 * n),
    )
    edges = normalize_interpolation(edges)
    edges = normalize_rows(edges)
    return add_replicate_padding(edges, n)


def _block_assignment(height: int, width: int) -> ClusterAssignment:
    coarse_w = (width + 1) // 2
    coarse_h = (height + 1) // 2
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    parent = (rows.ravel() // 2) * coarse_w + cols.ravel() // 2
    return ClusterAssignment(parent, coarse_h * coarse_w)


def planar_grid_graph(height: int, width: int, levels: int = 1) -> GraphPyramid:
    """Graph pyramid over a pixel grid with 2x2 block coarsening.

    Each node keeps one edge per direction; border taps clamp to the nearest
    pixel so the graph reproduces dense convolution with replicate padding.
    """
    if height < 1 or width < 1:
        raise TooCoarse(f"grid must be at least 1x1, got {height}x{width}")
    if levels < 1:
        raise ConfigError(f"levels must be at least 1, got {levels}")
    graph_levels = []
    assignments = []
    h, w = height, width
    for step in range(levels):
        pitch = float(2**step)
        graph_levels.append(GraphLevel(_grid_nodes(h, w, pitch), _grid_edges(h, w), pitch))
        if step < levels - 1:
            if h == 1 and w == 1:
                raise TooCoarse("a 1x1 grid cannot be coarsened further")
            assignments.append(_block_assignment(h, w))
            h, w = (h + 1) // 2, (w + 1) // 2
    meta = {"surface": "plane", "height": int(height), "width": int(width)}
    return GraphPyramid(graph_levels, assignments, meta)


def grid_to_features(image: np.ndarray) -> np.ndarray:
    """Flatten (h, w, c) pixels into row-major (h*w, c) node features."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.ndim != 3:
        raise ConfigError(f"image must be (h, w) or (h, w, c), got {image.shape}")
    return image.reshape(-1, image.shape[2])


def features_to_grid(features: np.ndarray, height: int, width: int) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != height * width:
        raise ConfigError(
            f"features must be ({height * width}, c), got {features.shape}"
        )
    return features.reshape(height, width, features.shape[1])
