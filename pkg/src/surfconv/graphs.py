"""Core graph types, weight normalization, padding, and pooling.

A graph level holds a node set and its directed selection edges.  Every edge
carries (src, dst, selection, weight): the feature at ``src`` contributes to
the aggregate at ``dst`` through the kernel matrix named by ``selection``.
Edge weights produced by interpolation go through two normalization passes:

1. interpolation normalization: within each (src, dst) pair the weights are
   scaled to sum to 1, so a neighbor's total influence is one unit of mass
   no matter how many selections it was split over;
2. row normalization: within each (dst, selection) group the weights are
   scaled to sum to 1, so each node's per-selection aggregate is a convex
   average of its contributors.

Replicate padding then appends self-edges of weight 1 for every selection a
node has no incoming entry for, which keeps border and pole nodes exercising
all nine kernel matrices.  Appended edges are single-entry groups under both
normalizations, so the row-sum property survives padding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .container import read_arrays, write_arrays
from .errors import FormatError, ShapeError, ZeroGroup
from .interp import SELECTION_COUNT, SELECTION_ORDER_TAG

log = logging.getLogger(__name__)


def _frozen(array, dtype, shape_tail=None, name="array"):
    out = np.ascontiguousarray(array, dtype=dtype)
    if shape_tail is not None and (out.ndim != 2 or out.shape[1] != shape_tail):
        raise ShapeError(f"{name} must have shape (n, {shape_tail}), got {out.shape}")
    out.setflags(write=False)
    return out


@dataclass
class NodeSet:
    """Positions and normals for one graph level, plus optional lookups.

    ``uvs`` are texture coordinates for mesh-sampled nodes; ``source_pixel``
    is the (row, col) a node was lifted from when sampling follows an
    equirectangular grid.
    """

    positions: np.ndarray
    normals: np.ndarray
    uvs: np.ndarray | None = None
    source_pixel: np.ndarray | None = None

    def __post_init__(self):
        self.positions = _frozen(self.positions, np.float64, 3, "positions")
        self.normals = _frozen(self.normals, np.float64, 3, "normals")
        if len(self.normals) != len(self.positions):
            raise ShapeError("normals and positions disagree on node count")
        if self.uvs is not None:
            self.uvs = _frozen(self.uvs, np.float64, 2, "uvs")
            if len(self.uvs) != len(self.positions):
                raise ShapeError("uvs and positions disagree on node count")
        if self.source_pixel is not None:
            self.source_pixel = _frozen(self.source_pixel, np.int64, 2, "source_pixel")
            if len(self.source_pixel) != len(self.positions):
                raise ShapeError("source_pixel and positions disagree on node count")

    def __len__(self):
        return len(self.positions)


@dataclass
class SelectionEdges:
    """Flat directed edge arrays: src, dst, selection id, weight."""

    src: np.ndarray
    dst: np.ndarray
    selection: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        self.src = _frozen(self.src, np.int64, name="src")
        self.dst = _frozen(self.dst, np.int64, name="dst")
        self.selection = _frozen(self.selection, np.int64, name="selection")
        self.weight = _frozen(self.weight, np.float64, name="weight")
        n = len(self.src)
        if not (len(self.dst) == len(self.selection) == len(self.weight) == n):
            raise ShapeError("edge arrays disagree on length")
        if n:
            if self.selection.min() < 0 or self.selection.max() >= SELECTION_COUNT:
                raise ShapeError("selection ids must lie in [0, 9)")
            if self.src.min() < 0 or self.dst.min() < 0:
                raise ShapeError("node indices must be nonnegative")
            if not np.all(np.isfinite(self.weight)) or self.weight.min() < 0.0:
                raise ShapeError("edge weights must be finite and nonnegative")

    def __len__(self):
        return len(self.src)

    def max_node(self) -> int:
        if not len(self.src):
            return -1
        return int(max(self.src.max(), self.dst.max()))


@dataclass
class ClusterAssignment:
    """Parent cluster index for every fine node of the level below."""

    parent: np.ndarray
    coarse_count: int

    def __post_init__(self):
        self.parent = _frozen(self.parent, np.int64, name="parent")
        if len(self.parent) and (
            self.parent.min() < 0 or self.parent.max() >= self.coarse_count
        ):
            raise ShapeError("parent indices must lie in [0, coarse_count)")

    def __len__(self):
        return len(self.parent)

    def empty_clusters(self) -> int:
        used = np.bincount(self.parent, minlength=self.coarse_count) > 0
        return int(self.coarse_count - used.sum())


@dataclass
class GraphLevel:
    nodes: NodeSet
    edges: SelectionEdges
    spacing: float

    def __post_init__(self):
        if self.edges.max_node() >= len(self.nodes):
            raise ShapeError("edge indices exceed node count")


@dataclass
class GraphPyramid:
    """Graph levels from fine to coarse with the assignments linking them."""

    levels: list[GraphLevel]
    assignments: list[ClusterAssignment] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.assignments) != max(len(self.levels) - 1, 0):
            raise ShapeError("need exactly one assignment between consecutive levels")
        for i, assign in enumerate(self.assignments):
            if len(assign) != len(self.levels[i].nodes):
                raise ShapeError(f"assignment {i} disagrees with level {i} node count")
            if assign.coarse_count != len(self.levels[i + 1].nodes):
                raise ShapeError(f"assignment {i} disagrees with level {i + 1} node count")
        self.meta.setdefault("selection_order", SELECTION_ORDER_TAG)

    def __len__(self):
        return len(self.levels)


def _group_scale(keys, weights, describe):
    """Scale factors that make each key group sum to 1."""
    _, inverse = np.unique(keys, return_inverse=True)
    sums = np.bincount(inverse, weights=weights)
    bad = np.nonzero(sums <= 0.0)[0]
    if bad.size:
        first = int(np.nonzero(inverse == bad[0])[0][0])
        raise ZeroGroup(f"{describe(first)} has zero total weight")
    return sums[inverse]


def normalize_interpolation(edges: SelectionEdges) -> SelectionEdges:
    """Scale weights so each (src, dst) pair's entries sum to 1.

    Zero-weight entries (kept by interpolation for shape uniformity) are
    dropped here; a pair whose entries sum to zero raises ZeroGroup.  Entry
    order is preserved and the pass is idempotent.
    """
    if not len(edges):
        return edges
    stride = int(edges.dst.max()) + 1
    keys = edges.src * stride + edges.dst

    def describe(i):
        return f"pair (src={edges.src[i]}, dst={edges.dst[i]})"

    sums = _group_scale(keys, edges.weight, describe)
    keep = edges.weight > 0.0
    return SelectionEdges(
        edges.src[keep],
        edges.dst[keep],
        edges.selection[keep],
        edges.weight[keep] / sums[keep],
    )


def normalize_rows(edges: SelectionEdges) -> SelectionEdges:
    """Scale weights so each (dst, selection) group's entries sum to 1."""
    if not len(edges):
        return edges
    keys = edges.dst * SELECTION_COUNT + edges.selection

    def describe(i):
        return f"row (dst={edges.dst[i]}, selection={edges.selection[i]})"

    sums = _group_scale(keys, edges.weight, describe)
    return SelectionEdges(edges.src, edges.dst, edges.selection, edges.weight / sums)


def add_replicate_padding(edges: SelectionEdges, node_count: int) -> SelectionEdges:
    """Append a weight-1 self-edge for every (node, selection) with no entry.

    Expects row-normalized input.  Appended edges are single-entry groups, so
    every (dst, selection) row still sums to 1 afterwards; in particular a
    node with no incoming edges at all ends up with nine self-edges and a
    graph built purely from neighbor directions gains its center tap here.
    """
    present = np.zeros((node_count, SELECTION_COUNT), dtype=bool)
    if len(edges):
        if edges.max_node() >= node_count:
            raise ShapeError("edge indices exceed node count")
        present[edges.dst, edges.selection] = True
    nodes, sels = np.nonzero(~present)
    return SelectionEdges(
        np.concatenate([edges.src, nodes]),
        np.concatenate([edges.dst, nodes]),
        np.concatenate([edges.selection, sels]),
        np.concatenate([edges.weight, np.ones(len(nodes))]),
    )


def missing_selection_slots(edges: SelectionEdges, node_count: int) -> int:
    """How many (node, selection) slots replicate padding would fill."""
    present = np.zeros((node_count, SELECTION_COUNT), dtype=bool)
    if len(edges):
        present[edges.dst, edges.selection] = True
    return int((~present).sum())


def pool(features: np.ndarray, assignment: ClusterAssignment, mode: str = "mean") -> np.ndarray:
    """Aggregate fine node features into their parent clusters.

    Empty clusters come out as zero rows; they are counted and logged but
    permitted.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or len(features) != len(assignment):
        raise ShapeError(
            f"features must be (n_fine, c) with n_fine={len(assignment)}, got {features.shape}"
        )
    n_coarse = assignment.coarse_count
    counts = np.bincount(assignment.parent, minlength=n_coarse)
    empty = counts == 0
    if empty.any():
        log.warning("pool: %d empty clusters", int(empty.sum()))
    if mode == "mean":
        sums = np.zeros((n_coarse, features.shape[1]))
        np.add.at(sums, assignment.parent, features)
        return sums / np.maximum(counts, 1)[:, None]
    if mode == "max":
        out = np.full((n_coarse, features.shape[1]), -np.inf)
        np.maximum.at(out, assignment.parent, features)
        out[empty] = 0.0
        return out
    raise ValueError(f"unknown pooling mode {mode!r}")


def unpool(features: np.ndarray, assignment: ClusterAssignment) -> np.ndarray:
    """Copy each cluster's features back down to its fine nodes."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or len(features) != assignment.coarse_count:
        raise ShapeError(
            f"features must be (n_coarse, c) with n_coarse={assignment.coarse_count},"
            f" got {features.shape}"
        )
    return features[assignment.parent]


def save_pyramid(pyramid: GraphPyramid, path) -> None:
    """Serialize a pyramid to the single-file array container.

    Positions and weights are stored as f32, indices as u32, so one write /
    read cycle quantizes to f32 and further cycles are bit-exact.
    """
    arrays: dict[str, np.ndarray] = {}
    for i, level in enumerate(pyramid.levels):
        prefix = f"level{i}/"
        arrays[prefix + "positions"] = level.nodes.positions
        arrays[prefix + "normals"] = level.nodes.normals
        if level.nodes.uvs is not None:
            arrays[prefix + "uvs"] = level.nodes.uvs
        if level.nodes.source_pixel is not None:
            arrays[prefix + "source_pixel"] = level.nodes.source_pixel
        arrays[prefix + "edge_src"] = level.edges.src
        arrays[prefix + "edge_dst"] = level.edges.dst
        arrays[prefix + "edge_selection"] = level.edges.selection
        arrays[prefix + "edge_weight"] = level.edges.weight
    for i, assign in enumerate(pyramid.assignments):
        arrays[f"assign{i}/parent"] = assign.parent
    meta = {
        **pyramid.meta,
        "kind": "graph_pyramid",
        "levels": len(pyramid.levels),
        "spacing": [level.spacing for level in pyramid.levels],
        "node_counts": [len(level.nodes) for level in pyramid.levels],
    }
    write_arrays(path, arrays, meta)


def load_pyramid(path) -> GraphPyramid:
    meta, arrays = read_arrays(path)
    if meta.get("kind") != "graph_pyramid":
        raise FormatError(f"not a graph pyramid file: kind={meta.get('kind')!r}")
    n_levels = meta["levels"]
    spacing = meta["spacing"]
    levels = []
    for i in range(n_levels):
        prefix = f"level{i}/"
        try:
            nodes = NodeSet(
                arrays[prefix + "positions"],
                arrays[prefix + "normals"],
                uvs=arrays.get(prefix + "uvs"),
                source_pixel=arrays.get(prefix + "source_pixel"),
            )
            edges = SelectionEdges(
                arrays[prefix + "edge_src"],
                arrays[prefix + "edge_dst"],
                arrays[prefix + "edge_selection"],
                arrays[prefix + "edge_weight"],
            )
        except KeyError as exc:
            raise FormatError(f"pyramid file missing array {exc}") from exc
        levels.append(GraphLevel(nodes, edges, float(spacing[i])))
    assignments = []
    for i in range(n_levels - 1):
        try:
            parent = arrays[f"assign{i}/parent"]
        except KeyError as exc:
            raise FormatError(f"pyramid file missing array {exc}") from exc
        assignments.append(ClusterAssignment(parent, len(levels[i + 1].nodes)))
    meta_out = {
        k: v
        for k, v in meta.items()
        if k not in ("kind", "levels", "spacing", "node_counts", "shapes")
    }
    return GraphPyramid(levels, assignments, meta_out)
