"""Selection graphs over triangle-mesh surfaces.

Nodes are points sampled uniformly by area over the mesh.  Each node's
tangent frame is oriented by a global up direction, neighbors on opposing
geometry (normal dot product below a cutoff) are culled, and the surviving
projected offsets go through the same selection interpolation and
normalization as on the sphere.  Per-vertex texture coordinates, when
present, connect node features to texture images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    ConfigError,
    DegenerateMesh,
    MissingUV,
    NonPositiveSpacing,
    ParseError,
    ShapeError,
    TooFewPoints,
)
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
from .interp import SCHEMES
from .sphere_graph import NEAR_CENTER_FACTOR, frames_from_normals, knn_indices, selection_entries

DEFAULT_UP = (0.0, 1.0, 0.0)

NORMAL_CUTOFF = 0.5


@dataclass(frozen=True)
class MeshSurface:
    """Triangle mesh with optional per-vertex texture coordinates."""

    vertices: np.ndarray
    faces: np.ndarray
    uvs: np.ndarray | None = None

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ShapeError(f"vertices must be (v, 3), got {vertices.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ShapeError(f"faces must be (f, 3), got {faces.shape}")
        if len(faces) == 0:
            raise DegenerateMesh("mesh has no faces")
        if faces.min() < 0 or faces.max() >= len(vertices):
            raise ShapeError("face indices out of range")
        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)
        if self.uvs is not None:
            uvs = np.ascontiguousarray(self.uvs, dtype=np.float64)
            if uvs.shape != (len(vertices), 2):
                raise ShapeError(f"uvs must be ({len(vertices)}, 2), got {uvs.shape}")
            uvs.setflags(write=False)
            object.__setattr__(self, "uvs", uvs)

    def face_corners(self) -> np.ndarray:
        return self.vertices[self.faces]

    def face_normals_areas(self):
        tri = self.face_corners()
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        lengths = np.linalg.norm(cross, axis=1)
        areas = 0.5 * lengths
        normals = cross / np.where(lengths > 0.0, lengths, 1.0)[:, None]
        return normals, areas


def _split_face_token(token: str, line_no: int):
    parts = token.split("/")
    if len(parts) > 3 or not parts[0]:
        raise ParseError(f"line {line_no}: bad face token {token!r}")
    try:
        v = int(parts[0])
        vt = int(parts[1]) if len(parts) > 1 and parts[1] else None
    except ValueError:
        raise ParseError(f"line {line_no}: bad face token {token!r}") from None
    return v, vt


def _resolve(index: int, count: int, line_no: int, what: str) -> int:
    resolved = index - 1 if index > 0 else count + index
    if not 0 <= resolved < count:
        raise ParseError(f"line {line_no}: {what} index {index} out of range")
    return resolved


def parse_obj(text: str) -> MeshSurface:
    """Wavefront OBJ text to a mesh, fan-triangulating larger faces.

    Texture coordinates, when present, must be consistent per vertex: a
    vertex referenced with two different vt indices is an error, since node
    features map through one UV per vertex.
    """
    vertices: list = []
    uv_pool: list = []
    faces: list = []
    uv_of_vertex: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        tag, args = fields[0], fields[1:]
        if tag == "v":
            if len(args) < 3:
                raise ParseError(f"line {line_no}: vertex needs 3 coordinates")
            try:
                vertices.append([float(x) for x in args[:3]])
            except ValueError:
                raise ParseError(f"line {line_no}: bad vertex coordinate") from None
        elif tag == "vt":
            if len(args) < 2:
                raise ParseError(f"line {line_no}: texture coordinate needs 2 values")
            try:
                uv_pool.append([float(x) for x in args[:2]])
            except ValueError:
                raise ParseError(f"line {line_no}: bad texture coordinate") from None
        elif tag == "f":
            if len(args) < 3:
                raise ParseError(f"line {line_no}: face needs at least 3 vertices")
            corner_ids = []
            for token in args:
                v_raw, vt_raw = _split_face_token(token, line_no)
                v = _resolve(v_raw, len(vertices), line_no, "vertex")
                if vt_raw is not None:
                    vt = _resolve(vt_raw, len(uv_pool), line_no, "texture")
                    if uv_of_vertex.get(v, vt) != vt:
                        raise ParseError(
                            f"line {line_no}: vertex {v_raw} reuses a different "
                            "texture coordinate; split the vertex instead"
                        )
                    uv_of_vertex[v] = vt
                corner_ids.append(v)
            for i in range(1, len(corner_ids) - 1):
                faces.append([corner_ids[0], corner_ids[i], corner_ids[i + 1]])
        # normals, groups, and materials carry nothing the graph needs
    if not vertices:
        raise ParseError("no vertices found")
    if not faces:
        raise DegenerateMesh("no faces found")
    uvs = None
    if uv_of_vertex:
        if len(uv_of_vertex) != len(vertices):
            missing = len(vertices) - len(uv_of_vertex)
            raise MissingUV(f"{missing} vertices lack texture coordinates")
        uv_arr = np.asarray(uv_pool, dtype=np.float64)
        uvs = uv_arr[[uv_of_vertex[v] for v in range(len(vertices))]]
    return MeshSurface(np.asarray(vertices), np.asarray(faces, dtype=np.int64), uvs)


def load_obj(path) -> MeshSurface:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_obj(fh.read())


def write_obj(mesh: MeshSurface, path) -> None:
    """Write a mesh as OBJ; coordinates keep full float64 precision."""
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    if mesh.uvs is not None:
        for uv in mesh.uvs:
            lines.append(f"vt {uv[0]:.17g} {uv[1]:.17g}")
        for face in mesh.faces:
            lines.append("f " + " ".join(f"{i + 1}/{i + 1}" for i in face))
    else:
        for face in mesh.faces:
            lines.append("f " + " ".join(str(i + 1) for i in face))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class SurfacePointSet:
    """Area-uniform samples on a mesh with their interpolated attributes."""

    positions: np.ndarray
    normals: np.ndarray
    face_index: np.ndarray
    uvs: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.positions)


def sample_surface(mesh: MeshSurface, count: int, seed: int = 0) -> SurfacePointSet:
    """Uniform-by-area samples: area-weighted faces, square-root barycentrics."""
    if count < 1:
        raise TooFewPoints(f"count must be positive, got {count}")
    normals, areas = mesh.face_normals_areas()
    total = areas.sum()
    if total <= 0.0:
        raise DegenerateMesh("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    face_idx = rng.choice(len(mesh.faces), size=count, p=areas / total)
    r1 = rng.random(count)
    r2 = rng.random(count)
    sq = np.sqrt(r1)
    bary = np.stack([1.0 - sq, sq * (1.0 - r2), sq * r2], axis=1)
    tri = mesh.face_corners()[face_idx]
    positions = np.einsum("nb,nbd->nd", bary, tri)
    uvs = None
    if mesh.uvs is not None:
        tri_uv = mesh.uvs[mesh.faces][face_idx]
        uvs = np.einsum("nb,nbd->nd", bary, tri_uv)
    return SurfacePointSet(
        positions,
        normals[face_idx],
        face_idx,
        uvs,
        {"count": int(count), "seed": int(seed)},
    )


def nearest_euclidean(fine: np.ndarray, coarse: np.ndarray) -> ClusterAssignment:
    """Assign each fine point to the closest coarse point, ties to lowest index."""
    parents = np.empty(len(fine), dtype=np.int64)
    chunk = max(1, 8_000_000 // max(len(coarse), 1))
    for start in range(0, len(fine), chunk):
        block = fine[start : start + chunk]
        d2 = np.sum((block[:, None, :] - coarse[None, :, :]) ** 2, axis=2)
        parents[start : start + len(block)] = np.argmin(d2, axis=1)
    return ClusterAssignment(parents, len(coarse))


def build_mesh_level(
    samples: SurfacePointSet,
    k: int,
    scheme: str,
    up=DEFAULT_UP,
    normal_cutoff: float = NORMAL_CUTOFF,
) -> GraphLevel:
    """One normalized, padded graph level over surface samples.

    Neighbors whose normals disagree with the node's by more than the cutoff
    (dot product below ``normal_cutoff``) are dropped before interpolation,
    which keeps geometrically close but opposite-side points apart.
    """
    n = len(samples)
    if n < 2:
        raise TooFewPoints(f"need at least 2 samples, got {n}")
    k_eff = min(k, n - 1)
    nbr_idx, dist = knn_indices(samples.positions, k_eff)
    spacing = float(np.mean(dist[:, 0]))
    frames = frames_from_normals(samples.normals, up)
    offsets = samples.positions[nbr_idx] - samples.positions[:, None, :]
    px = np.einsum("nd,nkd->nk", frames[:, 0, :], offsets).ravel()
    py = np.einsum("nd,nkd->nk", frames[:, 1, :], offsets).ravel()
    same_side = (
        np.einsum("nd,nkd->nk", samples.normals, samples.normals[nbr_idx]) >= normal_cutoff
    ).ravel()
    src = nbr_idx.ravel()[same_side]
    dst = np.repeat(np.arange(n), k_eff)[same_side]
    sels, weights = selection_entries(px[same_side], py[same_side], spacing, scheme)
    entries = sels.shape[1]
    edges = SelectionEdges(
        np.repeat(src, entries),
        np.repeat(dst, entries),
        sels.ravel(),
        weights.ravel(),
    )
    edges = normalize_interpolation(edges)
    edges = normalize_rows(edges)
    edges = add_replicate_padding(edges, n)
    nodes = NodeSet(samples.positions, samples.normals, uvs=samples.uvs)
    return GraphLevel(nodes, edges, spacing)


def build_mesh_graph(
    mesh: MeshSurface,
    count: int,
    k: int = 8,
    scheme: str = "angular",
    levels: int = 1,
    seed: int = 0,
    up=None,
    normal_cutoff: float = NORMAL_CUTOFF,
) -> GraphPyramid:
    """Multi-level selection graph over area-uniform mesh samples.

    Without an explicit ``up`` a random unit vector is drawn once from the
    seed and shared by every node and level, so neighboring frames stay
    aligned.  Coarser levels are fresh surface samples at a quarter of the
    count (seed advanced per level); fine nodes attach to the nearest
    coarse node.
    """
    if levels < 1:
        raise ConfigError(f"levels must be at least 1, got {levels}")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if up is None:
        v = np.random.default_rng(seed).standard_normal(3)
        up = v / np.linalg.norm(v)
    sample_sets = [sample_surface(mesh, count, seed)]
    assignments = []
    current_count = count
    for step in range(levels - 1):
        current_count = current_count // 4
        if current_count < 2:
            raise TooFewPoints(
                f"level {step + 1} would have {current_count} samples; reduce levels"
            )
        coarse = sample_surface(mesh, current_count, seed + step + 1)
        assignments.append(nearest_euclidean(sample_sets[-1].positions, coarse.positions))
        sample_sets.append(coarse)
    graph_levels = [
        build_mesh_level(s, k, scheme, up=up, normal_cutoff=normal_cutoff)
        for s in sample_sets
    ]
    meta = {
        "surface": "mesh",
        "scheme": scheme,
        "k": int(k),
        "count": int(count),
        "seed": int(seed),
        "up": [float(x) for x in np.asarray(up, dtype=np.float64)],
        "normal_cutoff": float(normal_cutoff),
    }
    return GraphPyramid(graph_levels, assignments, meta)


def texture_to_features(
    texture: np.ndarray, uvs: np.ndarray, mask: np.ndarray | None = None
) -> np.ndarray:
    """Bilinear texture lookup at UV coordinates.

    Texture row 0 is v = 1 (images hang top-down while v grows upward);
    lookups clamp at chart borders instead of wrapping.  With a coverage
    ``mask`` the four taps are renormalized over covered texels, so looks
    at a chart's rim do not bleed in the background between charts.
    """
    texture = np.asarray(texture, dtype=np.float64)
    if texture.ndim == 2:
        texture = texture[:, :, None]
    uvs = np.asarray(uvs, dtype=np.float64)
    if uvs.ndim != 2 or uvs.shape[1] != 2:
        raise ShapeError(f"uvs must be (n, 2), got {uvs.shape}")
    h, w = texture.shape[:2]
    x = uvs[:, 0] * w - 0.5
    y = (1.0 - uvs[:, 1]) * h - 0.5
    c0 = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
    r0 = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
    c1 = np.clip(c0 + 1, 0, w - 1)
    r1 = np.clip(r0 + 1, 0, h - 1)
    fx = np.clip(x - c0, 0.0, 1.0)
    fy = np.clip(y - r0, 0.0, 1.0)
    taps = ((r0, c0), (r0, c1), (r1, c0), (r1, c1))
    tap_weights = (
        (1.0 - fx) * (1.0 - fy),
        fx * (1.0 - fy),
        (1.0 - fx) * fy,
        fx * fy,
    )
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (h, w):
            raise ShapeError(f"mask must be ({h}, {w}), got {mask.shape}")
        tap_weights = tuple(
            weight * mask[r, c] for weight, (r, c) in zip(tap_weights, taps)
        )
    total = sum(tap_weights)
    out = sum(weight[:, None] * texture[r, c] for weight, (r, c) in zip(tap_weights, taps))
    safe = np.maximum(total, 1e-12)
    return out / safe[:, None]


def rasterize_uv(mesh: MeshSurface, width: int, height: int):
    """Texel coverage of the mesh's UV layout.

    Returns a boolean (h, w) mask of covered texels, their interpolated 3D
    positions (h, w, 3), and the face id per texel (-1 where uncovered).
    The first face to claim a texel keeps it.
    """
    if mesh.uvs is None:
        raise MissingUV("mesh has no texture coordinates")
    mask = np.zeros((height, width), dtype=bool)
    positions = np.zeros((height, width, 3))
    face_of = np.full((height, width), -1, dtype=np.int64)
    tri_uv = mesh.uvs[mesh.faces]
    tri_xyz = mesh.face_corners()
    # texel centers in uv space
    for f in range(len(mesh.faces)):
        uv = tri_uv[f]
        x = uv[:, 0] * width - 0.5
        y = (1.0 - uv[:, 1]) * height - 0.5
        c_lo = max(0, int(math.floor(x.min())))
        c_hi = min(width - 1, int(math.ceil(x.max())))
        r_lo = max(0, int(math.floor(y.min())))
        r_hi = min(height - 1, int(math.ceil(y.max())))
        if c_lo > c_hi or r_lo > r_hi:
            continue
        cc, rr = np.meshgrid(np.arange(c_lo, c_hi + 1), np.arange(r_lo, r_hi + 1))
        det = (y[1] - y[2]) * (x[0] - x[2]) + (x[2] - x[1]) * (y[0] - y[2])
        if det == 0.0:
            continue
        b0 = ((y[1] - y[2]) * (cc - x[2]) + (x[2] - x[1]) * (rr - y[2])) / det
        b1 = ((y[2] - y[0]) * (cc - x[2]) + (x[0] - x[2]) * (rr - y[2])) / det
        b2 = 1.0 - b0 - b1
        inside = (b0 >= -1e-9) & (b1 >= -1e-9) & (b2 >= -1e-9)
        free = ~mask[rr, cc]
        take = inside & free
        if not np.any(take):
            continue
        bary = np.stack([b0[take], b1[take], b2[take]], axis=1)
        positions[rr[take], cc[take]] = bary @ tri_xyz[f]
        mask[rr[take], cc[take]] = True
        face_of[rr[take], cc[take]] = f
    return mask, positions, face_of


def features_to_texture(
    features: np.ndarray,
    positions: np.ndarray,
    mesh: MeshSurface,
    width: int,
    height: int,
    base: np.ndarray | None = None,
    neighbors: int = 3,
) -> np.ndarray:
    """Render node features into the mesh's texture charts.

    Covered texels blend their nearest nodes in 3D by inverse distance;
    uncovered texels keep the ``base`` image (or zero).
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or len(features) != len(positions):
        raise ShapeError(
            f"features {features.shape} do not match {len(positions)} positions"
        )
    mask, texel_pos, _ = rasterize_uv(mesh, width, height)
    if base is not None:
        out = np.array(base, dtype=np.float64)
        if out.ndim == 2:
            out = out[:, :, None]
        if out.shape != (height, width, features.shape[1]):
            raise ShapeError(
                f"base must be ({height}, {width}, {features.shape[1]}), got {out.shape}"
            )
    else:
        out = np.zeros((height, width, features.shape[1]))
    covered = texel_pos[mask]
    if len(covered) == 0:
        return out
    k = min(neighbors, len(positions))
    dist, idx = cKDTree(positions).query(covered, k=k)
    dist = dist.reshape(len(covered), k)
    idx = idx.reshape(len(covered), k)
    exact = dist[:, 0] < 1e-12
    weights = 1.0 / np.maximum(dist, 1e-12)
    weights[exact] = 0.0
    weights[exact, 0] = 1.0
    weights /= weights.sum(axis=1, keepdims=True)
    out[mask] = np.einsum("pk,pkc->pc", weights, features[idx])
    return out


def chart_discontinuity(
    positions: np.ndarray,
    features: np.ndarray,
    chart_ids: np.ndarray,
    radius: float,
):
    """Feature jumps across chart borders versus within charts.

    Looks at all node pairs closer than ``radius`` in 3D and returns the
    median absolute feature difference for cross-chart and same-chart pairs.
    """
    features = np.asarray(features, dtype=np.float64)
    chart_ids = np.asarray(chart_ids)
    pairs = cKDTree(positions).query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        raise TooFewPoints(f"no node pairs within radius {radius}")
    diffs = np.mean(np.abs(features[pairs[:, 0]] - features[pairs[:, 1]]), axis=1)
    cross = chart_ids[pairs[:, 0]] != chart_ids[pairs[:, 1]]
    if not np.any(cross) or np.all(cross):
        raise TooFewPoints("need both cross-chart and same-chart pairs")
    return float(np.median(diffs[cross])), float(np.median(diffs[~cross]))


def texture_seam_stats(
    texture: np.ndarray,
    mesh: MeshSurface,
    chart_of_face: np.ndarray | None = None,
    radius_scale: float = 1.5,
):
    """Texel-level seam continuity of a texture as seen on the surface.

    The within-chart reference is the absolute value difference between
    covered texels that are grid neighbors inside one chart.  The cross-seam
    sample takes covered texel pairs from different charts whose 3D
    positions lie within ``radius_scale`` times the median texel pitch, so
    both populations compare values one surface step apart.  Returns
    ``(cross_median, within_median)``.
    """
    texture = np.asarray(texture, dtype=np.float64)
    if texture.ndim == 2:
        texture = texture[:, :, None]
    height, width = texture.shape[:2]
    mask, positions, face_of = rasterize_uv(mesh, width, height)
    if chart_of_face is None:
        chart = face_of
    else:
        chart_of_face = np.asarray(chart_of_face, dtype=np.int64)
        chart = np.full((height, width), -1, dtype=np.int64)
        chart[mask] = chart_of_face[face_of[mask]]

    within_diffs = []
    pitches = []
    for da, db in (((slice(None), slice(0, -1)), (slice(None), slice(1, None))),
                   ((slice(0, -1), slice(None)), (slice(1, None), slice(None)))):
        pair = mask[da] & mask[db] & (chart[da] == chart[db])
        if not np.any(pair):
            continue
        within_diffs.append(
            np.mean(np.abs(texture[da][pair] - texture[db][pair]), axis=1)
        )
        pitches.append(
            np.linalg.norm(positions[da][pair] - positions[db][pair], axis=1)
        )
    if not within_diffs:
        raise TooFewPoints("no within-chart adjacent texel pairs")
    within_diffs = np.concatenate(within_diffs)
    pitch = float(np.median(np.concatenate(pitches)))
    if pitch <= 0.0:
        raise NonPositiveSpacing(f"texel pitch must be positive, got {pitch}")

    pos_cov = positions[mask]
    val_cov = texture[mask]
    chart_cov = chart[mask]
    pairs = cKDTree(pos_cov).query_pairs(radius_scale * pitch, output_type="ndarray")
    cross = chart_cov[pairs[:, 0]] != chart_cov[pairs[:, 1]]
    if not np.any(cross):
        raise TooFewPoints("no cross-chart texel pairs at this radius")
    cross_diffs = np.mean(
        np.abs(val_cov[pairs[:, 0][cross]] - val_cov[pairs[:, 1][cross]]), axis=1
    )
    return float(np.median(cross_diffs)), float(np.median(within_diffs))
