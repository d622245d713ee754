"""Synthetic meshes, textures, images, and networks for demos and tests.

Everything here is deterministic given its arguments, so experiments and
acceptance checks can regenerate identical inputs from scratch.
"""

from __future__ import annotations

import math

import numpy as np

from .engine import LayerSpec, NetworkSpec, WeightStore
from .errors import ConfigError
from .mesh_graph import MeshSurface, rasterize_uv
from .sphere_sampling import icosphere_vertices_faces, sample_equirect, sph_to_cart

_AXES = np.eye(3)


def unit_cube_mesh(margin: float = 0.02) -> MeshSurface:
    """Axis-aligned cube of side 1 with six separate texture charts.

    Every cube face owns four vertices (24 total, so corners are split per
    face) and one chart in a 3 x 2 UV layout, inset by ``margin`` to keep
    charts from bleeding into each other.  Triangle ``2 i`` and ``2 i + 1``
    belong to cube face ``i``; faces are ordered +x, -x, +y, -y, +z, -z.
    """
    if not 0.0 <= margin < 0.1:
        raise ConfigError(f"margin must be in [0, 0.1), got {margin}")
    vertices = []
    uvs = []
    faces = []
    for chart, (axis, sign) in enumerate(
        [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)]
    ):
        if sign > 0:
            t1, t2 = _AXES[(axis + 1) % 3], _AXES[(axis + 2) % 3]
        else:
            t1, t2 = _AXES[(axis + 2) % 3], _AXES[(axis + 1) % 3]
        center = sign * 0.5 * _AXES[axis]
        col, row = chart % 3, chart // 3
        u0, u1 = col / 3.0 + margin, (col + 1) / 3.0 - margin
        v0, v1 = row / 2.0 + margin, (row + 1) / 2.0 - margin
        base = len(vertices)
        for s1, s2, u, v in [
            (-1, -1, u0, v0),
            (1, -1, u1, v0),
            (1, 1, u1, v1),
            (-1, 1, u0, v1),
        ]:
            vertices.append(center + 0.5 * (s1 * t1 + s2 * t2))
            uvs.append([u, v])
        faces.append([base, base + 1, base + 2])
        faces.append([base, base + 2, base + 3])
    return MeshSurface(
        np.asarray(vertices), np.asarray(faces, dtype=np.int64), np.asarray(uvs)
    )


def cube_chart_of_face(face_index) -> np.ndarray:
    """Chart (cube face) id for triangle indices of :func:`unit_cube_mesh`."""
    return np.asarray(face_index, dtype=np.int64) // 2


def icosphere_mesh(subdivisions: int) -> MeshSurface:
    """Subdivided icosahedron as a mesh (no texture coordinates)."""
    verts, faces = icosphere_vertices_faces(subdivisions)
    return MeshSurface(verts, faces)


def surface_pattern(points: np.ndarray) -> np.ndarray:
    """Smooth three-channel pattern evaluated at 3D positions.

    Being a function of position alone, it is continuous across texture
    chart borders and the azimuthal seam by construction.
    """
    p = np.asarray(points, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.stack(
        [
            0.5 + 0.5 * np.sin(3.0 * x) * np.cos(2.0 * y),
            0.5 + 0.5 * np.sin(3.0 * y + 1.0) * np.cos(2.0 * z),
            0.5 + 0.5 * np.sin(3.0 * z + 2.0) * np.cos(2.0 * x),
        ],
        axis=-1,
    )


def bake_cube_texture(
    mesh: MeshSurface, width: int, height: int, seed: int = 0
) -> np.ndarray:
    """Texture whose covered texels hold the surface pattern at their 3D point.

    Texels between charts hold seeded noise, the garbage atlases ship
    between charts when nobody dilates a gutter; surface-side lookups
    should pass the coverage mask so chart rims do not bleed it in.
    """
    mask, positions, _ = rasterize_uv(mesh, width, height)
    rng = np.random.default_rng(seed)
    texture = rng.random((height, width, 3))
    texture[mask] = surface_pattern(positions[mask])
    return texture


def _skew_pattern(points: np.ndarray) -> np.ndarray:
    # like surface_pattern but with mixed axes and phase offsets, so no
    # channel goes flat along any particular meridian
    p = np.asarray(points, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.stack(
        [
            0.5 + 0.5 * np.sin(3.0 * x + 2.0 * z + 0.7) * np.cos(2.0 * y - 1.1),
            0.5 + 0.5 * np.sin(2.0 * y + 3.0 * z - 0.4) * np.cos(3.0 * x + 0.8),
            0.5 + 0.5 * np.sin(2.0 * x - 2.0 * y + 1.9) * np.cos(3.0 * z - 0.3),
        ],
        axis=-1,
    )


def smooth_sphere_image(
    width: int, height: int, seed: int = 0, blobs: int = 5
) -> np.ndarray:
    """Equirect image with smooth texture everywhere and soft color blobs.

    The image is a pointwise function of the sphere direction, so it wraps
    continuously in azimuth and is consistent at the poles.  A wide blob
    sits centered on the wrap meridian, keeping azimuthal structure gentle
    right where wrap handling is measured.
    """
    rng = np.random.default_rng(seed)
    centers = [sph_to_cart(0.0, math.pi / 2)]
    for _ in range(blobs - 1):
        v = rng.standard_normal(3)
        centers.append(v / np.linalg.norm(v))
    centers = np.asarray(centers)
    sigmas = 0.15 + 0.2 * rng.random(blobs)
    sigmas[0] = 0.3
    colors = 0.3 + 0.7 * rng.random((blobs, 3))
    pixels = sample_equirect(width, height).points
    image = 0.6 * _skew_pattern(pixels)
    for center, sigma, color in zip(centers, sigmas, colors):
        bump = np.exp((pixels @ center - 1.0) / sigma**2)
        image += 0.4 * bump[:, None] * color
    return np.clip(image, 0.0, 1.0).reshape(height, width, 3)


def smoothing_network(layers: int = 4, channels: int = 3, seed: int | None = None):
    """A stack of positive, mass-preserving 3x3 convolutions.

    Without a seed each kernel is the separable [1, 2, 1] blur crossed with
    a column-stochastic channel mixer; with a seed every layer gets its own
    random positive taps.  Either way each output channel's taps sum to
    one, so repeated application only smooths.  Returns (spec, store).
    """
    if layers < 1 or channels < 1:
        raise ConfigError(f"need positive layers and channels, got {layers}, {channels}")
    rng = None if seed is None else np.random.default_rng(seed)
    blur = np.outer([1.0, 2.0, 1.0], [1.0, 2.0, 1.0]) / 16.0
    alpha = 0.5
    mixer = (1.0 - alpha) * np.eye(channels) + alpha / channels

    store = WeightStore()
    specs = []
    for i in range(layers):
        if rng is None:
            kernel = blur[:, :, None, None] * mixer[None, None, :, :]
        else:
            kernel = rng.random((3, 3, channels, channels))
            kernel /= kernel.sum(axis=(0, 1, 2), keepdims=True)
        name = f"smooth{i + 1}"
        store.add(name + ".kernel", "conv3x3", kernel)
        specs.append(LayerSpec(name, "conv3x3"))
    return NetworkSpec(tuple(specs)), store
