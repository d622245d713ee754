"""Equirectangular images and their mapping onto spherical node sets.

Pixel (r, c) of an h x w image covers azimuth ``2 pi (c + 0.5) / w`` and
polar angle ``pi (r + 0.5) / h``.  Sampling wraps horizontally (the image is
periodic in azimuth) and clamps vertically at the poles.
"""

from __future__ import annotations

import math

import numpy as np
from PIL import Image

from .errors import ShapeError
from .sphere_sampling import cart_to_sph


def load_image(path) -> np.ndarray:
    """PNG (or any PIL-readable) file to float64 (h, w, c) in [0, 1]."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB" if img.mode not in ("L", "I;16") else "L"))
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr.astype(np.float64) / 255.0


def save_image(path, image: np.ndarray) -> None:
    """Float image in [0, 1] to an 8-bit PNG; values are clipped."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.ndim != 3 or image.shape[2] not in (1, 3):
        raise ShapeError(f"image must be (h, w), (h, w, 1) or (h, w, 3), got {image.shape}")
    data = np.clip(image * 255.0 + 0.5, 0.0, 255.0).astype(np.uint8)
    if data.shape[2] == 1:
        Image.fromarray(data[:, :, 0], mode="L").save(path)
    else:
        Image.fromarray(data, mode="RGB").save(path)


def bilinear_sample(image: np.ndarray, theta, phi) -> np.ndarray:
    """Sample an equirect image at sphere angles, wrapping in azimuth."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    h, w = image.shape[:2]
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    u = np.mod(theta, 2.0 * math.pi) * w / (2.0 * math.pi) - 0.5
    v = phi * h / math.pi - 0.5
    c0 = np.floor(u).astype(np.int64)
    r0 = np.floor(v).astype(np.int64)
    fu = u - c0
    fv = v - r0
    c1 = np.mod(c0 + 1, w)
    c0 = np.mod(c0, w)
    r1 = np.clip(r0 + 1, 0, h - 1)
    r0 = np.clip(r0, 0, h - 1)
    top = image[r0, c0] * (1.0 - fu)[:, None] + image[r0, c1] * fu[:, None]
    bottom = image[r1, c0] * (1.0 - fu)[:, None] + image[r1, c1] * fu[:, None]
    return top * (1.0 - fv)[:, None] + bottom * fv[:, None]


def image_to_features(image: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Node features sampled bilinearly at each node's sphere angles.

    For nodes created from the image's own pixel grid this reproduces the
    pixel values exactly (every sample lands on a pixel center).
    """
    theta, phi = cart_to_sph(positions)
    return bilinear_sample(image, theta, phi)


def features_to_image(
    features: np.ndarray,
    positions: np.ndarray,
    width: int,
    height: int,
    neighbors: int = 3,
) -> np.ndarray:
    """Render node features to an equirect image by inverse-distance blending.

    Each pixel blends its ``neighbors`` nearest nodes weighted by inverse
    chord distance; a node sitting on the pixel center wins outright.
    """
    from scipy.spatial import cKDTree

    from .sphere_sampling import sample_equirect

    features = np.asarray(features, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.float64)
    if features.ndim != 2 or len(features) != len(positions):
        raise ShapeError(
            f"features {features.shape} do not match {len(positions)} positions"
        )
    pixels = sample_equirect(width, height).points
    k = min(neighbors, len(positions))
    dist, idx = cKDTree(positions).query(pixels, k=k)
    dist = np.atleast_2d(dist.reshape(len(pixels), k))
    idx = idx.reshape(len(pixels), k)
    exact = dist[:, 0] < 1e-12
    weights = 1.0 / np.maximum(dist, 1e-12)
    weights[exact] = 0.0
    weights[exact, 0] = 1.0
    weights /= weights.sum(axis=1, keepdims=True)
    out = np.einsum("pk,pkc->pc", weights, features[idx])
    return out.reshape(height, width, features.shape[1])


def seam_score(image: np.ndarray) -> float:
    """Discontinuity at the azimuthal wrap seam, relative to interior texture.

    The median absolute jump between the first and last columns divided by
    the median absolute difference of adjacent interior columns.  A seamless
    image scores about 1; replicate-padded planar filtering drives it up.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.shape[1] < 3:
        raise ShapeError("need at least 3 columns to measure a seam")
    seam = np.median(np.abs(image[:, 0] - image[:, -1]))
    interior = np.median(np.abs(np.diff(image, axis=1)))
    if interior == 0.0:
        return 0.0 if seam == 0.0 else math.inf
    return float(seam / interior)
