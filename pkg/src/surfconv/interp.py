"""Splitting tangent-plane offsets onto discrete kernel directions.

A *selection* is one of nine kernel directions: id 0 is the center tap and
ids 1..8 walk counterclockwise from east (E, NE, N, NW, W, SW, S, SE) in a
frame with x to the right and y up.  Where a neighbor sits exactly on one of
those directions it gets that single selection; everywhere else its unit of
edge mass is split over nearby selections by one of two schemes:

``angular``
    Split between the two flanking directions in proportion to the opposite
    angular gap, so a neighbor 15 degrees off a direction keeps 2/3 of its
    mass there and gives 1/3 to the next one.

``barycentric``
    Express the offset in barycentric coordinates of the triangle spanned by
    the center (0, 0), the nearest cardinal vertex at distance ``d``, and the
    nearest ordinal vertex at (d, d)-type corners, where ``d`` is the expected
    node spacing.  This also routes mass to the center tap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSpacing, ZeroVector

CENTER = 0
SELECTION_COUNT = 9
SELECTION_NAMES = ("C", "E", "NE", "N", "NW", "W", "SW", "S", "SE")
SELECTION_ORDER_TAG = ",".join(SELECTION_NAMES)

_SQ2 = math.sqrt(0.5)
# Unit direction per selection id; the center has no direction.
DIRECTIONS = np.array(
    [
        [0.0, 0.0],
        [1.0, 0.0],
        [_SQ2, _SQ2],
        [0.0, 1.0],
        [-_SQ2, _SQ2],
        [-1.0, 0.0],
        [-_SQ2, -_SQ2],
        [0.0, -1.0],
        [_SQ2, -_SQ2],
    ]
)

SCHEMES = ("angular", "barycentric")

_QUARTER_PI = math.pi / 4.0


@dataclass(frozen=True)
class InterpolationResult:
    """Selections with the weight each one receives for a single offset."""

    selections: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not 1 <= len(self.selections) <= 3:
            raise ValueError(f"expected 1-3 entries, got {len(self.selections)}")
        if len(set(self.selections)) != len(self.selections):
            raise ValueError(f"duplicate selections in {self.selections}")
        if any(s < 0 or s >= SELECTION_COUNT for s in self.selections):
            raise ValueError(f"selection ids out of range in {self.selections}")
        if any(w < 0.0 or w > 1.0 for w in self.weights):
            raise ValueError(f"weights outside [0, 1]: {self.weights}")
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, expected 1")

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.selections, self.weights))

    def nonzero(self) -> dict[int, float]:
        return {s: w for s, w in zip(self.selections, self.weights) if w > 0.0}


def angular_weights(offset) -> InterpolationResult:
    """Split ``offset`` between the two directions flanking its angle.

    The weights are the opposite angular gaps over the 45-degree sector
    width, so they always sum to 1.  An offset aligned with a direction
    returns that direction with weight 1 and its counterclockwise neighbor
    with weight 0; the two-entry shape is kept uniform and zero entries are
    removed later by interpolation normalization.
    """
    px, py = float(offset[0]), float(offset[1])
    if px == 0.0 and py == 0.0:
        raise ZeroVector("angular interpolation needs a nonzero offset")
    alpha = math.atan2(py, px) % (2.0 * math.pi)
    t = alpha / _QUARTER_PI
    sector = min(int(t), 7)
    frac = t - sector
    sel_a = sector + 1
    sel_b = (sector + 1) % 8 + 1
    return InterpolationResult((sel_a, sel_b), (1.0 - frac, frac))


def barycentric_weights(offset, spacing) -> InterpolationResult:
    """Barycentric split of ``offset`` over center, cardinal, and ordinal.

    With u = max(|px|, |py|) and v = min(|px|, |py|) the closed-form weights
    are ``1 - u/d`` for the center, ``(u - v)/d`` for the cardinal on the
    dominant axis (sign-matched; ties prefer the x axis), and ``v/d`` for the
    ordinal matching both signs.  Offsets beyond the kernel boundary
    (max-norm > d) are clamped radially onto it first.  Entries with zero
    weight are dropped, so the result has 1-3 entries.
    """
    d = float(spacing)
    if not d > 0.0:
        raise NonPositiveSpacing(f"spacing must be positive, got {spacing}")
    px, py = float(offset[0]), float(offset[1])
    ax, ay = abs(px), abs(py)
    m = max(ax, ay)
    if m > d:
        scale = d / m
        px, py, ax, ay = px * scale, py * scale, ax * scale, ay * scale
    u = max(ax, ay)
    v = min(ax, ay)
    # clamped offsets can leave u/d a rounding step above 1
    w_center = min(1.0, max(0.0, 1.0 - u / d))
    w_cardinal = min(1.0, (u - v) / d)
    w_ordinal = min(1.0, v / d)
    if ax >= ay:
        sel_cardinal = 1 if px >= 0.0 else 5
    else:
        sel_cardinal = 3 if py >= 0.0 else 7
    if px >= 0.0:
        sel_ordinal = 2 if py >= 0.0 else 8
    else:
        sel_ordinal = 4 if py >= 0.0 else 6
    selections = (CENTER, sel_cardinal, sel_ordinal)
    weights = (w_center, w_cardinal, w_ordinal)
    kept = [(s, w) for s, w in zip(selections, weights) if w > 0.0]
    if not kept:
        kept = [(CENTER, 1.0)]
    return InterpolationResult(tuple(s for s, _ in kept), tuple(w for _, w in kept))


def assign_selections(offset, scheme, spacing=None) -> InterpolationResult:
    """Dispatch ``offset`` to the named interpolation scheme."""
    if scheme == "angular":
        return angular_weights(offset)
    if scheme == "barycentric":
        if spacing is None:
            raise NonPositiveSpacing("barycentric interpolation needs a spacing")
        return barycentric_weights(offset, spacing)
    raise ValueError(f"unknown interpolation scheme {scheme!r}")


def angular_weights_batch(offsets):
    """Vectorized :func:`angular_weights`.

    Parameters
    ----------
    offsets : (n, 2) array
        Nonzero tangent offsets.

    Returns
    -------
    selections : (n, 2) int array
    weights : (n, 2) float array
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    px, py = offsets[:, 0], offsets[:, 1]
    if np.any((px == 0.0) & (py == 0.0)):
        raise ZeroVector("angular interpolation needs nonzero offsets")
    alpha = np.mod(np.arctan2(py, px), 2.0 * math.pi)
    t = alpha / _QUARTER_PI
    sector = np.minimum(t.astype(np.int64), 7)
    frac = t - sector
    sel_a = sector + 1
    sel_b = (sector + 1) % 8 + 1
    selections = np.stack([sel_a, sel_b], axis=1)
    weights = np.stack([1.0 - frac, frac], axis=1)
    return selections, weights


def barycentric_weights_batch(offsets, spacing):
    """Vectorized :func:`barycentric_weights`.

    Returns three entries per offset in (center, cardinal, ordinal) order;
    zero-weight entries are kept here and dropped by normalization.

    Returns
    -------
    selections : (n, 3) int array
    weights : (n, 3) float array
    """
    d = float(spacing)
    if not d > 0.0:
        raise NonPositiveSpacing(f"spacing must be positive, got {spacing}")
    offsets = np.asarray(offsets, dtype=np.float64)
    px, py = offsets[:, 0].copy(), offsets[:, 1].copy()
    ax, ay = np.abs(px), np.abs(py)
    m = np.maximum(ax, ay)
    over = m > d
    scale = np.where(over, d / np.where(over, m, 1.0), 1.0)
    px *= scale
    py *= scale
    ax *= scale
    ay *= scale
    u = np.maximum(ax, ay)
    v = np.minimum(ax, ay)
    # clamped offsets can leave u/d a rounding step above 1
    w_center = np.clip(1.0 - u / d, 0.0, 1.0)
    w_cardinal = np.clip((u - v) / d, 0.0, 1.0)
    w_ordinal = np.clip(v / d, 0.0, 1.0)
    x_dom = ax >= ay
    sel_cardinal = np.where(
        x_dom,
        np.where(px >= 0.0, 1, 5),
        np.where(py >= 0.0, 3, 7),
    )
    sel_ordinal = np.where(
        px >= 0.0,
        np.where(py >= 0.0, 2, 8),
        np.where(py >= 0.0, 4, 6),
    )
    n = offsets.shape[0]
    selections = np.stack([np.zeros(n, dtype=np.int64), sel_cardinal, sel_ordinal], axis=1)
    weights = np.stack([w_center, w_cardinal, w_ordinal], axis=1)
    return selections, weights
