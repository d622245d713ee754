import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfconv.errors import NonPositiveSpacing, ZeroVector
from surfconv.interp import (
    DIRECTIONS,
    InterpolationResult,
    angular_weights,
    angular_weights_batch,
    assign_selections,
    barycentric_weights,
    barycentric_weights_batch,
)

from oracles import barycentric_by_solve

nonzero_angles = st.floats(min_value=0.0, max_value=2.0 * math.pi, exclude_max=True)
radii = st.floats(min_value=1e-6, max_value=1e6)


def offset_at(angle, radius=1.0):
    return (radius * math.cos(angle), radius * math.sin(angle))


def densify(selections, weights):
    out = np.zeros(9)
    for s, w in zip(selections, weights):
        out[int(s)] += float(w)
    return out


class TestAngular:
    def test_fifteen_degrees_above_east(self):
        res = angular_weights(offset_at(math.radians(15.0)))
        assert res.selections == (1, 2)
        np.testing.assert_allclose(res.weights, (2.0 / 3.0, 1.0 / 3.0), atol=1e-12)

    def test_magnitude_invariance(self):
        a = angular_weights(offset_at(1.234, radius=1.0))
        b = angular_weights(offset_at(1.234, radius=731.0))
        assert a.selections == b.selections
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)

    def test_exact_alignment_keeps_two_entry_shape(self):
        for sel in range(1, 9):
            direction = DIRECTIONS[sel]
            res = angular_weights(direction * 2.0)
            assert len(res.selections) == 2
            assert res.selections[0] == sel
            assert res.weights == (1.0, 0.0)

    def test_sector_midpoint_is_exactly_half(self):
        # 22.5 degrees from both NE and N; atan2 is exact at this angle.
        res = angular_weights(offset_at(3.0 * math.pi / 8.0))
        assert res.selections == (2, 3)
        assert res.weights == (0.5, 0.5)

    def test_all_sector_midpoints_near_half(self):
        for k in range(8):
            res = angular_weights(offset_at((2 * k + 1) * math.pi / 8.0))
            np.testing.assert_allclose(res.weights, (0.5, 0.5), atol=1e-12)

    def test_zero_offset_rejected(self):
        with pytest.raises(ZeroVector):
            angular_weights((0.0, 0.0))

    @given(angle=nonzero_angles, radius=radii)
    def test_partition_of_unity(self, angle, radius):
        res = angular_weights(offset_at(angle, radius))
        assert abs(sum(res.weights) - 1.0) <= 1e-12
        assert all(0.0 <= w <= 1.0 for w in res.weights)

    @given(angle=nonzero_angles, radius=radii)
    def test_flanking_selections_are_adjacent(self, angle, radius):
        res = angular_weights(offset_at(angle, radius))
        a, b = res.selections
        assert 1 <= a <= 8 and 1 <= b <= 8
        assert (a - 1 + 1) % 8 + 1 == b

    @given(angle=nonzero_angles, radius=radii)
    def test_quarter_turn_rotates_selections(self, angle, radius):
        # (x, y) -> (-y, x) is exact in floats; atan2 may still move an ulp,
        # so compare the dense weight vectors, which are continuous.
        x, y = offset_at(angle, radius)
        base = angular_weights((x, y))
        rotated = angular_weights((-y, x))
        shifted = densify(
            [(s - 1 + 2) % 8 + 1 for s in base.selections], base.weights
        )
        got = densify(rotated.selections, rotated.weights)
        np.testing.assert_allclose(got, shifted, atol=1e-12)

    def test_sector_boundary_continuity(self):
        delta = 1e-11
        for k in range(8):
            boundary = k * math.pi / 4.0
            lo = np.zeros(9)
            hi = np.zeros(9)
            for s, w in angular_weights(offset_at(boundary - delta)).as_dict().items():
                lo[s] = w
            for s, w in angular_weights(offset_at(boundary + delta)).as_dict().items():
                hi[s] = w
            assert np.max(np.abs(hi - lo)) <= 1e-9

    @given(
        angles=st.lists(nonzero_angles, min_size=1, max_size=32),
        radius=radii,
    )
    def test_batch_matches_scalar(self, angles, radius):
        # numpy's vectorized arctan2 may differ from libm by an ulp, so
        # compare dense weight vectors rather than entry tuples.
        offsets = np.array([offset_at(a, radius) for a in angles])
        sels, weights = angular_weights_batch(offsets)
        for i in range(len(angles)):
            res = angular_weights(offsets[i])
            got = densify(sels[i], weights[i])
            want = densify(res.selections, res.weights)
            np.testing.assert_allclose(got, want, atol=1e-12)


spacings = st.floats(min_value=1e-3, max_value=1e3)
coords = st.floats(min_value=-10.0, max_value=10.0)


class TestBarycentric:
    def test_interior_point(self):
        res = barycentric_weights((0.5, 0.25), 1.0)
        assert res.nonzero() == pytest.approx({0: 0.5, 1: 0.25, 2: 0.25}, abs=1e-12)

    def test_reflected_point(self):
        res = barycentric_weights((-0.25, 0.5), 1.0)
        assert res.nonzero() == pytest.approx({0: 0.5, 3: 0.25, 4: 0.25}, abs=1e-12)

    def test_zero_offset_is_all_center(self):
        res = barycentric_weights((0.0, 0.0), 1.0)
        assert res.nonzero() == {0: 1.0}

    def test_cardinal_vertex(self):
        res = barycentric_weights((1.0, 0.0), 1.0)
        assert res.nonzero() == {1: 1.0}

    def test_ordinal_vertex(self):
        res = barycentric_weights((1.0, 1.0), 1.0)
        assert res.nonzero() == {2: 1.0}

    def test_clamp_beyond_boundary(self):
        res = barycentric_weights((3.0, 1.0), 1.0)
        assert res.nonzero() == pytest.approx({1: 2.0 / 3.0, 2: 1.0 / 3.0}, abs=1e-12)

    def test_bad_spacing_rejected(self):
        with pytest.raises(NonPositiveSpacing):
            barycentric_weights((0.1, 0.1), 0.0)
        with pytest.raises(NonPositiveSpacing):
            barycentric_weights((0.1, 0.1), -2.0)

    @given(px=coords, py=coords, d=spacings)
    def test_weights_sum_to_one(self, px, py, d):
        res = barycentric_weights((px, py), d)
        assert abs(sum(res.weights) - 1.0) <= 1e-12
        assert all(0.0 < w <= 1.0 for w in res.weights)

    @given(px=coords, py=coords, d=spacings)
    def test_reconstructs_clamped_offset(self, px, py, d):
        m = max(abs(px), abs(py))
        cx, cy = (px, py) if m <= d else (px * d / m, py * d / m)
        res = barycentric_weights((px, py), d)
        recon = np.zeros(2)
        for s, w in res.as_dict().items():
            if s == 0:
                continue
            vertex = DIRECTIONS[s] * (d if s in (1, 3, 5, 7) else d * math.sqrt(2.0))
            recon += w * vertex
        np.testing.assert_allclose(recon, (cx, cy), atol=1e-9 * max(d, 1.0))

    @settings(max_examples=200)
    @given(px=coords, py=coords, d=spacings)
    def test_matches_linear_system_oracle(self, px, py, d):
        res = barycentric_weights((px, py), d).as_dict()
        ref = barycentric_by_solve(px, py, d)
        for sel, w in ref.items():
            assert abs(res.get(sel, 0.0) - w) <= 1e-9

    @given(
        pts=st.lists(st.tuples(coords, coords), min_size=1, max_size=32),
        d=spacings,
    )
    def test_batch_matches_scalar(self, pts, d):
        offsets = np.array(pts)
        sels, weights = barycentric_weights_batch(offsets, d)
        for i, p in enumerate(pts):
            ref = barycentric_weights(p, d).as_dict()
            got = {}
            for s, w in zip(sels[i], weights[i]):
                if w > 0.0:
                    got[int(s)] = got.get(int(s), 0.0) + float(w)
            assert got == pytest.approx(ref, abs=1e-12)


class TestAssignSelections:
    def test_dispatch(self):
        a = assign_selections((0.3, 0.1), "angular")
        assert a == angular_weights((0.3, 0.1))
        b = assign_selections((0.3, 0.1), "barycentric", spacing=0.5)
        assert b == barycentric_weights((0.3, 0.1), 0.5)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            assign_selections((1.0, 0.0), "cubic")

    def test_barycentric_needs_spacing(self):
        with pytest.raises(NonPositiveSpacing):
            assign_selections((1.0, 0.0), "barycentric")


class TestResultValidation:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            InterpolationResult((1, 2), (0.5, 0.4))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            InterpolationResult((1, 1), (0.5, 0.5))

    def test_rejects_too_many(self):
        with pytest.raises(ValueError):
            InterpolationResult((0, 1, 2, 3), (0.25, 0.25, 0.25, 0.25))


def test_oracle_self_check():
    # Pin the oracle itself on a hand-solved case: p = (0.5, 0.25), d = 1
    # lies in the E/NE triangle with vertices (0,0), (1,0), (1,1); solving
    # 0.5 = wc + wo, 0.25 = wo, 1 = w0 + wc + wo gives (0.5, 0.25, 0.25).
    ref = barycentric_by_solve(0.5, 0.25, 1.0)
    assert ref == pytest.approx({0: 0.5, 1: 0.25, 2: 0.25}, abs=1e-12)
