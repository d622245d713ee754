import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_nearest, min_pairwise_angle
from surfconv.errors import LimitExceeded, TooCoarse
from surfconv.sphere_sampling import (
    ResolutionChoice,
    SphericalPointSet,
    cart_to_sph,
    cluster_resample,
    coarse_params,
    equirect_source_pixels,
    icosphere_edge_arc,
    icosphere_vertices_faces,
    layering_row_counts,
    nearest_assignment,
    params_for_target,
    resolution_for,
    sample,
    sample_equirect,
    sample_fibonacci,
    sample_icosphere,
    sample_layering,
    sample_random,
    sph_to_cart,
)


class TestCoordinates:
    def test_equator_at_zero_azimuth_is_x(self):
        np.testing.assert_allclose(sph_to_cart(0.0, math.pi / 2), [1, 0, 0], atol=1e-15)

    def test_increasing_azimuth_heads_toward_negative_z(self):
        np.testing.assert_allclose(
            sph_to_cart(math.pi / 2, math.pi / 2), [0, 0, -1], atol=1e-15
        )

    def test_poles(self):
        np.testing.assert_allclose(sph_to_cart(1.3, 0.0), [0, 1, 0], atol=1e-15)
        np.testing.assert_allclose(sph_to_cart(2.7, math.pi), [0, -1, 0], atol=1e-15)

    @given(
        st.floats(min_value=0.0, max_value=2 * math.pi, exclude_max=True),
        st.floats(min_value=1e-6, max_value=math.pi - 1e-6),
    )
    def test_round_trip(self, theta, phi):
        t, p = cart_to_sph(sph_to_cart(theta, phi))
        # arccos amplifies rounding near the poles, hence the loose phi bound
        assert math.isclose(p, phi, abs_tol=1e-8)
        diff = (t - theta) % (2 * math.pi)
        assert min(diff, 2 * math.pi - diff) < 1e-9


class TestLayering:
    def test_four_ring_counts(self):
        assert layering_row_counts(4) == [3, 7, 7, 3]
        assert len(sample_layering(4)) == 20

    def test_single_ring(self):
        rows = layering_row_counts(1)
        assert rows == [2]
        pts = sample_layering(1)
        assert len(pts) == 2
        _, phi = cart_to_sph(pts.points)
        np.testing.assert_allclose(phi, math.pi / 2, atol=1e-12)

    def test_rings_are_equally_spaced_in_phi(self):
        pts = sample_layering(6)
        _, phi = cart_to_sph(pts.points)
        rings = np.unique(np.round(phi, 9))
        assert len(rings) == 6
        np.testing.assert_allclose(np.diff(rings), math.pi / 6, atol=1e-9)

    def test_rejects_nonpositive(self):
        with pytest.raises(TooCoarse):
            sample_layering(0)

    def test_count_scales_roughly_quadratically(self):
        # count ~ 4 n^2 / pi, so n=40 should land within a few percent
        n = len(sample_layering(40))
        assert abs(n - 4 * 40**2 / math.pi) / n < 0.05


class TestFibonacci:
    def test_count_and_determinism(self):
        a = sample_fibonacci(1000)
        b = sample_fibonacci(1000)
        assert len(a) == 1000
        np.testing.assert_array_equal(a.points, b.points)

    def test_points_fill_polar_axis_evenly(self):
        pts = sample_fibonacci(200).points
        np.testing.assert_allclose(np.sort(pts[:, 1]), (2 * np.arange(200) + 1) / 200 - 1, atol=1e-12)

    def test_minimum_separation(self):
        pts = sample_fibonacci(1000).points
        assert min_pairwise_angle(pts) > 0.5 * math.sqrt(4 * math.pi / 1000)


class TestIcosphere:
    @pytest.mark.parametrize("s,count", [(0, 12), (1, 42), (2, 162), (3, 642)])
    def test_vertex_counts(self, s, count):
        assert len(sample_icosphere(s)) == count
        assert count == 10 * 4**s + 2

    def test_face_counts_and_closure(self):
        verts, faces = icosphere_vertices_faces(2)
        assert len(faces) == 20 * 4**2
        # closed manifold: every edge shared by exactly two faces
        pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        _, counts = np.unique(np.sort(pairs, axis=1), axis=0, return_counts=True)
        assert np.all(counts == 2)

    def test_midpoints_are_shared_not_duplicated(self):
        verts, _ = icosphere_vertices_faces(3)
        rounded = np.round(verts, 9)
        assert len(np.unique(rounded, axis=0)) == len(verts)

    def test_subdivision_limit(self):
        with pytest.raises(LimitExceeded):
            sample_icosphere(9)
        with pytest.raises(TooCoarse):
            sample_icosphere(-1)

    def test_edge_arc_roughly_halves_per_level(self):
        a0 = icosphere_edge_arc(0)
        a1 = icosphere_edge_arc(1)
        a2 = icosphere_edge_arc(2)
        assert 1.8 < a0 / a1 < 2.2
        assert 1.9 < a1 / a2 < 2.1


class TestEquirect:
    def test_count_and_pixel_order(self):
        pts = sample_equirect(16, 8)
        assert len(pts) == 128
        src = equirect_source_pixels(16, 8)
        assert src.shape == (128, 2)
        # node r*width+c is pixel (r, c)
        assert tuple(src[3 * 16 + 5]) == (3, 5)
        theta, phi = cart_to_sph(pts.points[3 * 16 + 5])
        assert math.isclose(theta, 2 * math.pi * 5.5 / 16, abs_tol=1e-12)
        assert math.isclose(phi, math.pi * 3.5 / 8, abs_tol=1e-12)

    def test_rejects_empty(self):
        with pytest.raises(TooCoarse):
            sample_equirect(0, 4)


class TestRandom:
    def test_seeded_and_distinct(self):
        a = sample_random(500, seed=7)
        b = sample_random(500, seed=7)
        c = sample_random(500, seed=8)
        np.testing.assert_array_equal(a.points, b.points)
        assert not np.array_equal(a.points, c.points)

    def test_roughly_uniform(self):
        pts = sample_random(10_000, seed=0).points
        assert np.linalg.norm(pts.mean(axis=0)) < 0.05


@pytest.mark.parametrize(
    "method,params",
    [
        ("layering", {"n_phi": 5}),
        ("fibonacci", {"count": 37}),
        ("icosphere", {"subdivisions": 1}),
        ("equirect", {"width": 10, "height": 5}),
        ("random", {"count": 37, "seed": 3}),
    ],
)
def test_all_methods_give_unit_points(method, params):
    pts = sample(method, params)
    np.testing.assert_allclose(np.linalg.norm(pts.points, axis=1), 1.0, atol=1e-9)
    assert pts.method == method


def test_point_set_rejects_off_sphere():
    with pytest.raises(ValueError):
        SphericalPointSet(np.array([[0.0, 0.0, 2.0]]), "random", {})


class TestClusterResample:
    def test_layering_halves_n_phi(self):
        fine = sample_layering(8)
        coarse, assign = cluster_resample(fine)
        assert coarse.params == {"n_phi": 4}
        assert len(coarse) == 20
        assert assign.coarse_count == len(coarse)
        assert len(assign.parent) == len(fine)

    def test_fibonacci_quarters_count(self):
        coarse, _ = cluster_resample(sample_fibonacci(1000))
        assert coarse.params == {"count": 250}

    def test_icosphere_drops_one_level(self):
        coarse, _ = cluster_resample(sample_icosphere(2))
        assert coarse.params == {"subdivisions": 1}
        with pytest.raises(TooCoarse):
            cluster_resample(sample_icosphere(0))

    def test_equirect_halves_dims(self):
        coarse, _ = cluster_resample(sample_equirect(16, 8))
        assert coarse.params == {"width": 8, "height": 4}

    def test_random_advances_seed(self):
        coarse, _ = cluster_resample(sample_random(400, seed=5))
        assert coarse.params == {"count": 100, "seed": 6}

    def test_assignment_matches_brute_force(self):
        fine = sample_fibonacci(300)
        coarse, assign = cluster_resample(fine)
        expected = brute_force_nearest(fine.points, coarse.points)
        np.testing.assert_array_equal(assign.parent, expected)

    def test_too_coarse_bounds(self):
        with pytest.raises(TooCoarse):
            coarse_params("layering", {"n_phi": 1})
        with pytest.raises(TooCoarse):
            coarse_params("fibonacci", {"count": 3})
        with pytest.raises(TooCoarse):
            coarse_params("equirect", {"width": 1, "height": 4})


class TestNearestAssignment:
    def test_tie_goes_to_lowest_index(self):
        fine = np.array([[0.0, 1.0, 0.0]])
        coarse = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        assign = nearest_assignment(fine, coarse)
        assert assign.parent[0] == 0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=1, max_value=60), st.integers(min_value=1, max_value=12))
    def test_matches_oracle(self, n_fine, n_coarse):
        rng = np.random.default_rng(n_fine * 100 + n_coarse)
        fine = rng.standard_normal((n_fine, 3))
        fine /= np.linalg.norm(fine, axis=1, keepdims=True)
        coarse = rng.standard_normal((n_coarse, 3))
        coarse /= np.linalg.norm(coarse, axis=1, keepdims=True)
        np.testing.assert_array_equal(
            nearest_assignment(fine, coarse).parent,
            brute_force_nearest(fine, coarse),
        )


class TestParamsForTarget:
    def test_layering(self):
        assert params_for_target("layering", 20) == {"n_phi": 4}
        got = len(sample("layering", params_for_target("layering", 2048)))
        assert abs(got - 2048) / 2048 < 0.1

    def test_exact_methods(self):
        assert params_for_target("fibonacci", 123) == {"count": 123}
        assert params_for_target("random", 123, seed=9) == {"count": 123, "seed": 9}

    def test_equirect(self):
        assert params_for_target("equirect", 128) == {"width": 16, "height": 8}

    def test_icosphere_snaps_to_nearest_level(self):
        assert params_for_target("icosphere", 162) == {"subdivisions": 2}
        assert params_for_target("icosphere", 300) == {"subdivisions": 2}
        assert params_for_target("icosphere", 500) == {"subdivisions": 3}


class TestResolutionFor:
    def test_layering_example(self):
        choice = resolution_for("layering", math.radians(60.0), 240)
        assert choice.params == {"n_phi": 720}
        assert math.isclose(choice.achieved, math.pi / 720, rel_tol=1e-12)

    def test_fibonacci_spacing(self):
        choice = resolution_for("fibonacci", 0.1 * 100, 100)
        assert choice.params == {"count": round(4 * math.pi / 0.01)}
        assert math.isclose(choice.achieved, math.sqrt(4 * math.pi / choice.params["count"]))

    def test_icosphere_picks_smallest_fitting_level(self):
        delta = 0.5 * (icosphere_edge_arc(3) + icosphere_edge_arc(4))
        choice = resolution_for("icosphere", delta, 1)
        assert choice.params == {"subdivisions": 4}
        assert choice.achieved <= choice.requested

    def test_icosphere_limit(self):
        with pytest.raises(LimitExceeded):
            resolution_for("icosphere", 1e-6, 1)

    def test_rejects_bad_inputs(self):
        with pytest.raises(TooCoarse):
            resolution_for("layering", 0.0, 10)
        with pytest.raises(ValueError):
            resolution_for("voronoi", 1.0, 10)

    def test_returns_choice_type(self):
        assert isinstance(resolution_for("equirect", 1.0, 2), ResolutionChoice)
