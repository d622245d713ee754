import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import conv2d_1x1, conv2d_replicate, mean_pool_2x2, nearest_unpool_2x2
from surfconv.engine import (
    KERNEL_TAP,
    LayerSpec,
    NetworkSpec,
    WeightStore,
    load_weights,
    point_conv,
    run_network,
    save_weights,
    sel_conv,
    store_from_layers,
    transfer_kernel,
)
from surfconv.errors import (
    ChecksumError,
    ConfigError,
    FormatError,
    ShapeError,
    SpecMismatch,
)
from surfconv.graphs import SelectionEdges
from surfconv.planar import features_to_grid, grid_to_features, planar_grid_graph


def random_kernel(rng, c_in, c_out):
    return rng.standard_normal((3, 3, c_in, c_out))


class TestTransferKernel:
    def test_tap_positions(self):
        kernel = np.arange(9, dtype=np.float64).reshape(3, 3, 1, 1)
        slots = transfer_kernel(kernel)
        # rows grow downward: row 0 is north, col 2 is east
        assert slots[0, 0, 0] == kernel[1, 1, 0, 0]  # center
        assert slots[1, 0, 0] == kernel[1, 2, 0, 0]  # east
        assert slots[2, 0, 0] == kernel[0, 2, 0, 0]  # northeast
        assert slots[3, 0, 0] == kernel[0, 1, 0, 0]  # north
        assert slots[4, 0, 0] == kernel[0, 0, 0, 0]  # northwest
        assert slots[5, 0, 0] == kernel[1, 0, 0, 0]  # west
        assert slots[6, 0, 0] == kernel[2, 0, 0, 0]  # southwest
        assert slots[7, 0, 0] == kernel[2, 1, 0, 0]  # south
        assert slots[8, 0, 0] == kernel[2, 2, 0, 0]  # southeast

    def test_every_tap_used_once(self):
        assert sorted(KERNEL_TAP.values()) == [(r, c) for r in range(3) for c in range(3)]

    def test_rejects_wrong_shape(self):
        with pytest.raises(ShapeError):
            transfer_kernel(np.zeros((5, 5, 1, 1)))


class TestSelConv:
    def test_two_node_hand_case(self):
        # node 1 sees node 0 to its east with weight 0.5, plus padded rows
        edges = SelectionEdges(
            np.array([0, 1]), np.array([1, 1]), np.array([1, 0]), np.array([0.5, 1.0])
        )
        weights = np.zeros((9, 1, 1))
        weights[1, 0, 0] = 2.0  # east slot
        weights[0, 0, 0] = 3.0  # center slot
        x = np.array([[4.0], [10.0]])
        out = sel_conv(x, edges, weights)
        assert out[1, 0] == pytest.approx(0.5 * 4.0 * 2.0 + 10.0 * 3.0)
        assert out[0, 0] == 0.0

    def test_bias_added_everywhere(self):
        edges = SelectionEdges(np.array([0]), np.array([0]), np.array([0]), np.array([1.0]))
        out = sel_conv(np.zeros((3, 2)), edges, np.zeros((9, 2, 4)), bias=np.arange(4.0))
        np.testing.assert_allclose(out, np.tile(np.arange(4.0), (3, 1)))

    def test_shape_errors(self):
        edges = SelectionEdges(np.array([0]), np.array([0]), np.array([0]), np.array([1.0]))
        with pytest.raises(ShapeError):
            sel_conv(np.zeros((2, 3)), edges, np.zeros((9, 2, 2)))
        with pytest.raises(ShapeError):
            sel_conv(np.zeros((2, 2)), edges, np.zeros((8, 2, 2)))
        with pytest.raises(ShapeError):
            sel_conv(np.zeros((2, 2)), edges, np.zeros((9, 2, 2)), bias=np.zeros(3))

    def test_deterministic_summation(self):
        rng = np.random.default_rng(0)
        n = 40
        src = rng.integers(0, n, 500)
        dst = rng.integers(0, n, 500)
        sel = rng.integers(0, 9, 500)
        w = rng.random(500)
        edges = SelectionEdges(src, dst, sel, w)
        x = rng.standard_normal((n, 3))
        weights = rng.standard_normal((9, 3, 2))
        a = sel_conv(x, edges, weights)
        b = sel_conv(x, edges, weights)
        np.testing.assert_array_equal(a, b)


class TestPlanarEquivalence:
    @pytest.mark.parametrize("h,w", [(1, 1), (1, 5), (4, 4), (5, 3), (7, 9)])
    def test_matches_dense_conv(self, h, w):
        rng = np.random.default_rng(h * 100 + w)
        image = rng.standard_normal((h, w, 2))
        kernel = random_kernel(rng, 2, 3)
        bias = rng.standard_normal(3)
        pyramid = planar_grid_graph(h, w)
        got = sel_conv(
            grid_to_features(image), pyramid.levels[0].edges, transfer_kernel(kernel), bias
        )
        want = conv2d_replicate(image, kernel, bias)
        np.testing.assert_allclose(features_to_grid(got, h, w), want, atol=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(
        st.integers(min_value=1, max_value=7),
        st.integers(min_value=1, max_value=7),
        st.integers(min_value=0, max_value=10_000),
    )
    def test_matches_dense_conv_property(self, h, w, seed):
        rng = np.random.default_rng(seed)
        image = rng.standard_normal((h, w, 1))
        kernel = random_kernel(rng, 1, 1)
        pyramid = planar_grid_graph(h, w)
        got = sel_conv(grid_to_features(image), pyramid.levels[0].edges, transfer_kernel(kernel))
        np.testing.assert_allclose(
            features_to_grid(got, h, w), conv2d_replicate(image, kernel), atol=1e-10
        )

    def test_every_row_is_a_single_clamped_pixel(self):
        pyramid = planar_grid_graph(3, 4)
        edges = pyramid.levels[0].edges
        assert len(edges.src) == 9 * 12
        np.testing.assert_allclose(edges.weight, 1.0)


class TestPlanarPyramid:
    def test_block_assignment_matches_pooling_oracle(self):
        rng = np.random.default_rng(5)
        image = rng.standard_normal((5, 6, 3))
        pyramid = planar_grid_graph(5, 6, levels=2)
        from surfconv.graphs import pool

        coarse = pool(grid_to_features(image), pyramid.assignments[0], mode="mean")
        want = mean_pool_2x2(image)
        np.testing.assert_allclose(features_to_grid(coarse, 3, 3), want, atol=1e-12)

    def test_coarse_level_dims(self):
        pyramid = planar_grid_graph(5, 6, levels=3)
        assert [len(lv.nodes.positions) for lv in pyramid.levels] == [30, 9, 4]
        assert [lv.spacing for lv in pyramid.levels] == [1.0, 2.0, 4.0]

    def test_too_coarse(self):
        with pytest.raises(Exception):
            planar_grid_graph(1, 1, levels=2)


def two_level_network():
    return NetworkSpec(
        (
            LayerSpec("conv_in", "conv3x3"),
            LayerSpec("act1", "relu"),
            LayerSpec("down", "pool"),
            LayerSpec("conv_mid", "conv3x3"),
            LayerSpec("up", "unpool"),
            LayerSpec("shortcut", "concat_skip", level=0),
            LayerSpec("conv_out", "conv1x1"),
        )
    )


def two_level_store(rng, c):
    return store_from_layers(
        [
            ("conv_in", random_kernel(rng, c, 4), rng.standard_normal(4)),
            ("conv_mid", random_kernel(rng, 4, 4), None),
            ("conv_out", rng.standard_normal((8, 2)), rng.standard_normal(2)),
        ]
    )


class TestRunNetwork:
    def test_matches_dense_pipeline_on_grid(self):
        rng = np.random.default_rng(11)
        h, w = 6, 8
        image = rng.standard_normal((h, w, 3))
        store = two_level_store(rng, 3)
        pyramid = planar_grid_graph(h, w, levels=2)
        got = run_network(pyramid, grid_to_features(image), two_level_network(), store)

        stage = conv2d_replicate(image, store.tensors["conv_in.kernel"], store.tensors["conv_in.bias"])
        stage = np.maximum(stage, 0.0)
        pooled = mean_pool_2x2(stage)
        mid = conv2d_replicate(pooled, store.tensors["conv_mid.kernel"])
        up = np.concatenate([nearest_unpool_2x2(mid, h, w), stage], axis=2)
        want = conv2d_1x1(up, store.tensors["conv_out.kernel"], store.tensors["conv_out.bias"])
        np.testing.assert_allclose(features_to_grid(got, h, w), want, atol=1e-9)

    def test_plain_unpool_is_nearest_copy(self):
        rng = np.random.default_rng(3)
        h, w = 4, 4
        image = rng.standard_normal((h, w, 1))
        spec = NetworkSpec((LayerSpec("down", "pool"), LayerSpec("up", "unpool")))
        pyramid = planar_grid_graph(h, w, levels=2)
        got = run_network(pyramid, grid_to_features(image), spec, WeightStore())
        want = nearest_unpool_2x2(mean_pool_2x2(image), h, w)
        np.testing.assert_allclose(features_to_grid(got, h, w), want, atol=1e-12)

    def test_max_pool_mode(self):
        image = np.array([[1.0, 2.0], [5.0, 3.0]])[:, :, None]
        spec = NetworkSpec((LayerSpec("down", "pool", pool_mode="max"),))
        pyramid = planar_grid_graph(2, 2, levels=2)
        got = run_network(pyramid, grid_to_features(image), spec, WeightStore())
        assert got[0, 0] == 5.0

    def test_validation_names_offending_layer(self):
        rng = np.random.default_rng(0)
        pyramid = planar_grid_graph(4, 4, levels=2)
        x = np.zeros((16, 3))
        store = two_level_store(rng, 2)  # expects 2 input channels, not 3
        with pytest.raises(SpecMismatch, match="conv_in"):
            run_network(pyramid, x, two_level_network(), store)

    def test_pool_past_depth_rejected(self):
        pyramid = planar_grid_graph(4, 4, levels=1)
        spec = NetworkSpec((LayerSpec("down", "pool"),))
        with pytest.raises(SpecMismatch, match="down"):
            run_network(pyramid, np.zeros((16, 1)), spec, WeightStore())

    def test_unpool_above_top_rejected(self):
        pyramid = planar_grid_graph(4, 4, levels=2)
        spec = NetworkSpec((LayerSpec("up", "unpool"),))
        with pytest.raises(SpecMismatch, match="up"):
            run_network(pyramid, np.zeros((16, 1)), spec, WeightStore())

    def test_missing_tensor_named(self):
        pyramid = planar_grid_graph(4, 4)
        spec = NetworkSpec((LayerSpec("lonely", "conv3x3"),))
        with pytest.raises(SpecMismatch, match="lonely.kernel"):
            run_network(pyramid, np.zeros((16, 1)), spec, WeightStore())


class TestNetworkSpec:
    def test_round_trip_dict(self):
        spec = two_level_network()
        again = NetworkSpec.from_dict(spec.to_dict())
        assert again == spec

    def test_rejects_unknown_kind_and_keys(self):
        with pytest.raises(ConfigError):
            LayerSpec("a", "conv5x5")
        with pytest.raises(ConfigError):
            NetworkSpec.from_dict({"layers": [{"name": "a", "kind": "relu", "foo": 1}]})
        with pytest.raises(ConfigError):
            NetworkSpec.from_dict({})

    def test_rejects_duplicate_names(self):
        with pytest.raises(ConfigError):
            NetworkSpec((LayerSpec("a", "relu"), LayerSpec("a", "relu")))

    def test_level_only_on_concat_skip(self):
        with pytest.raises(ConfigError):
            LayerSpec("a", "relu", level=0)
        with pytest.raises(ConfigError):
            LayerSpec("a", "concat_skip")

    def test_concat_skip_level_bookkeeping(self):
        pyramid = planar_grid_graph(4, 4, levels=2)
        x = np.zeros((16, 1))
        wrong_level = NetworkSpec(
            (LayerSpec("down", "pool"), LayerSpec("sc", "concat_skip", level=0))
        )
        with pytest.raises(SpecMismatch, match="sc"):
            run_network(pyramid, x, wrong_level, WeightStore())
        never_stashed = NetworkSpec((LayerSpec("sc", "concat_skip", level=0),))
        with pytest.raises(SpecMismatch, match="sc"):
            run_network(pyramid, x, never_stashed, WeightStore())

    def test_concat_skip_doubles_channels(self):
        pyramid = planar_grid_graph(4, 4, levels=2)
        x = np.arange(32, dtype=float).reshape(16, 2)
        spec = NetworkSpec(
            (
                LayerSpec("down", "pool"),
                LayerSpec("up", "unpool"),
                LayerSpec("sc", "concat_skip", level=0),
            )
        )
        got = run_network(pyramid, x, spec, WeightStore())
        assert got.shape == (16, 4)
        np.testing.assert_allclose(got[:, 2:], x, atol=0)


class TestWeightFile:
    def make_store(self, rng):
        return store_from_layers(
            [
                ("conv1", random_kernel(rng, 3, 8), rng.standard_normal(8)),
                ("proj", rng.standard_normal((8, 2)), None),
            ]
        )

    def test_round_trip_is_f32_quantization(self, tmp_path):
        rng = np.random.default_rng(1)
        store = self.make_store(rng)
        path = tmp_path / "w.bin"
        save_weights(path, store)
        loaded = load_weights(path)
        assert set(loaded.tensors) == set(store.tensors)
        for name, array in store.tensors.items():
            np.testing.assert_array_equal(loaded.tensors[name], array.astype(np.float32))
            assert loaded.kinds[name] == store.kinds[name]

    def test_second_cycle_bit_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        store = self.make_store(rng)
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        save_weights(a, store)
        save_weights(b, load_weights(a))
        assert a.read_bytes() == b.read_bytes()

    def test_offsets_are_aligned(self, tmp_path):
        rng = np.random.default_rng(3)
        store = WeightStore()
        store.add("tiny.bias", "bias", rng.standard_normal(3))  # 12 bytes, forces padding
        store.add("proj.kernel", "conv1x1", rng.standard_normal((2, 2)))
        path = tmp_path / "w.bin"
        save_weights(path, store)
        loaded = load_weights(path)
        np.testing.assert_array_equal(
            loaded.tensors["proj.kernel"],
            store.tensors["proj.kernel"].astype(np.float32),
        )

    def test_checksum_detects_corruption(self, tmp_path):
        rng = np.random.default_rng(4)
        path = tmp_path / "w.bin"
        save_weights(path, self.make_store(rng))
        raw = bytearray(path.read_bytes())
        raw[-1] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(ChecksumError):
            load_weights(path)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"\x00" * 4)
        with pytest.raises(FormatError):
            load_weights(path)
        path.write_bytes(b"\xff" * 64)
        with pytest.raises(FormatError):
            load_weights(path)

    def test_rejects_wrong_version(self, tmp_path):
        import json
        import struct
        import zlib

        manifest = json.dumps({"version": 99, "checksum": zlib.crc32(b""), "layers": []}).encode()
        path = tmp_path / "w.bin"
        pad = (8 - (8 + len(manifest)) % 8) % 8
        path.write_bytes(struct.pack("<Q", len(manifest)) + manifest + b"\x00" * pad)
        with pytest.raises(FormatError):
            load_weights(path)

    def test_store_validates_kinds(self):
        store = WeightStore()
        with pytest.raises(ShapeError):
            store.add("a.kernel", "conv3x3", np.zeros((2, 2, 1, 1)))
        with pytest.raises(ConfigError):
            store.add("a.kernel", "conv9x9", np.zeros((3, 3, 1, 1)))
        store.add("a.kernel", "conv1x1", np.zeros((2, 3)))
        with pytest.raises(SpecMismatch):
            store.require("a.kernel", "conv3x3")
        with pytest.raises(SpecMismatch):
            store.require("b.kernel", "conv1x1")


class TestPointConv:
    def test_matches_oracle(self):
        rng = np.random.default_rng(6)
        image = rng.standard_normal((3, 5, 4))
        kernel = rng.standard_normal((4, 2))
        bias = rng.standard_normal(2)
        got = point_conv(grid_to_features(image), kernel, bias)
        np.testing.assert_allclose(
            features_to_grid(got, 3, 5), conv2d_1x1(image, kernel, bias), atol=1e-12
        )


class TestSelConvInvariants:
    """Structural guarantees of the selection convolution itself: it is linear
    in the features, indifferent to node labeling, and with identical
    averaging weights on a normalized padded graph it can only produce convex
    combinations of the input."""

    def setup_method(self):
        self.edges = planar_grid_graph(5, 7).levels[0].edges
        self.n = 35

    @settings(max_examples=20, deadline=None)
    @given(
        st.integers(min_value=0, max_value=10_000),
        st.floats(min_value=-3.0, max_value=3.0),
        st.floats(min_value=-3.0, max_value=3.0),
    )
    def test_linear_in_features(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((self.n, 2))
        y = rng.standard_normal((self.n, 2))
        weights = rng.standard_normal((9, 2, 3))
        got = sel_conv(a * x + b * y, self.edges, weights)
        want = a * sel_conv(x, self.edges, weights) + b * sel_conv(y, self.edges, weights)
        np.testing.assert_allclose(got, want, atol=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_permutation_equivariant(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((self.n, 2))
        weights = rng.standard_normal((9, 2, 2))
        perm = rng.permutation(self.n)
        x_p = np.empty_like(x)
        x_p[perm] = x
        edges_p = SelectionEdges(
            perm[self.edges.src], perm[self.edges.dst], self.edges.selection, self.edges.weight
        )
        got = sel_conv(x_p, edges_p, weights)
        want = sel_conv(x, self.edges, weights)
        np.testing.assert_allclose(got[perm], want, atol=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_uniform_weights_give_convex_combinations(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((self.n, 3))
        averaging = np.tile(np.eye(3) / 9.0, (9, 1, 1))
        got = sel_conv(x, self.edges, averaging)
        for ch in range(3):
            assert got[:, ch].min() >= x[:, ch].min() - 1e-9
            assert got[:, ch].max() <= x[:, ch].max() + 1e-9

    def test_identity_kernel_is_identity_on_grids(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((self.n, 4))
        kernel = np.zeros((3, 3, 4, 4))
        kernel[1, 1] = np.eye(4)
        got = sel_conv(x, self.edges, transfer_kernel(kernel))
        np.testing.assert_allclose(got, x, atol=1e-12)
