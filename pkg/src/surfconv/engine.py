"""Running 2D convolution weights over selection graphs.

A 3x3 kernel trained on images is reused on a graph by slicing it into nine
direction slots: output = sum over selections m of S_m X W_m, where S_m is
the weighted adjacency restricted to selection m and W_m is the kernel tap
whose image-space offset points in direction m (x right, y up, kernel rows
growing downward).

Weight files are a small self-contained container: a little-endian u64
manifest length, a UTF-8 JSON manifest, zero padding to an 8-byte boundary,
then a blob region of float32 tensors at 8-byte-aligned offsets.  The
manifest records name, kind, shape, dtype, offset, and byte length per
tensor plus a CRC-32 of the whole blob region.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ChecksumError, ConfigError, FormatError, ShapeError, SpecMismatch
from .graphs import GraphPyramid, SelectionEdges, pool, unpool
from .interp import SELECTION_COUNT

# selection id -> (row, col) of the matching 3x3 kernel tap; rows grow
# downward in the kernel while selection y points up, so north is row 0
KERNEL_TAP = {
    0: (1, 1),
    1: (1, 2),
    2: (0, 2),
    3: (0, 1),
    4: (0, 0),
    5: (1, 0),
    6: (2, 0),
    7: (2, 1),
    8: (2, 2),
}

LAYER_KINDS = ("conv3x3", "conv1x1", "relu", "pool", "unpool", "concat_skip")

TENSOR_KINDS = ("conv3x3", "conv1x1", "bias")

WEIGHT_FORMAT_VERSION = 1


def transfer_kernel(kernel: np.ndarray) -> np.ndarray:
    """Rearrange a (3, 3, c_in, c_out) kernel into (9, c_in, c_out) slots."""
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 4 or kernel.shape[:2] != (3, 3):
        raise ShapeError(f"kernel must be (3, 3, c_in, c_out), got {kernel.shape}")
    out = np.empty((SELECTION_COUNT,) + kernel.shape[2:], dtype=np.float64)
    for sel, (row, col) in KERNEL_TAP.items():
        out[sel] = kernel[row, col]
    return out


def sel_conv(
    features: np.ndarray,
    edges: SelectionEdges,
    weights: np.ndarray,
    bias: np.ndarray | None = None,
) -> np.ndarray:
    """Selection convolution: per-direction gather, then per-direction mixing.

    ``weights`` has shape (9, c_in, c_out); edge order fixes the floating
    point summation order, so results are reproducible for a given graph.
    """
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 3 or weights.shape[0] != SELECTION_COUNT:
        raise ShapeError(f"weights must be (9, c_in, c_out), got {weights.shape}")
    if features.ndim != 2 or features.shape[1] != weights.shape[1]:
        raise ShapeError(
            f"features {features.shape} do not match weights {weights.shape}"
        )
    n = features.shape[0]
    if len(edges.src) and (edges.src.max() >= n or edges.dst.max() >= n):
        raise ShapeError("edge indices exceed feature count")
    out = np.zeros((n, weights.shape[2]))
    order = np.argsort(edges.selection, kind="stable")
    bounds = np.searchsorted(edges.selection[order], np.arange(SELECTION_COUNT + 1))
    for sel in range(SELECTION_COUNT):
        group = order[bounds[sel] : bounds[sel + 1]]
        if len(group) == 0:
            continue
        gathered = np.zeros((n, features.shape[1]))
        np.add.at(
            gathered,
            edges.dst[group],
            edges.weight[group, None] * features[edges.src[group]],
        )
        out += gathered @ weights[sel]
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (weights.shape[2],):
            raise ShapeError(f"bias must be ({weights.shape[2]},), got {bias.shape}")
        out += bias
    return out


def point_conv(features, kernel, bias=None):
    """1x1 convolution: a per-node linear map."""
    features = np.asarray(features, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or features.shape[1] != kernel.shape[0]:
        raise ShapeError(f"features {features.shape} do not match kernel {kernel.shape}")
    out = features @ kernel
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64)
    return out


@dataclass(frozen=True)
class LayerSpec:
    """One step of a network: a convolution, activation, or level change."""

    name: str
    kind: str
    pool_mode: str = "mean"
    level: int | None = None

    def __post_init__(self):
        if not self.name:
            raise ConfigError("layer name must be nonempty")
        if self.kind not in LAYER_KINDS:
            raise ConfigError(
                f"layer {self.name!r}: kind must be one of {LAYER_KINDS}, got {self.kind!r}"
            )
        if self.pool_mode not in ("mean", "max"):
            raise ConfigError(
                f"layer {self.name!r}: pool_mode must be mean or max, got {self.pool_mode!r}"
            )
        if self.kind == "concat_skip":
            if self.level is None or self.level < 0:
                raise ConfigError(
                    f"layer {self.name!r}: concat_skip needs a pyramid level >= 0"
                )
        elif self.level is not None:
            raise ConfigError(f"layer {self.name!r}: only concat_skip takes a level")


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers plus validation against a weight store and a pyramid."""

    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ConfigError("layer names must be unique")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSpec":
        try:
            raw_layers = data["layers"]
        except (KeyError, TypeError):
            raise ConfigError("network spec needs a 'layers' list") from None
        layers = []
        for i, raw in enumerate(raw_layers):
            unknown = set(raw) - {"name", "kind", "pool_mode", "level"}
            if unknown:
                raise ConfigError(f"layer {i}: unknown keys {sorted(unknown)}")
            try:
                layers.append(LayerSpec(**raw))
            except TypeError as exc:
                raise ConfigError(f"layer {i}: {exc}") from None
        return cls(tuple(layers))

    def to_dict(self) -> dict:
        out = []
        for layer in self.layers:
            entry = {"name": layer.name, "kind": layer.kind}
            if layer.kind == "pool":
                entry["pool_mode"] = layer.pool_mode
            if layer.kind == "concat_skip":
                entry["level"] = layer.level
            out.append(entry)
        return {"layers": out}

    def validate(self, store: "WeightStore", in_channels: int, depth: int) -> int:
        """Channel and level bookkeeping; returns the output channel count.

        ``depth`` is the number of pooling steps the graph can absorb.
        """
        channels = in_channels
        level = 0
        stashed = {}
        for layer in self.layers:
            if layer.kind == "conv3x3":
                kernel = store.require(layer.name + ".kernel", "conv3x3")
                if kernel.shape[2] != channels:
                    raise SpecMismatch(
                        f"layer {layer.name!r}: kernel expects {kernel.shape[2]} "
                        f"channels, got {channels}"
                    )
                channels = kernel.shape[3]
                store.check_bias(layer.name, channels)
            elif layer.kind == "conv1x1":
                kernel = store.require(layer.name + ".kernel", "conv1x1")
                if kernel.shape[0] != channels:
                    raise SpecMismatch(
                        f"layer {layer.name!r}: kernel expects {kernel.shape[0]} "
                        f"channels, got {channels}"
                    )
                channels = kernel.shape[1]
                store.check_bias(layer.name, channels)
            elif layer.kind == "pool":
                if level >= depth:
                    raise SpecMismatch(
                        f"layer {layer.name!r}: pool below the coarsest graph level"
                    )
                stashed[level] = channels
                level += 1
            elif layer.kind == "unpool":
                if level == 0:
                    raise SpecMismatch(f"layer {layer.name!r}: unpool above the top level")
                level -= 1
            elif layer.kind == "concat_skip":
                if layer.level != level:
                    raise SpecMismatch(
                        f"layer {layer.name!r}: skip from level {layer.level} "
                        f"used at level {level}"
                    )
                if layer.level not in stashed:
                    raise SpecMismatch(
                        f"layer {layer.name!r}: no encoder features stashed "
                        f"for level {layer.level}"
                    )
                channels += stashed[layer.level]
        return channels


def run_network(
    pyramid: GraphPyramid,
    features: np.ndarray,
    spec: NetworkSpec,
    store: "WeightStore",
) -> np.ndarray:
    """Run a layer stack over a graph pyramid.

    Pooling descends one level and stashes its input features; unpooling
    climbs back; concat_skip appends the features stashed at its level
    channel-wise, the usual encoder-decoder shortcut.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != len(pyramid.levels[0].nodes.positions):
        raise ShapeError(
            f"features must be (n_level0, channels), got {x.shape} for "
            f"{len(pyramid.levels[0].nodes.positions)} nodes"
        )
    spec.validate(store, x.shape[1], depth=len(pyramid.assignments))
    level = 0
    stashed = {}
    for layer in spec.layers:
        if layer.kind == "conv3x3":
            weights = transfer_kernel(store.require(layer.name + ".kernel", "conv3x3"))
            x = sel_conv(x, pyramid.levels[level].edges, weights, store.bias(layer.name))
        elif layer.kind == "conv1x1":
            x = point_conv(x, store.require(layer.name + ".kernel", "conv1x1"), store.bias(layer.name))
        elif layer.kind == "relu":
            x = np.maximum(x, 0.0)
        elif layer.kind == "pool":
            stashed[level] = x
            x = pool(x, pyramid.assignments[level], mode=layer.pool_mode)
            level += 1
        elif layer.kind == "unpool":
            level -= 1
            x = unpool(x, pyramid.assignments[level])
        elif layer.kind == "concat_skip":
            x = np.concatenate([x, stashed[layer.level]], axis=1)
    return x


_TENSOR_SHAPES = {"conv3x3": 4, "conv1x1": 2, "bias": 1}


@dataclass
class WeightStore:
    """Named tensors with their manifest kinds, in insertion order."""

    tensors: dict = field(default_factory=dict)
    kinds: dict = field(default_factory=dict)

    def add(self, name: str, kind: str, array: np.ndarray) -> None:
        if kind not in TENSOR_KINDS:
            raise ConfigError(f"tensor kind must be one of {TENSOR_KINDS}, got {kind!r}")
        array = np.asarray(array)
        if array.ndim != _TENSOR_SHAPES[kind]:
            raise ShapeError(
                f"{name}: kind {kind} needs {_TENSOR_SHAPES[kind]} dims, got {array.shape}"
            )
        if kind == "conv3x3" and array.shape[:2] != (3, 3):
            raise ShapeError(f"{name}: conv3x3 kernels are (3, 3, c_in, c_out), got {array.shape}")
        self.tensors[name] = array
        self.kinds[name] = kind

    def require(self, name: str, kind: str) -> np.ndarray:
        if name not in self.tensors:
            raise SpecMismatch(f"missing tensor {name!r}")
        if self.kinds[name] != kind:
            raise SpecMismatch(
                f"tensor {name!r} has kind {self.kinds[name]!r}, expected {kind!r}"
            )
        return self.tensors[name]

    def bias(self, layer_name: str) -> np.ndarray | None:
        return self.tensors.get(layer_name + ".bias")

    def check_bias(self, layer_name: str, channels: int) -> None:
        bias = self.bias(layer_name)
        if bias is not None and bias.shape != (channels,):
            raise SpecMismatch(
                f"layer {layer_name!r}: bias shape {bias.shape} does not match "
                f"{channels} output channels"
            )

    def __contains__(self, name):
        return name in self.tensors

    def __len__(self):
        return len(self.tensors)


def _pad_to(n: int, alignment: int = 8) -> int:
    return (alignment - n % alignment) % alignment


def save_weights(path, store: WeightStore) -> None:
    """Write a weight store as a float32 container with a CRC-32 manifest."""
    blobs = []
    entries = []
    offset = 0
    for name, array in store.tensors.items():
        data = np.ascontiguousarray(array, dtype="<f4").tobytes()
        entries.append(
            {
                "name": name,
                "kind": store.kinds[name],
                "shape": list(array.shape),
                "dtype": "f32",
                "offset": offset,
                "length": len(data),
            }
        )
        blobs.append(data)
        pad = _pad_to(len(data))
        blobs.append(b"\x00" * pad)
        offset += len(data) + pad
    blob_region = b"".join(blobs)
    manifest = {
        "version": WEIGHT_FORMAT_VERSION,
        "checksum": zlib.crc32(blob_region) & 0xFFFFFFFF,
        "layers": entries,
    }
    head = json.dumps(manifest, separators=(",", ":"), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        fh.write(b"\x00" * _pad_to(8 + len(head)))
        fh.write(blob_region)


def load_weights(path) -> WeightStore:
    """Read a weight container, verifying structure and checksum."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise FormatError("weight file too short for a manifest length")
    (head_len,) = struct.unpack_from("<Q", raw, 0)
    if 8 + head_len > len(raw):
        raise FormatError("manifest length exceeds file size")
    try:
        manifest = json.loads(raw[8 : 8 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad weight manifest: {exc}") from None
    if manifest.get("version") != WEIGHT_FORMAT_VERSION:
        raise FormatError(f"unsupported weight format version {manifest.get('version')!r}")
    stored_sum = manifest.get("checksum")
    layers = manifest.get("layers")
    if not isinstance(stored_sum, int) or not isinstance(layers, list):
        raise FormatError("weight manifest needs an integer 'checksum' and a 'layers' list")
    blob_start = 8 + head_len + _pad_to(8 + head_len)
    blob_region = raw[blob_start:]
    checksum = zlib.crc32(blob_region) & 0xFFFFFFFF
    if checksum != stored_sum:
        raise ChecksumError(
            f"weight blob checksum {checksum:#010x} does not match manifest "
            f"{stored_sum:#010x}"
        )
    store = WeightStore()
    for entry in layers:
        try:
            name = entry["name"]
            kind = entry["kind"]
            shape = tuple(int(s) for s in entry["shape"])
            offset = int(entry["offset"])
            length = int(entry["length"])
            dtype = entry["dtype"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad manifest entry: {exc}") from None
        if dtype != "f32":
            raise FormatError(f"tensor {name!r}: unsupported dtype {dtype!r}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if length != count * 4:
            raise FormatError(f"tensor {name!r}: length {length} does not match shape {shape}")
        if offset % 8 != 0 or offset + length > len(blob_region):
            raise FormatError(f"tensor {name!r}: blob range out of bounds")
        array = np.frombuffer(blob_region, dtype="<f4", count=count, offset=offset)
        store.add(name, kind, array.reshape(shape).copy())
    return store


def store_from_layers(layer_weights) -> WeightStore:
    """Build a store from (layer_name, kernel, bias_or_None) triples."""
    store = WeightStore()
    for name, kernel, bias in layer_weights:
        kernel = np.asarray(kernel)
        kind = "conv3x3" if kernel.ndim == 4 else "conv1x1"
        store.add(name + ".kernel", kind, kernel)
        if bias is not None:
            store.add(name + ".bias", "bias", np.asarray(bias))
    return store
