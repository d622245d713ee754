"""Command line surface: sample, build, run, ablate, info.

Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure.
Reports go to stdout; artifacts go to the paths named by the config.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .ablate import format_table, run_grid, write_csv
from .config import METHODS, SCHEMES, RunConfig
from .container import read_arrays, write_arrays
from .engine import LayerSpec, NetworkSpec, load_weights, run_network
from .errors import ConfigError, FormatError, RuntimeFailure, ValidationError
from .graphs import load_pyramid, save_pyramid
from .images import features_to_image, image_to_features, load_image, save_image
from .mesh_graph import (
    build_mesh_graph,
    features_to_texture,
    load_obj,
    rasterize_uv,
    texture_to_features,
)
from .sphere_graph import build_sphere_graph
from .sphere_sampling import cart_to_sph, sample

PREVIEW_WIDTH = 512
PREVIEW_HEIGHT = 256


class _Parser(argparse.ArgumentParser):
    """Argparse that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_flags(parser):
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--interp", dest="scheme", choices=SCHEMES)
    parser.add_argument("--k", type=int)
    parser.add_argument("--levels", type=int)
    parser.add_argument("--delta-theta", dest="delta_theta", type=float)
    parser.add_argument("--target", type=int, help="approximate node count")
    parser.add_argument("--weights")
    parser.add_argument("--input")
    parser.add_argument("--output")
    parser.add_argument("--mesh", help="OBJ path; switches the surface to mesh")
    parser.add_argument("--texture")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surfconv", description=__doc__)
    sub = parser.add_subparsers(dest="task", required=True, parser_class=_Parser)
    helps = {
        "sample": "write a point set and an equirect dot preview",
        "build": "build a graph pyramid and report its shape",
        "run": "run network weights over an image or texture",
        "ablate": "compare sampling/clustering/interpolation choices",
        "info": "describe a saved artifact",
    }
    for task, text in helps.items():
        _add_flags(sub.add_parser(task, help=text))
    return parser


OVERRIDE_KEYS = (
    "seed",
    "method",
    "scheme",
    "k",
    "levels",
    "delta_theta",
    "target",
    "weights",
    "input",
    "output",
    "mesh",
    "texture",
)


def config_from_args(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {key: getattr(args, key) for key in OVERRIDE_KEYS}
    overrides["task"] = args.task
    if args.mesh is not None:
        overrides["surface"] = "mesh"
    return config.with_overrides(**overrides)


def _require(config, attr, flag):
    value = getattr(config, attr)
    if value is None:
        raise ConfigError(f"{config.task} needs {flag}")
    return value


def preview_image(points: np.ndarray) -> np.ndarray:
    theta, phi = cart_to_sph(points)
    cols = (theta / (2.0 * np.pi) * PREVIEW_WIDTH).astype(np.int64) % PREVIEW_WIDTH
    rows = np.clip((phi / np.pi * PREVIEW_HEIGHT).astype(np.int64), 0, PREVIEW_HEIGHT - 1)
    canvas = np.zeros((PREVIEW_HEIGHT, PREVIEW_WIDTH))
    canvas[rows, cols] = 1.0
    return canvas


def cmd_sample(config: RunConfig) -> int:
    out = Path(_require(config, "output", "--output"))
    points = sample(config.method, config.sampling_params())
    write_arrays(
        out,
        {"points": points.points},
        {"kind": "point_set", "method": points.method, "params": points.params},
    )
    preview = out.with_name(out.stem + "_preview.png")
    save_image(preview, preview_image(points.points))
    print(f"{points.method} {points.params}: {len(points)} points")
    print(f"wrote {out} and {preview}")
    return 0


def _build_pyramid(config: RunConfig):
    if config.surface == "mesh":
        mesh = load_obj(_require(config, "mesh", "--mesh"))
        return build_mesh_graph(
            mesh,
            config.target,
            k=config.k,
            scheme=config.scheme,
            levels=config.levels,
            seed=config.seed,
        )
    points = sample(config.method, config.sampling_params())
    return build_sphere_graph(
        points,
        k=config.k,
        scheme=config.scheme,
        levels=config.levels,
        cluster_method=config.cluster_method,
        seed=config.seed,
    )


def describe_pyramid(pyramid) -> str:
    lines = []
    for i, level in enumerate(pyramid.levels):
        edges = level.edges
        n = len(level.nodes)
        real = edges.src != edges.dst
        padded = int(np.sum(~real))
        neighbors = len(np.unique(edges.dst[real] * np.int64(n) + edges.src[real]))
        lines.append(
            f"level {i}: {n} nodes, {len(edges.src)} edges, "
            f"mean degree {neighbors / n:.2f}, {padded} padded slots, "
            f"estimated d {level.spacing:.4f}"
        )
    return "\n".join(lines)


def cmd_build(config: RunConfig) -> int:
    pyramid = _build_pyramid(config)
    print(describe_pyramid(pyramid))
    if config.output:
        save_pyramid(pyramid, config.output)
        print(f"wrote {config.output}")
    return 0


def network_from_config(config: RunConfig, store) -> NetworkSpec:
    """Network from the config, or every stored conv layer in file order."""
    if config.network is not None:
        return NetworkSpec.from_dict({"layers": config.network})
    layers = []
    for name, kind in store.kinds.items():
        if kind in ("conv3x3", "conv1x1") and name.endswith(".kernel"):
            layers.append(LayerSpec(name[: -len(".kernel")], kind))
    if not layers:
        raise ConfigError("weight file holds no conv layers and no network was given")
    return NetworkSpec(tuple(layers))


def cmd_run(config: RunConfig) -> int:
    store = load_weights(_require(config, "weights", "--weights"))
    spec = network_from_config(config, store)
    out = Path(_require(config, "output", "--output"))
    pyramid = _build_pyramid(config)
    nodes = pyramid.levels[0].nodes
    if config.surface == "mesh":
        texture = load_image(_require(config, "texture", "--texture"))
        height, width = texture.shape[:2]
        mesh = load_obj(config.mesh)
        mask, _, _ = rasterize_uv(mesh, width, height)
        features = texture_to_features(texture, nodes.uvs, mask=mask)
        result = run_network(pyramid, features, spec, store)
        rendered = features_to_texture(
            result, nodes.positions, mesh, width, height, base=texture
        )
    else:
        image = load_image(_require(config, "input", "--input"))
        height, width = image.shape[:2]
        features = image_to_features(image, nodes.positions)
        result = run_network(pyramid, features, spec, store)
        rendered = features_to_image(result, nodes.positions, width, height)
    save_image(out, np.clip(rendered, 0.0, 1.0))
    print(f"wrote {out}")
    return 0


def cmd_ablate(config: RunConfig) -> int:
    cells = run_grid(target=config.target, seed=config.seed)
    print(format_table(cells))
    failed = sum(1 for cell in cells if cell.status != "ok")
    print(f"\n{len(cells)} cells, {failed} failed")
    if config.output:
        write_csv(cells, config.output)
        print(f"wrote {config.output}")
    return 0


def cmd_info(config: RunConfig) -> int:
    path = _require(config, "input", "--input")
    try:
        store = load_weights(path)
    except FormatError:
        pass
    else:
        print(f"{path}: weight file, {len(store)} tensors")
        for name, kind in store.kinds.items():
            shape = "x".join(str(s) for s in store.tensors[name].shape)
            print(f"  {name}: {kind} {shape}")
        return 0
    meta, arrays = read_arrays(path)
    kind = meta.get("kind", "arrays")
    print(f"{path}: {kind}")
    if kind == "graph_pyramid":
        print(describe_pyramid(load_pyramid(path)))
        return 0
    for key, value in meta.items():
        if key != "shapes":
            print(f"  {key}: {json.dumps(value, sort_keys=True)}")
    for name, array in arrays.items():
        shape = "x".join(str(s) for s in array.shape)
        print(f"  {name}: {array.dtype} {shape}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "build": cmd_build,
    "run": cmd_run,
    "ablate": cmd_ablate,
    "info": cmd_info,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.task](config)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
