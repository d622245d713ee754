"""Grid comparison of sampling, clustering, and interpolation choices.

Every cell builds a two-level pyramid at a shared target resolution and
reports desk-scale quality metrics:

* cap deviation: a linear tangent-plane field goes through
  conv -> pool -> conv -> unpool with uniform averaging weights.  On an
  ideal planar patch that pipeline returns the field unchanged (symmetric
  averaging preserves linear functions, pooling replaces values by nearby
  cluster means), so the mean absolute residual over a cap of nodes measures
  how far the graph strays from planar behavior.  Even samplings and compact
  clusterings score low.
* seam score: a smooth test image is averaged once on the graph and rendered
  back to equirect; values near 1 mean the azimuthal wrap stayed invisible.
* padding fraction: share of the 9 * n selection slots filled by replicate
  padding instead of real neighbors.

Build time is reported in the text table only; the CSV holds nothing that
varies between reruns of the same configuration.
"""

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assets import smooth_sphere_image
from .engine import sel_conv
from .graphs import pool, unpool
from .images import features_to_image, image_to_features, seam_score
from .sphere_graph import build_sphere_graph, tangent_frames
from .sphere_sampling import params_for_target, sample, sph_to_cart

log = logging.getLogger(__name__)

SAMPLING_METHODS = ("layering", "icosphere", "fibonacci", "equirect")
CLUSTER_METHODS = ("layering", "icosphere", "fibonacci", "equirect", "random")
SCHEMES = ("angular", "barycentric")

CSV_COLUMNS = (
    "sampling",
    "clustering",
    "scheme",
    "status",
    "nodes",
    "cap_deviation",
    "seam_score",
    "padding_fraction",
)

# equatorial cap center away from the azimuthal wrap
CAP_CENTER_THETA = 1.0
CAP_RADIUS = 0.5


@dataclass
class CellResult:
    sampling: str
    clustering: str
    scheme: str
    status: str = "ok"
    nodes: int = 0
    cap_deviation: float = math.nan
    seam: float = math.nan
    padding_fraction: float = math.nan
    build_seconds: float = field(default=math.nan, compare=False)

    def csv_row(self):
        def num(x, digits):
            return "" if math.isnan(x) else format(x, digits)

        return [
            self.sampling,
            self.clustering,
            self.scheme,
            self.status,
            str(self.nodes) if self.nodes else "",
            num(self.cap_deviation, ".9g"),
            num(self.seam, ".9g"),
            num(self.padding_fraction, ".9g"),
        ]


def averaging_weights(channels: int) -> np.ndarray:
    return np.tile(np.eye(channels) / 9.0, (9, 1, 1))


def cap_deviation(pyramid, cap_radius: float = CAP_RADIUS) -> float:
    """Mean absolute residual of a tangent-linear field after smoothing.

    The field is linear in 3D coordinates, so an ideal planar pipeline leaves
    it untouched up to curvature terms shared by every cell at equal node
    count.  The residual is reported in units of the level-0 node spacing so
    samplings that land on different counts for the same target stay
    comparable.
    """
    positions = pyramid.levels[0].nodes.positions
    center = sph_to_cart(np.array(CAP_CENTER_THETA), np.array(math.pi / 2.0))
    frame = tangent_frames(center[None, :])[0]
    field_values = positions @ frame[:2].T
    x = sel_conv(field_values, pyramid.levels[0].edges, averaging_weights(2))
    coarse = pool(x, pyramid.assignments[0])
    coarse = sel_conv(coarse, pyramid.levels[1].edges, averaging_weights(2))
    x = unpool(coarse, pyramid.assignments[0])
    cap = positions @ center > math.cos(cap_radius)
    return float(np.mean(np.abs(x - field_values)[cap]) / pyramid.levels[0].spacing)


def seam_after_averaging(pyramid, image: np.ndarray) -> float:
    positions = pyramid.levels[0].nodes.positions
    features = image_to_features(image, positions)
    out = sel_conv(features, pyramid.levels[0].edges, averaging_weights(image.shape[2]))
    recon = features_to_image(out, positions, image.shape[1], image.shape[0])
    return seam_score(recon)


def padding_fraction(level) -> float:
    edges = level.edges
    pads = int(np.sum(edges.src == edges.dst))
    return pads / (9.0 * len(level.nodes.positions))


def run_cell(
    sampling: str,
    clustering: str,
    scheme: str,
    target: int = 2048,
    seed: int = 0,
    image: np.ndarray | None = None,
) -> CellResult:
    result = CellResult(sampling, clustering, scheme)
    if image is None:
        params = params_for_target("equirect", target)
        image = smooth_sphere_image(params["width"], params["height"], seed=seed)
    try:
        start = time.perf_counter()
        points = sample(sampling, params_for_target(sampling, target, seed=seed))
        pyramid = build_sphere_graph(
            points, k=8, scheme=scheme, levels=2, cluster_method=clustering, seed=seed
        )
        result.build_seconds = time.perf_counter() - start
        result.nodes = len(points)
        result.cap_deviation = cap_deviation(pyramid)
        result.seam = seam_after_averaging(pyramid, image)
        result.padding_fraction = padding_fraction(pyramid.levels[0])
    except Exception as exc:
        result.status = f"failed: {type(exc).__name__}"
        log.warning(
            "cell %s/%s/%s failed: %s", sampling, clustering, scheme, exc
        )
    return result


def run_grid(
    target: int = 2048,
    seed: int = 0,
    samplings=SAMPLING_METHODS,
    clusterings=CLUSTER_METHODS,
    schemes=SCHEMES,
) -> list[CellResult]:
    params = params_for_target("equirect", target)
    image = smooth_sphere_image(params["width"], params["height"], seed=seed)
    return [
        run_cell(s, c, sch, target=target, seed=seed, image=image)
        for s in samplings
        for c in clusterings
        for sch in schemes
    ]


def write_csv(cells, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for cell in cells:
            writer.writerow(cell.csv_row())


def format_table(cells) -> str:
    header = (
        "sampling",
        "clustering",
        "scheme",
        "status",
        "nodes",
        "cap_dev",
        "seam",
        "pad_frac",
        "build_s",
    )
    rows = [header]
    for cell in cells:
        rows.append(
            (
                cell.sampling,
                cell.clustering,
                cell.scheme,
                cell.status,
                str(cell.nodes) if cell.nodes else "",
                "" if math.isnan(cell.cap_deviation) else f"{cell.cap_deviation:.5f}",
                "" if math.isnan(cell.seam) else f"{cell.seam:.3f}",
                "" if math.isnan(cell.padding_fraction) else f"{cell.padding_fraction:.4f}",
                "" if math.isnan(cell.build_seconds) else f"{cell.build_seconds:.2f}",
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
