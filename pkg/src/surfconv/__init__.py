"""Graph convolution for spherical images and mesh surfaces."""

from .config import RunConfig
from .engine import (
    LayerSpec,
    NetworkSpec,
    WeightStore,
    load_weights,
    point_conv,
    run_network,
    save_weights,
    sel_conv,
    transfer_kernel,
)
from .graphs import (
    ClusterAssignment,
    GraphLevel,
    GraphPyramid,
    NodeSet,
    SelectionEdges,
    add_replicate_padding,
    load_pyramid,
    normalize_interpolation,
    normalize_rows,
    pool,
    save_pyramid,
    unpool,
)
from .images import (
    features_to_image,
    image_to_features,
    load_image,
    save_image,
    seam_score,
)
from .interp import angular_weights, assign_selections, barycentric_weights
from .mesh_graph import (
    MeshSurface,
    build_mesh_graph,
    features_to_texture,
    load_obj,
    rasterize_uv,
    sample_surface,
    texture_seam_stats,
    texture_to_features,
)
from .planar import features_to_grid, grid_to_features, planar_grid_graph
from .sphere_graph import build_sphere_graph, tangent_frames
from .sphere_sampling import (
    SphericalPointSet,
    params_for_target,
    sample,
    sample_equirect,
    sample_fibonacci,
    sample_icosphere,
    sample_layering,
    sample_random,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment",
    "GraphLevel",
    "GraphPyramid",
    "LayerSpec",
    "MeshSurface",
    "NetworkSpec",
    "NodeSet",
    "RunConfig",
    "SelectionEdges",
    "SphericalPointSet",
    "WeightStore",
    "add_replicate_padding",
    "angular_weights",
    "assign_selections",
    "barycentric_weights",
    "build_mesh_graph",
    "build_sphere_graph",
    "features_to_grid",
    "features_to_image",
    "features_to_texture",
    "grid_to_features",
    "image_to_features",
    "load_image",
    "load_obj",
    "load_pyramid",
    "load_weights",
    "normalize_interpolation",
    "normalize_rows",
    "params_for_target",
    "planar_grid_graph",
    "point_conv",
    "pool",
    "rasterize_uv",
    "run_network",
    "sample",
    "sample_equirect",
    "sample_fibonacci",
    "sample_icosphere",
    "sample_layering",
    "sample_random",
    "sample_surface",
    "save_image",
    "save_pyramid",
    "save_weights",
    "seam_score",
    "sel_conv",
    "tangent_frames",
    "texture_seam_stats",
    "texture_to_features",
    "transfer_kernel",
    "unpool",
]
