"""Point-set registration by Fokker-Planck transport (Python bindings)."""

from ._fpreg import (
    Error,
    Gmm,
    TriangleMesh,
    arc_cloud,
    fit_gmm,
    fp_gaussian_1d,
    generate_mesh,
    hausdorff,
    load_config,
    run,
)

__all__ = [
    "Error",
    "Gmm",
    "TriangleMesh",
    "arc_cloud",
    "fit_gmm",
    "fp_gaussian_1d",
    "generate_mesh",
    "hausdorff",
    "load_config",
    "run",
]
