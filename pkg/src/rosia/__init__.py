"""Rotation-search star identification toolkit.

Solves the lost-in-space problem by globally searching the rotation
space with branch and bound: the returned attitude maximizes the number
of scene stars aligned, within threshold, with feasible catalog stars.
"""

from .catalog import (
    EmptyCatalog,
    FormatError,
    OnboardCatalog,
    RawStar,
    build_onboard_catalog,
    extract_sub_catalogs,
    load_catalog,
    read_raw_csv,
    save_catalog,
)
from .geometry import RotationCube, branch, cube_intersects_pi_ball, root_cube
from .simulator import CameraModel, NoiseSpec, SimulatedScene, generate_scene, pixel_to_angle
from .solver import (
    PRESETS,
    DegenerateGeometry,
    SolveResult,
    SolveStatus,
    SolverConfig,
    TooFewStars,
    compute_scene_features,
    evaluate_objective,
    evaluate_upper_bound,
    prepare_scene,
    solve,
    solve_wahba,
)

__version__ = "0.1.0"
