"""Best-first branch-and-bound rotation search over the pi-ball.

The solver maximizes the consensus objective: the number of scene stars
that land within the angular threshold of some feasible catalog star
after rotation.  Feasibility per scene star is pre-restricted to its
sub-catalog (magnitude window plus, when the triplet constraint is on,
agreement of the two nearest-neighbor distances within 2 * alpha_eps).

A cube's upper bound relaxes the angular threshold by the cube's
center-to-vertex distance alpha: any rotation inside the cube moves a
rotated star by at most alpha away from the center rotation's image, so
every match achievable inside the cube is counted.  Bound and objective
are evaluated by stereographic projection plus circular R-tree queries;
a brute-force 3D evaluation would be O(N * M_sub) per rotation.

Each queued cube carries a matchlist: the scene stars that still had a
feasible match at its bound evaluation.  Children only ever re-examine
their parent's matchlist, which shrinks monotonically down the tree.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import catalog as catalog_mod
from .catalog import OnboardCatalog
from .geometry import (
    RotationCube,
    axis_angle_from_matrix,
    branch,
    clamp_to_pi_ball,
    cube_intersects_pi_ball,
    root_cube,
    rotation_matrix,
)
from .projection import (
    DegenerateProjection,
    InteriorCircle,
    SphericalPatch,
    project_patch,
    project_vector,
)
from .spatial_index import CircularRTree


class TooFewStars(Exception):
    """A scene needs at least 3 stars for features and identification."""


class DegenerateGeometry(Exception):
    """Attitude estimation needs >= 2 non-collinear vector pairs."""


class SceneStar(NamedTuple):
    """Body-frame star with magnitude and its two nearest-neighbor angles."""

    vector: np.ndarray
    magnitude: float
    nn1: float
    nn2: float


@dataclass(frozen=True, slots=True)
class SolverConfig:
    """Thresholds and switches for one solve.

    alpha_eps is the angular match threshold in radians, eps_v the
    magnitude window.  triplet_k is the number of neighbor-distance
    constraints (0, 1 or 2); use_triplet_bound switches between the
    triplet-constrained objective/bound pair and the plain angular
    baseline pair (implemented as triplet_k = 0 sub-catalogs).
    """

    alpha_eps: float
    eps_v: float = 0.6
    triplet_k: int = 2
    min_matches: int = 3
    min_match_fraction: float = 0.30
    use_triplet_bound: bool = True
    max_iterations: int = 1_000_000

    def __post_init__(self):
        if self.alpha_eps <= 0.0:
            raise ValueError("alpha_eps must be positive")
        if self.triplet_k not in (0, 1, 2):
            raise ValueError("triplet_k must be 0, 1, or 2")
        if not 0.0 < self.min_match_fraction <= 1.0:
            raise ValueError("min_match_fraction must be in (0, 1]")


PRESETS = {
    "S1": SolverConfig(alpha_eps=math.radians(0.0205), eps_v=0.45),
    "S2": SolverConfig(alpha_eps=math.radians(0.0275), eps_v=0.6),
    "S3": SolverConfig(alpha_eps=math.radians(0.0275), eps_v=1.2),
}


class SolveStatus(Enum):
    IDENTIFIED = "identified"
    NO_RESULT = "no_result"


@dataclass(slots=True)
class SolveStats:
    iterations: int = 0
    max_queue_len: int = 0
    bound_evals: int = 0
    objective_evals: int = 0
    wall_time: float = 0.0
    iteration_cap_hit: bool = False


@dataclass(slots=True)
class SolveResult:
    """Outcome of one solve.

    ``matches`` pairs scene indices with catalog star ids.  ``rotation``
    is the refined attitude (axis-angle, body to inertial) when
    identified, else the incumbent center estimate or None.
    """

    status: SolveStatus
    rotation: np.ndarray | None
    consensus: int
    matches: list[tuple[int, int]]
    stats: SolveStats


def compute_scene_features(vectors, magnitudes) -> list[SceneStar]:
    """Per-star sorted two smallest angular distances within the scene.

    Raises TooFewStars for scenes with fewer than 3 stars.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    n = len(vectors)
    if n < 3:
        raise TooFewStars(f"scene has {n} stars; need at least 3")
    nn1, nn2 = catalog_mod.nearest_two_features(vectors)
    return [
        SceneStar(vectors[i], float(magnitudes[i]), float(nn1[i]), float(nn2[i]))
        for i in range(n)
    ]


@dataclass(frozen=True)
class PreparedScene:
    """Scene features, sub-catalogs, and per-star patch trees (built once)."""

    stars: list[SceneStar]
    vectors: np.ndarray  # (N, 3)
    subcatalogs: list[np.ndarray]
    trees: list[CircularRTree]
    catalog: OnboardCatalog
    config: SolverConfig

    def __len__(self) -> int:
        return len(self.stars)


def prepare_scene(
    vectors, magnitudes, catalog: OnboardCatalog, config: SolverConfig
) -> PreparedScene:
    """Extract features, sub-catalogs, and one circular R-tree per star.

    Each tree indexes the stereographic images of the patches of radius
    alpha_eps around the star's feasible catalog vectors.
    """
    stars = compute_scene_features(vectors, magnitudes)
    k = config.triplet_k if config.use_triplet_bound else 0
    subcats = catalog_mod.extract_sub_catalogs(
        stars, catalog, config.alpha_eps, config.eps_v, k=k
    )
    trees = []
    for idx in subcats:
        circles = []
        overflow = []
        for j in idx.tolist():
            patch = project_patch(
                SphericalPatch(catalog.vectors[j], config.alpha_eps)
            )
            if type(patch) is InteriorCircle:
                circles.append((patch, j))
            else:
                overflow.append((patch, j))
        trees.append(CircularRTree.build(circles, overflow))
    return PreparedScene(
        stars=stars,
        vectors=np.stack([s.vector for s in stars]),
        subcatalogs=subcats,
        trees=trees,
        catalog=catalog,
        config=config,
    )


def _indices(prep: PreparedScene, matchlist) -> list[int]:
    if matchlist is None:
        return list(range(len(prep)))
    return [int(i) for i in matchlist]


def evaluate_objective(
    rotation, prep: PreparedScene, matchlist=None
) -> tuple[int, list[tuple[int, int]]]:
    """Consensus count and matches at a single rotation.

    A scene star scores when its rotated image falls inside the
    alpha_eps patch of some sub-catalog star (a point query on the
    star's tree).  If several qualify, the angularly nearest one is
    reported as the match.  Returns (count, [(scene index, catalog
    index)]).
    """
    rot = rotation_matrix(rotation)
    rotated = prep.vectors @ rot.T
    cat_vectors = prep.catalog.vectors
    matches = []
    for i in _indices(prep, matchlist):
        idx = prep.subcatalogs[i]
        if len(idx) == 0:
            continue
        v = rotated[i]
        try:
            p = project_vector(v)
        except DegenerateProjection:
            # Rotated star sits at the projection point: fall back to the
            # direct angular test against the sub-catalog.
            dots = cat_vectors[idx] @ v
            best = int(np.argmax(dots))
            if math.acos(max(-1.0, min(1.0, float(dots[best])))) <= prep.config.alpha_eps:
                matches.append((i, int(idx[best])))
            continue
        candidates = prep.trees[i].query_point(p)
        if not candidates:
            continue
        if len(candidates) == 1:
            matches.append((i, candidates[0]))
        else:
            dots = cat_vectors[candidates] @ v
            matches.append((i, candidates[int(np.argmax(dots))]))
    return len(matches), matches


# Above this total query radius the existence test runs as a direct
# dot-product scan of the sub-catalog instead of a tree query: coarse
# cubes intersect most of the indexed plane, so descent stops pruning
# while one small matvec answers the same predicate.
BRUTE_RADIUS_CUTOFF = 0.5


def evaluate_upper_bound(
    cube: RotationCube, prep: PreparedScene
) -> tuple[int, np.ndarray]:
    """Bound the consensus over a cube and return the surviving matchlist.

    A star counts when the patch of radius cube.alpha around its
    center-rotated image intersects some sub-catalog patch, i.e. when
    the angular gap is at most alpha_eps + alpha (a patch query).  When
    alpha_eps + alpha >= pi the query patch covers the whole sphere and
    any non-empty sub-catalog matches.  A collapsed cube (alpha = 0)
    degenerates to the point query of the objective, making bound and
    objective coincide there.

    Cube centers outside the pi-ball are clamped to its surface; the
    clamped bound stays valid for every in-ball rotation of the cube.
    """
    alpha = cube.alpha
    alpha_eps = prep.config.alpha_eps
    u = clamp_to_pi_ball(cube.center)
    rot = rotation_matrix(u)
    rotated = prep.vectors @ rot.T
    cat_vectors = prep.catalog.vectors
    alpha_total = alpha_eps + alpha
    whole_sphere = alpha_total >= math.pi
    brute = alpha_total >= BRUTE_RADIUS_CUTOFF
    cos_total = math.cos(alpha_total) if brute and not whole_sphere else 0.0
    hits = []
    for i in _indices(prep, cube.matchlist):
        idx = prep.subcatalogs[i]
        if len(idx) == 0:
            continue
        if whole_sphere:
            hits.append(i)
            continue
        v = rotated[i]
        if brute:
            if float((cat_vectors[idx] @ v).max()) >= cos_total:
                hits.append(i)
            continue
        if alpha <= 0.0:
            try:
                p = project_vector(v)
            except DegenerateProjection:
                dots = cat_vectors[idx] @ v
                if math.acos(max(-1.0, min(1.0, float(dots.max())))) <= alpha_eps:
                    hits.append(i)
                continue
            if prep.trees[i].query_point_any(p):
                hits.append(i)
            continue
        patch = project_patch(SphericalPatch(v, alpha))
        if prep.trees[i].query_patch_any(patch):
            hits.append(i)
    matchlist = np.array(hits, dtype=np.int64)
    return len(hits), matchlist


def solve_wahba(body, inertial) -> np.ndarray:
    """Least-squares attitude from corresponding unit-vector pairs.

    Returns the axis-angle rotation R minimizing sum ||R b_i - c_i||^2,
    via the SVD orthogonal-Procrustes solution with the determinant
    correction that keeps R a proper rotation.

    Raises DegenerateGeometry for fewer than 2 pairs or collinear input.
    """
    body = np.asarray(body, dtype=np.float64)
    inertial = np.asarray(inertial, dtype=np.float64)
    if body.ndim != 2 or len(body) < 2:
        raise DegenerateGeometry("need at least 2 correspondence pairs")
    attitude_profile = body.T @ inertial  # sum of b_i c_i^T
    u_mat, sing, vt_mat = np.linalg.svd(attitude_profile)
    if sing[1] < 1e-12 * max(sing[0], 1e-300):
        raise DegenerateGeometry("correspondence vectors are collinear")
    v_mat = vt_mat.T
    d = np.sign(np.linalg.det(v_mat @ u_mat.T))
    rot = v_mat @ np.diag([1.0, 1.0, d]) @ u_mat.T
    return axis_angle_from_matrix(rot)


def solve(
    vectors,
    magnitudes,
    catalog: OnboardCatalog,
    config: SolverConfig,
    trace: dict | None = None,
) -> SolveResult:
    """Run the full search and report the identification outcome.

    Best-first loop: pop the cube with the largest bound (ties broken
    toward larger cubes, then FIFO); stop when the popped bound cannot
    beat the incumbent; otherwise evaluate the objective at the cube
    center, branch into 8 children, and enqueue those that intersect the
    pi-ball with a bound strictly above the incumbent.

    The result is NO_RESULT when fewer than ``min_matches`` stars or
    less than ``min_match_fraction`` of the scene matched, or when the
    iteration cap was hit (flagged in stats).  On identification the
    rotation is refined by the least-squares attitude over the matches.

    ``trace``, when given a dict, collects per-pop and per-branch records
    for diagnostics: trace["pops"] holds (cube, bound) and
    trace["branches"] holds (parent cube, parent bound, child cube,
    child bound) with the child's *filtered* matchlist installed.
    """
    t0 = time.perf_counter()
    stats = SolveStats()
    prep = prepare_scene(vectors, magnitudes, catalog, config)
    n = len(prep)

    if trace is not None:
        trace.setdefault("pops", [])
        trace.setdefault("branches", [])

    best_q = 0
    best_rotation = None
    best_matches: list[tuple[int, int]] = []

    root = root_cube(n)
    q_root, ml_root = evaluate_upper_bound(root, prep)
    stats.bound_evals += 1
    root = replace(root, matchlist=ml_root)

    # Max-heap by bound, then by cube size (coarser first), then FIFO.
    seq = 0
    heap = [(-q_root, -root.alpha, seq, q_root, root)]
    stats.max_queue_len = 1

    while heap:
        if stats.iterations >= config.max_iterations:
            stats.iteration_cap_hit = True
            break
        _, _, _, q_bound, cube = heapq.heappop(heap)
        stats.iterations += 1
        if trace is not None:
            trace["pops"].append((cube, q_bound))
        if q_bound <= best_q:
            break  # no remaining cube can beat the incumbent
        center = clamp_to_pi_ball(cube.center)
        q_center, matches = evaluate_objective(center, prep, cube.matchlist)
        stats.objective_evals += 1
        if q_center > best_q:
            best_q = q_center
            best_rotation = center
            best_matches = matches
        for child in branch(cube):
            if not cube_intersects_pi_ball(child):
                continue
            q_child, ml_child = evaluate_upper_bound(child, prep)
            stats.bound_evals += 1
            child = replace(child, matchlist=ml_child)
            if trace is not None:
                trace["branches"].append((cube, q_bound, child, q_child))
            if q_child > best_q:
                seq += 1
                heapq.heappush(heap, (-q_child, -child.alpha, seq, q_child, child))
        if len(heap) > stats.max_queue_len:
            stats.max_queue_len = len(heap)

    identified = (
        not stats.iteration_cap_hit
        and len(best_matches) >= config.min_matches
        and len(best_matches) >= config.min_match_fraction * n
    )
    rotation = best_rotation
    if identified:
        body = prep.vectors[[i for i, _ in best_matches]]
        inertial = catalog.vectors[[j for _, j in best_matches]]
        try:
            rotation = solve_wahba(body, inertial)
        except DegenerateGeometry:
            pass  # keep the center estimate; matches are still valid
    stats.wall_time = time.perf_counter() - t0
    return SolveResult(
        status=SolveStatus.IDENTIFIED if identified else SolveStatus.NO_RESULT,
        rotation=rotation,
        consensus=best_q,
        matches=[(i, int(catalog.ids[j])) for i, j in best_matches],
        stats=stats,
    )
