"""Independent brute-force oracles shared by the test modules.

Everything here recomputes results from first principles with plain
numpy (no projection, no trees, no solver internals) so the production
paths can be checked against them.
"""

from __future__ import annotations

import math

import numpy as np

from rosia.catalog import OnboardCatalog, RawStar, build_onboard_catalog
from rosia.geometry import clamp_to_pi_ball, random_rotation, rotation_matrix
from rosia.solver import SolverConfig


def angles_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise angular distances, shape (len(a), len(b))."""
    return np.arccos(np.clip(np.atleast_2d(a) @ np.atleast_2d(b).T, -1.0, 1.0))


def brute_features(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs nearest-two angular distances (sorted per star)."""
    ang = angles_between(vectors, vectors)
    np.fill_diagonal(ang, np.inf)
    srt = np.sort(ang, axis=1)
    return srt[:, 0], srt[:, 1]


def brute_subcatalogs(
    scene_vectors: np.ndarray,
    scene_mags: np.ndarray,
    cat: OnboardCatalog,
    alpha_eps: float,
    eps_v: float,
    k: int = 2,
) -> list[np.ndarray]:
    """Feasible-set filter recomputed over the full catalog, no search."""
    nn1, nn2 = brute_features(scene_vectors)
    out = []
    for i in range(len(scene_vectors)):
        ok = np.abs(cat.mags - scene_mags[i]) <= eps_v
        if k >= 1:
            ok &= np.abs(cat.nn1 - nn1[i]) <= 2.0 * alpha_eps
        if k >= 2:
            ok &= np.abs(cat.nn2 - nn2[i]) <= 2.0 * alpha_eps
        out.append(np.flatnonzero(ok))
    return out


def brute_objective(
    rotation,
    scene_vectors: np.ndarray,
    cat: OnboardCatalog,
    subcats: list[np.ndarray],
    alpha_eps: float,
) -> tuple[int, list[tuple[int, int]]]:
    """O(N * M_sub) consensus evaluation with nearest-match extraction."""
    rot = rotation_matrix(rotation)
    rotated = scene_vectors @ rot.T
    matches = []
    for i in range(len(scene_vectors)):
        idx = subcats[i]
        if len(idx) == 0:
            continue
        ang = np.arccos(np.clip(cat.vectors[idx] @ rotated[i], -1.0, 1.0))
        best = int(np.argmin(ang))
        if ang[best] <= alpha_eps:
            matches.append((i, int(idx[best])))
    return len(matches), matches


def brute_upper_bound(
    cube,
    scene_vectors: np.ndarray,
    cat: OnboardCatalog,
    subcats: list[np.ndarray],
    alpha_eps: float,
    matchlist=None,
) -> tuple[int, list[int]]:
    """O(N * M_sub) bound evaluation at the (clamped) cube center."""
    u = clamp_to_pi_ball(cube.center)
    rot = rotation_matrix(u)
    rotated = scene_vectors @ rot.T
    limit = min(alpha_eps + cube.alpha, math.pi)
    indices = range(len(scene_vectors)) if matchlist is None else [int(i) for i in matchlist]
    hits = []
    for i in indices:
        idx = subcats[i]
        if len(idx) == 0:
            continue
        ang = np.arccos(np.clip(cat.vectors[idx] @ rotated[i], -1.0, 1.0))
        if float(ang.min()) <= limit:
            hits.append(i)
    return len(hits), hits


def boundary_margin_objective(
    rotation, scene_vectors, cat, subcats, alpha_eps
) -> float:
    """Smallest |angular gap - threshold| over all (star, candidate) pairs."""
    rot = rotation_matrix(clamp_to_pi_ball(rotation))
    rotated = scene_vectors @ rot.T
    margin = np.inf
    for i in range(len(scene_vectors)):
        idx = subcats[i]
        if len(idx) == 0:
            continue
        ang = np.arccos(np.clip(cat.vectors[idx] @ rotated[i], -1.0, 1.0))
        margin = min(margin, float(np.min(np.abs(ang - alpha_eps))))
    return margin


def boundary_margin_bound(cube, scene_vectors, cat, subcats, alpha_eps) -> float:
    limit = min(alpha_eps + cube.alpha, math.pi)
    rot = rotation_matrix(clamp_to_pi_ball(cube.center))
    rotated = scene_vectors @ rot.T
    margin = np.inf
    for i in range(len(scene_vectors)):
        idx = subcats[i]
        if len(idx) == 0:
            continue
        ang = np.arccos(np.clip(cat.vectors[idx] @ rotated[i], -1.0, 1.0))
        margin = min(margin, float(np.min(np.abs(ang - limit))))
    return margin


def sample_rotations_in_cube(
    cube, rng: np.random.Generator, count: int, max_attempts: int = 4096
) -> np.ndarray:
    """Uniform samples from cube intersect pi-ball (rejection sampling).

    Rotations outside the pi-ball have in-ball representatives covered
    by other cubes, so bound validity is only claimed over the
    intersection.  May return fewer than ``count`` samples for slivers.
    """
    h = cube.half_side
    lo = cube.center - h
    hi = cube.center + h
    out = []
    attempts = 0
    while len(out) < count and attempts < max_attempts:
        batch = rng.uniform(lo, hi, size=(count, 3))
        norms = np.linalg.norm(batch, axis=1)
        for row in batch[norms <= math.pi]:
            out.append(row)
            if len(out) >= count:
                break
        attempts += count
    return np.array(out) if out else np.zeros((0, 3))


def uniform_unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def make_mini_instance(
    rng: np.random.Generator,
    n_catalog: int = 24,
    n_scene: int = 6,
    alpha_eps_deg: float = 2.0,
    noise_scale: float = 0.0,
):
    """Small random identification instance with known ground truth.

    Catalog stars are spread with a minimum separation of several times
    alpha_eps so the triplet windows stay selective; the scene is a
    rotated subset with optional angular noise well below alpha_eps.

    Returns (catalog, scene_vectors, scene_mags, true_rotation,
    true_ids, config); true_ids are catalog star ids per scene star.
    """
    min_sep = math.radians(12.0)
    vectors = []
    while len(vectors) < n_catalog:
        v = uniform_unit_vectors(rng, 1)[0]
        if all(
            math.acos(max(-1.0, min(1.0, float(v @ w)))) > min_sep for w in vectors
        ):
            vectors.append(v)
    vectors = np.array(vectors)
    mags = rng.uniform(1.0, 6.0, size=n_catalog)
    raw = []
    for j in range(n_catalog):
        ra = math.degrees(math.atan2(vectors[j, 1], vectors[j, 0])) % 360.0
        dec = math.degrees(math.asin(float(np.clip(vectors[j, 2], -1, 1))))
        raw.append(RawStar(j + 1, ra, dec, float(mags[j])))
    cat = build_onboard_catalog(raw, mag_limit=10.0, min_sep_rad=0.0)

    chosen = rng.choice(n_catalog, size=n_scene, replace=False)
    rotation = random_rotation(rng)
    # Scene vectors: body frame = R^T applied to the inertial vectors.
    rot = rotation_matrix(rotation)
    scene_vectors = vectors[chosen] @ rot
    if noise_scale > 0.0:
        sigma = math.radians(alpha_eps_deg) * noise_scale
        scene_vectors = scene_vectors + rng.normal(0.0, sigma, scene_vectors.shape)
        scene_vectors /= np.linalg.norm(scene_vectors, axis=1, keepdims=True)
    scene_mags = mags[chosen]
    config = SolverConfig(alpha_eps=math.radians(alpha_eps_deg), eps_v=2.0)
    true_ids = chosen + 1  # raw ids are 1-based positions in the input
    return cat, scene_vectors, scene_mags, rotation, true_ids, config
