"""Synthetic star-scene generation with a pinhole star-tracker camera.

The camera looks along the body +z axis with a square field of view.
A scene is made by choosing an attitude (the body-to-inertial rotation
the solver should recover), selecting the catalog stars whose body
directions fall inside the frustum, then applying three noise sources:
Gaussian positional noise in the image tangent plane, Gaussian
magnitude noise, and uniformly placed false stars.  Stars whose
perturbed magnitude exceeds the detection limit or whose perturbed
direction leaves the frustum are dropped, which is how missing stars
arise.

All randomness comes from a counter-based Philox generator seeded from
NoiseSpec.seed, so identical specs reproduce scenes bit for bit on any
platform.

Scene files are JSON Lines, one scene per line::

    {"attitude_axis_angle": [r1, r2, r3],
     "stars": [{"v": [x, y, z], "mag": m, "truth_id": id_or_null}, ...]}

``truth_id`` is null for false stars.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .catalog import OnboardCatalog
from .geometry import random_rotation, rotation_matrix


@dataclass(frozen=True, slots=True)
class CameraModel:
    """Square-FOV pinhole detector."""

    fov_deg: float = 14.0
    resolution: int = 1024
    mag_limit: float = 6.0

    def __post_init__(self):
        if not 0.0 < self.fov_deg < 90.0:
            raise ValueError("fov_deg must be in (0, 90)")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")


@dataclass(frozen=True, slots=True)
class NoiseSpec:
    """Noise levels and the RNG seed for one scene."""

    pos_sigma_deg: float = 0.0
    mag_sigma: float = 0.0
    false_star_count: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.pos_sigma_deg < 0.0 or self.mag_sigma < 0.0:
            raise ValueError("noise standard deviations must be >= 0")
        if self.false_star_count < 0:
            raise ValueError("false_star_count must be >= 0")


@dataclass(frozen=True)
class SimulatedScene:
    """Scene stars plus ground truth for scoring.

    ``truth_ids[i]`` is the catalog id of star i, or -1 for a false
    star.  ``attitude`` is the axis-angle rotation taking body vectors
    to inertial vectors, i.e. what the solver should recover.
    """

    vectors: np.ndarray  # (N, 3) body-frame unit vectors
    mags: np.ndarray  # (N,)
    attitude: np.ndarray  # (3,)
    truth_ids: np.ndarray  # (N,) int64, -1 marks false stars

    def __len__(self) -> int:
        return len(self.mags)

    @property
    def false_flags(self) -> np.ndarray:
        return self.truth_ids < 0


def pixel_to_angle(pixels: float, cam: CameraModel) -> float:
    """Small-angle pixel-to-degrees conversion: fov_deg / resolution each."""
    return pixels * cam.fov_deg / cam.resolution


def in_fov(vectors: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Square-frustum membership of body vectors (per-axis half-angle)."""
    vectors = np.atleast_2d(vectors)
    t = math.tan(math.radians(cam.fov_deg) / 2.0)
    z = vectors[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (z > 0.0) & (np.abs(vectors[:, 0] / z) <= t) & (np.abs(vectors[:, 1] / z) <= t)
    return ok


def _tangent_basis(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Deterministic orthonormal pair perpendicular to v.
    pivot = np.zeros(3)
    pivot[int(np.argmin(np.abs(v)))] = 1.0
    e1 = np.cross(v, pivot)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    return e1, e2


def generate_scene(
    cat: OnboardCatalog,
    cam: CameraModel,
    noise: NoiseSpec,
    attitude=None,
) -> SimulatedScene:
    """Simulate one scene; random attitude when none is given.

    Scenes with fewer than 3 stars are returned as-is; rejecting them is
    the solver's job.
    """
    rng = np.random.Generator(np.random.Philox(noise.seed))
    if attitude is None:
        attitude = random_rotation(rng)
    else:
        attitude = np.asarray(attitude, dtype=np.float64)
    rot = rotation_matrix(attitude)

    # Body direction of every catalog star; keep the in-FOV ones.
    body = cat.vectors @ rot  # rot.T.T: rows are R^T c_j
    visible = in_fov(body, cam) & (cat.mags <= cam.mag_limit)
    body = body[visible]
    mags = cat.mags[visible].copy()
    ids = cat.ids[visible].astype(np.int64)

    n = len(body)
    if n and noise.pos_sigma_deg > 0.0:
        sigma = math.radians(noise.pos_sigma_deg)
        offsets = rng.normal(0.0, sigma, size=(n, 2))
        perturbed = np.empty_like(body)
        for i in range(n):
            e1, e2 = _tangent_basis(body[i])
            p = body[i] + offsets[i, 0] * e1 + offsets[i, 1] * e2
            perturbed[i] = p / np.linalg.norm(p)
        body = perturbed
    if n and noise.mag_sigma > 0.0:
        mags = mags + rng.normal(0.0, noise.mag_sigma, size=n)

    # Missing stars: noise pushed them out of the detector's reach.
    keep = (mags <= cam.mag_limit) & in_fov(body, cam)
    body, mags, ids = body[keep], mags[keep], ids[keep]

    if noise.false_star_count > 0:
        t = math.tan(math.radians(cam.fov_deg) / 2.0)
        tangents = rng.uniform(-t, t, size=(noise.false_star_count, 2))
        dirs = np.concatenate(
            [tangents, np.ones((noise.false_star_count, 1))], axis=1
        )
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        mag_lo = float(cat.mags[0]) if len(cat) else 0.0
        false_mags = rng.uniform(mag_lo, cam.mag_limit, size=noise.false_star_count)
        body = np.concatenate([body, dirs]) if len(body) else dirs
        mags = np.concatenate([mags, false_mags])
        ids = np.concatenate([ids, np.full(noise.false_star_count, -1, dtype=np.int64)])

    if len(body):
        order = rng.permutation(len(body))
        body, mags, ids = body[order], mags[order], ids[order]
    else:
        body = np.zeros((0, 3))

    return SimulatedScene(vectors=body, mags=mags, attitude=attitude, truth_ids=ids)


def scene_to_json(scene: SimulatedScene) -> str:
    stars = [
        {
            "v": [float(x) for x in scene.vectors[i]],
            "mag": float(scene.mags[i]),
            "truth_id": None if scene.truth_ids[i] < 0 else int(scene.truth_ids[i]),
        }
        for i in range(len(scene))
    ]
    return json.dumps(
        {
            "attitude_axis_angle": [float(x) for x in scene.attitude],
            "stars": stars,
        }
    )


def scene_from_json(line: str) -> SimulatedScene:
    obj = json.loads(line)
    stars = obj["stars"]
    vectors = np.array([s["v"] for s in stars], dtype=np.float64).reshape(-1, 3)
    mags = np.array([s["mag"] for s in stars], dtype=np.float64)
    ids = np.array(
        [-1 if s["truth_id"] is None else int(s["truth_id"]) for s in stars],
        dtype=np.int64,
    )
    return SimulatedScene(
        vectors=vectors,
        mags=mags,
        attitude=np.array(obj["attitude_axis_angle"], dtype=np.float64),
        truth_ids=ids,
    )


def write_scenes(path, scenes) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in scenes:
            fh.write(scene_to_json(scene))
            fh.write("\n")


def read_scenes(path) -> list[SimulatedScene]:
    with open(path, encoding="utf-8") as fh:
        return [scene_from_json(line) for line in fh if line.strip()]
