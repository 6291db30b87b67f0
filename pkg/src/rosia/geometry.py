"""Rotation algebra and the axis-angle search-space primitives.

Conventions used throughout the package:

* 3D unit vectors are plain ``float64`` ndarrays of shape ``(3,)``.
* Rotations are axis-angle vectors, also shape ``(3,)``: the direction is
  the rotation axis and the norm is the rotation angle in radians.  Every
  rotation has a representative inside the closed ball of radius pi; the
  search tiles the enclosing ``[-pi, pi]^3`` box with axis-aligned cubes.
* A search cube is stored as its center plus the center-to-vertex
  distance ``alpha`` (half the cube diagonal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Rotations with an angle below this are applied as identity.
TINY_ANGLE = 1e-14

# Center-to-vertex distance of the root cube enclosing the pi-ball.
ROOT_ALPHA = math.sqrt(3.0) * math.pi

# Sign pattern of the 8 child-cube centers relative to the parent center.
_OCTANT_SIGNS = np.array(
    [
        [-1.0, -1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, 1.0, 1.0],
    ]
)


def unit_vector(v) -> np.ndarray:
    """Return ``v`` normalized to unit length as a float64 array.

    Raises ValueError for a zero (or near-zero) input vector.
    """
    v = np.asarray(v, dtype=np.float64)
    n = math.sqrt(float(v @ v))
    if n < TINY_ANGLE:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def angular_distance(a, b) -> float:
    """Angle between two unit vectors, in [0, pi].

    The dot product is clamped to [-1, 1] so accumulated floating-point
    error cannot push acos out of its domain.
    """
    d = float(np.dot(a, b))
    if d > 1.0:
        d = 1.0
    elif d < -1.0:
        d = -1.0
    return math.acos(d)


def rotate(rotation, v) -> np.ndarray:
    """Apply an axis-angle rotation to one vector (or an (N, 3) stack).

    Uses the Rodrigues formula; a zero rotation returns the input
    unchanged.  Norms and pairwise angles are preserved.
    """
    rotation = np.asarray(rotation, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    theta = math.sqrt(float(rotation @ rotation))
    if theta < TINY_ANGLE:
        return v.copy()
    k = rotation / theta
    c = math.cos(theta)
    s = math.sin(theta)
    kv = v @ k
    cross = np.cross(np.broadcast_to(k, v.shape), v)
    return v * c + cross * s + np.multiply.outer(kv, k) * (1.0 - c)


def rotation_matrix(rotation) -> np.ndarray:
    """3x3 rotation matrix for an axis-angle vector (Rodrigues form)."""
    rotation = np.asarray(rotation, dtype=np.float64)
    theta = math.sqrt(float(rotation @ rotation))
    if theta < TINY_ANGLE:
        return np.eye(3)
    kx, ky, kz = rotation / theta
    c = math.cos(theta)
    s = math.sin(theta)
    kmat = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + s * kmat + (1.0 - c) * (kmat @ kmat)


def axis_angle_from_matrix(mat) -> np.ndarray:
    """Axis-angle vector (norm <= pi) of a rotation matrix."""
    mat = np.asarray(mat, dtype=np.float64)
    trace = float(mat[0, 0] + mat[1, 1] + mat[2, 2])
    cos_theta = max(-1.0, min(1.0, (trace - 1.0) / 2.0))
    theta = math.acos(cos_theta)
    if theta < TINY_ANGLE:
        return np.zeros(3)
    if math.pi - theta > 1e-6:
        axis = np.array(
            [
                mat[2, 1] - mat[1, 2],
                mat[0, 2] - mat[2, 0],
                mat[1, 0] - mat[0, 1],
            ]
        ) / (2.0 * math.sin(theta))
        return axis / math.sqrt(float(axis @ axis)) * theta
    # Near theta = pi the skew part vanishes; recover the axis from the
    # dominant column of (R + I), whose columns are all parallel to it.
    m = mat + np.eye(3)
    col = int(np.argmax(np.einsum("ij,ij->j", m, m)))
    axis = m[:, col]
    axis = axis / math.sqrt(float(axis @ axis))
    return axis * theta


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation as an axis-angle vector inside the pi-ball."""
    q = rng.normal(size=4)
    q /= math.sqrt(float(q @ q))
    if q[0] < 0.0:
        q = -q
    vnorm = math.sqrt(float(q[1:] @ q[1:]))
    theta = 2.0 * math.atan2(vnorm, q[0])
    if vnorm < TINY_ANGLE:
        return np.zeros(3)
    return q[1:] / vnorm * theta


def clamp_to_pi_ball(rotation) -> np.ndarray:
    """Project an axis-angle vector onto the closed ball of radius pi.

    Vectors already inside are returned unchanged.  Because projection
    onto a convex set is 1-Lipschitz, bounds evaluated at a clamped cube
    center remain valid for every in-ball rotation of the cube.
    """
    rotation = np.asarray(rotation, dtype=np.float64)
    n = math.sqrt(float(rotation @ rotation))
    if n <= math.pi:
        return rotation
    return rotation * (math.pi / n)


@dataclass(frozen=True, slots=True)
class RotationCube:
    """Axis-aligned cube of axis-angle space.

    ``alpha`` is the center-to-vertex distance, i.e. sqrt(3)/2 times the
    side length.  ``matchlist`` carries the indices of the scene stars
    still matchable inside the cube; the solver fills it in.

    As a point set the cube is half-open, ``[lo, hi)`` per axis, so that
    branching partitions the parent exactly.
    """

    center: np.ndarray
    alpha: float
    matchlist: np.ndarray | None = None

    @property
    def half_side(self) -> float:
        return self.alpha / math.sqrt(3.0)


def root_cube(n_scene_stars: int | None = None) -> RotationCube:
    """The side-2pi cube enclosing the pi-ball, with a full matchlist."""
    matchlist = None if n_scene_stars is None else np.arange(n_scene_stars)
    return RotationCube(np.zeros(3), ROOT_ALPHA, matchlist)


def branch(cube: RotationCube) -> list[RotationCube]:
    """Split a cube into its 8 half-side children.

    Children tile the parent exactly (half-open boxes), their centers sit
    at parent_center +- side/4 per axis, and their alpha is half the
    parent's.  Matchlists are inherited from the parent and filtered
    later by the solver.
    """
    if cube.alpha <= 0.0:
        raise ValueError("cannot branch a zero-size cube")
    offset = cube.half_side / 2.0
    centers = cube.center + _OCTANT_SIGNS * offset
    child_alpha = cube.alpha / 2.0
    return [RotationCube(c, child_alpha, cube.matchlist) for c in centers]


def cube_contains(cube: RotationCube, point) -> bool:
    """Half-open membership test: lo <= p < hi on every axis."""
    h = cube.half_side
    p = np.asarray(point, dtype=np.float64)
    lo = cube.center - h
    hi = cube.center + h
    return bool(np.all(p >= lo) and np.all(p < hi))


def cube_intersects_pi_ball(cube: RotationCube) -> bool:
    """True iff the closest point of the cube to the origin is within pi.

    The closest point is found by clamping the origin into the box on
    each axis independently.
    """
    h = cube.half_side
    d2 = 0.0
    for c in cube.center:
        excess = abs(float(c)) - h
        if excess > 0.0:
            d2 += excess * excess
    return d2 <= math.pi * math.pi
