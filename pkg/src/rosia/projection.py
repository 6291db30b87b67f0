"""Stereographic projection of star vectors and spherical patches.

Points on the unit sphere are projected from N = (0, 0, 1) onto the
z = 0 plane (called Omega here).  Spherical coordinates are ``(phi,
theta)`` float pairs with inclination ``phi`` measured from N and
azimuth ``theta`` chosen so that a unit vector decomposes as::

    (x, y, z) = (sin(phi) sin(theta), sin(phi) cos(theta), cos(phi)).

With that convention the projection of a point is
``cot(phi / 2) * (sin(theta), cos(theta))``, which equals the classical
``(x, y) / (1 - z)``.

The projection is conformal, so the circular boundary of a spherical
patch maps to a circle (or a line when the boundary passes through N).
A patch therefore projects to exactly one of: the interior of a circle,
the exterior of a circle (patch contains N), or a half-plane (patch
boundary touches N).  2D membership and intersection predicates on
those images decide the corresponding 3D queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Tolerance deciding the phi_l = 0 half-plane branch and rejecting
# projections of points at N itself.  Exact equality never occurs in
# floating point, so a cutoff is required.
POLE_EPSILON = 1e-9

_TWO_PI = 2.0 * math.pi


class DegenerateProjection(Exception):
    """The point coincides with the projection point N and has no image."""


def vec_to_spherical(v) -> tuple[float, float]:
    """Spherical coordinates (phi, theta) of a unit vector.

    theta lies in [0, 2pi); at the poles it is reported as 0.
    """
    x = float(v[0])
    y = float(v[1])
    z = float(v[2])
    if z > 1.0:
        z = 1.0
    elif z < -1.0:
        z = -1.0
    phi = math.acos(z)
    theta = math.atan2(x, y)
    if theta < 0.0:
        theta += _TWO_PI
    return phi, theta


def spherical_to_vec(phi: float, theta: float) -> np.ndarray:
    sp = math.sin(phi)
    return np.array([sp * math.sin(theta), sp * math.cos(theta), math.cos(phi)])


def _half_cot(angle: float) -> float:
    return math.cos(angle / 2.0) / math.sin(angle / 2.0)


def project_point(phi: float, theta: float) -> tuple[float, float]:
    """Stereographic image of the point at spherical coords (phi, theta).

    Raises DegenerateProjection when the point is within POLE_EPSILON of
    the projection point N (phi = 0).
    """
    if phi <= POLE_EPSILON:
        raise DegenerateProjection(f"phi={phi!r} coincides with the projection point")
    c = _half_cot(phi)
    return c * math.sin(theta), c * math.cos(theta)


def project_vector(v) -> tuple[float, float]:
    """Stereographic image of a 3D unit vector."""
    phi, theta = vec_to_spherical(v)
    return project_point(phi, theta)


@dataclass(frozen=True, slots=True)
class SphericalPatch:
    """All unit vectors within angular distance ``alpha`` of ``center``."""

    center: np.ndarray
    alpha: float


@dataclass(frozen=True, slots=True)
class InteriorCircle:
    """Image of a patch not containing N: the closed disk of radius r at c."""

    cx: float
    cy: float
    r: float


@dataclass(frozen=True, slots=True)
class ExteriorCircle:
    """Image of a patch strictly containing N: everything at distance >= r."""

    cx: float
    cy: float
    r: float


@dataclass(frozen=True, slots=True)
class HalfPlane:
    """Image of a patch whose boundary touches N.

    ``(nx, ny)`` is the unit direction of the projection of the patch
    point farthest from N, and ``d`` its (non-negative) distance from
    the origin.  The patch image is ``n . p >= d`` when ``side_geq`` and
    ``n . p < d`` otherwise; the side is fixed by whether the far
    inclination phi_h = phi + alpha is below pi.
    """

    nx: float
    ny: float
    d: float
    side_geq: bool


ProjectedPatch = InteriorCircle | ExteriorCircle | HalfPlane


def project_patch(patch: SphericalPatch) -> ProjectedPatch:
    """Project a spherical patch onto Omega.

    For a patch centered at inclination phi with angular radius alpha,
    writing phi_h = phi + alpha and phi_l = phi - alpha, the circle image
    has center ``(cot(phi_h/2) + cot(phi_l/2)) / 2`` along the center's
    azimuth direction and radius ``|cot(phi_h/2) - cot(phi_l/2)| / 2``.
    The cotangents are evaluated with their signs, which makes the same
    formulas valid when the patch wraps past the south pole.
    """
    if patch.alpha <= 0.0:
        raise ValueError("patch angular radius must be positive")
    phi, theta = vec_to_spherical(patch.center)
    phi_h = phi + patch.alpha
    phi_l = phi - patch.alpha
    st = math.sin(theta)
    ct = math.cos(theta)
    if abs(phi_l) <= POLE_EPSILON:
        c = _half_cot(phi_h)
        if phi_h < math.pi:
            return HalfPlane(st, ct, c, True)
        return HalfPlane(-st, -ct, -c, False)
    cot_h = _half_cot(phi_h)
    cot_l = _half_cot(phi_l)
    mid = (cot_h + cot_l) / 2.0
    r = abs(cot_h - cot_l) / 2.0
    if phi_l > 0.0:
        return InteriorCircle(mid * st, mid * ct, r)
    return ExteriorCircle(mid * st, mid * ct, r)


def point_in_patch(p: tuple[float, float], patch: ProjectedPatch) -> bool:
    """2D membership test of a projected point in a projected patch.

    Equivalent to the 3D test that the unprojected point lies within the
    spherical patch (up to floating point on the decision boundary).
    """
    px, py = p
    if type(patch) is InteriorCircle:
        dx = px - patch.cx
        dy = py - patch.cy
        return dx * dx + dy * dy <= patch.r * patch.r
    if type(patch) is ExteriorCircle:
        dx = px - patch.cx
        dy = py - patch.cy
        return dx * dx + dy * dy >= patch.r * patch.r
    s = patch.nx * px + patch.ny * py - patch.d
    return s >= 0.0 if patch.side_geq else s < 0.0


def _circle_meets_exterior(inner: InteriorCircle, outer: ExteriorCircle) -> bool:
    # A disk meets the complement of another disk unless it is contained
    # in it: ||c' - c|| + r' >= r.  Testing ||c' - c|| >= r' + r instead
    # would miss the partial-overlap band, so the containment-aware form
    # is used (it agrees with the 3D patch-intersection oracle).
    dx = inner.cx - outer.cx
    dy = inner.cy - outer.cy
    gap = outer.r - inner.r
    if gap <= 0.0:
        return True
    return dx * dx + dy * dy >= gap * gap


def _circle_meets_half_plane(circle: InteriorCircle, hp: HalfPlane) -> bool:
    s = hp.nx * circle.cx + hp.ny * circle.cy
    if hp.side_geq:
        # The disk reaches {n.p >= d} iff its farthest support point
        # does: n.c + r >= d.  (Margin subtracts from d; adding it would
        # test containment rather than intersection.)
        return s >= hp.d - circle.r
    return s < hp.d + circle.r


def patch_intersects_patch(a: ProjectedPatch, b: ProjectedPatch) -> bool:
    """2D intersection test between two projected patches.

    Combinations without an interior circle are unconditionally true:
    both patches then contain (or touch) the projection point, so they
    intersect at N.  Equivalent to the 3D test
    ``angle(center, center') <= alpha + alpha'``.
    """
    a_int = type(a) is InteriorCircle
    b_int = type(b) is InteriorCircle
    if a_int and b_int:
        dx = a.cx - b.cx
        dy = a.cy - b.cy
        rs = a.r + b.r
        return dx * dx + dy * dy <= rs * rs
    if a_int:
        inner, other = a, b
    elif b_int:
        inner, other = b, a
    else:
        return True
    if type(other) is ExteriorCircle:
        return _circle_meets_exterior(inner, other)
    return _circle_meets_half_plane(inner, other)
