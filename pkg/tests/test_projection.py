import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rosia.geometry import angular_distance
from rosia.projection import (
    DegenerateProjection,
    ExteriorCircle,
    HalfPlane,
    InteriorCircle,
    SphericalPatch,
    patch_intersects_patch,
    point_in_patch,
    project_patch,
    project_point,
    project_vector,
    spherical_to_vec,
    vec_to_spherical,
)
from oracles import uniform_unit_vectors


def sample_patch(rng, allow_exterior=True) -> SphericalPatch:
    """Random patch with the projected image kept numerically moderate."""
    if allow_exterior and rng.random() < 0.25:
        # Contains the projection point: center near N, radius beyond it.
        phi = rng.uniform(0.0, 0.2)
        alpha = rng.uniform(phi + 0.06, phi + 0.8)
    else:
        phi = rng.uniform(0.3, math.pi - 0.3)
        alpha = rng.uniform(0.01, 0.25)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return SphericalPatch(spherical_to_vec(phi, theta), alpha)


def patch_boundary(patch: SphericalPatch, count: int) -> np.ndarray:
    """Points at angular distance exactly alpha from the patch center."""
    x = patch.center
    pivot = np.zeros(3)
    pivot[int(np.argmin(np.abs(x)))] = 1.0
    e1 = np.cross(x, pivot)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(x, e1)
    t = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
    ring = (
        math.cos(patch.alpha) * x
        + math.sin(patch.alpha) * (np.outer(np.cos(t), e1) + np.outer(np.sin(t), e2))
    )
    return ring / np.linalg.norm(ring, axis=1, keepdims=True)


# -- point projection --------------------------------------------------------


def test_project_point_equator():
    assert project_point(math.pi / 2.0, 0.0) == pytest.approx((0.0, 1.0))


def test_project_point_south_pole():
    px, py = project_point(math.pi, 0.0)
    assert abs(px) < 1e-15 and abs(py) < 1e-15


def test_project_point_rejects_north_pole():
    with pytest.raises(DegenerateProjection):
        project_point(0.0, 1.0)
    with pytest.raises(DegenerateProjection):
        project_point(5e-10, 1.0)


def test_project_point_line_plane_oracle(rng):
    # The image must be the intersection of the line through N and the
    # point with the z = 0 plane: (x, y) / (1 - z).
    for v in uniform_unit_vectors(rng, 2000):
        if v[2] > 0.999:
            continue
        px, py = project_vector(v)
        ex, ey = v[0] / (1.0 - v[2]), v[1] / (1.0 - v[2])
        assert abs(px - ex) < 1e-9 * max(1.0, abs(ex))
        assert abs(py - ey) < 1e-9 * max(1.0, abs(ey))


@given(
    st.floats(min_value=1e-6, max_value=math.pi - 1e-6),
    st.floats(min_value=0.0, max_value=2.0 * math.pi - 1e-9),
)
@settings(max_examples=300, deadline=None)
def test_spherical_round_trip(phi, theta):
    v = spherical_to_vec(phi, theta)
    phi2, theta2 = vec_to_spherical(v)
    assert phi2 == pytest.approx(phi, abs=1e-9)
    if math.sin(phi) > 1e-6:
        dt = (theta2 - theta) % (2.0 * math.pi)
        assert min(dt, 2.0 * math.pi - dt) < 1e-6


# -- patch projection --------------------------------------------------------


def test_south_pole_patch_is_centered_circle():
    alpha = 0.3
    patch = project_patch(SphericalPatch(np.array([0.0, 0.0, -1.0]), alpha))
    assert isinstance(patch, InteriorCircle)
    assert patch.cx == pytest.approx(0.0, abs=1e-12)
    assert patch.cy == pytest.approx(0.0, abs=1e-12)
    assert patch.r == pytest.approx(math.tan(alpha / 2.0))


def test_boundary_patch_is_half_plane():
    alpha = 0.4
    center = spherical_to_vec(alpha, 0.7)
    patch = project_patch(SphericalPatch(center, alpha))
    assert isinstance(patch, HalfPlane)
    assert patch.d == pytest.approx(1.0 / math.tan(alpha))
    assert patch.side_geq


def test_patch_containing_n_is_exterior():
    patch = project_patch(SphericalPatch(np.array([0.0, 0.0, 1.0]), 0.5))
    assert isinstance(patch, ExteriorCircle)
    assert patch.cx == pytest.approx(0.0, abs=1e-12)
    assert patch.r == pytest.approx(1.0 / math.tan(0.25))


def test_project_patch_rejects_zero_radius():
    with pytest.raises(ValueError):
        project_patch(SphericalPatch(np.array([0.0, 0.0, -1.0]), 0.0))


def test_projection_trichotomy(rng):
    kinds = set()
    for _ in range(2000):
        patch = project_patch(sample_patch(rng))
        kinds.add(type(patch).__name__)
        assert isinstance(patch, (InteriorCircle, ExteriorCircle, HalfPlane))
    assert {"InteriorCircle", "ExteriorCircle"} <= kinds


def test_conformality_boundary_on_circle(rng):
    # Sampled boundary points of the spherical patch must project onto
    # the computed circle.
    for _ in range(1000):
        spatch = sample_patch(rng)
        image = project_patch(spatch)
        assert isinstance(image, (InteriorCircle, ExteriorCircle))
        for p in patch_boundary(spatch, 16):
            px, py = project_vector(p)
            got = math.hypot(px - image.cx, py - image.cy)
            assert abs(got - image.r) < 1e-9


def test_half_plane_boundary_on_edge_line(rng):
    for _ in range(200):
        alpha = rng.uniform(0.2, 1.2)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        spatch = SphericalPatch(spherical_to_vec(alpha, theta), alpha)
        image = project_patch(spatch)
        assert isinstance(image, HalfPlane)
        for p in patch_boundary(spatch, 16):
            if p[2] > 1.0 - 1e-12:
                continue  # the boundary point at N has no image
            px, py = project_vector(p)
            assert abs(image.nx * px + image.ny * py - image.d) < 1e-7 * max(
                1.0, abs(px), abs(py)
            )


# -- predicates vs 3D oracles -------------------------------------------------


def test_point_in_patch_trivial_centers():
    inter = InteriorCircle(0.3, -0.2, 0.5)
    assert point_in_patch((0.3, -0.2), inter)
    exter = ExteriorCircle(0.3, -0.2, 0.5)
    assert not point_in_patch((0.3, -0.2), exter)


def test_point_in_patch_matches_3d_oracle(rng):
    checked = 0
    for _ in range(10_000):
        spatch = sample_patch(rng)
        y = uniform_unit_vectors(rng, 1)[0]
        if y[2] > 0.999:
            continue
        gap = angular_distance(y, spatch.center) - spatch.alpha
        if abs(gap) < 1e-9:
            continue  # decision boundary excluded
        image = project_patch(spatch)
        assert point_in_patch(project_vector(y), image) == (gap <= 0.0)
        checked += 1
    assert checked > 9000


def test_patch_intersects_identical_circles():
    c = InteriorCircle(1.0, 2.0, 0.25)
    assert patch_intersects_patch(c, c)


def test_patch_intersects_tangent_circles_closed():
    a = InteriorCircle(0.0, 0.0, 1.0)
    b = InteriorCircle(3.0, 0.0, 2.0)  # center gap exactly r + r'
    assert patch_intersects_patch(a, b)
    just_apart = InteriorCircle(3.0 + 1e-9, 0.0, 2.0)
    assert not patch_intersects_patch(a, just_apart)


def test_patch_intersects_non_interior_combos_true():
    e1 = ExteriorCircle(0.0, 0.0, 1.0)
    e2 = ExteriorCircle(10.0, 0.0, 2.0)
    h = HalfPlane(1.0, 0.0, 5.0, True)
    assert patch_intersects_patch(e1, e2)
    assert patch_intersects_patch(e1, h)
    assert patch_intersects_patch(h, h)


def test_interior_inside_exterior_excluded_disk_detected():
    # Containment case: the interior circle sits wholly inside the
    # excluded disk, so the patches do not intersect.
    inner = InteriorCircle(0.5, 0.0, 0.2)
    outer = ExteriorCircle(0.0, 0.0, 2.0)
    assert not patch_intersects_patch(inner, outer)
    # Partial overlap: reaches past the excluded boundary.
    poking = InteriorCircle(1.9, 0.0, 0.3)
    assert patch_intersects_patch(poking, outer)


def test_patch_intersects_matches_3d_oracle(rng):
    checked = 0
    for _ in range(10_000):
        a = sample_patch(rng)
        b = sample_patch(rng)
        gap = angular_distance(a.center, b.center) - (a.alpha + b.alpha)
        if abs(gap) < 1e-9:
            continue
        got = patch_intersects_patch(project_patch(a), project_patch(b))
        assert got == (gap <= 0.0)
        checked += 1
    assert checked > 9000


def test_half_plane_vs_interior_matches_3d_oracle(rng):
    # Patches whose boundary touches N project to half-planes; both
    # below-pi and above-pi far inclinations (the two edge sides) are
    # exercised against random interior circles.
    checked = 0
    for _ in range(4000):
        alpha = rng.uniform(0.2, 2.6)
        hp_patch = SphericalPatch(
            spherical_to_vec(alpha, rng.uniform(0.0, 2.0 * math.pi)), alpha
        )
        other = sample_patch(rng, allow_exterior=False)
        gap = angular_distance(hp_patch.center, other.center) - (
            hp_patch.alpha + other.alpha
        )
        if abs(gap) < 1e-9:
            continue
        image = project_patch(hp_patch)
        assert isinstance(image, HalfPlane)
        got = patch_intersects_patch(project_patch(other), image)
        assert got == (gap <= 0.0)
        checked += 1
    assert checked > 3500
