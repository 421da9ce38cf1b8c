import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tgcc.geometry import (
    DomainKind,
    GlancingIncidence,
    NoBoundaryError,
    boundary_param,
    boundary_param_inverse,
    corner_reflect,
    fold,
    in_closed_domain,
    outward_normal,
    reflect_specular,
    sphere_to_vec,
    vec_to_sphere,
)

R2 = math.sqrt(2.0) / 2.0
finite = st.floats(-50.0, 50.0, allow_nan=False)


@pytest.mark.parametrize("d, n, expected", [
    ((1.0, 0.0), (1.0, 0.0), (-1.0, 0.0)),
    ((R2, R2), (0.0, 1.0), (R2, -R2)),
    ((0.6, 0.8), (1.0, 0.0), (-0.6, 0.8)),
])
def test_reflect_specular_examples(d, n, expected):
    np.testing.assert_allclose(reflect_specular(d, n), expected, atol=1e-15)


def test_reflect_specular_glancing():
    with pytest.raises(GlancingIncidence):
        reflect_specular((0.0, 1.0), (1.0, 0.0))


@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
def test_reflect_twice_is_identity(a, b):
    d = np.array([math.cos(a), math.sin(a)])
    n = np.array([math.cos(b), math.sin(b)])
    if abs(d @ n) <= 1e-6:
        return
    out = reflect_specular(reflect_specular(d, n), n)
    np.testing.assert_allclose(out, d, atol=1e-12)
    assert abs(np.linalg.norm(reflect_specular(d, n)) - 1.0) < 1e-12


@pytest.mark.parametrize("d", [(0.6, 0.8), (1.0, 0.0), (R2, R2)])
def test_corner_reflect_is_retroreflection(d):
    np.testing.assert_allclose(corner_reflect(d), -np.asarray(d))
    # composition of the two edge reflections
    both = reflect_specular(reflect_specular(d, (1.0, 0.0)), (0.0, 1.0)) if d[0] and d[1] else -np.asarray(d)
    np.testing.assert_allclose(corner_reflect(d), both, atol=1e-15)


@pytest.mark.parametrize("z, expected", [(2.3, 0.3), (1.4, 0.6), (-0.2, 0.2)])
def test_fold_examples(z, expected):
    assert fold(z) == pytest.approx(expected, abs=1e-12)


@given(finite)
def test_fold_periodic_and_even(z):
    assert fold(z) == pytest.approx(fold(z + 2.0), abs=1e-12)
    assert fold(z) == pytest.approx(fold(-z), abs=1e-12)
    assert 0.0 <= fold(z) <= 1.0


@pytest.mark.parametrize("kind, s, expected", [
    ("square", 0.5, (0.5, 0.0)),
    ("square", 1.5, (1.0, 0.5)),
    ("disk", math.pi, (-1.0, 0.0)),
])
def test_boundary_param_examples(kind, s, expected):
    np.testing.assert_allclose(boundary_param(kind, s), expected, atol=1e-15)


@given(st.floats(0.0, 4.0, exclude_max=True))
def test_square_boundary_param_roundtrip(s):
    p = boundary_param("square", s)
    q = boundary_param("square", boundary_param_inverse("square", p))
    np.testing.assert_allclose(p, q, atol=1e-12)


@given(st.floats(0.0, 2 * math.pi, exclude_max=True))
def test_disk_boundary_param_roundtrip(s):
    p = boundary_param("disk", s)
    q = boundary_param("disk", boundary_param_inverse("disk", p))
    np.testing.assert_allclose(p, q, atol=1e-12)


def test_sphere_has_no_boundary():
    with pytest.raises(NoBoundaryError):
        boundary_param("sphere", 0.0)
    with pytest.raises(NoBoundaryError):
        outward_normal("sphere", (1.0, 0.0, 0.0))
    assert not DomainKind.SPHERE.has_boundary


def test_outward_normals():
    np.testing.assert_allclose(outward_normal("square", (1.0, 0.3)), (1.0, 0.0))
    np.testing.assert_allclose(outward_normal("disk", (0.0, 1.0)), (0.0, 1.0), atol=1e-15)
    with pytest.raises(ValueError):
        outward_normal("square", (1.0, 1.0))


@given(st.floats(0.0, 2 * math.pi, exclude_max=True), st.floats(-1.5, 1.5))
def test_sphere_coordinates_roundtrip(theta, phi):
    v = sphere_to_vec(theta, phi)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    th, ph = vec_to_sphere(v)
    np.testing.assert_allclose(sphere_to_vec(th, ph), v, atol=1e-12)


def test_closed_domain_membership():
    assert in_closed_domain("disk", (1.0, 0.0))
    assert not in_closed_domain("disk", (1.1, 0.0))
    assert in_closed_domain("square", (0.0, 1.0))
    assert in_closed_domain("interval", (1.0,))


def test_domain_kind_parse():
    assert DomainKind.parse("Disk") is DomainKind.DISK
    with pytest.raises(ValueError):
        DomainKind.parse("torus")
