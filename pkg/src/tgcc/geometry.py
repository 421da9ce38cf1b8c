"""Model domains and their local boundary geometry.

Four domains are supported: the interval (0, 1), the unit disk, the unit
square (0, 1)^2 and the unit sphere S^2.  Everything here is a pure function
of its inputs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TANGENT_TOL = 1e-9
CORNER_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class DomainKind(str, enum.Enum):
    INTERVAL = "interval"
    DISK = "disk"
    SQUARE = "square"
    SPHERE = "sphere"

    @classmethod
    def parse(cls, value) -> "DomainKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown domain kind {value!r}") from None

    @property
    def has_boundary(self) -> bool:
        return self is not DomainKind.SPHERE

    @property
    def perimeter(self) -> float:
        """Length of the boundary parametrisation range."""
        if self is DomainKind.INTERVAL:
            return 2.0
        if self is DomainKind.DISK:
            return TWO_PI
        if self is DomainKind.SQUARE:
            return 4.0
        raise NoBoundaryError("the sphere has no boundary")


class NoBoundaryError(ValueError):
    """Raised when a boundary operation is requested on the sphere."""


class GlancingIncidence(ValueError):
    """Tangential incidence; the caller must switch to gliding handling."""


@dataclass(frozen=True)
class UnfoldState:
    """Straight line in the unfolded plane describing a square billiard ray."""

    x0: float
    y0: float
    c: float
    s: float
    t0: float = 0.0

    def __post_init__(self):
        if abs(self.c * self.c + self.s * self.s - 1.0) > 1e-9:
            raise ValueError("direction cosines must satisfy c^2 + s^2 = 1")


def reflect_specular(direction, normal, tol: float = TANGENT_TOL) -> np.ndarray:
    """Mirror ``direction`` across the tangent plane with unit ``normal``.

    Raises :class:`GlancingIncidence` when ``|d . n| <= tol``.
    """
    d = np.asarray(direction, dtype=float)
    n = np.asarray(normal, dtype=float)
    dn = float(d @ n)
    if abs(dn) <= tol:
        raise GlancingIncidence(f"tangential incidence (|d.n| = {abs(dn):.3e})")
    out = d - 2.0 * dn * n
    return out / np.linalg.norm(out)


def corner_reflect(direction) -> np.ndarray:
    # two successive edge reflections at a right-angle corner
    return -np.asarray(direction, dtype=float)


def fold(z):
    """Reduce an unfolded coordinate to [0, 1] (2-periodic, even)."""
    r = np.mod(z, 2.0)
    out = np.where(r <= 1.0, r, 2.0 - r)
    if np.ndim(out) == 0:
        return float(out)
    return out


def fold_slope(z):
    """Sign of d fold / dz at ``z`` (+1 on rising branches, -1 otherwise)."""
    r = np.mod(z, 2.0)
    return np.where(r < 1.0, 1.0, -1.0)


def wrap_angle(theta):
    """Reduce angles to [0, 2 pi)."""
    return np.mod(theta, TWO_PI)


def square_perimeter_point(s):
    """Vectorised anticlockwise perimeter map of the unit square from (0, 0)."""
    s = np.mod(np.asarray(s, dtype=float), 4.0)
    x = np.select([s < 1.0, s < 2.0, s < 3.0], [s, np.ones_like(s), 3.0 - s], np.zeros_like(s))
    y = np.select([s < 1.0, s < 2.0, s < 3.0], [np.zeros_like(s), s - 1.0, np.ones_like(s)], 4.0 - s)
    return x, y


def square_perimeter_coord(x, y, tol: float = 1e-9):
    """Inverse of :func:`square_perimeter_point` for points on the boundary.

    Points off the boundary map to NaN.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # the edge formulas agree at the corners (mod 4)
    return np.select(
        [np.abs(y) <= tol, np.abs(x - 1.0) <= tol, np.abs(y - 1.0) <= tol, np.abs(x) <= tol],
        [np.clip(x, 0.0, 1.0), 1.0 + np.clip(y, 0.0, 1.0), 3.0 - np.clip(x, 0.0, 1.0),
         np.mod(4.0 - np.clip(y, 0.0, 1.0), 4.0)],
        np.nan,
    )


def boundary_param(kind, s: float) -> tuple:
    """Arclength parametrisation of the boundary.

    interval: s mod 2 in [0, 1) -> 0, [1, 2) -> 1; disk: angle s;
    square: perimeter coordinate in [0, 4) anticlockwise from the origin.
    """
    kind = DomainKind.parse(kind)
    if kind is DomainKind.SPHERE:
        raise NoBoundaryError("the sphere has no boundary")
    if kind is DomainKind.INTERVAL:
        return (0.0,) if math.fmod(s, 2.0) % 2.0 < 1.0 else (1.0,)
    if kind is DomainKind.DISK:
        return (math.cos(s), math.sin(s))
    x, y = square_perimeter_point(s)
    return (float(x), float(y))


def boundary_param_inverse(kind, point) -> float:
    kind = DomainKind.parse(kind)
    if kind is DomainKind.SPHERE:
        raise NoBoundaryError("the sphere has no boundary")
    p = np.atleast_1d(np.asarray(point, dtype=float))
    if kind is DomainKind.INTERVAL:
        if abs(p[0]) <= 1e-12:
            return 0.0
        if abs(p[0] - 1.0) <= 1e-12:
            return 1.0
        raise ValueError(f"{p[0]} is not an endpoint of the interval")
    if kind is DomainKind.DISK:
        if abs(math.hypot(p[0], p[1]) - 1.0) > 1e-9:
            raise ValueError("point is not on the unit circle")
        return float(wrap_angle(math.atan2(p[1], p[0])))
    s = float(square_perimeter_coord(p[0], p[1]))
    if math.isnan(s):
        raise ValueError("point is not on the boundary of the square")
    return s


def outward_normal(kind, point) -> np.ndarray:
    """Outward unit normal at a boundary point (square corners raise)."""
    kind = DomainKind.parse(kind)
    p = np.atleast_1d(np.asarray(point, dtype=float))
    if kind is DomainKind.SPHERE:
        raise NoBoundaryError("the sphere has no boundary")
    if kind is DomainKind.INTERVAL:
        return np.array([-1.0 if p[0] < 0.5 else 1.0])
    if kind is DomainKind.DISK:
        return p / np.linalg.norm(p)
    on_x = min(abs(p[0]), abs(p[0] - 1.0)) <= CORNER_TOL
    on_y = min(abs(p[1]), abs(p[1] - 1.0)) <= CORNER_TOL
    if on_x and on_y:
        raise ValueError("the normal is undefined at a corner")
    if on_x:
        return np.array([-1.0 if p[0] < 0.5 else 1.0, 0.0])
    if on_y:
        return np.array([0.0, -1.0 if p[1] < 0.5 else 1.0])
    raise ValueError("point is not on the boundary of the square")


def is_square_corner(point, tol: float = CORNER_TOL) -> bool:
    x, y = float(point[0]), float(point[1])
    return min(abs(x), abs(x - 1.0)) <= tol and min(abs(y), abs(y - 1.0)) <= tol


def sphere_to_vec(theta, phi):
    """(longitude, latitude) in radians -> unit vectors, shape (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cp = np.cos(phi)
    return np.stack([cp * np.cos(theta), cp * np.sin(theta), np.sin(phi)], axis=-1)


def vec_to_sphere(vec):
    """Unit vectors (..., 3) -> (theta in [0, 2 pi), phi in [-pi/2, pi/2])."""
    v = np.asarray(vec, dtype=float)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    theta = wrap_angle(np.arctan2(v[..., 1], v[..., 0]))
    phi = np.arcsin(np.clip(v[..., 2], -1.0, 1.0))
    return theta, phi


def in_closed_domain(kind, point, tol: float = 1e-12) -> bool:
    kind = DomainKind.parse(kind)
    p = np.atleast_1d(np.asarray(point, dtype=float))
    if kind is DomainKind.INTERVAL:
        return -tol <= p[0] <= 1.0 + tol
    if kind is DomainKind.DISK:
        return float(p[0] ** 2 + p[1] ** 2) <= 1.0 + tol
    if kind is DomainKind.SQUARE:
        return bool(np.all(p[:2] >= -tol) and np.all(p[:2] <= 1.0 + tol))
    if p.size == 3:
        return abs(float(np.linalg.norm(p)) - 1.0) <= 1e-12
    return True
