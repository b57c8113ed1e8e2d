"""Strictly convex implicit surfaces ``F(x) = 0`` and the supporting-plane projection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConvergenceError, NonConvexError, OffSurfaceError

#: on-surface tolerance for |F| (F is dimensionless for the shipped families)
ON_SURFACE_TOL = 1e-8


def adjugate(H):
    """Adjugate of 3x3 matrices stacked on the leading axes."""
    c0, c1, c2 = H[..., :, 0], H[..., :, 1], H[..., :, 2]
    return np.stack([np.cross(c1, c2), np.cross(c2, c0), np.cross(c0, c1)], axis=-2)


def sphere_direction(u: float, v: float) -> np.ndarray:
    """Unit vector with longitude ``u`` and latitude ``v``."""
    return np.array([math.cos(v) * math.cos(u), math.cos(v) * math.sin(u), math.sin(v)])


class ImplicitSurface:
    """A closed surface star-shaped about the origin, given by ``F(x) = 0``.

    Subclasses supply ``value``, ``grad`` and ``hess``, vectorized over
    leading axes of ``x``.
    """

    family = "implicit"

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def hess(self, x):
        raise NotImplementedError

    @property
    def scale(self) -> float:
        return 1.0

    def normal(self, x):
        g = self.grad(x)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def check_on_surface(self, x, tol: float = ON_SURFACE_TOL) -> None:
        f = np.abs(self.value(x))
        if np.any(f > tol):
            raise OffSurfaceError(f"point is off the surface (|F| = {np.max(f):.3g})")

    def gauss_curvature(self, x, check: bool = True):
        """``K = grad . adj(Hess) . grad / |grad|^4``."""
        x = np.asarray(x, dtype=float)
        if check:
            self.check_on_surface(x)
        return self._gauss_curvature(x)

    def _gauss_curvature(self, x):
        g = self.grad(x)
        adj = adjugate(self.hess(x))
        num = np.einsum("...i,...ij,...j->...", g, adj, g)
        return num / np.sum(g * g, axis=-1) ** 2

    def radial_point(self, direction):
        """Surface point on the ray from the origin through ``direction``."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d, axis=-1, keepdims=True)
        t = np.ones(d.shape[:-1])
        for _ in range(60):
            x = t[..., None] * d
            f = self.value(x)
            df = np.sum(self.grad(x) * d, axis=-1)
            step = f / df
            t = t - step
            if np.max(np.abs(step)) < 1e-15 * self.scale:
                break
        return t[..., None] * d

    def project(self, x, max_iter: int = 20, tol: float = 1e-12):
        """Newton projection along the gradient until ``|F| < tol``."""
        x = np.array(x, dtype=float)
        for _ in range(max_iter):
            f = self.value(x)
            if np.max(np.abs(f)) < tol:
                return x
            g = self.grad(x)
            x = x - (f / np.sum(g * g, axis=-1))[..., None] * g
        if np.max(np.abs(self.value(x))) < tol:
            return x
        raise ConvergenceError(f"projection did not converge in {max_iter} iterations")

    def sample_grid(self, n_lat: int = 33, n_lon: int = 64):
        """Surface points over a longitude/latitude grid (poles and axes included)."""
        lat = np.linspace(-math.pi / 2, math.pi / 2, n_lat)
        lon = np.linspace(0.0, 2 * math.pi, n_lon, endpoint=False)
        L, P = np.meshgrid(lon, lat)
        d = np.stack([np.cos(P) * np.cos(L), np.cos(P) * np.sin(L), np.sin(P)], axis=-1)
        return self.radial_point(d.reshape(-1, 3))

    @cached_property
    def curvature_bounds(self) -> tuple[float, float]:
        """``(K_min, K_max)`` over the sampling grid."""
        K = self._gauss_curvature(self.sample_grid())
        return float(np.min(K)), float(np.max(K))

    def check_convexity(self) -> None:
        K = self._gauss_curvature(self.sample_grid(32, 64))
        if np.min(K) <= 0.0:
            raise NonConvexError(f"Gauss curvature reaches {np.min(K):.3g} <= 0")


@dataclass(frozen=True)
class Ellipsoid(ImplicitSurface):
    """``x^2/a^2 + y^2/b^2 + z^2/c^2 = 1``."""

    a: float
    b: float
    c: float
    family = "ellipsoid"

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("semi-axes must be positive")
        self.check_convexity()

    @cached_property
    def _inv2(self):
        return 1.0 / np.array([self.a, self.b, self.c]) ** 2

    @property
    def scale(self) -> float:
        return max(self.a, self.b, self.c)

    def value(self, x):
        return np.sum(np.asarray(x) ** 2 * self._inv2, axis=-1) - 1.0

    def grad(self, x):
        return 2.0 * np.asarray(x) * self._inv2

    def hess(self, x):
        x = np.asarray(x)
        return np.broadcast_to(np.diag(2.0 * self._inv2), x.shape[:-1] + (3, 3))

    def _gauss_curvature(self, x):
        # diagonal Hessian: adj = diag(h1 h2, h0 h2, h0 h1)
        h = 2.0 * self._inv2
        adj = np.array([h[1] * h[2], h[0] * h[2], h[0] * h[1]])
        g = self.grad(x)
        return np.sum(adj * g * g, axis=-1) / np.sum(g * g, axis=-1) ** 2

    def hess_quadratic(self, x, v):
        """``v^T Hess v`` without forming the matrix."""
        return 2.0 * np.sum(np.asarray(v) ** 2 * self._inv2, axis=-1)

    def radial_point(self, direction):
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d, axis=-1, keepdims=True)
        t = 1.0 / np.sqrt(np.sum(d * d * self._inv2, axis=-1))
        return t[..., None] * d

    def to_json(self) -> dict:
        return {"family": "ellipsoid", "a": self.a, "b": self.b, "c": self.c}


class Sphere(Ellipsoid):
    family = "sphere"

    def __init__(self, r: float = 1.0):
        super().__init__(r, r, r)

    @property
    def r(self) -> float:
        return self.a

    def __repr__(self):
        return f"Sphere(r={self.a!r})"

    def to_json(self) -> dict:
        return {"family": "sphere", "r": self.a}


def gauss_curvature(S: ImplicitSurface, x):
    return S.gauss_curvature(x)


def project_to_surface(S: ImplicitSurface, x):
    return S.project(x)


@dataclass(frozen=True)
class TangentFrame:
    p: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray

    def direction(self, psi):
        """Unit tangent at angle ``psi`` from ``e1`` towards ``e2``."""
        psi = np.asarray(psi, dtype=float)
        return np.cos(psi)[..., None] * self.e1 + np.sin(psi)[..., None] * self.e2


def default_seed(normal) -> np.ndarray:
    """A seed direction well away from ``normal``."""
    for seed in (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])):
        if abs(float(np.dot(seed, normal))) < 0.9:
            return seed
    return np.array([0.0, 1.0, 0.0])


def tangent_frame(S: ImplicitSurface, p, seed=None) -> TangentFrame:
    """Orthonormal frame at ``p`` with ``e1`` along the tangential part of ``seed``."""
    p = np.asarray(p, dtype=float)
    S.check_on_surface(p)
    n = S.normal(p)
    if seed is None:
        seed = default_seed(n)
    seed = np.asarray(seed, dtype=float)
    e1 = seed - np.dot(seed, n) * n
    norm = np.linalg.norm(e1)
    if norm < 1e-8 * max(np.linalg.norm(seed), 1e-300):
        raise ValueError("frame seed is parallel to the surface normal")
    e1 = e1 / norm
    e2 = np.cross(n, e1)
    return TangentFrame(p, e1, e2, n)


def base_point(S: ImplicitSurface, u: float, v: float) -> np.ndarray:
    """Map a unit-sphere direction (longitude ``u``, latitude ``v``) onto ``S``."""
    return S.radial_point(sphere_direction(u, v))


def supporting_point(S: ImplicitSurface, normal, max_iter: int = 50):
    """Surface point whose outward normal equals ``normal`` (unit)."""
    m = np.asarray(normal, dtype=float)
    x = S.radial_point(m)
    g = S.grad(x)
    mu = float(np.dot(g, m))
    for _ in range(max_iter):
        g = S.grad(x)
        r = np.concatenate([g - mu * m, [S.value(x)]])
        if np.max(np.abs(r)) < 1e-14 * max(1.0, abs(mu)):
            break
        J = np.zeros((4, 4))
        J[:3, :3] = S.hess(x)
        J[:3, 3] = -m
        J[3, :3] = g
        delta = np.linalg.solve(J, -r)
        x = x + delta[:3]
        mu = mu + delta[3]
    else:
        raise ConvergenceError("supporting point did not converge")
    if mu <= 0:
        raise NonConvexError("supporting point has an inward normal")
    return x


@dataclass(frozen=True)
class PlaneProjection:
    """Central projection from ``p`` onto the supporting plane opposite ``p``."""

    frame: TangentFrame
    q_star: np.ndarray

    def __call__(self, x):
        return self.project(x)[0]

    def project(self, x, tangent=None):
        """Plane coordinates of ``x`` and optionally of the pushed-forward ``tangent``."""
        fr = self.frame
        x = np.asarray(x, dtype=float)
        d = x - fr.p
        nd = d @ fr.normal
        if np.any(np.linalg.norm(d, axis=-1) == 0.0):
            raise ValueError("projection is undefined at the base point")
        if np.any(nd >= 0.0):
            raise NonConvexError("point lies on or above the tangent plane at p")
        depth = float(np.dot(fr.normal, self.q_star - fr.p))
        t = depth / nd
        y = fr.p + t[..., None] * d - self.q_star
        uv = np.stack([y @ fr.e1, y @ fr.e2], axis=-1)
        if tangent is None:
            return uv, None
        w = np.asarray(tangent, dtype=float)
        dt = -t * (w @ fr.normal) / nd
        dy = t[..., None] * w + dt[..., None] * d
        return uv, np.stack([dy @ fr.e1, dy @ fr.e2], axis=-1)

    def lift(self, S: ImplicitSurface, uv):
        """Surface point projecting to plane coordinates ``uv`` (inverse of ``project``)."""
        fr = self.frame
        uv = np.asarray(uv, dtype=float)
        X = self.q_star + uv[..., 0:1] * fr.e1 + uv[..., 1:2] * fr.e2
        d = X - fr.p
        # F is convex along the ray and F(X) >= 0, so Newton from the plane end
        # decreases monotonically onto the far root
        lam = np.ones(uv.shape[:-1])
        for _ in range(100):
            x = fr.p + lam[..., None] * d
            step = S.value(x) / np.sum(S.grad(x) * d, axis=-1)
            lam = lam - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return S.project(fr.p + lam[..., None] * d)


def plane_projection(S: ImplicitSurface, frame: TangentFrame) -> PlaneProjection:
    return PlaneProjection(frame, supporting_point(S, -frame.normal))


def supporting_plane_projection(S: ImplicitSurface, frame: TangentFrame, x):
    """Plane coordinates (in the ``e1, e2`` basis) of the projection of ``x``."""
    return plane_projection(S, frame)(x)
