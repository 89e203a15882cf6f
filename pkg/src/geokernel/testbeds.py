"""
Analytic test manifolds, samplers and exact geometry.

Curvature signs follow the library convention: outward normals and shape
operator ``-dN``, so convex closed surfaces have negative principal
curvatures (a sphere of radius ``r`` has ``-1/r``).  The quadratic patch
``z = (a x^2 - b y^2) / 2`` is oriented by ``+e_z`` and has ``(a, -b)``
at the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._validation import check_cloud, check_points
from .exceptions import OffSurfacePoint

GOLDEN_CONJ = (math.sqrt(5.0) - 1.0) / 2.0
SURFACE_TOL = 1e-9


def rng(seed) -> np.random.Generator:
    """Seeded PCG64 stream; the same seed gives the same draws on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------- descriptors

@dataclass(frozen=True)
class Sphere:
    r: float = 1.0


@dataclass(frozen=True)
class Torus:
    R1: float = 2.0
    R2: float = 0.5


@dataclass(frozen=True)
class Ellipsoid:
    a: float = 2.0
    b: float = 0.5
    c: float = 1.0


@dataclass(frozen=True)
class QuadraticPatch:
    a: float = 1.0
    b: float = 2.0
    h: float = 0.5
    n: int = 16


@dataclass(frozen=True)
class Ellipse:
    a: float = 1.0
    b: float = 0.5


@dataclass(frozen=True)
class CubicCurve:
    pass


@dataclass(frozen=True)
class Triangle:
    vertices: tuple = ((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0))


@dataclass(frozen=True)
class Square:
    side: float = 2.0


@dataclass(frozen=True)
class SemiEllipse:
    a: float = 1.0
    b: float = 0.5


_SURFACES = {
    "sphere": (Sphere, {"r"}),
    "torus": (Torus, {"R1", "R2"}),
    "ellipsoid": (Ellipsoid, {"a", "b", "c"}),
    "quad": (QuadraticPatch, {"a", "b", "h", "n"}),
    "ellipse": (Ellipse, {"a", "b"}),
    "cubic-curve": (CubicCurve, set()),
    "triangle": (Triangle, set()),
    "square": (Square, {"side"}),
    "semi-ellipse": (SemiEllipse, {"a", "b"}),
}

CURVES = (Ellipse, CubicCurve, Triangle, Square, SemiEllipse)


def _validate(surface):
    for name, value in vars(surface).items():
        if name == "vertices":
            continue
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{type(surface).__name__} needs {name} > 0, got {value!r}")
    if isinstance(surface, Torus) and not surface.R1 > surface.R2:
        raise ValueError(
            f"a ring torus needs R1 > R2, got R1={surface.R1}, R2={surface.R2}")
    if isinstance(surface, QuadraticPatch) and surface.n < 2:
        raise ValueError("quadratic patch grid needs n >= 2")
    if isinstance(surface, Triangle):
        v = np.asarray(surface.vertices, dtype=float)
        if v.shape != (3, 2):
            raise ValueError("a triangle needs three planar vertices")
        e1, e2 = v[1] - v[0], v[2] - v[0]
        area = e1[0] * e2[1] - e1[1] * e2[0]
        if abs(area) < 1e-14:
            raise ValueError("triangle vertices are collinear")
    return surface


def parse_surface(text: str):
    """Parse a descriptor such as ``torus:R1=2,R2=0.5`` or ``cubic-curve``."""
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    if name not in _SURFACES:
        raise ValueError(f"unknown surface {name!r}; expected one of {sorted(_SURFACES)}")
    cls, allowed = _SURFACES[name]
    opts = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep or key not in allowed:
                raise ValueError(f"bad option {item!r} for {name}; allowed: {sorted(allowed)}")
            try:
                opts[key] = int(value) if key == "n" else float(value)
            except ValueError:
                raise ValueError(f"non-numeric option {item!r} in {text!r}") from None
    return _validate(cls(**opts))


def format_surface(surface) -> str:
    name = next(k for k, (cls, _) in _SURFACES.items() if isinstance(surface, cls))
    fields = {k: v for k, v in vars(surface).items() if k != "vertices"}
    if not fields:
        return name
    return name + ":" + ",".join(f"{k}={v!r}" for k, v in fields.items())


# ------------------------------------------------------------------ samplers

def fibonacci_sphere(m: int, r: float = 1.0) -> np.ndarray:
    """Fibonacci lattice on the sphere of radius ``r`` (deterministic)."""
    if m < 1:
        raise ValueError("m must be positive")
    k = np.arange(m)
    z = 1.0 - (2.0 * k + 1.0) / m
    phi = 2.0 * np.pi * k * GOLDEN_CONJ
    rho = np.sqrt(1.0 - z * z)
    X = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    X /= np.linalg.norm(X, axis=1)[:, None]
    return r * X


def torus_point(u, v, R1: float, R2: float) -> np.ndarray:
    """Torus parametrization; ``u`` runs around the axis, ``v`` around the tube."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    rho = R1 + R2 * np.cos(v)
    return np.stack([rho * np.cos(u), rho * np.sin(u), R2 * np.sin(v)], axis=-1)


def torus_residual(X, R1: float, R2: float) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    rho = np.hypot(X[..., 0], X[..., 1])
    return (rho - R1) ** 2 + X[..., 2] ** 2 - R2 ** 2


def fibonacci_torus(m: int, R1: float = 2.0, R2: float = 0.5) -> np.ndarray:
    """Fibonacci lattice ``(2 pi frac(k g), 2 pi (k + 1/2) / m)`` on the torus."""
    _validate(Torus(R1, R2))
    if m < 1:
        raise ValueError("m must be positive")
    k = np.arange(m)
    u = 2.0 * np.pi * np.mod(k * GOLDEN_CONJ, 1.0)
    v = 2.0 * np.pi * (k + 0.5) / m
    return torus_point(u, v, R1, R2)


def torus_rejection_sample(m: int, R1: float = 2.0, R2: float = 0.5, seed=0) -> np.ndarray:
    """``m`` points distributed by surface area on the torus.

    Uniform parameters ``(u, v)`` are accepted with probability
    ``(R1 + R2 cos v) / (R1 + R2)``.
    """
    _validate(Torus(R1, R2))
    if m < 1:
        raise ValueError("m must be positive")
    g = rng(seed)
    out_u, out_v, have = [], [], 0
    while have < m:
        batch = max(64, 2 * (m - have))
        u = g.uniform(0.0, 2.0 * np.pi, batch)
        v = g.uniform(0.0, 2.0 * np.pi, batch)
        keep = g.uniform(0.0, 1.0, batch) < (R1 + R2 * np.cos(v)) / (R1 + R2)
        out_u.append(u[keep])
        out_v.append(v[keep])
        have += int(keep.sum())
    u = np.concatenate(out_u)[:m]
    v = np.concatenate(out_v)[:m]
    return torus_point(u, v, R1, R2)


def sphere_uniform(m: int, d: int = 3, seed=0) -> np.ndarray:
    """Uniform points on the unit sphere in ``R^d`` (normalized Gaussians)."""
    G = rng(seed).standard_normal((m, d))
    return G / np.linalg.norm(G, axis=1)[:, None]


def ellipsoid_sample(m: int, a: float = 2.0, b: float = 0.5, c: float = 1.0, seed=0) -> np.ndarray:
    """Uniform sphere points scaled onto the ellipsoid with semi-axes ``a, b, c``."""
    _validate(Ellipsoid(a, b, c))
    if m < 1:
        raise ValueError("m must be positive")
    return sphere_uniform(m, 3, seed) * np.array([a, b, c])


def ellipsoid_residual(X, a, b, c) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return (X[..., 0] / a) ** 2 + (X[..., 1] / b) ** 2 + (X[..., 2] / c) ** 2 - 1.0


def perturb(X, max_dist: float, seed=0) -> np.ndarray:
    """Move each point by a uniform distance in ``[0, max_dist]`` in a uniform direction."""
    X = np.asarray(X, dtype=float)
    if max_dist < 0:
        raise ValueError("max_dist must be nonnegative")
    if max_dist == 0:
        return X.copy()
    g = rng(seed)
    m, d = X.shape
    theta = g.standard_normal((m, d))
    theta /= np.linalg.norm(theta, axis=1)[:, None]
    r = g.uniform(0.0, max_dist, m)
    return X + r[:, None] * theta


def fill_distance(X, reference) -> float:
    """``max_{y in reference} min_{x in X} |x - y|``."""
    X = check_cloud(X)
    reference = check_points(reference, X.shape[1], "reference")
    if reference.shape[0] == 0:
        raise ValueError("reference set must be nonempty")
    dist, _ = cKDTree(X).query(reference)
    return float(dist.max())


def quadratic_patch_grid(a: float = 1.0, b: float = 2.0, half_extent: float = 0.5,
                         n: int = 16) -> np.ndarray:
    """``n x n`` grid on ``[-h, h]^2`` lifted to ``z = (a x^2 - b y^2) / 2``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    t = np.linspace(-half_extent, half_extent, n)
    x, y = np.meshgrid(t, t, indexing="ij")
    x, y = x.ravel(), y.ravel()
    return np.column_stack([x, y, 0.5 * a * x * x - 0.5 * b * y * y])


def quadratic_patch_random(m: int, a: float = 1.0, b: float = 2.0,
                           half_extent: float = 0.5, seed=0) -> np.ndarray:
    """Independent uniform ``(x, y)`` on the patch square, lifted."""
    xy = rng(seed).uniform(-half_extent, half_extent, (m, 2))
    x, y = xy[:, 0], xy[:, 1]
    return np.column_stack([x, y, 0.5 * a * x * x - 0.5 * b * y * y])


# -------------------------------------------------------------------- curves

def _polygon_sample(V, m, remove_vertex=None, remove_radius=0.0):
    """Uniform arc-length samples on a closed polygon, every vertex included.

    Each edge gets a share of the ``m`` points proportional to its length
    (at least its start vertex).
    """
    V = np.asarray(V, dtype=float)
    nv = V.shape[0]
    if m < nv:
        raise ValueError(f"need at least {nv} points to include every vertex")
    E = np.roll(V, -1, axis=0) - V
    L = np.linalg.norm(E, axis=1)
    per = np.floor(m * L / L.sum()).astype(int)
    per = np.maximum(per, 1)
    while per.sum() < m:
        per[np.argmax(L / per)] += 1
    while per.sum() > m:
        per[np.argmax(np.where(per > 1, per / L, -np.inf))] -= 1
    pts, arc = [], []
    start = 0.0
    for i in range(nv):
        t = np.arange(per[i]) / per[i]
        pts.append(V[i] + t[:, None] * E[i])
        arc.append(start + t * L[i])
        start += L[i]
    P = np.vstack(pts)
    s = np.concatenate(arc)
    if remove_vertex is not None and remove_radius > 0:
        s0 = float(np.concatenate([[0.0], np.cumsum(L)])[remove_vertex])
        total = L.sum()
        gap = np.abs(s - s0)
        gap = np.minimum(gap, total - gap)
        P = P[gap > remove_radius]
    return P


def curve_sample(curve, m: int, mode: str = "equispaced-parameter", full: int = 64,
                 remove_corner: int | None = None, remove_radius: float = 0.0) -> np.ndarray:
    """Deterministic samples of a planar test curve.

    Parameters
    ----------
    curve : Ellipse, CubicCurve, SemiEllipse, Triangle or Square
    m : int
        Number of points (before any corner removal).
    mode : {"equispaced-parameter", "subset"}
        ``subset`` takes the first ``m`` of ``full`` equispaced parameter
        values, leaving the rest of the curve unsampled.
    remove_corner, remove_radius
        For polygons: drop samples within this arc length of the given vertex.
    """
    if m < 3:
        raise ValueError("curves need at least 3 sample points")
    if mode not in ("equispaced-parameter", "subset"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    _validate(curve)
    if isinstance(curve, (Triangle, Square)):
        if isinstance(curve, Square):
            h = curve.side / 2.0
            V = [(-h, -h), (h, -h), (h, h), (-h, h)]
        else:
            V = curve.vertices
        return _polygon_sample(V, m, remove_corner, remove_radius)
    if isinstance(curve, SemiEllipse):
        t = np.linspace(0.0, np.pi, m)
    elif mode == "subset":
        if m > full:
            raise ValueError("subset mode needs m <= full")
        t = 2.0 * np.pi * np.arange(m) / full
    else:
        t = 2.0 * np.pi * np.arange(m) / m
    if isinstance(curve, (Ellipse, SemiEllipse)):
        return np.column_stack([curve.a * np.cos(t), curve.b * np.sin(t)])
    if isinstance(curve, CubicCurve):
        s = np.sin(t)
        return np.column_stack([s, s ** 3 + 0.5 * np.cos(t)])
    raise TypeError(f"{type(curve).__name__} is not a curve")


def sample(surface, m: int, sampler: str = "default", seed=0) -> np.ndarray:
    """Dispatch to the natural sampler of ``surface``.

    ``sampler`` is ``fibonacci``, ``rejection``, ``random``, ``grid``,
    ``subset`` or ``default``.
    """
    if isinstance(surface, Sphere):
        if sampler in ("default", "fibonacci"):
            return fibonacci_sphere(m, surface.r)
        if sampler == "random":
            return surface.r * sphere_uniform(m, 3, seed)
    elif isinstance(surface, Torus):
        if sampler in ("default", "fibonacci"):
            return fibonacci_torus(m, surface.R1, surface.R2)
        if sampler in ("rejection", "random"):
            return torus_rejection_sample(m, surface.R1, surface.R2, seed)
    elif isinstance(surface, Ellipsoid):
        if sampler in ("default", "random"):
            return ellipsoid_sample(m, surface.a, surface.b, surface.c, seed)
        if sampler == "fibonacci":
            return fibonacci_sphere(m) * np.array([surface.a, surface.b, surface.c])
    elif isinstance(surface, QuadraticPatch):
        if sampler in ("default", "grid"):
            return quadratic_patch_grid(surface.a, surface.b, surface.h, surface.n)
        if sampler == "random":
            return quadratic_patch_random(m, surface.a, surface.b, surface.h, seed)
    elif isinstance(surface, CURVES):
        if sampler in ("default", "equispaced-parameter", "grid"):
            return curve_sample(surface, m)
        if sampler == "subset":
            return curve_sample(surface, m, mode="subset")
    raise ValueError(f"sampler {sampler!r} is not available for {format_surface(surface)}")


# -------------------------------------------------------------- ground truth

@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Exact geometry at one surface point (outward normal)."""

    point: np.ndarray
    normal: np.ndarray
    principal_curvatures: np.ndarray
    mean_curvature: float
    gauss_curvature: float


def _record(x, n, kappa):
    kappa = np.sort(np.asarray(kappa, dtype=float))
    return GroundTruth(np.asarray(x, dtype=float), n, kappa,
                       float(kappa.mean()), float(np.prod(kappa)))


def _check_on(res, tol=SURFACE_TOL):
    if abs(res) > tol:
        raise OffSurfacePoint(f"point is off the surface (implicit residual {res:.3g})")


def analytic_frame(surface, x) -> GroundTruth:
    """Exact normal and curvatures of ``surface`` at the point ``x``.

    Raises
    ------
    OffSurfacePoint
        If the implicit residual at ``x`` exceeds 1e-9.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(surface, Sphere):
        _check_on(x @ x - surface.r ** 2)
        return _record(x, x / np.linalg.norm(x), [-1.0 / surface.r] * 2)
    if isinstance(surface, Torus):
        R1, R2 = surface.R1, surface.R2
        _check_on(float(torus_residual(x, R1, R2)))
        rho = math.hypot(x[0], x[1])
        cos_v = (rho - R1) / R2
        axis = np.array([x[0] / rho, x[1] / rho, 0.0])
        n = (x - R1 * axis) / R2
        return _record(x, n, [-1.0 / R2, -cos_v / (R1 + R2 * cos_v)])
    if isinstance(surface, Ellipsoid):
        ax = np.array([surface.a, surface.b, surface.c])
        _check_on(float(ellipsoid_residual(x, *ax)))
        g = x / ax ** 2
        gn = np.linalg.norm(g)
        n = g / gn
        # shape operator -dN of the level set of sum (x_i / a_i)^2
        P = np.eye(3) - np.outer(n, n)
        S = -P @ np.diag(1.0 / ax ** 2) @ P / gn
        w, V = np.linalg.eigh(S)
        kappa = np.delete(w, int(np.argmax(np.abs(V.T @ n))))
        rec = _record(x, n, kappa)
        K = 1.0 / (np.prod(ax) ** 2 * (np.sum(x ** 2 / ax ** 4)) ** 2)
        return GroundTruth(rec.point, n, rec.principal_curvatures, rec.mean_curvature, float(K))
    if isinstance(surface, QuadraticPatch):
        a, b = surface.a, surface.b
        _check_on(x[2] - 0.5 * a * x[0] ** 2 + 0.5 * b * x[1] ** 2)
        # graph z = f(x, y) oriented by +e_z: S = Hess f / sqrt(1+|grad f|^2)
        # pulled back through the first fundamental form
        fx, fy = a * x[0], -b * x[1]
        w = math.sqrt(1.0 + fx * fx + fy * fy)
        n = np.array([-fx, -fy, 1.0]) / w
        I = np.array([[1 + fx * fx, fx * fy], [fx * fy, 1 + fy * fy]])
        II = np.diag([a, -b]) / w
        kappa = np.linalg.eigvals(np.linalg.solve(I, II)).real
        return _record(x, n, kappa)
    if isinstance(surface, (Ellipse, SemiEllipse)):
        a, b = surface.a, surface.b
        _check_on((x[0] / a) ** 2 + (x[1] / b) ** 2 - 1.0)
        g = np.array([x[0] / a ** 2, x[1] / b ** 2])
        n = g / np.linalg.norm(g)
        k = -1.0 / ((a * b) ** 2 * (x[0] ** 2 / a ** 4 + x[1] ** 2 / b ** 4) ** 1.5)
        return _record(x, n, [k])
    raise TypeError(f"no analytic frame for {type(surface).__name__}")


def torus_circle(u0: float, n: int = 32, R1: float = 2.0, R2: float = 0.5,
                 offset: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """``n`` equidistant points on the tube circle at angle ``u0``.

    Returns the points and their ``v`` angles ``offset + 2 pi j / n``.
    """
    v = offset + 2.0 * np.pi * np.arange(n) / n
    return torus_point(np.full(n, u0), v, R1, R2), v


def sphere_test_function(x):
    """``f = sin(pi (1 + 2 x3))`` on the unit sphere with its exact surface derivatives.

    Accepts one point or a batch.

    Returns
    -------
    f : float or ndarray
    grad : ndarray
        Tangential gradient ``2 pi cos(pi (1 + 2 x3)) (e3 - x3 x)``.
    lb : float or ndarray
        Laplace-Beltrami ``4 pi^2 (x3^2 - 1) sin(.) - 4 pi x3 cos(.)``.

    Raises
    ------
    OffSurfacePoint
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != 3:
        raise ValueError("the sphere test function lives in R^3")
    res = np.abs(np.einsum("ij,ij->i", X, X) - 1.0)
    if np.any(res > SURFACE_TOL):
        raise OffSurfacePoint(f"point is off the unit sphere (residual {res.max():.3g})")
    z = X[:, 2]
    arg = np.pi * (1.0 + 2.0 * z)
    f = np.sin(arg)
    c = np.cos(arg)
    e3 = np.array([0.0, 0.0, 1.0])
    grad = 2.0 * np.pi * c[:, None] * (e3 - z[:, None] * X)
    lb = 4.0 * np.pi ** 2 * (z * z - 1.0) * f - 4.0 * np.pi * z * c
    if single:
        return float(f[0]), grad[0], float(lb[0])
    return f, grad, lb
