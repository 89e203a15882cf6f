"""
Hypersurface geometry from the signature function.

The signature function of a cloud ``X`` is the kernel fit of the constant 1,
``u = K(., X) (alpha I + K(X, X))^{-1} 1``.  Near the cloud its level sets
approximate the sampled hypersurface.  Since ``u`` is largest on the enclosed
side, the implied normal

    nu = -grad u / |grad u|

points outward (towards decreasing ``u``), and the shape operator is

    S = (D^2u - D^2u n n^T) / |grad u|,    n = grad u / |grad u|.

``S nu = 0``.  Principal curvatures are the tangential eigenvalues of the
symmetric ``P D^2u P / |grad u|`` (``P = I - nu nu^T``); they share the trace
of ``S``, and the mean curvature is ``tr(S) / (d - 1)``.  With this convention
a unit sphere has curvatures -1 and the patch ``z = (a x^2 - b y^2) / 2``
has ``(a, -b)`` at the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import interpolant
from ._validation import check_points
from .exceptions import DegenerateGradient, NonDifferentiableKernel, ZeroReference
from .interpolant import Model

TAU_GRAD = 1e-10


@dataclass(frozen=True, eq=False)
class SurfaceFrame:
    """Implied geometry of the level set through one point."""

    point: np.ndarray
    normal: np.ndarray
    grad_norm: float
    weingarten: np.ndarray
    principal_curvatures: np.ndarray
    mean_curvature: float
    gauss_curvature: float


@dataclass(frozen=True)
class LevelStats:
    """Statistics of the signature function over the cloud."""

    mean_level: float
    min_level: float
    max_level: float
    residual_rms: float


def signature_model(spec, X, alpha: float = 0.0) -> Model:
    """Fit the kernel expansion of the all-ones data on ``X``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0] if X.ndim >= 1 else 0
    model, _ = interpolant.fit(spec, X, np.ones(n), alpha)
    return model


def _require_order(model: Model, order: int):
    if model.spec.max_order < order:
        raise NonDifferentiableKernel(
            f"{model.spec} is not {order} times differentiable; "
            "use a Gauss or regularized Laplace kernel for curvature")


def _degenerate_mask(model, P, gn, tau_grad):
    # a gradient below the summation roundoff of its own terms is numerically zero
    floor = interpolant.gradient_roundoff_bound(model, P)
    return ~(gn >= np.maximum(tau_grad, floor))


def ascent_directions(model: Model, P, grad, tau_grad=TAU_GRAD, raise_degenerate=True):
    """``grad u / |grad u|`` for precomputed gradients, with degeneracy checks.

    Returns
    -------
    n : ndarray, shape (k, d)
        Unit ascent directions; NaN rows at degenerate points.
    grad_norm : ndarray, shape (k,)
    degenerate : ndarray of bool, shape (k,)
    """
    gn = np.linalg.norm(grad, axis=1)
    bad = _degenerate_mask(model, P, gn, tau_grad)
    if raise_degenerate and np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateGradient(
            f"signature gradient {gn[i]:.4g} at point {i} is numerically zero "
            f"(tau_grad={tau_grad:g}); the normal is undefined there",
            grad_norm=float(gn[i]), index=i)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = grad / gn[:, None]
    n[bad] = np.nan
    return n, gn, bad


def normals(model: Model, points, tau_grad: float = TAU_GRAD, raise_degenerate=True):
    """Batched implied normals.

    Returns
    -------
    nu : ndarray, shape (n, d)
        Outward unit normals; NaN rows at degenerate points when
        ``raise_degenerate`` is false.
    grad_norm : ndarray, shape (n,)
    """
    P = check_points(points, model.dim)
    _, g, _ = interpolant.evaluate(model, P, 1)
    n, gn, _ = ascent_directions(model, P, g, tau_grad, raise_degenerate)
    return -n, gn


def implied_normal(model: Model, x, tau_grad: float = TAU_GRAD):
    """Unit normal at ``x`` and the gradient length ``|grad u(x)|``.

    Raises
    ------
    DegenerateGradient
        If ``|grad u(x)|`` is below ``tau_grad`` or below the roundoff of
        the kernel sum that produced it.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nu, gn = normals(model, x.reshape(1, -1), tau_grad)
    return nu[0], float(gn[0])


def shape_operators(hess, n, gn):
    """``(D^2u - D^2u n n^T) / |grad u|`` for stacks of Hessians."""
    Hn = np.einsum("kij,kj->ki", hess, n)
    return (hess - Hn[:, :, None] * n[:, None, :]) / gn[:, None, None]


def weingarten(model: Model, x, tau_grad: float = TAU_GRAD) -> np.ndarray:
    """The shape operator ``(D^2u - D^2u n n^T) / |grad u|`` at ``x``."""
    _require_order(model, 2)
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    _, g, h = interpolant.evaluate(model, x, 2)
    n, gn, _ = ascent_directions(model, x, g, tau_grad)
    return shape_operators(h, n, gn)[0]


def _frame(point, n, gn, hess):
    d = n.size
    W = shape_operators(hess[None], n[None], np.array([gn]))[0]
    P = np.eye(d) - np.outer(n, n)
    S = P @ hess @ P / gn
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    drop = int(np.argmax(np.abs(V.T @ n)))
    kappa = np.sort(np.delete(w, drop))
    return SurfaceFrame(
        point=np.array(point, dtype=float),
        normal=-n,
        grad_norm=float(gn),
        weingarten=W,
        principal_curvatures=kappa,
        mean_curvature=float(np.trace(W) / (d - 1)),
        gauss_curvature=float(np.prod(kappa)),
    )


def curvatures(model: Model, x, tau_grad: float = TAU_GRAD) -> SurfaceFrame:
    """Normal, shape operator and curvatures of the level set through ``x``.

    Raises
    ------
    DegenerateGradient
    NonDifferentiableKernel
    """
    frame = frames(model, np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1),
                   tau_grad, raise_degenerate=True)[0]
    return frame


def frames(model: Model, points, tau_grad: float = TAU_GRAD, raise_degenerate=False):
    """:func:`curvatures` at every row of ``points``.

    Degenerate points yield ``None`` unless ``raise_degenerate`` is set.
    """
    if model.dim < 2:
        raise ValueError("curvatures need points in at least two dimensions")
    _require_order(model, 2)
    P = check_points(points, model.dim)
    _, g, h = interpolant.evaluate(model, P, 2)
    n, gn, bad = ascent_directions(model, P, g, tau_grad, raise_degenerate)
    return [None if bad[i] else _frame(P[i], n[i], gn[i], h[i])
            for i in range(P.shape[0])]


def level_stats(model: Model, X) -> LevelStats:
    """Mean, range and RMS deviation from 1 of the signature function on ``X``."""
    u = interpolant.predict(model, X)
    return LevelStats(
        mean_level=float(np.mean(u)),
        min_level=float(np.min(u)),
        max_level=float(np.max(u)),
        residual_rms=float(np.sqrt(np.mean((u - 1.0) ** 2))),
    )


def orient_frame(frame: SurfaceFrame, reference) -> SurfaceFrame:
    """Flip ``frame`` so that its normal has nonnegative component along ``reference``.

    Flipping negates the shape operator, every principal curvature and the
    mean curvature.
    """
    reference = np.asarray(reference, dtype=float)
    if not np.any(reference):
        raise ZeroReference("orientation reference must be nonzero")
    if frame.normal @ reference >= 0:
        return frame
    kappa = np.sort(-frame.principal_curvatures)
    return replace(
        frame,
        normal=-frame.normal,
        weingarten=-frame.weingarten,
        principal_curvatures=kappa,
        mean_curvature=-frame.mean_curvature,
        gauss_curvature=float(np.prod(kappa)),
    )
