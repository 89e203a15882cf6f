"""
Surface gradient and Laplace-Beltrami operator of functions sampled on a cloud.

A function known on the cloud is extended by its kernel fit ``u_f``; the
signature model supplies the normal and the shape operator.  In extrinsic
coordinates

    grad_M f = P grad u_f,
    Delta_M f = tr(D^2 u_f) - nu^T D^2 u_f nu + (d - 1) H d_nu u_f,

with ``(d - 1) H = tr(S)`` from the signature model.  Every quantity is
linear in the data, so evaluation at fixed points is a matrix acting on the
data vector; :func:`assemble_operator` builds that matrix.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

from . import geometry, interpolant
from ._validation import check_alpha, check_cloud, check_points
from .interpolant import Model
from .kernels import KernelSpec, format_kernel, kernel_jets, parse_kernel

LB = "lb"


def parse_kind(text: str, dim: int | None = None):
    """Operator kind: ``"lb"`` or ``"grad<i>"`` with 1-based ``i``.

    Returns ``"lb"`` or the 0-based gradient component as an int.
    """
    if isinstance(text, (int, np.integer)):
        i = int(text)
    else:
        t = str(text).strip().lower()
        if t in ("lb", "laplace-beltrami"):
            return LB
        match = re.fullmatch(r"grad(\d+)", t)
        if not match:
            raise ValueError(f"unknown operator kind {text!r}; expected lb or grad<i>")
        i = int(match.group(1)) - 1
    if i < 0 or (dim is not None and i >= dim):
        raise ValueError(f"gradient component {i + 1} out of range for dimension {dim}")
    return i


def format_kind(kind) -> str:
    return LB if kind == LB else f"grad{kind + 1}"


def _check_pair(sig: Model, f_model: Model):
    if sig.dim != f_model.dim:
        raise ValueError(f"signature model has dim {sig.dim}, data model {f_model.dim}")
    if sig.n_centers != f_model.n_centers or not np.array_equal(sig.centers, f_model.centers):
        raise ValueError("signature and data models must share their centers")


def _signature_geometry(sig: Model, P, tau_grad):
    """Ascent direction ``n`` and ``tr(S)`` of the signature model at ``P``."""
    geometry._require_order(sig, 2)
    _, g, h = interpolant.evaluate(sig, P, 2)
    n, gn, _ = geometry.ascent_directions(sig, P, g, tau_grad)
    S = geometry.shape_operators(h, n, gn)
    return n, np.trace(S, axis1=1, axis2=2)


def _apply(n, trS, grad, hess):
    # nu = -n; the normal derivative term (d-1) H d_nu f = tr(S) (-n . grad f)
    grad_M = grad - np.einsum("kd,kd->k", grad, n)[:, None] * n
    if hess is None:
        return grad_M, None
    lb = (np.trace(hess, axis1=1, axis2=2)
          - np.einsum("ki,kij,kj->k", n, hess, n)
          - trS * np.einsum("kd,kd->k", n, grad))
    return grad_M, lb


def surface_gradients(sig: Model, f_model: Model, points, tau_grad=geometry.TAU_GRAD):
    """``P grad u_f`` at each row of ``points``; shape (n, d)."""
    _check_pair(sig, f_model)
    P = check_points(points, sig.dim)
    _, g, _ = interpolant.evaluate(sig, P, 1)
    n, _, _ = geometry.ascent_directions(sig, P, g, tau_grad)
    _, gf, _ = interpolant.evaluate(f_model, P, 1)
    return gf - np.einsum("kd,kd->k", gf, n)[:, None] * n


def surface_gradient(sig: Model, f_model: Model, x, tau_grad=geometry.TAU_GRAD):
    """Surface gradient at one point.

    Raises
    ------
    DegenerateGradient
        If the signature gradient vanishes at ``x``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return surface_gradients(sig, f_model, x.reshape(1, -1), tau_grad)[0]


def laplace_beltramis(sig: Model, f_model: Model, points, tau_grad=geometry.TAU_GRAD):
    """Laplace-Beltrami of ``u_f`` at each row of ``points``; shape (n,)."""
    _check_pair(sig, f_model)
    geometry._require_order(f_model, 2)
    P = check_points(points, sig.dim)
    n, trS = _signature_geometry(sig, P, tau_grad)
    _, gf, hf = interpolant.evaluate(f_model, P, 2)
    return _apply(n, trS, gf, hf)[1]


def laplace_beltrami(sig: Model, f_model: Model, x, tau_grad=geometry.TAU_GRAD) -> float:
    """Laplace-Beltrami at one point.

    Raises
    ------
    DegenerateGradient
    NonDifferentiableKernel
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(laplace_beltramis(sig, f_model, x.reshape(1, -1), tau_grad)[0])


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense map from data on the centers to operator values at ``rows``."""

    kind: object
    rows: np.ndarray
    cols: np.ndarray
    matrix: np.ndarray
    spec: KernelSpec
    alpha: float
    signature_spec: KernelSpec | None = field(default=None)

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        if Y.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"{Y.shape[0]} values for {self.matrix.shape[1]} centers")
        return self.matrix @ Y

    def to_csv(self) -> str:
        """Row-major CSV with ``#`` header lines describing the operator."""
        buf = io.StringIO()
        buf.write(f"# kind={format_kind(self.kind)}\n")
        buf.write(f"# n={self.matrix.shape[0]} m={self.matrix.shape[1]}\n")
        buf.write(f"# kernel={format_kernel(self.spec)}\n")
        if self.signature_spec is not None and self.signature_spec != self.spec:
            buf.write(f"# signature_kernel={format_kernel(self.signature_spec)}\n")
        buf.write(f"# alpha={self.alpha!r}\n")
        for row in self.matrix:
            buf.write(",".join(repr(float(v)) for v in row))
            buf.write("\n")
        return buf.getvalue()


def assemble_operator(spec, X, alpha, eval_points, kind, signature_spec=None,
                      tau_grad=geometry.TAU_GRAD) -> OperatorMatrix:
    """Matrix of the surface gradient component or Laplace-Beltrami operator.

    Row ``r`` applies the operator at ``eval_points[r]`` to each kernel
    translate ``K(. - x_k)`` and composes with ``(alpha I + K)^{-1}``.

    Parameters
    ----------
    spec : KernelSpec or str
        Kernel of the data fit.
    X : array_like, shape (m, d)
    alpha : float
    eval_points : array_like, shape (n, d)
    kind : {"lb", "grad<i>"} or int
    signature_spec : KernelSpec or str, optional
        Kernel of the signature function; defaults to ``spec``.

    Raises
    ------
    DegenerateGradient
        Carrying the index of the first offending evaluation point.
    IllConditioned
    """
    spec = parse_kernel(spec)
    sig_spec = spec if signature_spec is None else parse_kernel(signature_spec)
    X = check_cloud(X)
    alpha = check_alpha(alpha)
    d = X.shape[1]
    kind = parse_kind(kind, d)
    P = check_points(eval_points, d, "eval_points")

    sig = geometry.signature_model(sig_spec, X, alpha)
    if kind == LB:
        n, trS = _signature_geometry(sig, P, tau_grad)
    else:
        _, g, _ = interpolant.evaluate(sig, P, 1)
        n = geometry.ascent_directions(sig, P, g, tau_grad)[0]

    factor = sig.factor if sig_spec == spec else interpolant.factorize(spec, X, alpha)
    B = np.empty((P.shape[0], X.shape[0]))
    order = 2 if kind == LB else 1
    step = max(1, interpolant._CHUNK_ENTRIES // (X.shape[0] * (1 + d + d * d)))
    for lo in range(0, P.shape[0], step):
        hi = min(P.shape[0], lo + step)
        _, g, h = kernel_jets(spec, P[lo:hi], X, order)
        nn = n[lo:hi]
        if kind == LB:
            B[lo:hi] = (np.einsum("kmii->km", h)
                        - np.einsum("ki,kmij,kj->km", nn, h, nn)
                        - trS[lo:hi, None] * np.einsum("kd,kmd->km", nn, g))
        else:
            B[lo:hi] = g[:, :, kind] - np.einsum("kd,kmd->km", nn, g) * nn[:, kind, None]
    M = interpolant.solve(factor, B.T)[0].T
    return OperatorMatrix(kind, P, X, M, spec, alpha, sig_spec)


def data_model(spec, X, Y, alpha=0.0) -> Model:
    """Kernel fit of the data ``Y``."""
    return interpolant.fit(spec, X, Y, alpha)[0]

