"""
Radial kernels with closed-form derivatives.

Every kernel is written as ``K(x) = phi(s)`` with ``s = |x|^2``.  The chain
rule then gives

    grad K(x) = 2 phi'(s) x
    hess K(x) = 2 phi'(s) I + 4 phi''(s) x x^T

so value, gradient and Hessian only need the scalar profile and its first two
derivatives in ``s``.

=====================  ==============================  ==========
family                 phi(s)                          smoothness
=====================  ==============================  ==========
``gauss``              exp(-s / (2 l^2))               analytic
``laplace``            exp(-sqrt(s))                   Lipschitz
``laplace`` (eps > 0)  exp(-sqrt(s + eps))             analytic
=====================  ==============================  ==========
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NonDifferentiableKernel


class KernelFamily(str, enum.Enum):
    GAUSS = "gauss"
    LAPLACE = "laplace"
    REGULARIZED_LAPLACE = "regularized-laplace"


@dataclass(frozen=True)
class KernelSpec:
    """Which radial kernel to use and its shape parameters.

    Parameters
    ----------
    family : KernelFamily
        Kernel family.
    epsilon : float
        Smoothing of the regularized Laplace kernel. Ignored otherwise.
    length_scale : float
        Length scale of the Gauss kernel. Ignored otherwise.
    """

    family: KernelFamily = KernelFamily.REGULARIZED_LAPLACE
    epsilon: float = 1.0
    length_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.family is KernelFamily.REGULARIZED_LAPLACE:
            if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
                raise ValueError(
                    f"regularized Laplace kernel needs epsilon > 0, got {self.epsilon!r}")
        if self.family is KernelFamily.GAUSS:
            if not (self.length_scale > 0 and math.isfinite(self.length_scale)):
                raise ValueError(
                    f"Gauss kernel needs length_scale > 0, got {self.length_scale!r}")

    @classmethod
    def gauss(cls, length_scale=1.0):
        return cls(KernelFamily.GAUSS, 0.0, length_scale)

    @classmethod
    def laplace(cls, epsilon=0.0):
        """Laplace kernel; ``epsilon > 0`` selects the regularized form."""
        if epsilon == 0:
            return cls(KernelFamily.LAPLACE, 0.0, 1.0)
        return cls(KernelFamily.REGULARIZED_LAPLACE, epsilon, 1.0)

    @property
    def max_order(self) -> int:
        """Highest derivative order available everywhere."""
        return 1 if self.family is KernelFamily.LAPLACE else 2

    @property
    def center_value(self) -> float:
        """``K(0)``, the diagonal of every Gram matrix."""
        if self.family is KernelFamily.REGULARIZED_LAPLACE:
            return math.exp(-math.sqrt(self.epsilon))
        return 1.0

    def __str__(self):
        return format_kernel(self)


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``gauss:l=<l>``, ``laplace`` or ``laplace:eps=<eps>``.

    >>> parse_kernel("laplace:eps=1")
    KernelSpec(family=<KernelFamily.REGULARIZED_LAPLACE: 'regularized-laplace'>, epsilon=1.0, length_scale=1.0)
    """
    if isinstance(text, KernelSpec):
        return text
    name, _, rest = text.strip().partition(":")
    opts = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"malformed kernel option {item!r} in {text!r}")
            try:
                opts[key.strip()] = float(value)
            except ValueError:
                raise ValueError(f"non-numeric kernel option {item!r} in {text!r}") from None
    name = name.strip().lower()
    if name in ("gauss", "gaussian"):
        unknown = set(opts) - {"l"}
        if unknown:
            raise ValueError(f"unknown Gauss kernel option(s) {sorted(unknown)}")
        return KernelSpec.gauss(opts.get("l", 1.0))
    if name == "laplace":
        unknown = set(opts) - {"eps"}
        if unknown:
            raise ValueError(f"unknown Laplace kernel option(s) {sorted(unknown)}")
        eps = opts.get("eps", 0.0)
        if eps < 0:
            raise ValueError(f"eps must be nonnegative, got {eps}")
        return KernelSpec.laplace(eps)
    raise ValueError(f"unknown kernel {text!r}; expected gauss:l=..., laplace or laplace:eps=...")


def format_kernel(spec: KernelSpec) -> str:
    if spec.family is KernelFamily.GAUSS:
        return f"gauss:l={spec.length_scale!r}"
    if spec.family is KernelFamily.LAPLACE:
        return "laplace"
    return f"laplace:eps={spec.epsilon!r}"


def radial_profile(spec: KernelSpec, s, order: int = 0):
    """Evaluate ``phi(s)`` and, up to ``order``, its derivatives in ``s``.

    Parameters
    ----------
    spec : KernelSpec
    s : array_like
        Squared distances, nonnegative.
    order : {0, 1, 2}

    Returns
    -------
    tuple of ndarray
        ``(phi,)``, ``(phi, dphi)`` or ``(phi, dphi, d2phi)``.

    Raises
    ------
    NonDifferentiableKernel
        For the plain Laplace kernel when ``order == 2``, or when ``order == 1``
        and some ``s`` is zero.
    """
    s = np.asarray(s, dtype=float)
    fam = spec.family
    if fam is KernelFamily.GAUSS:
        c = 1.0 / (2.0 * spec.length_scale ** 2)
        phi = np.exp(-c * s)
        out = [phi]
        if order >= 1:
            out.append(-c * phi)
        if order >= 2:
            out.append(c * c * phi)
        return tuple(out)

    if fam is KernelFamily.LAPLACE:
        if order >= 2:
            raise NonDifferentiableKernel(
                "the plain Laplace kernel has no second derivatives; use laplace:eps=<eps>")
        r = np.sqrt(s)
        phi = np.exp(-r)
        if order == 0:
            return (phi,)
        if np.any(r == 0):
            raise NonDifferentiableKernel(
                "the plain Laplace kernel is not differentiable at its center")
        return phi, -phi / (2.0 * r)

    r = np.sqrt(s + spec.epsilon)
    phi = np.exp(-r)
    out = [phi]
    if order >= 1:
        out.append(-phi / (2.0 * r))
    if order >= 2:
        out.append(phi * (r + 1.0) / (4.0 * r ** 3))
    return tuple(out)


def kernel_value(spec: KernelSpec, dx) -> float:
    """Kernel value ``K(dx)`` for a single displacement vector."""
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    return float(radial_profile(spec, dx @ dx, 0)[0])


def kernel_jet(spec: KernelSpec, dx, order: int = 2):
    """Value, gradient and Hessian of ``x -> K(x)`` at ``dx``.

    Entries beyond ``order`` are returned as ``None``.
    """
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    vals = radial_profile(spec, dx @ dx, order)
    value = float(vals[0])
    grad = hess = None
    if order >= 1:
        grad = 2.0 * vals[1] * dx
    if order >= 2:
        hess = 2.0 * vals[1] * np.eye(dx.size) + 4.0 * vals[2] * np.outer(dx, dx)
    return value, grad, hess


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    """Cross kernel matrix ``[K(a_i - b_j)]``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return radial_profile(spec, squared_distances(A, B), 0)[0]


def squared_distances(A, B) -> np.ndarray:
    # explicit differences: the expanded |a|^2 - 2ab + |b|^2 form loses the
    # small distances that dominate near-center derivatives
    D = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", D, D)


def kernel_jets(spec: KernelSpec, A, B, order: int = 2):
    """Batched jets of ``K(a_i - b_j)``.

    Returns
    -------
    value : ndarray, shape (n, m)
    grad : ndarray, shape (n, m, d) or None
    hess : ndarray, shape (n, m, d, d) or None
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    D = A[:, None, :] - B[None, :, :]
    s = np.einsum("ijk,ijk->ij", D, D)
    vals = radial_profile(spec, s, order)
    grad = hess = None
    if order >= 1:
        grad = 2.0 * vals[1][..., None] * D
    if order >= 2:
        d = A.shape[1]
        hess = 4.0 * vals[2][..., None, None] * D[..., :, None] * D[..., None, :]
        hess = hess + 2.0 * vals[1][..., None, None] * np.eye(d)
    return vals[0], grad, hess
