"""
Kernel interpolation and regression on scattered points.

The fitted function is ``u(x) = sum_k lambda_k K(x - x_k)`` where the
coefficients solve ``(alpha I + K(X, X)) Lambda = Y``.  ``alpha = 0`` is exact
interpolation (the minimum native-space norm interpolant); ``alpha > 0``
minimizes ``0.5 * (||u||^2 + |u(X) - Y|^2 / alpha)`` and coincides with the
Gaussian process posterior mean for noise variance ``alpha``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._validation import check_alpha, check_cloud, check_points, check_values
from .exceptions import IllConditioned, MalformedModelFile
from .kernels import KernelSpec, kernel_jets, kernel_matrix, parse_kernel, format_kernel

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

# relative jitter levels (times tr(K)/m) tried after a failed Cholesky
JITTER_LEVELS = (1e-14, 1e-12, 1e-10)
RESIDUAL_TOL = 1e-10
_REFINE_STEPS = 4
_CHUNK_ENTRIES = 2_000_000


@dataclass(frozen=True)
class SolveReport:
    """Diagnostics of the regularized Gram solve."""

    jitter_added: float
    cholesky_attempts: int
    residual_norm: float


@dataclass(frozen=True)
class GramFactor:
    """Cholesky factor of ``alpha I + K(X, X) + jitter I``."""

    cho: tuple = field(repr=False)
    matrix: np.ndarray = field(repr=False)
    jitter: float = 0.0
    attempts: int = 1

    def solve(self, b):
        return linalg.cho_solve(self.cho, b, check_finite=False)


@dataclass(frozen=True, eq=False)
class Model:
    """A fitted kernel expansion ``u = K(., centers) @ coefficients``."""

    spec: KernelSpec
    centers: np.ndarray
    coefficients: np.ndarray
    alpha: float = 0.0
    factor: GramFactor | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float)
        coef = np.array(self.coefficients, dtype=float).reshape(-1)
        if centers.ndim != 2 or centers.shape[0] != coef.shape[0]:
            raise ValueError(
                f"{coef.shape[0]} coefficients for centers of shape {centers.shape}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        centers.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "coefficients", coef)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    def with_coefficients(self, coefficients) -> "Model":
        """Same kernel, centers and factorization, different coefficients."""
        return Model(self.spec, self.centers, coefficients, self.alpha, self.factor)


def gram(spec: KernelSpec, X) -> np.ndarray:
    """Gram matrix ``[K(x_j - x_k)]``, exactly symmetric."""
    X = check_cloud(X)
    G = kernel_matrix(spec, X, X)
    G = 0.5 * (G + G.T)
    np.fill_diagonal(G, spec.center_value)
    return G


def factorize(spec: KernelSpec, X, alpha: float = 0.0, K=None) -> GramFactor:
    """Cholesky-factorize ``alpha I + K(X, X)``, adding jitter on failure.

    Raises
    ------
    IllConditioned
        If the factorization fails at every jitter level.
    """
    alpha = check_alpha(alpha)
    if K is None:
        K = gram(spec, X)
    m = K.shape[0]
    A = K + alpha * np.eye(m)
    scale = np.trace(K) / m
    attempts = 0
    for level in (0.0,) + JITTER_LEVELS:
        attempts += 1
        jitter = float(level * scale)
        try:
            cho = linalg.cho_factor(A + jitter * np.eye(m) if jitter else A,
                                    lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(cho[0])):
            continue
        if jitter:
            logger.info("Cholesky needed jitter %.3g (attempt %d)", jitter, attempts)
        return GramFactor(cho, A, jitter, attempts)
    raise IllConditioned(
        f"Cholesky of alpha*I + K failed for m={m}, alpha={alpha} even with jitter "
        f"{JITTER_LEVELS[-1] * scale:.3g}; increase alpha or use a rougher kernel")


def _relative_residual(A, lam, Y):
    r = np.linalg.norm(A @ lam - Y)
    ny = np.linalg.norm(Y)
    return r / ny if ny > 0 else r


def solve(factor: GramFactor, Y) -> tuple[np.ndarray, float]:
    """Solve ``(alpha I + K) Lambda = Y`` using a possibly jittered factor.

    If the residual exceeds ``RESIDUAL_TOL`` (typically because jitter was
    added), a few steps of iterative refinement against the unjittered matrix
    bring it back down.
    """
    lam = factor.solve(Y)
    res = _relative_residual(factor.matrix, lam, Y)
    if res > RESIDUAL_TOL:
        for _ in range(_REFINE_STEPS):
            if res <= RESIDUAL_TOL:
                break
            trial = lam + factor.solve(Y - factor.matrix @ lam)
            trial_res = _relative_residual(factor.matrix, trial, Y)
            if not trial_res < res:
                break
            lam, res = trial, trial_res
    return lam, float(res)


def fit(spec: KernelSpec, X, Y, alpha: float = 0.0) -> tuple[Model, SolveReport]:
    """Fit the kernel interpolant (``alpha = 0``) or regressor (``alpha > 0``).

    Parameters
    ----------
    spec : KernelSpec
    X : array_like, shape (m, d)
        Distinct centers.
    Y : array_like, shape (m,)
        Data values.
    alpha : float
        Regularization weight, equal to the GPR noise variance.

    Returns
    -------
    model : Model
    report : SolveReport
    """
    spec = parse_kernel(spec)
    X = check_cloud(X)
    Y = check_values(Y, X.shape[0], "Y")
    alpha = check_alpha(alpha)
    factor = factorize(spec, X, alpha)
    lam, res = solve(factor, Y)
    if res > RESIDUAL_TOL:
        logger.warning("relative residual %.3g exceeds %.0e; the system is "
                       "numerically singular at alpha=%g", res, RESIDUAL_TOL, alpha)
    report = SolveReport(factor.jitter, factor.attempts, res)
    return Model(spec, X, lam, alpha, factor), report


def evaluate(model: Model, points, order: int = 0):
    """Evaluate ``u`` and its derivatives at many points.

    Returns
    -------
    u : ndarray, shape (n,)
    grad : ndarray, shape (n, d) or None
    hess : ndarray, shape (n, d, d) or None
    """
    P = check_points(points, model.dim)
    n, d = P.shape
    m = model.n_centers
    lam = model.coefficients
    u = np.empty(n)
    grad = np.empty((n, d)) if order >= 1 else None
    hess = np.empty((n, d, d)) if order >= 2 else None
    per_row = m * (1 + (d if order >= 1 else 0) + (d * d if order >= 2 else 0))
    step = max(1, _CHUNK_ENTRIES // max(per_row, 1))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        v, g, h = kernel_jets(model.spec, P[lo:hi], model.centers, order)
        u[lo:hi] = v @ lam
        if order >= 1:
            grad[lo:hi] = np.einsum("nmd,m->nd", g, lam)
        if order >= 2:
            hess[lo:hi] = np.einsum("nmij,m->nij", h, lam)
    if order >= 2:
        # the reduction order may differ between (i, j) and (j, i)
        hess = 0.5 * (hess + hess.transpose(0, 2, 1))
    return u, grad, hess


def gradient_roundoff_bound(model: Model, points) -> np.ndarray:
    """Worst-case summation error of ``grad u`` at each point.

    ``m * eps * sum_k |lambda_k| |grad K(x - x_k)|``; a computed gradient below
    this bound is indistinguishable from zero.
    """
    P = check_points(points, model.dim)
    n, d = P.shape
    m = model.n_centers
    absl = np.abs(model.coefficients)
    out = np.empty(n)
    step = max(1, _CHUNK_ENTRIES // (m * (d + 1)))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        _, g, _ = kernel_jets(model.spec, P[lo:hi], model.centers, 1)
        out[lo:hi] = np.linalg.norm(g, axis=2) @ absl
    return m * np.finfo(float).eps * out


def evaluate_jet(model: Model, x, order: int = 2):
    """``(u, grad, hess)`` at a single point; unused entries are ``None``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u, g, h = evaluate(model, x.reshape(1, -1), order)
    return (float(u[0]),
            None if g is None else g[0],
            None if h is None else h[0])


def predict(model: Model, points) -> np.ndarray:
    return evaluate(model, points, 0)[0]


def rkhs_norm_sq(model: Model) -> float:
    """Squared native-space norm ``Lambda^T K(X, X) Lambda``."""
    lam = model.coefficients
    if not np.any(lam):
        return 0.0
    if model.factor is not None:
        K = model.factor.matrix - model.alpha * np.eye(model.n_centers)
    else:
        K = gram(model.spec, model.centers)
    return float(max(lam @ K @ lam, 0.0))


def objective(model: Model, X, Y, alpha: float):
    """Regularized energy ``E_alpha`` and squared data misfit of ``model``.

    Returns
    -------
    E_alpha : float
        ``0.5 * (||u||^2 + misfit / alpha)``.
    misfit : float
        ``|u(X) - Y|^2``, no averaging.
    """
    alpha = check_alpha(alpha)
    if alpha == 0:
        raise ValueError("the regularized objective needs alpha > 0")
    X = check_points(X, model.dim, "X")
    Y = check_values(Y, X.shape[0], "Y")
    r = predict(model, X) - Y
    misfit = float(r @ r)
    return 0.5 * (rkhs_norm_sq(model) + misfit / alpha), misfit


def gpr_variance(spec: KernelSpec, X, x, sigma2: float = 0.0):
    """Posterior variance of the noisy observation ``Y`` at ``x``.

    ``K(x, x) + sigma2 - K(x, X) [sigma2 I + K(X, X)]^{-1} K(X, x)``.
    ``X`` may be empty, giving the prior variance. ``x`` may hold one point or
    a batch; the return type follows.
    """
    spec = parse_kernel(spec)
    sigma2 = check_alpha(sigma2)
    x = np.asarray(x, dtype=float)
    if np.size(X) == 0:
        X = np.empty((0, x.shape[-1] if x.ndim else 1))
    else:
        X = check_cloud(X)
    d = X.shape[1]
    single = x.ndim == 0 or (x.ndim == 1 and (d > 1 or x.size == 1))
    P = check_points(x, d, "x")
    prior = spec.center_value + sigma2
    if X.shape[0] == 0:
        var = np.full(P.shape[0], prior)
    else:
        factor = factorize(spec, X, sigma2)
        k = kernel_matrix(spec, X, P)
        var = prior - np.einsum("mn,mn->n", k, factor.solve(k))
        if np.any(var < -1e-12 * prior):
            raise IllConditioned(
                f"posterior variance {var.min():.3g} is negative beyond roundoff")
        var = np.maximum(var, 0.0)
    return float(var[0]) if single else var


def serialize(model: Model) -> bytes:
    """Encode a model as a versioned JSON document (exact float round trip)."""
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "kernel": format_kernel(model.spec),
        "alpha": model.alpha,
        "dim": model.dim,
        "centers": model.centers.tolist(),
        "coefficients": model.coefficients.tolist(),
    }
    return json.dumps(doc, allow_nan=False).encode("utf-8")


def deserialize(data) -> Model:
    """Inverse of :func:`serialize`.

    Raises
    ------
    MalformedModelFile
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedModelFile(f"model file is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data, parse_constant=_reject_constant)
    except (json.JSONDecodeError, ValueError) as exc:
        raise MalformedModelFile(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedModelFile("model file must hold a JSON object")
    missing = {"version", "kernel", "alpha", "dim", "centers", "coefficients"} - set(doc)
    if missing:
        raise MalformedModelFile(f"model file lacks field(s) {sorted(missing)}")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise MalformedModelFile(f"unsupported model format version {doc['version']!r}")
    try:
        spec = parse_kernel(doc["kernel"])
        alpha = float(doc["alpha"])
        dim = doc["dim"]
        centers = np.array(doc["centers"], dtype=float)
        coef = np.array(doc["coefficients"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedModelFile(f"bad field in model file: {exc}") from None
    if not isinstance(dim, int) or dim < 1:
        raise MalformedModelFile(f"dim must be a positive integer, got {dim!r}")
    if centers.ndim != 2 or centers.shape[1] != dim:
        raise MalformedModelFile(
            f"centers of shape {centers.shape} do not match declared dim {dim}")
    if coef.ndim != 1 or coef.shape[0] != centers.shape[0]:
        raise MalformedModelFile(
            f"{coef.size} coefficients for {centers.shape[0]} centers")
    if centers.shape[0] == 0:
        raise MalformedModelFile("model has no centers")
    if not (math.isfinite(alpha) and alpha >= 0):
        raise MalformedModelFile(f"alpha must be finite and nonnegative, got {alpha}")
    if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(coef))):
        raise MalformedModelFile("non-finite numbers in model file")
    return Model(spec, centers, coef, alpha)


def _reject_constant(name):
    raise ValueError(f"{name} is not allowed")
