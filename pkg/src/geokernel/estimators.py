"""
Estimator wrappers following the scikit-learn conventions.

Hyperparameters are plain constructor arguments, learned state carries a
trailing underscore, and ``fit`` returns ``self``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import geometry, interpolant, surface_ops
from ._validation import check_cloud, check_points
from .kernels import parse_kernel


class KernelRegressor(RegressorMixin, BaseEstimator):
    """Kernel interpolation (``alpha = 0``) or regression (``alpha > 0``).

    Parameters
    ----------
    kernel : str or KernelSpec, default="laplace:eps=1"
    alpha : float, default=0.0
        Regularization weight; the noise variance of the matching Gaussian
        process.

    Attributes
    ----------
    model_ : Model
    solve_report_ : SolveReport
    n_features_in_ : int
    """

    def __init__(self, kernel="laplace:eps=1", alpha=0.0):
        self.kernel = kernel
        self.alpha = alpha

    def fit(self, X, y):
        X = check_cloud(X)
        self.model_, self.solve_report_ = interpolant.fit(
            parse_kernel(self.kernel), X, y, self.alpha)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return interpolant.predict(self.model_, check_points(X, self.n_features_in_, "X"))

    def predict_variance(self, X):
        """Posterior variance of a noisy observation at each row of ``X``."""
        check_is_fitted(self, "model_")
        P = check_points(X, self.n_features_in_, "X")
        return np.atleast_1d(interpolant.gpr_variance(
            self.model_.spec, self.model_.centers, P, self.alpha))

    def gradient(self, X):
        check_is_fitted(self, "model_")
        return interpolant.evaluate(self.model_, check_points(X, self.n_features_in_, "X"), 1)[1]


class SignatureFunction(BaseEstimator):
    """Implicit surface of a point cloud.

    ``fit`` builds the signature function; ``transform`` maps query points to
    their outward normals and ``frames`` returns the full curvature data.

    Parameters
    ----------
    kernel : str or KernelSpec, default="laplace:eps=1"
    alpha : float, default=0.0
    tau_grad : float, default=1e-10
        Gradient lengths below this are treated as zero.
    """

    def __init__(self, kernel="laplace:eps=1", alpha=0.0, tau_grad=geometry.TAU_GRAD):
        self.kernel = kernel
        self.alpha = alpha
        self.tau_grad = tau_grad

    def fit(self, X, y=None):
        X = check_cloud(X)
        self.model_ = geometry.signature_model(parse_kernel(self.kernel), X, self.alpha)
        self.level_stats_ = geometry.level_stats(self.model_, X)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        """Signature value minus the mean level on the cloud."""
        check_is_fitted(self, "model_")
        return interpolant.predict(self.model_, X) - self.level_stats_.mean_level

    def transform(self, X):
        """Outward unit normals; NaN rows where the gradient is degenerate."""
        check_is_fitted(self, "model_")
        return geometry.normals(self.model_, X, self.tau_grad, raise_degenerate=False)[0]

    def frames(self, X):
        check_is_fitted(self, "model_")
        return geometry.frames(self.model_, X, self.tau_grad)

    def principal_curvatures(self, X):
        """Array of shape (n, d - 1); NaN rows at degenerate points."""
        check_is_fitted(self, "model_")
        out = np.full((np.shape(np.atleast_2d(X))[0], self.n_features_in_ - 1), np.nan)
        for k, fr in enumerate(self.frames(X)):
            if fr is not None:
                out[k] = fr.principal_curvatures
        return out


class SurfaceOperator(BaseEstimator):
    """Surface gradient or Laplace-Beltrami operator of data on a cloud.

    ``fit(X, y)`` stores the cloud and data; ``predict(P)`` evaluates the
    operator at ``P``.  ``matrix(P)`` returns the assembled linear map.

    Parameters
    ----------
    kind : {"lb", "grad"} or "grad<i>", default="lb"
        ``"grad"`` returns the whole tangential gradient.
    kernel : str or KernelSpec, default="laplace:eps=1"
    alpha : float, default=0.0
    signature_kernel : str or KernelSpec, optional
    tau_grad : float, default=1e-10
    """

    def __init__(self, kind="lb", kernel="laplace:eps=1", alpha=0.0,
                 signature_kernel=None, tau_grad=geometry.TAU_GRAD):
        self.kind = kind
        self.kernel = kernel
        self.alpha = alpha
        self.signature_kernel = signature_kernel
        self.tau_grad = tau_grad

    def fit(self, X, y):
        X = check_cloud(X)
        spec = parse_kernel(self.kernel)
        sig_spec = spec if self.signature_kernel is None else parse_kernel(self.signature_kernel)
        self.data_model_ = interpolant.fit(spec, X, y, self.alpha)[0]
        sig = geometry.signature_model(sig_spec, X, self.alpha)
        self.signature_model_ = sig
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "data_model_")
        sig, fm = self.signature_model_, self.data_model_
        if self.kind == "grad":
            return surface_ops.surface_gradients(sig, fm, X, self.tau_grad)
        kind = surface_ops.parse_kind(self.kind, self.n_features_in_)
        if kind == surface_ops.LB:
            return surface_ops.laplace_beltramis(sig, fm, X, self.tau_grad)
        return surface_ops.surface_gradients(sig, fm, X, self.tau_grad)[:, kind]

    def matrix(self, X):
        check_is_fitted(self, "data_model_")
        if self.kind == "grad":
            raise ValueError("assemble one gradient component at a time (kind='grad<i>')")
        return surface_ops.assemble_operator(
            self.data_model_.spec, self.data_model_.centers, self.alpha, X, self.kind,
            self.signature_model_.spec, self.tau_grad)
