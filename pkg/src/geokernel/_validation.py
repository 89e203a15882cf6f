"""Input validation shared by the functional core and the estimators."""
import numpy as np

from .exceptions import DuplicatePoints


def check_cloud(X, name="X", allow_empty=False, dim=None):
    """Return ``X`` as a float array of shape (m, d) after validation.

    A 1-D input is read as ``m`` points on the line. Points must be finite and
    pairwise distinct.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of points, got shape {X.shape}")
    if X.shape[0] == 0 and not allow_empty:
        raise ValueError(f"{name} must contain at least one point")
    if X.shape[1] == 0:
        raise ValueError(f"{name} has zero-dimensional points")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"{name} has dimension {X.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite coordinates")
    if X.shape[0] > 1:
        # + 0.0 folds -0.0 into 0.0 before the bytewise row comparison
        n_unique = np.unique(X + 0.0, axis=0).shape[0]
        if n_unique < X.shape[0]:
            raise DuplicatePoints(
                f"{name} contains {X.shape[0] - n_unique} duplicated point(s)")
    return X


def check_points(x, dim, name="x"):
    """Evaluation points: finite, shape (n, d); duplicates are fine."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :] if dim > 1 or x.size == 1 else x[:, None]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"{name} must have shape (n, {dim}), got {np.shape(x)}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return x


def check_values(y, m, name="y"):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != m:
        raise ValueError(f"{name} has {y.shape[0]} entries but the cloud has {m} points")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    return y


def check_alpha(alpha):
    alpha = float(alpha)
    if not (alpha >= 0 and np.isfinite(alpha)):
        raise ValueError(f"alpha must be a finite nonnegative number, got {alpha!r}")
    return alpha
