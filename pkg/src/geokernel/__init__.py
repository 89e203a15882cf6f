"""Kernel interpolation, implicit surface geometry and surface operators on point clouds."""
from .exceptions import (DegenerateGradient, DuplicatePoints, GeoKernelError, IllConditioned,
                         MalformedModelFile, NonDifferentiableKernel, OffSurfacePoint,
                         ZeroReference)
from .kernels import KernelFamily, KernelSpec, kernel_jet, kernel_value, parse_kernel
from .interpolant import (Model, SolveReport, deserialize, evaluate, evaluate_jet, fit,
                          gpr_variance, gram, objective, predict, rkhs_norm_sq, serialize)
from .geometry import (LevelStats, SurfaceFrame, curvatures, frames, implied_normal,
                       level_stats, normals, orient_frame, signature_model, weingarten)
from .surface_ops import (OperatorMatrix, assemble_operator, laplace_beltrami,
                          laplace_beltramis, surface_gradient, surface_gradients)
from .estimators import KernelRegressor, SignatureFunction, SurfaceOperator

__version__ = "0.1.0"
