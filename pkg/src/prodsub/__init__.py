"""Numerical verification of extrinsic geometry for submanifolds of the
Riemannian products S^n x R and H^n x R.

The package evaluates user-defined or gallery immersions with order-2
forward-mode jets, builds per-point frames and second-fundamental-form data,
and reports residuals of the structural identities that characterize
biconservative and biharmonic submanifolds with parallel mean curvature.
"""

__version__ = "0.1.0"

from .ambient import ProductSpace, curvature, inclusion_sff, inner, membership_residual
from .errors import (
    ChartError,
    EngineError,
    InvalidFrame,
    IrregularPoint,
    NullFrame,
    SceneError,
    StencilError,
)
from .immersion import Chart, PointGeometry, analyze_point, evaluate_jet, pushforward
from .jets import Jet2, VecJet2, fd_gradient, jet_arith, jet_const, jet_unary, jet_var

__all__ = [
    "__version__",
    "ProductSpace",
    "inner",
    "membership_residual",
    "inclusion_sff",
    "curvature",
    "Chart",
    "PointGeometry",
    "analyze_point",
    "evaluate_jet",
    "pushforward",
    "Jet2",
    "VecJet2",
    "jet_var",
    "jet_const",
    "jet_arith",
    "jet_unary",
    "fd_gradient",
    "EngineError",
    "IrregularPoint",
    "NullFrame",
    "StencilError",
    "InvalidFrame",
    "ChartError",
    "SceneError",
]
