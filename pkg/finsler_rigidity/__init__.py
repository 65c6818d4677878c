"""
Finsler Rigidity Toolkit
Numerical Berwald, Landsberg, averaged-connection rigidity and holonomy checks
for Finsler structures given as expressions
"""

from .averaging import (
    AveragedMetricField,
    ExpressionMetricField,
    QuadratureScheme,
    StructureMetricField,
    averaged_connection,
    averaged_metric,
    convexity_of_average,
    sample_indicatrix,
)
from .classify import (
    ClassificationReport,
    InterpolatedStructure,
    StructureClassifier,
    berwald_test,
    interpolated_indicatrix_test,
    landsberg_test,
    rigidity_test,
)
from .config import RunConfig, load_run_config
from .connections import (
    FiberGeometry,
    berwald_coefficients,
    chern_coefficients,
    difference_tensor,
    formal_christoffel,
    landsberg_derivative,
    nonlinear_connection,
    pullback_connection,
)
from .errors import FinslerError
from .expression import check_homogeneity, eval_jet, parse_metric
from .holonomy import holonomy_classify, holonomy_sample
from .registry import MetricRegistry
from .runner import FinslerAnalysisRunner
from .structures import Chart, FinslerStructure, build_structure, linear_change
from .tensors import cartan_tensor, convexity_scan, fundamental_tensor
from .transport import CurveSpec, horizontal_transport, integrate_geodesic, transport_along
from .verdicts import Residual, Verdict

__version__ = "1.0.0"
__author__ = "Finsler Rigidity Developers"

__all__ = [
    "AveragedMetricField",
    "Chart",
    "ClassificationReport",
    "CurveSpec",
    "ExpressionMetricField",
    "FiberGeometry",
    "FinslerAnalysisRunner",
    "FinslerError",
    "FinslerStructure",
    "InterpolatedStructure",
    "MetricRegistry",
    "QuadratureScheme",
    "Residual",
    "RunConfig",
    "StructureClassifier",
    "StructureMetricField",
    "Verdict",
    "averaged_connection",
    "averaged_metric",
    "berwald_coefficients",
    "berwald_test",
    "build_structure",
    "cartan_tensor",
    "check_homogeneity",
    "chern_coefficients",
    "convexity_of_average",
    "convexity_scan",
    "difference_tensor",
    "eval_jet",
    "formal_christoffel",
    "fundamental_tensor",
    "holonomy_classify",
    "holonomy_sample",
    "horizontal_transport",
    "integrate_geodesic",
    "interpolated_indicatrix_test",
    "landsberg_derivative",
    "landsberg_test",
    "linear_change",
    "load_run_config",
    "nonlinear_connection",
    "parse_metric",
    "pullback_connection",
    "rigidity_test",
    "sample_indicatrix",
    "transport_along",
]
