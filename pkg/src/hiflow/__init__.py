"""Gradient flows of closed plane curves for the energies
alpha * length + beta * int |d^m nu / ds^m|^2 ds."""

from .diagnostics import DiagnosticsRecord, fit_circle, hausdorff_distance, measure, measure_curve
from .energy import EnergyReport, energy, gradient_exact, gradient_fd, normal_speed_analytic_m1
from .errors import (BlowupError, ConfigError, DegenerateCurveError, HiflowError, LinesearchFailure,
                     NonUniformGridError, SnapshotParseError)
from .flow import FlowConfig, FlowState, Trajectory, circle_radius_ode, run_curve_shortening, run_flow
from .geometry import DiscreteCurve, compute_geometry, generate_curve, read_snapshot, resample_uniform, write_snapshot

__version__ = "0.1.0"

__all__ = [
    "BlowupError", "ConfigError", "DegenerateCurveError", "DiagnosticsRecord", "DiscreteCurve",
    "EnergyReport", "FlowConfig", "FlowState", "HiflowError", "LinesearchFailure",
    "NonUniformGridError", "SnapshotParseError", "Trajectory", "circle_radius_ode",
    "compute_geometry", "energy", "fit_circle", "generate_curve", "gradient_exact", "gradient_fd",
    "hausdorff_distance", "measure", "measure_curve", "normal_speed_analytic_m1", "read_snapshot",
    "resample_uniform", "run_curve_shortening", "run_flow", "write_snapshot", "__version__",
]
