"""Evaluation metrics: mode coverage and the Geometry Score."""
from .geometry_score import GeometryScoreReport, geometry_score, mrlt_profile
from .modes import ModeReport, mode_coverage

__all__ = ["GeometryScoreReport", "geometry_score", "mrlt_profile", "ModeReport", "mode_coverage"]
