"""Data models for shockdecomp."""

from src.models.economy import EconomySpec, ModelResponses, ShockSpec, WorkerTypeSpec
from src.models.regression import EstimationSpec, ProbitResult, RegressionResult
from src.models.run_config import RunCommand, RunConfig, Study
from src.models.simulation import GroundTruth, SimConfig
from src.models.structural import ReducedForm, SelectionBoundInputs, StructuralReport
from src.models.study import DecompositionReport, EventStudyResult, StudyWindow

__all__ = [
    "EconomySpec",
    "ModelResponses",
    "ShockSpec",
    "WorkerTypeSpec",
    "EstimationSpec",
    "ProbitResult",
    "RegressionResult",
    "RunCommand",
    "RunConfig",
    "Study",
    "GroundTruth",
    "SimConfig",
    "ReducedForm",
    "SelectionBoundInputs",
    "StructuralReport",
    "DecompositionReport",
    "EventStudyResult",
    "StudyWindow",
]
