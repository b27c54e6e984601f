from .acceptance import CRITERIA, CriterionResult, distorted_square_patch, patch_test_residual, run_acceptance
from .analytical import (
    AnalyticalField,
    plate_outer_traction,
    plate_with_hole_field,
    ReferenceField,
    ring_tip_deflection,
    SolutionField,
    timoshenko_tip_deflection,
)
from .cases import (
    BenchmarkCase,
    case_cook,
    case_curved_beam,
    case_plate_with_hole,
    case_straight_beam,
    CASE_NAMES,
    cook_reference_field,
    make_case,
    TipQuantity,
)
from .oracles import q4_element_stiffness, q4_global_stiffness
from .study import CSV_HEADER, relative_L2_error, run_study, StudyRow, StudyTable

__all__ = [
    "AnalyticalField",
    "ReferenceField",
    "SolutionField",
    "plate_with_hole_field",
    "plate_outer_traction",
    "timoshenko_tip_deflection",
    "ring_tip_deflection",
    "BenchmarkCase",
    "TipQuantity",
    "case_straight_beam",
    "case_curved_beam",
    "case_cook",
    "case_plate_with_hole",
    "cook_reference_field",
    "make_case",
    "CASE_NAMES",
    "StudyRow",
    "StudyTable",
    "CSV_HEADER",
    "relative_L2_error",
    "run_study",
    "q4_element_stiffness",
    "q4_global_stiffness",
    "CriterionResult",
    "CRITERIA",
    "run_acceptance",
    "distorted_square_patch",
    "patch_test_residual",
]
