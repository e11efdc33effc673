"""Estimators built on the dynamics: hitting exponents and the other measured quantities."""

from loglaw.estimators.correlation import (
    CorrelationCurve,
    Observable,
    cat_mode_series,
    cat_mode_series_correlation,
    classify,
    constant,
    correlation_curve,
    cosine,
)
from loglaw.estimators.cylinder import CylinderEstimate, DimensionEstimate, conditional_dimension, cylinder_measure
from loglaw.estimators.excursion import (
    CuspCurve,
    ExcursionCurve,
    ExcursionEnsemble,
    cusp_excursion,
    excursion_curve,
    excursion_ensemble,
    geometric_grid,
)
from loglaw.estimators.fitting import ExponentFit, LineFit, RadiusSchedule, fit_hitting_exponent, loglog_fit
from loglaw.estimators.hitting import (
    HitRecord,
    HitTable,
    default_t_max,
    ensemble_hits,
    flow_first_entry,
    hitting_exponent,
    hitting_time,
    per_radius_ratio,
    run_ensemble,
)
from loglaw.estimators.section import SectionReport, section_check

__all__ = [
    "CorrelationCurve", "Observable", "cat_mode_series", "cat_mode_series_correlation", "classify", "constant",
    "correlation_curve", "cosine",
    "CylinderEstimate", "DimensionEstimate", "conditional_dimension", "cylinder_measure",
    "CuspCurve", "ExcursionCurve", "ExcursionEnsemble", "cusp_excursion", "excursion_curve", "excursion_ensemble",
    "geometric_grid",
    "ExponentFit", "LineFit", "RadiusSchedule", "fit_hitting_exponent", "loglog_fit",
    "HitRecord", "HitTable", "default_t_max", "ensemble_hits", "flow_first_entry", "hitting_exponent",
    "hitting_time", "per_radius_ratio", "run_ensemble",
    "SectionReport", "section_check",
]
