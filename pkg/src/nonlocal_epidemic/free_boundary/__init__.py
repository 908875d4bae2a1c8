"""Moving-front integrator, run classification, threshold search and oracles."""
from .classify import (Classification, LedgerEntry, Monitor, MuStarResult, Tag, Trigger,
                       VanishingCertificate, classify, classify_params, find_mustar)
from .diagnostics import MassDiagnostic, comparison_check, frame_mass, mass_diagnostic
from .evolve import BOUND_TOL, Frame, RunResult, Violation, evolve, first_moment, suggest_dt
from .picard import DeltaBounds, PicardResult, contraction_horizon, delta_bounds, picard_reference

__all__ = [
    "BOUND_TOL", "Classification", "DeltaBounds", "Frame", "LedgerEntry", "MassDiagnostic", "Monitor",
    "MuStarResult", "PicardResult", "RunResult", "Tag", "Trigger", "VanishingCertificate", "Violation",
    "classify", "classify_params", "comparison_check", "contraction_horizon", "delta_bounds", "evolve",
    "find_mustar", "first_moment", "frame_mass", "mass_diagnostic", "picard_reference", "suggest_dt",
]
