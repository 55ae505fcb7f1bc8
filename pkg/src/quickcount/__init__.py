"""Quick-count estimation with Beta marginals joined by Gaussian copulas.

Stratified samples of polling stations are turned into per-candidate vote
share estimates, probability intervals and victory probabilities. A
Normal-Gamma model that assumes independence between strata and candidates
is included for comparison, together with a simulation harness that measures
interval coverage on fully counted frames.

``BACKEND`` is ``"compiled"`` when the extension kernels are in use and
``"python"`` for the numpy fallback.
"""
from .baseline import mn_estimate
from .calibration import CalibrationResult, calibrate_delta, coverage_rate
from .copula import lambda_interval, minimal_length_interval, pairwise_victory, victory_probability
from .dependence import estimate_dependence
from .estimates import ModelEstimate, copula_estimate
from .frame import ElectionFrame, official_totals, parse_frame, write_frame
from .harness import (EstimateReport, StudyConfig, SyntheticFrameSpec, generate_frame, render_report,
                      run_study, simulation_study)
from .kernels import BACKEND
from .posterior import fit_posteriors, summarize
from .sampling import allocate_proportional, draw_sample, ratio_estimates

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CalibrationResult", "ElectionFrame", "EstimateReport", "ModelEstimate",
    "StudyConfig", "SyntheticFrameSpec", "allocate_proportional", "calibrate_delta",
    "copula_estimate", "coverage_rate", "draw_sample", "estimate_dependence", "fit_posteriors",
    "generate_frame", "lambda_interval", "minimal_length_interval", "mn_estimate",
    "official_totals", "pairwise_victory", "parse_frame", "ratio_estimates", "render_report",
    "run_study", "simulation_study", "summarize", "victory_probability", "write_frame",
]
