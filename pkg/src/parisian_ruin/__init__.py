"""Parisian ruin asymptotics for a two-dimensional Brownian risk model."""

from .analytics import (ConstantSpec, LimitConstants, c4_drift_constants, grid_minimize_q,
                        quadratic_form, required_constants, single_ruin_prob, std_normal,
                        theoretical_ratio_limit)
from .config import ExperimentConfig, load_config, parse_config
from .constants import ConstantEstimate, estimate_Cp, estimate_H, estimate_P, estimate_R
from .errors import (AssemblyError, InconsistentBranchError, InsufficientSamplesError,
                     ParameterError, ParisianError, SimulationQualityError)
from .harness import ExperimentReport, emit_report, run_experiment
from .kernels import BACKEND
from .model import (LocalExponents, ModelParams, OptimizerPoint, Regime, RegimeTag,
                    classify_regime, critical_rho, local_exponents, normalize_barriers,
                    optimizer_point, t_star)
from .pathsim import (BivariatePath, GridSpec, TiltConfig, default_tilt, detect_classical,
                      detect_parisian, estimate_conditional_ratio, estimate_sup_prob, sample_path,
                      sample_paths)

__version__ = "0.1.0"
