"""Pseudo-spectral phase field crystal solver with a variable-step BDF2-SAV scheme."""
from .adaptive import AdaptiveParams, STABLE_RATIO, next_step_size, ratio_root
from .config import ConfigError, RunConfig, load_config, parse_config
from .integrator import SavStepper, StepState, bdf2_coefficients, bdf2_step, first_order_step
from .model import C0Policy, ModelParams, modified_energy, original_energy, sav_r
from .runner import RunError, convergence_study, run, space_study
from .scenarios import MeshPlan
from .spectral import Grid

__version__ = "0.1.0"
