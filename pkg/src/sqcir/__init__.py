"""SQCIR mob-propagation model.

Simulation of the single-region and mobility-coupled systems, closed-form
analysis (R0, equilibria, stability, thresholds, sensitivity), Monte Carlo
mob-event ensembles and least-squares fitting.
"""
from ._backend import BACKEND
from .analytics import (
    bifurcation_sweep,
    classify_stability,
    critical_thresholds,
    effective_r,
    eigenvalues_at_mfe,
    endemic_equilibrium_closed,
    endemic_equilibrium_numeric,
    jacobian,
    mob_free_equilibrium,
    r0_next_generation,
    r0_paper,
    sensitivity_indices,
)
from .errors import SQCIRError
from .fitting import FitConfig, ObservedSeries, error_metrics, fit, generate_synthetic
from .integrator import IntegratorConfig, Trajectory, closed_form_total, integrate, integrate_network
from .io import PRESETS, __version__, load_config, load_series
from .mob import MobProcessConfig, compute_run_metrics, epsilon_schedule, run_ensemble, sample_mob_process
from .model import (
    ModelParams,
    NetworkParams,
    NetworkState,
    StateVector,
    derivative_network,
    derivative_reduced,
    in_invariant_region,
    total_population,
)
from .schedule import EpsilonSchedule, MobIntensity
