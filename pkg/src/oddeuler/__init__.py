"""2D Euler on the torus in the odd-odd symmetry class, with diagnostics."""

from .biot_savart import (LatticeSumParams, VelocityField, velocity_direct,
                          velocity_spectral)
from .cli import ScenarioConfig, Thresholds, run_scenario
from .diagnostics import (DiagnosticsRecord, DiagnosticsSeries, bj_residual,
                          growth_fit, key_integral, logsum_drift)
from .evolution import (EvolutionParams, Monitors, MonitorThresholds,
                        dealias_cutoff, energy, enstrophy, initial_state,
                        run, step, trace)
from .fields import (GridField, SpectralField, SubdomainBox, derivative,
                     sup_norm_on, to_grid, to_spectral)
from .initial_data import InitialDataSpec, audit, build, spectral_projection

__all__ = [
    "SpectralField",
    "GridField",
    "SubdomainBox",
    "to_grid",
    "to_spectral",
    "derivative",
    "sup_norm_on",
    "VelocityField",
    "LatticeSumParams",
    "velocity_spectral",
    "velocity_direct",
    "InitialDataSpec",
    "build",
    "audit",
    "spectral_projection",
    "EvolutionParams",
    "Monitors",
    "MonitorThresholds",
    "dealias_cutoff",
    "energy",
    "enstrophy",
    "initial_state",
    "step",
    "run",
    "trace",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "key_integral",
    "bj_residual",
    "logsum_drift",
    "growth_fit",
    "ScenarioConfig",
    "Thresholds",
    "run_scenario",
]
