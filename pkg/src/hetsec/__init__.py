"""Secrecy-rate resource allocation for D2D-underlaid two-tier networks.

The package splits into a scenario layer (configuration, topology, channel
sampling), a metric layer (SINRs and secrecy capacities for a fixed operating
point), the optimization core (spectral machinery and the per-subcarrier
power solver), scheduling (per-cell heuristic and exhaustive search),
reference schemes, and a Monte-Carlo harness with a CLI front end.
"""

from .errors import (ConfigurationError, ConvergenceError,
                     DegenerateChannelError, HetsecError, InfeasibleRateError,
                     SearchSpaceError)
from .netmodel import (ChannelSet, NetworkConfig, Topology, dbm_to_watt,
                       default_config, desk_config, generate_topology,
                       load_config, sample_channels, watt_to_dbm, write_config)
from .linkmetrics import (Allocation, PowerProfile, SecrecyReport, SinrReport,
                          eve_sinrs, legit_sinrs, network_secrecy,
                          qos_feasible, secrecy_capacity, sinr_report,
                          uniform_power)
from .spectral import (NormalizedSystem, PfEigenpair, SubcarrierProblem,
                       build_subcarrier_problem, log_spectral_radius,
                       normalize_system, perron_eigenpair, perron_pairs_batch,
                       power_from_rates, rates_from_power, sinr_from_power)
from .solver import (NetworkSolution, SolverOptions, SubcarrierSolution,
                     outer_solve, power_profile_from_solutions, solve_network)
from .suballoc import (CellAssignment, CellProblem, allocate_exhaustive,
                       allocate_heuristic, build_cell_problems, solve_cell)
from .baselines import (BaselineResult, evaluate_profile, fixed_power,
                        interference_avoidance, orthogonal_allocation,
                        proposed, upper_bound)
from .harness import (ExperimentSpec, SnapshotResult, run_experiment,
                      run_snapshot, write_csv)

__all__ = [
    "Allocation", "BaselineResult", "CellAssignment", "CellProblem",
    "ChannelSet", "ConfigurationError", "ConvergenceError",
    "DegenerateChannelError", "ExperimentSpec", "HetsecError",
    "InfeasibleRateError", "NetworkConfig", "NetworkSolution",
    "NormalizedSystem", "PfEigenpair", "PowerProfile", "SearchSpaceError",
    "SecrecyReport", "SinrReport", "SnapshotResult", "SolverOptions",
    "SubcarrierProblem", "SubcarrierSolution", "Topology",
    "allocate_exhaustive", "allocate_heuristic", "build_cell_problems",
    "build_subcarrier_problem", "dbm_to_watt", "default_config",
    "desk_config", "evaluate_profile", "eve_sinrs", "fixed_power",
    "generate_topology", "interference_avoidance", "legit_sinrs",
    "load_config", "log_spectral_radius", "network_secrecy",
    "normalize_system", "orthogonal_allocation", "outer_solve",
    "perron_eigenpair", "perron_pairs_batch", "power_from_rates",
    "power_profile_from_solutions", "proposed", "qos_feasible",
    "rates_from_power", "run_experiment", "run_snapshot", "sample_channels",
    "secrecy_capacity", "sinr_from_power", "sinr_report", "solve_cell",
    "solve_network", "uniform_power", "upper_bound", "watt_to_dbm",
    "write_config", "write_csv",
]
