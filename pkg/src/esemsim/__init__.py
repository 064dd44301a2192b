"""Desk-scale simulator for a relay-aided three-cell MIMO-OFDMA downlink.

Two two-phase transmission protocols (full interference nulling and
partial, own-cell-only nulling) feed a per-cell energy-spectral-
efficiency maximizer built on the Charnes-Cooper transform and dual
decomposition, benchmarked against equal power allocation.
"""

from .errors import EsemSimError
from .network import NetworkConfig, dbm_to_watts, watts_to_dbm
from .protocol import FULL_IA, PARTIAL_IA, plan_dimensions
from .solver import solve_epa, solve_esem
from .experiment import ExperimentConfig, run_experiment

__version__ = "0.1.0"

__all__ = [
    "EsemSimError",
    "NetworkConfig",
    "ExperimentConfig",
    "FULL_IA",
    "PARTIAL_IA",
    "dbm_to_watts",
    "watts_to_dbm",
    "plan_dimensions",
    "run_experiment",
    "solve_epa",
    "solve_esem",
    "__version__",
]
