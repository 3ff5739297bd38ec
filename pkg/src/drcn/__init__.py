"""Symmetric-rate evaluation for a two-user device-relaying cellular network."""

from .model import (
    ConfigError,
    DomainError,
    NetworkConfig,
    NonFiniteError,
    OrderingError,
    PowerError,
    capacity,
    capacity_plus,
    validate_config,
)
from .optimizer import (
    Box,
    SearchDomain,
    SearchError,
    SearchResult,
    Simplex,
    UnsupportedDomainError,
    refine_grid_max,
    refine_grid_max_many,
)
from .simultaneous import (
    SimRateComponents,
    TimeShare,
    UnsupportedConfigError,
    harmonic_two_way_rate,
    optimize_sim,
    sim_components,
    sim_rate_at,
)
from .separated import (
    BcPowerSplit,
    MacPowerSplit,
    SepOuterPoint,
    baseline_no_cooperation,
    bc_c_optimize,
    bc_c_rate_at,
    mac_c_optimize,
    mac_c_rate_at,
    optimize_sep,
    sep_rate_at,
)
from .figures import ReferenceDataset, SweepSpec, load_reference, run_sweep

__all__ = [
    "BcPowerSplit", "Box", "ConfigError", "DomainError", "MacPowerSplit", "NetworkConfig",
    "NonFiniteError", "OrderingError", "PowerError", "ReferenceDataset", "SearchDomain",
    "SearchError", "SearchResult", "SepOuterPoint", "SimRateComponents", "Simplex",
    "SweepSpec", "TimeShare", "UnsupportedConfigError", "UnsupportedDomainError",
    "baseline_no_cooperation", "bc_c_optimize", "bc_c_rate_at", "capacity", "capacity_plus",
    "harmonic_two_way_rate", "load_reference", "mac_c_optimize", "mac_c_rate_at",
    "optimize_sep", "optimize_sim", "refine_grid_max", "refine_grid_max_many", "run_sweep",
    "sep_rate_at", "sim_components", "sim_rate_at", "validate_config",
]
