"""Markov-chain model and slot-level simulator of sectored CBAP contention."""

from ._core import (
    CbapError,
    DropPolicy,
    ModelParams,
    SectorModel,
    WindowConvention,
    analyze,
    derive_sector_models,
    derive_timings,
    empirical_report,
    eta_terms,
    frame_airtime,
    parse_settings,
    resolve_params,
    run_simulation,
    solve_fixed_point,
    sweep_csv,
    tau_of,
    validate_grid,
)

__all__ = [
    "CbapError",
    "DropPolicy",
    "ModelParams",
    "SectorModel",
    "WindowConvention",
    "analyze",
    "derive_sector_models",
    "derive_timings",
    "empirical_report",
    "eta_terms",
    "frame_airtime",
    "parse_settings",
    "resolve_params",
    "run_simulation",
    "solve_fixed_point",
    "sweep_csv",
    "tau_of",
    "validate_grid",
]
