"""STAR-RIS wireless-powered MEC computation-rate optimization."""

from ._core import (  # noqa: F401
    AllocationState,
    BruteForceGrids,
    BruteForceResult,
    ChannelSet,
    Direction,
    ExperimentConfig,
    GeometrySpec,
    LpProblem,
    LpSolution,
    LpStatus,
    PathLossParams,
    Protocol,
    RateReport,
    Side,
    SolveOptions,
    SolveReport,
    StarCoefficients,
    SystemParams,
    UePlacement,
    alternate_es,
    brute_force_small,
    compose_channel,
    conventional_ris_solve,
    evaluate,
    generate_channels,
    harvested_energy,
    load_config,
    local_bits_and_energy,
    offload_bits,
    sample_placement,
    search_tau0_es,
    solve_lp,
    solve_ms,
    solve_ts,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
