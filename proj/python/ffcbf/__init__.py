"""Python bindings for the ffcbf intersection simulator."""

from ._core import (
    ConfigError,
    VehicleState,
    __version__,
    default_config,
    h0,
    h_ff,
    h_rff,
    lqr_gain,
    planar_velocity,
    run_batch,
    run_trial,
    solve_qp,
    step,
    tau_hat,
)

__all__ = [
    "ConfigError",
    "VehicleState",
    "__version__",
    "default_config",
    "h0",
    "h_ff",
    "h_rff",
    "lqr_gain",
    "planar_velocity",
    "run_batch",
    "run_trial",
    "solve_qp",
    "step",
    "tau_hat",
]
