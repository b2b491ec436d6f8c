//! Experiment orchestration behind the `isp` binary: forward runs,
//! inversions, round trips and stability sweeps, with their file formats.

mod commands;
mod config;
pub mod io;

pub use commands::{
    cmd_forward, cmd_invert, cmd_roundtrip, cmd_stability_sweep, coefficient_errors, data_discrepancy, invert,
    ForwardOutput, Inversion, RoundtripReport, StabilityReport, StabilityRow, WEYL_CHECK_LAMBDA,
};
pub use config::{
    ExperimentConfig, ModelSpec, PerturbationSpec, Preset, Tolerances, DEFAULT_GRID_SIZE, MIN_GRID_SIZE,
};
