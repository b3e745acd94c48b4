//! Experiment runner around `xsb-core`: TOML-configurable norm surveys,
//! bilinear multiplier cross-checks, inequality quotient searches,
//! concentration growth fits and local solves, each emitting a CSV report
//! plus a JSON sidecar that pins down exactly what ran.
//!
//! Everything routes through [`run_config`]; the `xsb` binary is a thin
//! argument-parsing shell over it.  Given equal configs the emitted files
//! are byte-identical across runs and thread counts.

mod config;
mod presets;
mod runner;

pub use config::{
    BilinearSection, CounterexampleSection, ExperimentConfig, ExperimentKind, NormSection,
    ParamsSection, PresetSection, QuotientSection, SolveSection, DEFAULT_SEED,
};
pub use presets::{extra_cases, find_any_case, find_preset, list_presets, presets, Preset};
pub use runner::{default_geometry_spec, run_config, CliError, RunArtifacts};
