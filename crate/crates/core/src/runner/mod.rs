//! Orchestration: configuration, ensembles, sweeps, phase diagrams and the
//! classical control run, with reproducible file output.

pub mod analysis;
pub mod config;
pub mod control;
pub mod ensemble;
pub mod io;
pub mod manifest;
pub mod phase;
pub mod sweep;

pub use analysis::{analyse_curves, analyse_dataset, write_analysis, Analysis, AnalysisOptions};
pub use config::{epsilon_of_k, Preset, RunConfig};
pub use control::{run_classical_check, write_classical_check, ClassicalPoint};
pub use ensemble::{run_ensemble, with_workers, workers_from_env, Ensemble};
pub use phase::{run_phase_diagram, write_phase_diagram, PhaseDiagram};
pub use sweep::{run_sweep, SweepOutcome};
