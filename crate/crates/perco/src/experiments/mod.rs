//! Experiment drivers: validated TOML configs, grid sweeps, empty-region
//! scaling fits, and deterministic CSV/JSON/JSONL reports.

pub mod config;
pub mod decay;
pub mod report;
pub mod sweep;

pub use config::{load_config, load_config_str, ConfigError, ExperimentConfig};
pub use decay::{empty_region_decay, DecayError, DecayReport};
pub use sweep::{run_sweep, sweep_canonical, sweep_mu, SweepPoint, SweepResult};
