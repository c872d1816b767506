//! Peak shaving for an islanded combined heat and power microgrid with
//! district cooling and chilled-water thermal storage.

pub mod config;
pub mod cooling;
pub mod optimizer;
pub mod plant;
pub mod regression;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod synth;

pub use config::{ConfigError, ConfigFile};
pub use cooling::{CopModel, StorageSchedule, TesConfig};
pub use optimizer::{OptimalSchedule, ScheduleProblem, SolveError, SolverOptions};
pub use plant::PlantConfig;
pub use report::RunReport;
pub use runner::{run_fixed_schedule, run_optimization, PMeanMode, RunOutcome};
pub use scenario::{load_scenario, no_storage_baseline, Models, Scenario};
pub use synth::{generate_synthetic, SynthParams};
