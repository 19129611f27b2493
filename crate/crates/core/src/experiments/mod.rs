//! Observables, ensembles, and the two-reactor comparison.

mod ensemble;
mod observables;
mod stats;

pub use ensemble::{
    compare_environments, composition_l1, ensemble_run, stationarity_check, Comparison,
    ComparisonReport, Ensemble, EnsembleOptions, EnsembleReport, EnsembleStats, RunSummary,
    Scenario, SeedDistance, Stationarity, FORMAT_VERSION,
};
pub use observables::{max_species_length, richness, total_mass, trapped_catalyst_pool};
pub use stats::{
    coefficient_of_variation, ks_exponential, mean, median, paired_t_test, variance, TestResult,
};
