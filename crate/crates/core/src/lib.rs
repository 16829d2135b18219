//! Equilibrium Glauber (birth-and-death) and Kawasaki (hopping) dynamics whose
//! reversible measure is a determinantal point process on a finite weighted
//! site set, together with exact finite-state oracles for every identity the
//! dynamics rely on.

pub mod cli;
pub mod configuration;
pub mod ctmc;
pub mod error;
pub mod export;
pub mod generator;
pub mod kernel;
pub mod linalg;
pub mod measure;
pub mod papangelou;
pub mod rates;

pub use configuration::Configuration;
pub use error::{Error, Result};
pub use kernel::{
    build_kernel, validate_kernel, InteractionOperator, KernelDiagnostics, KernelOperator, KernelOptions, KernelSpec,
    SiteSpace, WeightRule,
};
pub use papangelou::{bound_check, intensity, intensity_profile, IntensityProfile, IntensityTracker};
pub use measure::{
    config_probability, estimate_correlation, exact_distribution, mecke_check, sample, DppSampler, MeasureTable,
};
pub use rates::{
    balance_residual, condition_diagnostics, ConditionReport, DynamicsKind, MobilitySpec, RateFamily, RATE_CEILING,
};
pub use generator::{
    build_generator, dirichlet_form, DirichletForm, generator_form, glauber_generator, kawasaki_generator, reversibility_check,
    spectral_analysis, GeneratorMatrix, SpectralOptions, SpectralReport,
};
pub use ctmc::{
    compare_with_measure, occupancy_stats, simulate, simulate_replicas, stationarity_test, InitialState, OccupancyStats, SimConfig,
    Simulator, StationarityReport, Trajectory, Transition,
};
