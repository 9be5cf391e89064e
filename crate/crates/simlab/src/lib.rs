//! Monte Carlo laboratory for the heterogeneity tests in `calpha_core`.
//!
//! Every replication draws from its own ChaCha8 generator keyed by
//! `(master_seed, replication, stream)`, and results are aggregated in
//! replication order, so reports are bit-identical under any thread count.

// `!(x > 0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod diagnostics;
mod error;
mod experiment;
mod generate;
mod rng;
mod spec;

pub use diagnostics::{
    lan_diagnostic, local_xi, plugin_diagnostic, plugin_discrepancy, power_prediction, LanSummary, PluginSummary,
};
pub use error::{Error, Result};
pub use experiment::{size_power_experiment, Moments, SimulationReport, TestChoice};
pub use generate::{generate, generate_replication, Generated};
pub use rng::{replication_rng, threads_from_env, with_threads, Stream, SEED_RULE};
pub use spec::{CovariateScheme, GeneratorSpec, HeterogeneityForm, ModelKind, UDist};
