use std::path::PathBuf;

use calpha_core::im_test::HeterogeneityScale;
use calpha_simlab::{CovariateScheme, HeterogeneityForm, ModelKind, TestChoice, UDist};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(
    name = "calpha",
    version,
    about = "C(alpha) tests for unobserved parameter heterogeneity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the null model to a CSV dataset and run a heterogeneity test.
    Test(TestArgs),
    /// Run a seeded size/power experiment.
    Simulate(SimulateArgs),
    /// Compare the information-matrix test with the C(alpha) test.
    CompareIm(CompareImArgs),
    /// Asymptotic local power of the one-sided test.
    PredictPower(PowerArgs),
    /// Draw one dataset and write it as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report format.
    #[arg(long = "out", value_enum, default_value = "json")]
    pub format: Format,
    /// Report path; standard output when omitted.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// poisson-secmom, poisson-factorial, cox-exp, cox-weibull,
    /// cox-weibull-published or gaussian-panel.
    #[arg(long)]
    pub model: TestChoice,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Generator settings shared by `simulate` and `generate`.
#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Observations (individuals for panels).
    #[arg(long = "n", visible_alias = "N")]
    pub n: usize,
    /// Periods per individual (panels only).
    #[arg(long = "T", visible_alias = "periods")]
    pub periods: Option<usize>,
    /// Poisson base mean; sets beta0 = ln(lambda0). Default 2.
    #[arg(long, conflicts_with = "beta0")]
    pub lambda0: Option<f64>,
    /// Intercept. Default 0 for durations.
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: Option<f64>,
    /// Covariate coefficient; required with --covariates.
    #[arg(long, allow_hyphen_values = true)]
    pub beta1: Option<f64>,
    #[arg(long, default_value = "none")]
    pub covariates: CovariateScheme,
    /// Weibull shape. Default 1.5.
    #[arg(long)]
    pub shape: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Heterogeneity magnitude.
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
    /// Local alternative: xi = delta * n^(-1/4).
    #[arg(long, conflicts_with = "xi")]
    pub delta: Option<f64>,
    /// Variance heterogeneity (panels only).
    #[arg(long, default_value_t = 0.0)]
    pub xi2: f64,
    #[arg(long = "u-dist", default_value = "gaussian")]
    pub u_dist: UDist,
    #[arg(long, default_value = "multiplicative_exp")]
    pub form: HeterogeneityForm,
    /// Master seed; a fresh entropy seed is drawn and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Test to evaluate; the generating model follows from it.
    #[arg(long)]
    pub model: TestChoice,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Worker threads; defaults to CALPHA_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// poisson, exponential_ph, weibull_ph or gaussian_panel.
    #[arg(long)]
    pub model: ModelKind,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// CSV path; standard output when omitted.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Poisson,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct CompareImArgs {
    /// `y,x1..xk` CSV; counts for Poisson, reals for Gaussian.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "poisson")]
    pub family: Family,
    /// Heterogeneity scale k(λ): constant, identity or sqrt.
    #[arg(long, default_value = "identity")]
    pub scale: HeterogeneityScale,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    /// Residual information J_ξξ·θ.
    #[arg(long = "j-resid")]
    pub j_resid: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}
