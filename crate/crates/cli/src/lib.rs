//! The `calpha` command-line tool: CSV ingestion, tests, simulation
//! campaigns, IM comparison and versioned reports.

pub mod args;
pub mod error;
pub mod ingest;
pub mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use calpha_core::data::ObservationSet;
use calpha_core::im_test::{check_equivalence, ImModel};
use calpha_core::mle::{fit_gaussian_regression, fit_poisson};
use calpha_simlab::{
    generate, local_xi, power_prediction, size_power_experiment, threads_from_env, with_threads, GeneratorSpec,
    ModelKind,
};
use serde_json::Value;

pub use args::{Cli, Command};
pub use error::{Error, Result};
pub use ingest::{ingest, ingest_reader, write_observations, DataKind};

use args::{CompareImArgs, Family, GenerateArgs, OutputArgs, PowerArgs, SimulateArgs, SpecArgs, TestArgs};
use report::{Seed, SeedSource};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Usage(format!("--alpha must lie in (0, 0.5), got {alpha}")))
    }
}

fn resolve_seed(seed: Option<u64>) -> Seed {
    match seed {
        Some(value) => Seed {
            value,
            source: SeedSource::Flag,
        },
        None => {
            let value = rand::random::<u64>();
            eprintln!("calpha: no --seed given, using entropy seed {value}");
            Seed {
                value,
                source: SeedSource::Entropy,
            }
        }
    }
}

/// Builds the generator spec for `model` from command-line settings.
pub fn build_spec(model: ModelKind, a: &SpecArgs) -> Result<GeneratorSpec> {
    let mut spec = match model {
        ModelKind::Poisson => {
            let mut s = GeneratorSpec::poisson(a.lambda0.unwrap_or(2.0), a.n);
            if let Some(b0) = a.beta0 {
                s.nuisance = vec![("beta0".into(), b0)];
            }
            s
        }
        ModelKind::ExponentialPh => GeneratorSpec::exponential(a.beta0.unwrap_or(0.0), a.n),
        ModelKind::WeibullPh => GeneratorSpec::weibull(a.beta0.unwrap_or(0.0), a.shape.unwrap_or(1.5), a.n),
        ModelKind::GaussianPanel => {
            let t = a
                .periods
                .ok_or_else(|| Error::Usage("gaussian panels need --T (periods per individual)".into()))?;
            GeneratorSpec::gaussian_panel(a.mu, a.sigma2, a.n, t)
        }
    };
    if model != ModelKind::Poisson && a.lambda0.is_some() {
        return Err(Error::Usage("--lambda0 only applies to Poisson data".into()));
    }
    if a.covariates != calpha_simlab::CovariateScheme::None {
        let b1 = a
            .beta1
            .ok_or_else(|| Error::Usage("--covariates needs --beta1".into()))?;
        spec = spec.with_covariate(a.covariates, b1);
    }
    let xi = match a.delta {
        Some(d) => local_xi(d, a.n),
        None => a.xi,
    };
    spec = spec.with_xi(xi).with_xi2(a.xi2).with_u(a.u_dist).with_form(a.form);
    spec.validate()?;
    Ok(spec)
}

fn emit(doc: &Value, out: &OutputArgs) -> Result<()> {
    match &out.output {
        Some(path) => {
            let target = path.display().to_string();
            let file = File::create(path).map_err(|e| Error::Write {
                target: target.clone(),
                message: e.to_string(),
            })?;
            let mut w = BufWriter::new(file);
            report::write(&mut w, doc, out.format, &target)?;
            w.flush().map_err(|e| Error::Write {
                target,
                message: e.to_string(),
            })
        }
        None => report::write(std::io::stdout().lock(), doc, out.format, "stdout"),
    }
}

fn run_test(a: &TestArgs) -> Result<()> {
    check_alpha(a.alpha)?;
    let data = ingest(&a.data, DataKind::of(a.model.model()))?;
    let (fit, rep) = a.model.fit_and_run(&data, a.alpha)?;
    let doc = report::envelope("test", None, report::test_result(&rep, &fit, data.kind()));
    emit(&doc, &a.out)
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    check_alpha(a.alpha)?;
    let spec = build_spec(a.model.model(), &a.spec)?;
    let seed = resolve_seed(a.spec.seed);
    let threads = a.threads.or_else(threads_from_env);
    if threads == Some(0) {
        return Err(Error::Usage("--threads must be positive".into()));
    }
    let sim = with_threads(threads, || {
        size_power_experiment(&spec, a.model, a.alpha, a.reps, seed.value)
    })??;
    let doc = report::envelope("simulate", Some(seed), report::simulation_result(&sim));
    emit(&doc, &a.out)
}

fn run_compare_im(a: &CompareImArgs) -> Result<()> {
    let (eq, n, beta, family) = match a.family {
        Family::Poisson => {
            let d = match ingest(&a.data, DataKind::Counts)? {
                ObservationSet::Counts(d) => d,
                _ => unreachable!("counts schema yields counts"),
            };
            let beta = fit_poisson(&d)?.estimates;
            let eq = check_equivalence(&ImModel::Poisson { data: &d, beta: &beta }, a.scale)?;
            (eq, d.n(), beta, "poisson")
        }
        Family::Gaussian => {
            let d = ingest::ingest_regression(&a.data)?;
            let beta = fit_gaussian_regression(&d)?.beta();
            let eq = check_equivalence(&ImModel::Gaussian { data: &d, beta: &beta }, a.scale)?;
            (eq, d.n(), beta, "gaussian")
        }
    };
    let doc = report::envelope(
        "compare-im",
        None,
        report::equivalence_result(&eq, family, a.scale, n, &beta),
    );
    emit(&doc, &a.out)
}

fn run_predict_power(a: &PowerArgs) -> Result<()> {
    let p = power_prediction(a.delta, a.j_resid, a.alpha)?;
    let doc = report::envelope(
        "predict-power",
        None,
        report::power_result(a.delta, a.j_resid, a.alpha, p),
    );
    emit(&doc, &a.out)
}

fn run_generate(a: &GenerateArgs) -> Result<()> {
    let spec = build_spec(a.model, &a.spec)?;
    let seed = resolve_seed(a.spec.seed);
    let g = generate(&spec, seed.value)?;
    match &a.output {
        Some(path) => {
            let target = path.display().to_string();
            let file = File::create(path).map_err(|e| Error::Write {
                target: target.clone(),
                message: e.to_string(),
            })?;
            write_observations(BufWriter::new(file), &g.data, &target)
        }
        None => write_observations(std::io::stdout().lock(), &g.data, "stdout"),
    }
}

/// Executes one parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Test(a) => run_test(a),
        Command::Simulate(a) => run_simulate(a),
        Command::CompareIm(a) => run_compare_im(a),
        Command::PredictPower(a) => run_predict_power(a),
        Command::Generate(a) => run_generate(a),
    }
}

/// Reads a dataset written by `generate` back in.
pub fn reingest(path: &Path, model: ModelKind) -> Result<ObservationSet> {
    ingest(path, DataKind::of(model))
}
