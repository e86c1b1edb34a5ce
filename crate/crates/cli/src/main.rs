//! Command-line front end: simulate, fit-complete, fit-stem, variance.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid data, 3 numerical failure.
//! Failures print a JSON object on stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use epinet::error::Error;
use epinet::estimate::{fit_complete, FitOptions};
use epinet::io::{self, ChainMeta, FitOutput, SimulationConfig, SCHEMA_VERSION};
use epinet::observed::ObservedData;
use epinet::simulate::{simulate, simulate_until};
use epinet::stats::sufficient_statistics;
use epinet::stem::{fit_stem, InitSpec, StemConfig};
use epinet::variance::{asymptotic_se, exposure_louis_information, louis_information};

#[derive(Parser)]
#[command(name = "epinet", version, about = "SEIR epidemics on dynamic contact networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic-study config as TOML.
    ReferenceConfig {
        #[arg(long, default_value_t = 200)]
        population: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one outbreak and write its event log and covariates.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Covariate CSV path; defaults to `<out>.covariates.csv`.
        #[arg(long)]
        covariates_out: Option<PathBuf>,
        /// Resimulate until this fraction of the population has been infected.
        #[arg(long)]
        min_attack_rate: Option<f64>,
        #[arg(long, default_value_t = 100)]
        max_retries: usize,
    },
    /// Complete-data maximum likelihood estimates and score residuals.
    FitComplete {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        covariates: PathBuf,
        /// CSV `id,label` marking cases as `internal` or `external`.
        #[arg(long)]
        external_labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stochastic EM with hidden exposure and/or recovery times.
    FitStem {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        covariates: PathBuf,
        #[arg(long)]
        observed_spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 80)]
        iters: usize,
        #[arg(long, default_value_t = 60)]
        burn_in: usize,
        /// Iterates averaged per run; defaults to `iters - burn_in`.
        #[arg(long)]
        average: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_attempts: usize,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-run chains and augmented-data statistics.
        #[arg(long)]
        dump_chains: Option<PathBuf>,
    },
    /// Louis information and standard errors from dumped chains.
    Variance {
        #[arg(long)]
        chains: PathBuf,
        /// Fit output whose estimates are the evaluation point.
        #[arg(long)]
        at: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code: u8 = if e.is_numerical() { 3 } else { 2 };
            let kind = if code == 3 { "numerical" } else { "validation" };
            eprintln!("{}", json!({ "error": kind, "exit_code": code, "message": e.to_string() }));
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::ReferenceConfig { population, out } => {
            let text = io::config_to_toml(&SimulationConfig::reference(population))?;
            std::fs::write(out, text)?;
            Ok(())
        }
        Command::Simulate { config, seed, out, covariates_out, min_attack_rate, max_retries } => {
            let cfg = io::read_config(&config)?;
            cfg.params.validate(cfg_dim(&cfg))?;
            let sim_cfg = cfg.to_sim_config(seed)?;
            let (sim, attempts) = match min_attack_rate {
                Some(r) => simulate_until(&cfg.params, &sim_cfg, r, max_retries)?,
                None => (simulate(&cfg.params, &sim_cfg)?, 1),
            };
            io::write_event_log(&sim.log, &out)?;
            let cov_path = covariates_out.unwrap_or_else(|| sibling(&out, "covariates.csv"));
            io::write_covariates(&sim.covariates, &cov_path)?;
            eprintln!(
                "{}",
                json!({ "events": sim.log.events().len(), "attack_rate": sim.attack_rate(), "attempts": attempts, "ended_early": sim.ended_early })
            );
            Ok(())
        }
        Command::FitComplete { events, covariates, external_labels, out } => {
            let mut log = io::read_event_log(&events)?;
            let cov = io::read_covariates(&covariates)?;
            if let Some(path) = external_labels {
                let labels = io::read_external_labels(&path, log.population())?;
                log = io::apply_external_labels(&log, &labels)?;
            }
            let stats = sufficient_statistics(&log, &cov)?;
            let fit = fit_complete(&stats, &cov, &FitOptions::default())?;
            let layout = fit.layout;
            let mut diagnostics = BTreeMap::new();
            diagnostics.insert("epidemic_iterations".into(), json!(fit.epidemic_iterations));
            diagnostics.insert("max_interior_score".into(), json!(fit.max_interior_score()));
            let output = FitOutput {
                schema_version: SCHEMA_VERSION,
                method: "complete".into(),
                estimates: io::named(&layout, &layout.to_vec(&fit.params)),
                status: io::named(&layout, &fit.status),
                score: io::named(&layout, &fit.score),
                standard_errors: BTreeMap::new(),
                diagnostics,
            };
            io::write_json(&output, &out)
        }
        Command::FitStem {
            events,
            covariates,
            observed_spec,
            runs,
            iters,
            burn_in,
            average,
            seed,
            max_attempts,
            out,
            dump_chains,
        } => {
            let log = io::read_event_log(&events)?;
            let cov = io::read_covariates(&covariates)?;
            let spec = io::read_observed_spec(&observed_spec)?;
            let obs = ObservedData::from_log(&log, &cov, &spec)?;
            let cfg = StemConfig {
                burn_in,
                total_iters: iters,
                m_it: average.unwrap_or(iters.saturating_sub(burn_in)),
                m_runs: runs,
                seed,
                max_attempts,
                init: InitSpec::Random,
                ..StemConfig::default()
            };
            let fit = fit_stem(&obs, &cfg)?;
            let layout = fit.chains[0].layout;
            let held = cfg.fit.fixed.indices(&layout);
            let multiplier = fit.averaging.multiplier(runs);
            let quadrature = obs.hidden_recoveries().is_empty() && !layout.external;
            let info = if quadrature {
                exposure_louis_information(&obs, &fit.estimate, &held)?
            } else {
                louis_information(&fit.samples(), &cov, &fit.estimate, &held)?
            };
            let se = asymptotic_se(&info, multiplier).unwrap_or_else(|_| vec![None; layout.len()]);
            let acceptance = fit.acceptance();
            let mut diagnostics = BTreeMap::new();
            diagnostics.insert("runs".into(), json!(runs));
            diagnostics.insert("iterations".into(), json!(iters));
            diagnostics.insert("burn_in".into(), json!(burn_in));
            diagnostics.insert("averaged_iterations".into(), json!(cfg.m_it));
            diagnostics.insert("seed".into(), json!(seed));
            diagnostics.insert("se_multiplier".into(), json!(multiplier));
            diagnostics.insert("information_method".into(), json!(if quadrature { "quadrature" } else { "augmented_samples" }));
            diagnostics.insert("information_positive_definite".into(), json!(info.positive_definite));
            diagnostics.insert("proposals".into(), json!(acceptance.proposed));
            diagnostics.insert("accepted".into(), json!(acceptance.accepted));
            diagnostics.insert("repairs".into(), json!(fit.chains.iter().map(|c| c.repairs).sum::<usize>()));
            let status = &fit.chains[fit.chains.len() - 1].status;
            let output = FitOutput {
                schema_version: SCHEMA_VERSION,
                method: "stem".into(),
                estimates: io::named(&layout, &layout.to_vec(&fit.estimate)),
                status: io::named(&layout, status),
                score: BTreeMap::new(),
                standard_errors: io::named(&layout, &se),
                diagnostics,
            };
            if let Some(dir) = dump_chains {
                let names = layout.names();
                let meta = ChainMeta {
                    schema_version: SCHEMA_VERSION,
                    names: names.clone(),
                    runs,
                    total_iters: iters,
                    burn_in,
                    m_it: cfg.m_it,
                    seed,
                    fixed: held.iter().map(|&k| names[k].clone()).collect(),
                    covariates: cov.clone(),
                };
                io::write_chains(&dir, &meta, &fit.chains)?;
            }
            io::write_json(&output, &out)
        }
        Command::Variance { chains, at, out } => {
            let (meta, dumps) = io::read_chains(&chains)?;
            let fit: FitOutput = io::read_json(&at)?;
            let layout = io::layout_from_names(&fit.estimates)?;
            if layout.names() != meta.names {
                return Err(Error::Invalid("estimate names differ from the chain layout".into()));
            }
            let point = io::parameters_from_map(&layout, &fit.estimates)?;
            let held: Vec<usize> =
                meta.fixed.iter().filter_map(|n| meta.names.iter().position(|m| m == n)).collect();
            let samples: Vec<_> = dumps.into_iter().flat_map(|d| d.samples).collect();
            let info = louis_information(&samples, &meta.covariates, &point, &held)?;
            let multiplier = 1.0 + 0.5 / meta.runs as f64;
            let se = asymptotic_se(&info, multiplier).unwrap_or_else(|_| vec![None; layout.len()]);
            let names = layout.names();
            let active: Vec<&str> = info.active.iter().map(|&k| names[k].as_str()).collect();
            let matrix: Vec<Vec<f64>> = (0..info.observed.rows()).map(|i| info.observed.row(i).to_vec()).collect();
            let output = json!({
                "schema_version": SCHEMA_VERSION,
                "samples": info.samples,
                "se_multiplier": multiplier,
                "positive_definite": info.positive_definite,
                "active": active,
                "observed_information": matrix,
                "standard_errors": io::named(&layout, &se),
            });
            io::write_json(&output, &out)
        }
    }
}

fn cfg_dim(cfg: &SimulationConfig) -> usize {
    cfg.params.b_s.len()
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}
