//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The report exits 0 so that a measured shortfall stays visible without
//! blocking the rest of the suite; set `ACCEPTANCE_STRICT=1` to exit 1 on
//! any FAIL.

mod common;

use std::time::Instant;

use rayon::prelude::*;

use common::suites::{self, Check};
use common::{mean, mean_abs_error, reference_outbreak};
use epinet::estimate::{fit_complete, FitOptions, FixedMask};
use epinet::impute::ProposalCount;
use epinet::likelihood::ParamLayout;
use epinet::observed::{ObservedData, ObservedSpec};
use epinet::simulate::{replicate_seed, Simulation};
use epinet::stats::sufficient_statistics;
use epinet::stem::{fit_stem, InitSpec, StemConfig, StemFit};
use epinet::variance::{asymptotic_se, exposure_louis_information};
use epinet::Parameters;

const REPS: usize = 40;
const DATA_SEED: u64 = 2024;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: usize, name: &str, result: Check, started: Instant) {
        let secs = started.elapsed().as_secs_f64();
        let (ok, msg) = match result {
            Ok(m) => (true, m),
            Err(m) => (false, m),
        };
        let line = format!("{} criterion {id} ({name}): {msg} [{secs:.0}s]", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

fn verdict(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn datasets(n: usize, master: u64) -> Vec<Simulation> {
    (0..REPS as u64).into_par_iter().map(|r| reference_outbreak(n, replicate_seed(master, r))).collect()
}

fn observe(sim: &Simulation, spec: &ObservedSpec) -> ObservedData {
    ObservedData::from_log(&sim.log, &sim.covariates, spec).expect("simulated logs are observable")
}

/// Runs stEM on every dataset; aborted fits are reported, not retried.
fn stem_fits(data: &[Simulation], spec: &ObservedSpec, cfg: &StemConfig) -> Vec<Result<StemFit, String>> {
    data.par_iter()
        .enumerate()
        .map(|(r, sim)| {
            let cfg = StemConfig { seed: replicate_seed(cfg.seed, r as u64), ..cfg.clone() };
            fit_stem(&observe(sim, spec), &cfg).map_err(|e| format!("rep {r}: {e}"))
        })
        .collect()
}

fn successes(fits: &[Result<StemFit, String>]) -> Result<Vec<&StemFit>, String> {
    let failed: Vec<&String> = fits.iter().filter_map(|f| f.as_ref().err()).collect();
    if failed.is_empty() {
        Ok(fits.iter().map(|f| f.as_ref().unwrap()).collect())
    } else {
        Err(format!("{} of {} fits aborted, first: {}", failed.len(), fits.len(), failed[0]))
    }
}

/// `(name, MAE, bound)` rows rendered as one line; all must hold.
fn mae_check(rows: &[(&str, f64, f64)]) -> Check {
    let ok = rows.iter().all(|(_, mae, bound)| mae <= bound);
    let text: Vec<String> = rows.iter().map(|(n, m, b)| format!("{n} {m:.4}/{b}")).collect();
    verdict(ok, format!("MAE {}", text.join(", ")))
}

fn complete_mle(data: &[Simulation]) -> Check {
    let truth = Parameters::reference();
    let fits: Vec<Parameters> = data
        .par_iter()
        .map(|sim| {
            let stats = sufficient_statistics(&sim.log, &sim.covariates).unwrap();
            fit_complete(&stats, &sim.covariates, &FitOptions::default()).map(|f| f.params)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let col = |f: &dyn Fn(&Parameters) -> f64| fits.iter().map(f).collect::<Vec<f64>>();
    let b_s: Vec<f64> = fits.iter().flat_map(|p| p.b_s.iter().zip(&truth.b_s).map(|(e, t)| (e - t).abs())).collect();
    let pooled = |get: &dyn Fn(&Parameters) -> [f64; 6]| {
        let t = get(&truth);
        mean(&fits.iter().flat_map(|p| get(p).into_iter().zip(t).map(|(e, t)| (e - t).abs())).collect::<Vec<_>>())
    };
    mae_check(&[
        ("beta", mean_abs_error(&col(&|p| p.beta), truth.beta), 0.072),
        ("exp_eta", mean_abs_error(&col(&|p| p.exp_eta), truth.exp_eta), 0.56),
        ("b_S", mean(&b_s), 0.45),
        ("gamma", mean_abs_error(&col(&|p| p.gamma), truth.gamma), 0.015),
        ("p_s", mean_abs_error(&col(&|p| p.p_s), truth.p_s), 0.071),
        ("phi", mean_abs_error(&col(&|p| p.phi), truth.phi), 0.032),
        ("alpha", pooled(&|p| p.alpha.flat()), 0.0014),
        ("omega", pooled(&|p| p.omega.flat()), 0.018),
    ])
}

fn stem_mae(fits: &[Result<StemFit, String>], bounds: &[(&str, f64)]) -> Check {
    let ok = successes(fits)?;
    let truth = Parameters::reference();
    let rows: Vec<(&str, f64, f64)> = bounds
        .iter()
        .map(|&(name, bound)| {
            let get = |p: &Parameters| match name {
                "beta" => p.beta,
                "gamma" => p.gamma,
                "phi" => p.phi,
                "p_s" => p.p_s,
                _ => unreachable!(),
            };
            let est: Vec<f64> = ok.iter().map(|f| get(&f.estimate)).collect();
            (name, mean_abs_error(&est, get(&truth)), bound)
        })
        .collect();
    mae_check(&rows)
}

/// Mean and standard error of per-replicate squared errors.
fn mse_band(errors: &[f64]) -> (f64, f64) {
    let m = mean(errors);
    let var = errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (errors.len() as f64 - 1.0);
    (m, (var / errors.len() as f64).sqrt())
}

/// Non-increasing in `N`, allowing one adjacent inversion that lies within
/// two combined standard errors.
fn trend_ok(bands: &[(f64, f64)]) -> bool {
    let mut inversions = 0;
    for w in bands.windows(2) {
        let ((m0, s0), (m1, s1)) = (w[0], w[1]);
        if m1 > m0 {
            inversions += 1;
            if m1 - m0 > 2.0 * (s0 * s0 + s1 * s1).sqrt() {
                return false;
            }
        }
    }
    inversions <= 1
}

fn mse_trend() -> Check {
    let truth = Parameters::reference();
    let fixed = FixedMask {
        beta: Some(truth.beta),
        phi: Some(truth.phi),
        gamma: Some(truth.gamma),
        p_s: Some(truth.p_s),
        alpha: Some(truth.alpha),
        omega: Some(truth.omega),
        ..FixedMask::default()
    };
    let start = Parameters { exp_eta: 1.0, b_s: vec![0.0; truth.b_s.len()], ..truth.clone() };
    let cfg = StemConfig {
        seed: 41,
        init: InitSpec::Given(start),
        fit: FitOptions { fixed, ..FitOptions::default() },
        ..StemConfig::default()
    };
    let mut theta_bands = Vec::new();
    let mut b_bands = Vec::new();
    for (k, n) in [100usize, 200, 300].into_iter().enumerate() {
        let data = datasets(n, DATA_SEED + 100 + k as u64);
        let fits = stem_fits(&data, &ObservedSpec::hide_both(), &cfg);
        let ok = successes(&fits)?;
        let theta_err: Vec<f64> = ok.iter().map(|f| (f.estimate.exp_eta - truth.exp_eta).powi(2)).collect();
        let b_err: Vec<f64> = ok
            .iter()
            .map(|f| f.estimate.b_s.iter().zip(&truth.b_s).map(|(e, t)| (e - t).powi(2)).sum::<f64>() / 2.0)
            .collect();
        theta_bands.push(mse_band(&theta_err));
        b_bands.push(mse_band(&b_err));
    }
    let show = |b: &[(f64, f64)]| b.iter().map(|(m, s)| format!("{m:.4}±{s:.4}")).collect::<Vec<_>>().join(" > ");
    verdict(
        trend_ok(&theta_bands) && trend_ok(&b_bands),
        format!("MSE over N=100,200,300: exp_eta {}; b_S {}", show(&theta_bands), show(&b_bands)),
    )
}

fn acceptance_band(fits: &[Result<StemFit, String>]) -> Check {
    let ok = successes(fits)?;
    let mut total = ProposalCount::default();
    for f in ok {
        total.add(f.acceptance());
    }
    let frac = total.fraction();
    verdict(
        (0.25..=0.65).contains(&frac),
        format!("pooled acceptance {frac:.3} over {} proposals (band [0.25, 0.65])", total.proposed),
    )
}

fn coverage(data: &[Simulation]) -> Check {
    let truth = Parameters::reference();
    let spec = ObservedSpec::hide_exposures();
    let runs = 10;
    let cfg = StemConfig { m_runs: runs, seed: 61, ..StemConfig::default() };
    let fits = stem_fits(data, &spec, &cfg);
    let ok = successes(&fits)?;
    let layout = ParamLayout::of(&truth);
    let x_true = layout.to_vec(&truth);
    let targets = [
        ("beta", ParamLayout::BETA, Some(0.75)),
        ("exp_eta", ParamLayout::THETA, None),
        ("gamma", layout.gamma(), Some(0.90)),
        ("phi", layout.phi(), Some(0.90)),
        ("p_s", layout.p_s(), Some(0.90)),
    ];
    let mut covered = [0usize; 5];
    let mut undefined = [0usize; 5];
    for (f, sim) in ok.iter().zip(data) {
        let multiplier = f.averaging.multiplier(runs);
        let info = exposure_louis_information(&observe(sim, &spec), &f.estimate, &[]).map_err(|e| e.to_string())?;
        let se = asymptotic_se(&info, multiplier).unwrap_or_else(|_| vec![None; layout.len()]);
        let x = layout.to_vec(&f.estimate);
        for (t, &(_, k, _)) in targets.iter().enumerate() {
            match se[k] {
                Some(s) if (x[k] - x_true[k]).abs() <= 1.96 * s => covered[t] += 1,
                Some(_) => {}
                None => undefined[t] += 1,
            }
        }
    }
    let n = ok.len() as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, &(name, _, need)) in targets.iter().enumerate() {
        let rate = covered[t] as f64 / n;
        if let Some(need) = need {
            pass &= rate >= need;
            parts.push(format!("{name} {rate:.3}/{need} ({} undefined)", undefined[t]));
        } else {
            parts.push(format!("{name} {rate:.3} reported ({} undefined)", undefined[t]));
        }
    }
    verdict(pass, format!("coverage {}", parts.join(", ")))
}

fn exactness() -> Check {
    let checks: Vec<(&str, Check)> = vec![
        ("score", suites::score_vs_finite_differences(7)),
        ("statistics", suites::statistics_vs_grid_quadrature(7)),
        ("mle", suites::mle_zeroes_score(7)),
        ("exposure sampler", suites::exposure_sampler_ks()),
        ("recovery sampler", suites::darci_compatibility(1000)),
        ("tiny instance", suites::tiny_instance_marginal()),
        ("holding times", suites::gillespie_holding_times()),
        ("link counts", suites::poisson_link_counts()),
    ];
    let mut ok = true;
    for (name, c) in &checks {
        let (flag, msg) = match c {
            Ok(m) => ("pass", m),
            Err(m) => {
                ok = false;
                ("FAIL", m)
            }
        };
        println!("    {flag} {name}: {msg}");
    }
    let failed: Vec<&str> = checks.iter().filter(|(_, c)| c.is_err()).map(|(n, _)| *n).collect();
    verdict(
        ok,
        if failed.is_empty() { format!("{} suites pass", checks.len()) } else { format!("failed: {}", failed.join(", ")) },
    )
}

fn main() {
    let mut report = Report { lines: Vec::new() };
    let t = Instant::now();
    let data = datasets(200, DATA_SEED);
    println!("simulated {REPS} reference outbreaks (N=200) in {:.0}s", t.elapsed().as_secs_f64());

    let t = Instant::now();
    report.record(1, "complete-data MLE", complete_mle(&data), t);

    let t = Instant::now();
    let hidden_exposures = stem_fits(&data, &ObservedSpec::hide_exposures(), &StemConfig { seed: 21, ..StemConfig::default() });
    report.record(
        2,
        "stEM, exposures hidden",
        stem_mae(&hidden_exposures, &[("beta", 0.121), ("gamma", 0.016), ("phi", 0.034), ("p_s", 0.12)]),
        t,
    );

    let t = Instant::now();
    let hidden_both = stem_fits(&data, &ObservedSpec::hide_both(), &StemConfig { seed: 31, ..StemConfig::default() });
    report.record(3, "stEM, exposures and recoveries hidden", stem_mae(&hidden_both, &[("beta", 0.15), ("gamma", 0.023), ("phi", 0.05)]), t);

    let t = Instant::now();
    report.record(4, "MSE trend in N", mse_trend(), t);

    let t = Instant::now();
    report.record(5, "exposure sampler acceptance", acceptance_band(&hidden_exposures), t);

    let t = Instant::now();
    report.record(6, "Wald coverage", coverage(&data), t);

    let t = Instant::now();
    report.record(7, "exactness suites", exactness(), t);

    let passed = report.lines.iter().filter(|(ok, _)| *ok).count();
    println!("acceptance: {passed}/{} criteria pass", report.lines.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < report.lines.len() {
        std::process::exit(1);
    }
}
