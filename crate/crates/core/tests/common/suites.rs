//! Exactness checks run by both the property tests and the acceptance
//! report. Each returns a one-line summary, `Err` when the check fails.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use epinet::estimate::{fit_complete, FitOptions, FixedMask};
use epinet::hazard::{sample_exposure_time, StepHazard};
use epinet::impute::{check_compatibility, impute_exposures, impute_recoveries};
use epinet::likelihood::{log_likelihood, score, ParamLayout};
use epinet::model::{
    Covariates, DiseaseStatus, Event, EventLog, LinkRates, Network, PairType, Phase, PhaseSchedule,
    Subtype,
};
use epinet::observed::{Hide, ObservedData, ObservedSpec};
use epinet::simulate::{replicate_seed, simulate, simulate_until, total_rate, SimConfig};
use epinet::stats::sufficient_statistics;
use epinet::stem::{conditional_samples, stem_run, InitSpec, StemConfig};
use epinet::variance::{exposure_louis_information, louis_information};
use epinet::{Error, Parameters};

use super::{ks_critical, ks_statistic, log_integral, GridCdf, Z_001};

pub type Check = Result<String, String>;

fn verdict(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Parameters with every rate and coefficient moved by a seeded factor.
pub fn jittered(seed: u64) -> Parameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = || rand::Rng::random_range(&mut rng, 0.7..1.4);
    let p = Parameters::reference();
    let alpha = LinkRates::from_flat(p.alpha.flat().map(|a| a * f()));
    let omega = LinkRates::from_flat(p.omega.flat().map(|w| w * f()));
    Parameters {
        beta: p.beta * f(),
        exp_eta: p.exp_eta * f(),
        phi: p.phi * f(),
        gamma: p.gamma * f(),
        p_s: 0.6 * f().min(1.3),
        b_s: p.b_s.iter().map(|b| b * f() - 0.3).collect(),
        alpha,
        omega,
        external: None,
    }
}

/// Central differences of the complete log-likelihood against the analytic score.
pub fn score_vs_finite_differences(seed: u64) -> Check {
    let truth = Parameters::reference();
    let sim = simulate(&truth, &SimConfig::reference(40, seed)).map_err(|e| e.to_string())?;
    let stats = sufficient_statistics(&sim.log, &sim.covariates).map_err(|e| e.to_string())?;
    let at = jittered(seed ^ 0x5eed);
    let layout = ParamLayout::of(&at);
    let x = layout.to_vec(&at);
    let g = score(&stats, &sim.covariates, &at).map_err(|e| e.to_string())?;
    let ll = |v: &[f64]| log_likelihood(&stats, &sim.covariates, &layout.from_vec(v)).unwrap().total();
    let mut worst = 0.0_f64;
    for k in 0..x.len() {
        let h = 1e-5 * x[k].abs().max(1e-2);
        let mut v = x.clone();
        v[k] += h;
        let up = ll(&v);
        v[k] -= 2.0 * h;
        let down = ll(&v);
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs() / g[k].abs().max(1.0));
    }
    verdict(worst <= 1e-4, format!("max relative score error {worst:.2e} (bound 1e-4)"))
}

/// Piecewise-constant quantities integrated on a midpoint grid of `cells` cells.
struct GridIntegrals {
    exposed: f64,
    infectious: f64,
    connected: [[f64; 3]; 2],
    disconnected: [[f64; 3]; 2],
    pressure_ia: Vec<f64>,
    pressure_is: Vec<f64>,
}

fn integrate_on_grid(log: &EventLog, cells: usize) -> GridIntegrals {
    let n = log.population();
    let h = log.horizon() / cells as f64;
    let mut state = log.initial_state();
    let events = log.events();
    let mut next = 0;
    let mut out = GridIntegrals {
        exposed: 0.0,
        infectious: 0.0,
        connected: [[0.0; 3]; 2],
        disconnected: [[0.0; 3]; 2],
        pressure_ia: vec![0.0; n],
        pressure_is: vec![0.0; n],
    };
    // Summaries of the current state, recomputed from scratch after each event.
    let summarise = |state: &epinet::model::SystemState| {
        let st = &state.statuses;
        let e = st.iter().filter(|s| **s == DiseaseStatus::E).count() as f64;
        let i = st.iter().filter(|s| s.is_infectious()).count() as f64;
        let mut con = [0.0; 3];
        let mut dis = [0.0; 3];
        let mut pa = vec![0.0; n];
        let mut ps = vec![0.0; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let ab = PairType::of(st[a].health(), st[b].health()).index();
                if state.network.contains(a, b) {
                    con[ab] += 1.0;
                } else {
                    dis[ab] += 1.0;
                }
            }
            if st[a] == DiseaseStatus::S {
                for &b in state.network.neighbors(a) {
                    match st[b] {
                        DiseaseStatus::Ia => pa[a] += 1.0,
                        DiseaseStatus::Is => ps[a] += 1.0,
                        _ => {}
                    }
                }
            }
        }
        (e, i, con, dis, pa, ps)
    };
    let mut cur = summarise(&state);
    for c in 0..cells {
        let t = (c as f64 + 0.5) * h;
        let mut changed = false;
        while next < events.len() && events[next].time <= t {
            state.apply(next, &events[next]).expect("valid log");
            next += 1;
            changed = true;
        }
        if changed {
            cur = summarise(&state);
        }
        let k = log.schedule().phase_at(t).index();
        out.exposed += h * cur.0;
        out.infectious += h * cur.1;
        for ab in 0..3 {
            out.connected[k][ab] += h * cur.2[ab];
            out.disconnected[k][ab] += h * cur.3[ab];
        }
        for i in 0..n {
            out.pressure_ia[i] += h * cur.4[i];
            out.pressure_is[i] += h * cur.5[i];
        }
    }
    out
}

/// Sufficient-statistic integrals against a midpoint grid. Each event moves
/// a count by at most `N²`, so the grid error is below `events · h · N² / 2`
/// plus the phase switch.
pub fn statistics_vs_grid_quadrature(seed: u64) -> Check {
    let sim = simulate(&jittered(seed), &SimConfig::reference(15, seed)).map_err(|e| e.to_string())?;
    let stats = sufficient_statistics(&sim.log, &sim.covariates).map_err(|e| e.to_string())?;
    let cells = 200_000;
    let grid = integrate_on_grid(&sim.log, cells);
    let n = sim.log.population() as f64;
    let h = sim.log.horizon() / cells as f64;
    let bound = (sim.log.events().len() as f64 + 2.0) * h * n * n / 2.0;
    let mut worst = 0.0_f64;
    let mut cmp = |a: f64, b: f64| worst = worst.max((a - b).abs());
    cmp(stats.exposed_integral, grid.exposed);
    cmp(stats.infectious_integral, grid.infectious);
    for k in 0..2 {
        for ab in 0..3 {
            cmp(stats.connected_integral[k][ab], grid.connected[k][ab]);
            cmp(stats.disconnected_integral[k][ab], grid.disconnected[k][ab]);
        }
    }
    for i in 0..sim.log.population() {
        cmp(stats.pressure_ia[i], grid.pressure_ia[i]);
        cmp(stats.pressure_is[i], grid.pressure_is[i]);
    }
    verdict(worst <= bound, format!("max integral gap {worst:.2e} (grid bound {bound:.2e})"))
}

/// Interior complete-data estimates zero the analytic score. Outbreaks
/// reach a quarter of the population so that the estimates exist.
pub fn mle_zeroes_score(seed: u64) -> Check {
    let sim = simulate_until(&jittered(seed), &SimConfig::reference(60, seed), 0.25, 200)
        .map_err(|e| e.to_string())?
        .0;
    let stats = sufficient_statistics(&sim.log, &sim.covariates).map_err(|e| e.to_string())?;
    let fit = fit_complete(&stats, &sim.covariates, &FitOptions::default()).map_err(|e| e.to_string())?;
    let g = score(&stats, &sim.covariates, &fit.params).map_err(|e| e.to_string())?;
    let worst = g
        .iter()
        .zip(&fit.status)
        .filter(|(_, s)| **s == epinet::estimate::EstimateStatus::Ok)
        .fold(0.0_f64, |m, (g, _)| m.max(g.abs()));
    verdict(worst <= 1e-5, format!("max |score| at the MLE {worst:.2e} (bound 1e-5)"))
}

/// Rejection-sampled exposure times against an independent grid CDF of
/// `λ(t) e^{-Λ(t)} e^{-φ (t_I - t)}` on the hazard `(0.5, 0, 2.0)`.
pub fn exposure_sampler_ks() -> Check {
    let hazard = StepHazard::new(vec![0.0, 2.0, 5.0, 10.0], vec![0.5, 0.0, 2.0]).map_err(|e| e.to_string())?;
    let onset = 10.5;
    let draws = 100_000;
    let mut lines = Vec::new();
    let mut ok = true;
    // φ = 0.5 coincides with the first level.
    for (k, phi) in [0.3_f64, 0.5].into_iter().enumerate() {
        let lam = |t: f64| if t < 2.0 { 0.5 } else if t < 5.0 { 0.0 } else { 2.0 };
        let cum = |t: f64| 0.5 * t.min(2.0) + 2.0 * (t - 5.0).max(0.0);
        let oracle = GridCdf::new(0.0, 10.0, 400_000, |t| lam(t) * (-cum(t)).exp() * (-phi * (onset - t)).exp());
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let xs: Vec<f64> = (0..draws)
            .map(|_| sample_exposure_time(0, &hazard, phi, onset, 100_000, &mut rng).unwrap().0)
            .collect();
        let d = ks_statistic(xs, |t| oracle.eval(t));
        let crit = ks_critical(draws);
        ok &= d < crit;
        lines.push(format!("phi={phi}: D={d:.4} (crit {crit:.4})"));
    }
    verdict(ok, lines.join(", "))
}

/// Alternating exposure and recovery draws always give augmentations that
/// respect the bounds and give every exposure an infectious contact.
pub fn darci_compatibility(total: usize) -> Check {
    let p = Parameters::reference();
    let per = total / 5;
    let mut repairs = 0;
    let mut drawn = 0;
    for d in 0..5u64 {
        let sim = super::reference_outbreak(80, replicate_seed(31, d));
        let obs = ObservedData::from_log(&sim.log, &sim.covariates, &ObservedSpec::hide_both())
            .map_err(|e| e.to_string())?;
        let hidden = obs.hidden_exposures();
        let mut aug = obs.initial_augmentation();
        for k in 0..per as u64 {
            let seed = replicate_seed(1000 + d, k);
            impute_exposures(&obs, &mut aug, &p, &hidden, seed, 0, 100_000).map_err(|e| e.to_string())?;
            let mut round = 0;
            loop {
                match impute_recoveries(&obs, &mut aug, &p, replicate_seed(seed, round)) {
                    Ok(()) => break,
                    Err(Error::Incompatible { individual, .. }) if round < 100 => {
                        round += 1;
                        repairs += 1;
                        impute_exposures(&obs, &mut aug, &p, &[individual], seed, round, 100_000)
                            .map_err(|e| e.to_string())?;
                    }
                    Err(e) => return Err(format!("augmentation {drawn}: {e}")),
                }
            }
            check_compatibility(&obs, &aug).map_err(|e| format!("augmentation {drawn}: {e}"))?;
            obs.complete_log(&aug)
                .and_then(|log| log.validate().map(|_| log))
                .map_err(|e| format!("augmentation {drawn}: {e}"))?;
            drawn += 1;
        }
    }
    Ok(format!("{drawn} augmentations compatible ({repairs} exposure redraws)"))
}

/// Time-rescaled holding times `∫ R(t) dt` between simulated events are Exp(1).
pub fn gillespie_holding_times() -> Check {
    let p = Parameters::reference();
    let mut gaps = Vec::new();
    for r in 0..60u64 {
        let sim = simulate(&p, &SimConfig::reference(30, replicate_seed(51, r))).map_err(|e| e.to_string())?;
        let log = &sim.log;
        let mut state = log.initial_state();
        let mut last = 0.0;
        for (k, ev) in log.events().iter().enumerate() {
            let mut z = 0.0;
            log.schedule().for_each_piece(last, ev.time, |phase, len| {
                z += total_rate(&state, &p, &sim.covariates, phase).total() * len;
            });
            gaps.push(z);
            state.apply(k, ev).map_err(|e| e.to_string())?;
            last = ev.time;
        }
    }
    let n = gaps.len();
    let d = ks_statistic(gaps, |z| 1.0 - (-z).exp());
    let crit = ks_critical(n);
    verdict(d < crit, format!("{n} rescaled gaps: D={d:.4} (crit {crit:.4})"))
}

/// Link event counts against their compensators: `Σ (C - α ∫M^d) / sqrt(Σ α ∫M^d)`
/// per phase and pair type is standard normal.
pub fn poisson_link_counts() -> Check {
    let mut p = Parameters::reference();
    p.alpha = LinkRates::from_flat([5e-3; 6]);
    p.omega = LinkRates::from_flat([5e-2; 6]);
    let mut dev = [[[0.0_f64; 3]; 2]; 2];
    let mut comp = [[[0.0_f64; 3]; 2]; 2];
    for r in 0..200u64 {
        let sim = simulate(&p, &SimConfig::reference(20, replicate_seed(61, r))).map_err(|e| e.to_string())?;
        let s = sufficient_statistics(&sim.log, &sim.covariates).map_err(|e| e.to_string())?;
        for (phase, pair) in LinkRates::slots() {
            let (k, ab) = (phase.index(), pair.index());
            let ea = p.alpha.get(phase, pair) * s.disconnected_integral[k][ab];
            let ed = p.omega.get(phase, pair) * s.connected_integral[k][ab];
            dev[0][k][ab] += s.activations[k][ab] as f64 - ea;
            comp[0][k][ab] += ea;
            dev[1][k][ab] += s.terminations[k][ab] as f64 - ed;
            comp[1][k][ab] += ed;
        }
    }
    let mut worst = 0.0_f64;
    let mut tested = 0;
    for kind in 0..2 {
        for k in 0..2 {
            for ab in 0..3 {
                if comp[kind][k][ab] >= 20.0 {
                    worst = worst.max((dev[kind][k][ab] / comp[kind][k][ab].sqrt()).abs());
                    tested += 1;
                }
            }
        }
    }
    verdict(
        tested >= 8 && worst < Z_001,
        format!("{tested} link-count z-scores, max |z|={worst:.2} (crit {Z_001:.2})"),
    )
}

/// Hand-built outbreak on six people. Individual 2 has a hidden exposure in
/// `(0, 5)` with an Ia and an Is neighbour throughout.
pub fn tiny_outbreak() -> (EventLog, Covariates) {
    use DiseaseStatus::*;
    let statuses = vec![Is, Ia, S, S, S, S];
    let network = Network::from_edges(6, [(0, 2), (1, 2), (0, 3), (2, 4), (3, 5)]).unwrap();
    let events = vec![
        Event::exposure(1.0, 3, Some(0)),
        Event::exposure(2.0, 2, None),
        Event::manifestation(3.5, 3, Subtype::Ia),
        Event::manifestation(5.0, 2, Subtype::Is),
        Event::recovery(6.0, 0),
        Event::exposure(7.0, 4, Some(2)),
        Event::link_terminate(8.0, 1, 2),
        Event::manifestation(9.0, 4, Subtype::Ia),
        Event::recovery(10.0, 1),
        Event::recovery(12.0, 3),
        Event::recovery(13.0, 2),
        Event::recovery(15.0, 4),
    ];
    let schedule = PhaseSchedule::single(20.0, Phase::Zero).unwrap();
    let log = EventLog::new(20.0, statuses, network, schedule, events).unwrap();
    (log, Covariates::none(6))
}

/// Marginal log-likelihood of the tiny outbreak in `(β, φ)` at fixed `θ`,
/// integrating the complete likelihood over the hidden exposure on a grid.
fn tiny_marginal(log: &EventLog, cov: &Covariates, base: &Parameters, beta: f64, phi: f64) -> f64 {
    let p = Parameters { beta, phi, ..base.clone() };
    let (h, st, net, sched, events) = log.clone().into_parts();
    log_integral(1e-6, 5.0 - 1e-6, 4000, |t| {
        let mut ev = events.clone();
        ev[1].time = t;
        ev.sort_by(|a, b| a.time.total_cmp(&b.time));
        let complete = EventLog::new_unchecked(h, st.clone(), net.clone(), sched.clone(), ev);
        let s = sufficient_statistics(&complete, cov).unwrap();
        log_likelihood(&s, cov, &p).unwrap().total()
    })
}

/// Newton ascent of the grid marginal in `(log β, log φ)`; returns the
/// maximiser and the Hessian in `(β, φ)`.
fn tiny_marginal_mle(log: &EventLog, cov: &Covariates, base: &Parameters) -> ((f64, f64), [[f64; 2]; 2]) {
    let f = |u: f64, v: f64| tiny_marginal(log, cov, base, u.exp(), v.exp());
    let (mut u, mut v) = (base.beta.ln(), base.phi.ln());
    let e = 1e-3;
    for _ in 0..40 {
        let f0 = f(u, v);
        let gu = (f(u + e, v) - f(u - e, v)) / (2.0 * e);
        let gv = (f(u, v + e) - f(u, v - e)) / (2.0 * e);
        let huu = (f(u + e, v) - 2.0 * f0 + f(u - e, v)) / (e * e);
        let hvv = (f(u, v + e) - 2.0 * f0 + f(u, v - e)) / (e * e);
        let huv = (f(u + e, v + e) - f(u + e, v - e) - f(u - e, v + e) + f(u - e, v - e)) / (4.0 * e * e);
        let det = huu * hvv - huv * huv;
        let (du, dv) = (-(hvv * gu - huv * gv) / det, -(huu * gv - huv * gu) / det);
        u += du;
        v += dv;
        if du.abs().max(dv.abs()) < 1e-9 {
            break;
        }
    }
    let (beta, phi) = (u.exp(), v.exp());
    let g = |b: f64, q: f64| tiny_marginal(log, cov, base, b, q);
    let (hb, hp) = (1e-3 * beta, 1e-3 * phi);
    let f0 = g(beta, phi);
    let hbb = (g(beta + hb, phi) - 2.0 * f0 + g(beta - hb, phi)) / (hb * hb);
    let hpp = (g(beta, phi + hp) - 2.0 * f0 + g(beta, phi - hp)) / (hp * hp);
    let hbp = (g(beta + hb, phi + hp) - g(beta + hb, phi - hp) - g(beta - hb, phi + hp) + g(beta - hb, phi - hp))
        / (4.0 * hb * hp);
    ((beta, phi), [[hbb, hbp], [hbp, hpp]])
}

/// Tiny-instance stEM and Louis checks against the grid marginal likelihood,
/// with `θ` held at 1.5: a single-run stEM estimate of `φ` lies within 3
/// Monte Carlo standard errors of the marginal MLE, and both Louis
/// estimates of the `(β, φ)` information match the numeric Hessian within 10%.
pub fn tiny_instance_marginal() -> Check {
    let (log, cov) = tiny_outbreak();
    let spec = ObservedSpec { hide_exposures: Hide::Ids(vec![2]), ..ObservedSpec::default() };
    let obs = ObservedData::from_log(&log, &cov, &spec).map_err(|e| e.to_string())?;
    let stats = sufficient_statistics(&log, &cov).map_err(|e| e.to_string())?;
    let theta = 1.5;
    let fixed = FixedMask { exp_eta: Some(theta), ..FixedMask::default() };
    let opts = FitOptions { fixed: fixed.clone(), ..FitOptions::default() };
    let start = fit_complete(&stats, &cov, &opts).map_err(|e| e.to_string())?.params;
    let ((beta_hat, phi_hat), hess) = tiny_marginal_mle(&log, &cov, &start);

    let runs = 60;
    let cfg = StemConfig {
        burn_in: 60,
        total_iters: 80,
        m_it: 20,
        init: InitSpec::Given(start.clone()),
        fit: opts,
        ..StemConfig::default()
    };
    let mut phis = Vec::with_capacity(runs);
    for r in 0..runs {
        let chain = stem_run(&obs, &StemConfig { seed: 900, ..cfg.clone() }, r).map_err(|e| e.to_string())?;
        let tail = &chain.params[chain.params.len() - cfg.m_it..];
        phis.push(tail.iter().map(|p| p.phi).sum::<f64>() / cfg.m_it as f64);
    }
    // One stEM estimate, with its Monte Carlo standard error taken as the
    // spread of the estimator over independent seeds.
    let estimate = phis[0];
    let m = super::mean(&phis);
    let mc_se = (phis.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (runs as f64 - 1.0)).sqrt();
    let stem_ok = (estimate - phi_hat).abs() <= 3.0 * mc_se;

    let at = Parameters { beta: beta_hat, phi: phi_hat, ..start.clone() };
    let layout = ParamLayout::of(&at);
    let held: Vec<usize> = (0..layout.len()).filter(|&k| k != ParamLayout::BETA && k != layout.phi()).collect();
    let samples = conditional_samples(&obs, &at, 20_000, 0, &cfg, 77).map_err(|e| e.to_string())?;
    let mc = louis_information(&samples, &cov, &at, &held).map_err(|e| e.to_string())?;
    let quad = exposure_louis_information(&obs, &at, &held).map_err(|e| e.to_string())?;
    let numeric = [[-hess[0][0], -hess[0][1]], [-hess[1][0], -hess[1][1]]];
    let rel = |info: &epinet::variance::LouisInformation| {
        let mut worst = 0.0_f64;
        for (a, row) in numeric.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                worst = worst.max((info.observed[(a, b)] - v).abs() / v.abs());
            }
        }
        worst
    };
    let (rel_mc, rel_quad) = (rel(&mc), rel(&quad));
    let louis_ok = mc.active.len() == 2 && rel_mc <= 0.10 && rel_quad <= 0.10;
    verdict(
        stem_ok && louis_ok,
        format!(
            "phi: stEM {estimate:.4} vs marginal MLE {phi_hat:.4} (|diff| {:.4}, 3 MC SE {:.4}, \
             mean over {runs} seeds {m:.4}); Louis vs numeric Hessian: Monte Carlo {:.1}%, quadrature {:.1}% (bound 10%)",
            (estimate - phi_hat).abs(),
            3.0 * mc_se,
            100.0 * rel_mc,
            100.0 * rel_quad
        ),
    )
}
