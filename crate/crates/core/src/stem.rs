//! Stochastic EM: alternate one conditional draw of the hidden times with the
//! complete-data maximum likelihood of the augmented data.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{fit_complete, EstimateStatus, FitOptions};
use crate::impute::{impute_exposures, impute_recoveries, ProposalCount};
use crate::likelihood::ParamLayout;
use crate::model::{ExternalParams, Id, LinkRates, Parameters};
use crate::observed::{Augmentation, ObservedData, RecoverySlot};
use crate::simulate::{replicate_seed, substream};
use crate::stats::{sufficient_statistics, SufficientStats};

/// Starting point of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Given(Parameters),
    /// Epidemic rates drawn uniformly from broad ranges on the run's own stream.
    Random,
}

#[derive(Clone, Debug)]
pub struct StemConfig {
    pub burn_in: usize,
    pub total_iters: usize,
    /// Averaging window: the last `m_it` iterates of each run.
    pub m_it: usize,
    pub m_runs: usize,
    pub seed: u64,
    /// Proposal budget of the exposure sampler per individual and draw.
    pub max_attempts: usize,
    /// Exposure redraws allowed when recovery sampling finds no source.
    pub repair_rounds: usize,
    pub init: InitSpec,
    pub fit: FitOptions,
}

impl Default for StemConfig {
    fn default() -> Self {
        StemConfig {
            burn_in: 60,
            total_iters: 80,
            m_it: 20,
            m_runs: 1,
            seed: 0,
            max_attempts: 10_000,
            repair_rounds: 100,
            init: InitSpec::Random,
            fit: FitOptions::default(),
        }
    }
}

impl StemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iters {
            return Err(Error::Invalid(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.total_iters
            )));
        }
        if self.m_it == 0 || self.m_it > self.total_iters - self.burn_in {
            return Err(Error::Invalid(format!(
                "averaging window {} must lie in 1..={}",
                self.m_it,
                self.total_iters - self.burn_in
            )));
        }
        if self.m_runs == 0 {
            return Err(Error::Invalid("at least one run is required".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Invalid("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// Iterates of one run plus the augmented data of its averaging window.
#[derive(Clone, Debug)]
pub struct ParameterChain {
    pub layout: ParamLayout,
    /// `Θ^(1) … Θ^(total_iters)`.
    pub params: Vec<Parameters>,
    /// Component status of the last M-step.
    pub status: Vec<EstimateStatus>,
    /// Sufficient statistics of the last `m_it` augmented datasets.
    pub samples: Vec<SufficientStats>,
    pub proposals: ProposalCount,
    pub repairs: usize,
}

impl ParameterChain {
    pub fn last(&self) -> &Parameters {
        self.params.last().expect("chains are never empty")
    }
}

/// Seed of run `run` under the master seed.
pub fn run_seed(master: u64, run: usize) -> u64 {
    replicate_seed(master, run as u64)
}

fn random_init<R: Rng + ?Sized>(dim: usize, external: bool, rng: &mut R) -> Parameters {
    Parameters {
        beta: rng.random_range(0.05..0.4),
        exp_eta: rng.random_range(0.5..2.0),
        phi: rng.random_range(0.05..0.3),
        gamma: rng.random_range(0.05..0.3),
        p_s: rng.random_range(0.3..0.7),
        b_s: (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect(),
        alpha: LinkRates::from_flat([1e-3; 6]),
        omega: LinkRates::from_flat([1e-2; 6]),
        external: external.then(|| ExternalParams { xi: rng.random_range(0.001..0.01), b_e: vec![0.0; dim] }),
    }
}

/// Replaces placeholders of undetermined components with the previous value.
fn carry_forward(new: &mut Parameters, prev: &Parameters, layout: &ParamLayout, status: &[EstimateStatus]) {
    let mut v = layout.to_vec(new);
    let old = layout.to_vec(prev);
    for (k, s) in status.iter().enumerate() {
        if *s == EstimateStatus::Undetermined {
            v[k] = old[k];
        }
    }
    *new = layout.from_vec(&v);
}

/// Round offset of exposure restarts, disjoint from recovery-repair rounds.
const EXHAUSTED_ROUND_BASE: u64 = 1 << 32;

/// Redraws the hidden exposures, then the hidden recoveries, under `theta`
/// and returns the statistics of the augmented data.
///
/// A recovery draw that leaves an exposure without a source triggers a fresh
/// draw of that exposure, at most `cfg.repair_rounds` times. The same bound
/// applies to restarts after the exposure sampler exhausts `cfg.max_attempts`.
#[allow(clippy::too_many_arguments)]
fn e_step(
    obs: &ObservedData,
    aug: &mut Augmentation,
    theta: &Parameters,
    hidden: &[Id],
    seed: u64,
    cfg: &StemConfig,
    proposals: &mut ProposalCount,
    repairs: &mut usize,
) -> Result<SufficientStats> {
    // An exhausted rejection sampler restarts the exposure draws on fresh
    // substreams; the accepted draw is still exact.
    let mut restart = 0;
    loop {
        match impute_exposures(obs, aug, theta, hidden, seed, EXHAUSTED_ROUND_BASE + restart, cfg.max_attempts) {
            Ok(count) => {
                proposals.add(count);
                break;
            }
            Err(Error::SamplerExhausted { individual, attempts }) => {
                restart += 1;
                if restart > cfg.repair_rounds as u64 {
                    return Err(Error::SamplerExhausted { individual, attempts });
                }
                proposals.proposed += attempts as u64;
                *repairs += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if obs.recovery.iter().any(|r| matches!(r, RecoverySlot::Hidden { .. })) {
        let mut round = 0;
        loop {
            match impute_recoveries(obs, aug, theta, replicate_seed(seed, round)) {
                Ok(()) => break,
                Err(Error::Incompatible { individual, time }) => {
                    round += 1;
                    if round > cfg.repair_rounds as u64 || !hidden.contains(&individual) {
                        return Err(Error::Incompatible { individual, time });
                    }
                    *repairs += 1;
                    proposals.add(impute_exposures(obs, aug, theta, &[individual], seed, round, cfg.max_attempts)?);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let log = obs.complete_log(aug)?;
    sufficient_statistics(&log, &obs.covariates)
}

/// `count` augmented datasets drawn with the parameters held at `at`, for
/// the Louis identity.
///
/// Without hidden recoveries the exposure draws are exact and independent.
/// Otherwise exposure and recovery draws alternate as a Gibbs sampler started
/// from the observed-data initial augmentation, and the first `warmup` sweeps
/// are discarded.
pub fn conditional_samples(
    obs: &ObservedData,
    at: &Parameters,
    count: usize,
    warmup: usize,
    cfg: &StemConfig,
    seed: u64,
) -> Result<Vec<SufficientStats>> {
    let hidden = obs.hidden_exposures();
    let mut aug = obs.initial_augmentation();
    let mut proposals = ProposalCount::default();
    let mut repairs = 0;
    let mut out = Vec::with_capacity(count);
    for s in 0..warmup + count {
        let stats = e_step(obs, &mut aug, at, &hidden, replicate_seed(seed, s as u64), cfg, &mut proposals, &mut repairs)?;
        if s >= warmup {
            out.push(stats);
        }
    }
    Ok(out)
}

/// One stochastic EM run.
pub fn stem_run(obs: &ObservedData, cfg: &StemConfig, run: usize) -> Result<ParameterChain> {
    cfg.validate()?;
    let seed = run_seed(cfg.seed, run);
    let cov = &obs.covariates;
    let external = cfg.fit.external || obs.external.iter().any(|&e| e);
    let layout = ParamLayout::new(cov.dim(), external);
    let mut theta = match &cfg.init {
        InitSpec::Given(p) => {
            p.validate(cov.dim())?;
            if p.external.is_some() != external {
                return Err(Error::Invalid("initial parameters disagree with the external block".into()));
            }
            p.clone()
        }
        InitSpec::Random => random_init(cov.dim(), external, &mut substream(seed, u64::MAX)),
    };
    cfg.fit.fixed.apply(&mut theta);
    theta.validate(cov.dim())?;
    let mut aug = obs.initial_augmentation();
    let hidden = obs.hidden_exposures();
    let mut chain = ParameterChain {
        layout,
        params: Vec::with_capacity(cfg.total_iters),
        status: Vec::new(),
        samples: Vec::with_capacity(cfg.m_it),
        proposals: ProposalCount::default(),
        repairs: 0,
    };
    let abort = |iteration: usize, e: Error| Error::StemAborted { iteration, reason: e.to_string() };

    for s in 1..=cfg.total_iters {
        let iter_seed = replicate_seed(seed, s as u64);
        let stats = e_step(obs, &mut aug, &theta, &hidden, iter_seed, cfg, &mut chain.proposals, &mut chain.repairs)
            .map_err(|e| abort(s, e))?;
        let fit = fit_complete(&stats, cov, &cfg.fit).map_err(|e| abort(s, e))?;
        let mut next = fit.params;
        carry_forward(&mut next, &theta, &layout, &fit.status);
        theta = next;
        chain.params.push(theta.clone());
        chain.status = fit.status;
        if s > cfg.total_iters - cfg.m_it {
            chain.samples.push(stats);
        }
    }
    Ok(chain)
}

/// `cfg.m_runs` independent runs, concurrently.
pub fn stem_runs(obs: &ObservedData, cfg: &StemConfig) -> Result<Vec<ParameterChain>> {
    cfg.validate()?;
    (0..cfg.m_runs).into_par_iter().map(|r| stem_run(obs, cfg, r)).collect()
}

/// How iterates are combined into one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Averaging {
    /// Mean of the last `m` iterates of a single run.
    WithinRun { m: usize },
    /// Mean of the final iterates of independent runs.
    AcrossRuns,
    /// Mean over runs of each run's last-`m` mean.
    Nested { m: usize },
}

impl Averaging {
    /// Variance inflation over the inverse information for `runs` runs.
    ///
    /// Averaging over runs gives `1 + 0.5 / runs`; a single run keeps the
    /// un-averaged bound `1.5` (averaging correlated iterates of one run does
    /// not reduce the bound below that of a single iterate).
    pub fn multiplier(&self, runs: usize) -> f64 {
        match self {
            Averaging::WithinRun { .. } => 1.5,
            Averaging::AcrossRuns | Averaging::Nested { .. } => 1.0 + 0.5 / runs as f64,
        }
    }
}

/// Componentwise mean, accumulated as offsets from the first vector so that
/// identical inputs average to themselves exactly.
fn mean_vec(vs: &[Vec<f64>]) -> Vec<f64> {
    let x0 = &vs[0];
    let m = vs.len() as f64;
    let mut acc = vec![0.0; x0.len()];
    for v in &vs[1..] {
        for k in 0..acc.len() {
            acc[k] += v[k] - x0[k];
        }
    }
    x0.iter().zip(&acc).map(|(a, d)| a + d / m).collect()
}

/// Combined estimate of one or more chains.
pub fn average_estimates(chains: &[ParameterChain], mode: Averaging) -> Result<Parameters> {
    let first = chains.first().ok_or_else(|| Error::Invalid("no chains to average".into()))?;
    let layout = first.layout;
    if chains.iter().any(|c| c.layout != layout) {
        return Err(Error::Invalid("chains have different parameter layouts".into()));
    }
    let tail = |c: &ParameterChain, m: usize| -> Result<Vec<f64>> {
        if m == 0 || m > c.params.len() {
            return Err(Error::Invalid(format!("cannot average the last {m} of {} iterates", c.params.len())));
        }
        let vs: Vec<Vec<f64>> = c.params[c.params.len() - m..].iter().map(|p| layout.to_vec(p)).collect();
        Ok(mean_vec(&vs))
    };
    let v = match mode {
        Averaging::WithinRun { m } => {
            if chains.len() != 1 {
                return Err(Error::Invalid("within-run averaging takes exactly one chain".into()));
            }
            tail(first, m)?
        }
        Averaging::AcrossRuns => {
            let vs: Vec<Vec<f64>> = chains.iter().map(|c| layout.to_vec(c.last())).collect();
            mean_vec(&vs)
        }
        Averaging::Nested { m } => {
            let vs = chains.iter().map(|c| tail(c, m)).collect::<Result<Vec<_>>>()?;
            mean_vec(&vs)
        }
    };
    Ok(layout.from_vec(&v))
}

/// Outcome of a multi-run fit.
#[derive(Clone, Debug)]
pub struct StemFit {
    pub chains: Vec<ParameterChain>,
    pub estimate: Parameters,
    pub averaging: Averaging,
}

impl StemFit {
    /// Augmented-data statistics pooled over runs.
    pub fn samples(&self) -> Vec<SufficientStats> {
        self.chains.iter().flat_map(|c| c.samples.iter().cloned()).collect()
    }

    pub fn acceptance(&self) -> ProposalCount {
        let mut total = ProposalCount::default();
        for c in &self.chains {
            total.add(c.proposals);
        }
        total
    }
}

/// Runs the configured stochastic EM and averages the last `m_it` iterates of
/// each run, then across runs.
pub fn fit_stem(obs: &ObservedData, cfg: &StemConfig) -> Result<StemFit> {
    let chains = stem_runs(obs, cfg)?;
    let averaging = Averaging::Nested { m: cfg.m_it };
    let estimate = average_estimates(&chains, averaging)?;
    Ok(StemFit { chains, estimate, averaging })
}
