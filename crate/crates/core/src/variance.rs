//! Observed information by the missing-information identity
//! `I_obs = E[-H_c] - Cov[S_c]`, with both moments taken over the conditional
//! law of the hidden times: by Monte Carlo over augmented datasets, or by
//! quadrature when only exposure times are hidden.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::impute::infectious_counts;
use crate::likelihood::{hessian, score, ParamLayout};
use crate::model::{Covariates, Id, Parameters, Time};
use crate::observed::{ExposureSlot, ObservedData};
use crate::stats::{sufficient_statistics, SufficientStats};
use crate::Matrix;

/// Relative asymmetry above which an information matrix is rejected.
const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LouisInformation {
    pub layout: ParamLayout,
    /// Layout indices of the rows and columns below.
    pub active: Vec<usize>,
    /// Mean negative complete-data Hessian.
    pub complete: Matrix,
    /// Sample covariance of the complete-data score (divisor `M`).
    pub missing: Matrix,
    /// `complete - missing`.
    pub observed: Matrix,
    pub positive_definite: bool,
    /// Augmented datasets averaged; 0 when the moments come from quadrature.
    pub samples: usize,
}

/// Parameters that are estimated, away from their boundary and carry information.
fn interior(layout: &ParamLayout, at: &[f64], k: usize) -> bool {
    let coefficient = (2..2 + layout.dim).contains(&k) || (layout.external && k > layout.xi());
    if coefficient {
        return true;
    }
    if k == layout.p_s() {
        return at[k] > 0.0 && at[k] < 1.0;
    }
    at[k] > 0.0
}

fn restrict(m: &Matrix, idx: &[usize]) -> Matrix {
    let mut r = Matrix::zeros(idx.len(), idx.len());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            r[(a, b)] = m[(i, j)];
        }
    }
    r
}

/// Louis observed information at `at` from augmented-data statistics.
/// Layout indices in `held` were not estimated and are left out.
pub fn louis_information(
    samples: &[SufficientStats],
    cov: &Covariates,
    at: &Parameters,
    held: &[usize],
) -> Result<LouisInformation> {
    if samples.is_empty() {
        return Err(Error::Invalid("no augmented samples".into()));
    }
    let layout = ParamLayout::of(at);
    let n = layout.len();
    let m = samples.len() as f64;
    let mut neg_h = Matrix::zeros(n, n);
    let mut scores = Vec::with_capacity(samples.len());
    for s in samples {
        let h = hessian(s, cov, at)?;
        let scale = (0..n).fold(0.0_f64, |a, i| a.max(h[(i, i)].abs())).max(1.0);
        if h.asymmetry() > SYMMETRY_TOL * scale {
            return Err(Error::Numerical(format!("complete-data Hessian asymmetric by {}", h.asymmetry())));
        }
        neg_h = neg_h.sub(&h);
        scores.push(score(s, cov, at)?);
    }
    let neg_h = neg_h.scale(1.0 / m);
    let mean: Vec<f64> = (0..n).map(|k| scores.iter().map(|g| g[k]).sum::<f64>() / m).collect();
    let mut cov_g = Matrix::zeros(n, n);
    for g in &scores {
        for i in 0..n {
            for j in 0..=i {
                cov_g[(i, j)] += (g[i] - mean[i]) * (g[j] - mean[j]) / m;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            cov_g[(j, i)] = cov_g[(i, j)];
        }
    }

    Ok(assemble(layout, at, held, &neg_h, &cov_g, samples.len()))
}

fn assemble(
    layout: ParamLayout,
    at: &Parameters,
    held: &[usize],
    neg_h: &Matrix,
    cov_g: &Matrix,
    samples: usize,
) -> LouisInformation {
    let x = layout.to_vec(at);
    let active: Vec<usize> = (0..layout.len())
        .filter(|&k| !held.contains(&k) && interior(&layout, &x, k) && neg_h[(k, k)] > 0.0)
        .collect();
    let complete = restrict(neg_h, &active);
    let missing = restrict(cov_g, &active);
    let observed = complete.sub(&missing);
    let positive_definite = !active.is_empty() && observed.cholesky().is_ok();
    LouisInformation { layout, active, complete, missing, observed, positive_definite, samples }
}

/// 8-point Gauss-Legendre rule on `[-1, 1]`.
const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Subintervals are short enough that the density varies by at most `e` across one.
const MAX_LOG_SPAN: f64 = 1.0;
const MAX_SUBINTERVALS: usize = 4096;

/// Part of the complete log-likelihood that depends on the exposure time `t`
/// of one individual whose neighbours' infectious periods are all known:
/// `ln λ(t) - ∫_{lower}^{t} λ + φ t`, with `λ = β e^{b_S·x} (I^a + θ I^s)`.
/// Only `β, θ, b_S, φ` enter, which are the leading layout indices.
struct ExposureTerm<'a> {
    x: &'a [f64],
    weight: f64,
    beta: f64,
    theta: f64,
    phi: f64,
    points: Vec<Time>,
    counts: Vec<(f64, f64)>,
    /// `(∫ I^a, ∫ I^s)` from `lower` to each change point.
    integrals: Vec<(f64, f64)>,
}

impl<'a> ExposureTerm<'a> {
    fn new(obs: &'a ObservedData, at: &Parameters, i: Id, lower: Time, upper: Time) -> Self {
        let aug = obs.initial_augmentation();
        let (points, counts) = infectious_counts(obs, &aug, i, lower, upper);
        let counts: Vec<(f64, f64)> = counts.iter().map(|&(a, s)| (f64::from(a), f64::from(s))).collect();
        let mut integrals = vec![(0.0, 0.0)];
        for (j, &(a, s)) in counts.iter().enumerate() {
            let w = points[j + 1] - points[j];
            let (u, v) = integrals[j];
            integrals.push((u + a * w, v + s * w));
        }
        ExposureTerm {
            x: obs.covariates.row(i),
            weight: obs.covariates.dot(i, &at.b_s).exp(),
            beta: at.beta,
            theta: at.exp_eta,
            phi: at.phi,
            points,
            counts,
            integrals,
        }
    }

    fn dim(&self) -> usize {
        3 + self.x.len()
    }

    fn level(&self, j: usize) -> f64 {
        let (a, s) = self.counts[j];
        self.beta * self.weight * (a + self.theta * s)
    }

    fn piece(&self, t: Time) -> usize {
        self.points.partition_point(|&p| p < t).clamp(1, self.counts.len()) - 1
    }

    fn exposure(&self, t: Time) -> (f64, f64) {
        let j = self.piece(t);
        let (u, v) = self.integrals[j];
        let (a, s) = self.counts[j];
        let dt = t - self.points[j];
        (u + a * dt, v + s * dt)
    }

    /// A point inside the first piece with a positive hazard. The offset
    /// within the piece varies with `i` so that individuals sharing a piece
    /// do not tie.
    fn feasible_time(&self, i: Id) -> Option<Time> {
        let u = 0.25 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract();
        (0..self.counts.len()).find(|&j| self.level(j) > 0.0).map(|j| self.points[j] + u * (self.points[j + 1] - self.points[j]))
    }

    /// Quadrature nodes and normalised weights of the conditional exposure law.
    fn nodes(&self) -> Vec<(Time, f64)> {
        let mut nodes = Vec::new();
        let mut logs = Vec::new();
        for j in 0..self.counts.len() {
            let lam = self.level(j);
            if lam <= 0.0 {
                continue;
            }
            let (a0, b0) = (self.points[j], self.points[j + 1]);
            let w = b0 - a0;
            let pieces = (((self.phi - lam).abs() * w / MAX_LOG_SPAN).ceil() as usize).clamp(1, MAX_SUBINTERVALS);
            let h = w / pieces as f64;
            for q in 0..pieces {
                let mid = a0 + (q as f64 + 0.5) * h;
                for (&z, &gw) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                    for t in [mid - 0.5 * h * z, mid + 0.5 * h * z] {
                        let (u, v) = self.exposure(t);
                        let log = lam.ln() - self.beta * self.weight * (u + self.theta * v) + self.phi * t;
                        nodes.push((t, 0.5 * h * gw));
                        logs.push(log);
                    }
                }
            }
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (node, log) in nodes.iter_mut().zip(&logs) {
            node.1 *= (log - top).exp();
            total += node.1;
        }
        for node in &mut nodes {
            node.1 /= total;
        }
        nodes
    }

    /// Gradient and Hessian of the term at `t` over the leading layout indices.
    fn derivatives(&self, t: Time) -> (Vec<f64>, Matrix) {
        let d = self.x.len();
        let phi_k = 2 + d;
        let j = self.piece(t);
        let (a, s) = self.counts[j];
        let (u, v) = self.exposure(t);
        let (beta, theta, c) = (self.beta, self.theta, self.weight);
        let cum = u + theta * v;
        let mut g = vec![0.0; self.dim()];
        let mut h = Matrix::zeros(self.dim(), self.dim());
        g[0] = 1.0 / beta - c * cum;
        g[1] = s / (a + theta * s) - beta * c * v;
        g[phi_k] = t;
        h[(0, 0)] = -1.0 / (beta * beta);
        h[(0, 1)] = -c * v;
        h[(1, 1)] = -(s * s) / ((a + theta * s) * (a + theta * s));
        for k in 0..d {
            let xk = self.x[k];
            g[2 + k] = xk * (1.0 - beta * c * cum);
            h[(0, 2 + k)] = -xk * c * cum;
            h[(1, 2 + k)] = -xk * beta * c * v;
            for l in 0..=k {
                h[(2 + l, 2 + k)] = -self.x[l] * xk * beta * c * cum;
            }
        }
        for r in 0..self.dim() {
            for q in 0..r {
                h[(r, q)] = h[(q, r)];
            }
        }
        (g, h)
    }
}

/// Louis information with the conditional moments of the hidden exposure
/// times computed by quadrature.
///
/// With every recovery time observed, each hidden exposure time has its own
/// conditional law and the complete-data score is a sum of independent
/// per-individual terms, so `Cov[S_c]` is the sum of their covariances.
pub fn exposure_louis_information(obs: &ObservedData, at: &Parameters, held: &[usize]) -> Result<LouisInformation> {
    if !obs.hidden_recoveries().is_empty() {
        return Err(Error::Invalid("quadrature information needs every recovery time observed".into()));
    }
    if at.external.is_some() || obs.external.iter().any(|&e| e) {
        return Err(Error::Invalid("quadrature information does not cover external infections".into()));
    }
    let cov = &obs.covariates;
    let layout = ParamLayout::of(at);
    let n = layout.len();
    let hidden: Vec<(Id, Time, Time)> = obs
        .hidden_exposures()
        .into_iter()
        .map(|i| match obs.exposure[i] {
            ExposureSlot::Hidden { lower, upper } => (i, lower, upper),
            _ => unreachable!("hidden_exposures lists hidden slots"),
        })
        .collect();
    let terms: Vec<ExposureTerm> = hidden.iter().map(|&(i, lo, hi)| ExposureTerm::new(obs, at, i, lo, hi)).collect();

    let mut aug = obs.initial_augmentation();
    for (term, &(i, _, _)) in terms.iter().zip(&hidden) {
        let onset = obs.onset[i].expect("hidden exposures have an onset");
        aug.exposure[i] = Some(term.feasible_time(i).ok_or(Error::Incompatible { individual: i, time: onset })?);
    }
    let stats = sufficient_statistics(&obs.complete_log(&aug)?, cov)?;
    let h0 = hessian(&stats, cov, at)?;

    let m = 3 + cov.dim();
    let moments: Vec<(Matrix, Matrix)> = terms
        .par_iter()
        .zip(&hidden)
        .map(|(term, &(i, _, _))| {
            let mut mean_g = vec![0.0; m];
            let mut second = Matrix::zeros(m, m);
            let mut mean_h = Matrix::zeros(m, m);
            for (t, w) in term.nodes() {
                let (g, h) = term.derivatives(t);
                for r in 0..m {
                    mean_g[r] += w * g[r];
                    for q in 0..m {
                        second[(r, q)] += w * g[r] * g[q];
                        mean_h[(r, q)] += w * h[(r, q)];
                    }
                }
            }
            let mut var = second;
            for r in 0..m {
                for q in 0..m {
                    var[(r, q)] -= mean_g[r] * mean_g[q];
                }
            }
            let (_, h_at) = term.derivatives(aug.exposure[i].expect("set above"));
            (var, mean_h.sub(&h_at))
        })
        .collect();

    let mut neg_h = h0.scale(-1.0);
    let mut cov_g = Matrix::zeros(n, n);
    for (var, dh) in &moments {
        for r in 0..m {
            for q in 0..m {
                cov_g[(r, q)] += var[(r, q)];
                neg_h[(r, q)] -= dh[(r, q)];
            }
        }
    }
    Ok(assemble(layout, at, held, &neg_h, &cov_g, 0))
}

/// Standard errors `sqrt(multiplier · diag(I^{-1}))` in layout order.
///
/// `None` marks parameters outside the active set and, when the information
/// is indefinite, parameters whose inverse diagonal is not positive.
pub fn asymptotic_se(info: &LouisInformation, multiplier: f64) -> Result<Vec<Option<f64>>> {
    if info.active.is_empty() {
        return Err(Error::Numerical("no parameter carries information".into()));
    }
    let inv = info.observed.inverse()?;
    let mut se = vec![None; info.layout.len()];
    for (a, &k) in info.active.iter().enumerate() {
        let v = inv[(a, a)];
        if v > 0.0 && v.is_finite() {
            se[k] = Some((multiplier * v).sqrt());
        }
    }
    Ok(se)
}
