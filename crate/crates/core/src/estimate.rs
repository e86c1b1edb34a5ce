//! Complete-data maximum likelihood.
//!
//! Progression, subtype and link rates have closed forms. The exposure block
//! `(β, b_S, θ)` and the external block `(ξ, b_E)` reduce to Poisson
//! regressions with offsets, solved by [`poisson_offset_fit`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{score, ParamLayout};
use crate::linalg::Matrix;
use crate::model::{Covariates, ExternalParams, LinkRates, Parameters};
use crate::num::Real;
use crate::stats::SufficientStats;

/// How a component estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    /// Interior solution of the score equation.
    Ok,
    /// Maximiser on the boundary of the parameter space (a zero count).
    Boundary,
    /// No information in the data; the reported value is a placeholder.
    Undetermined,
    /// Held at a caller-supplied value.
    Fixed,
}

#[derive(Clone, Copy, Debug)]
pub struct PoissonOptions<F> {
    /// Converged when every score entry is below this in absolute value.
    pub tol: F,
    pub max_iter: usize,
    /// Divergence guard on coefficient magnitude.
    pub max_coef: F,
}

impl<F: Real> Default for PoissonOptions<F> {
    fn default() -> Self {
        PoissonOptions { tol: F::of(1e-8).max(F::epsilon() * F::of(1e4)), max_iter: 200, max_coef: F::of(1e3) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonFit<F> {
    pub coef: Vec<F>,
    pub iterations: usize,
    pub max_abs_score: F,
}

/// Log-likelihood, its rounding scale, score and information.
fn poisson_eval<F: Real>(x: &Matrix<F>, y: &[F], offset: &[F], b: &[F]) -> (F, F, Vec<F>, Matrix<F>) {
    let p = x.cols();
    let mut ll = F::zero();
    let mut scale = F::zero();
    let mut g = vec![F::zero(); p];
    let mut info = Matrix::zeros(p, p);
    for i in 0..x.rows() {
        let row = x.row(i);
        let lin = offset[i] + row.iter().zip(b).fold(F::zero(), |acc, (&a, &c)| acc + a * c);
        let mu = lin.exp();
        ll = ll + y[i] * lin - mu;
        scale = scale + (y[i] * lin).abs() + mu;
        let r = y[i] - mu;
        for k in 0..p {
            g[k] = g[k] + r * row[k];
            for l in 0..=k {
                info[(k, l)] = info[(k, l)] + mu * row[k] * row[l];
            }
        }
    }
    for k in 0..p {
        for l in 0..k {
            info[(l, k)] = info[(k, l)];
        }
    }
    (ll, scale, g, info)
}

/// Newton-Raphson for `y_i ~ Poisson(exp(offset_i + x_i·b))` with step halving.
pub fn poisson_offset_fit<F: Real>(
    x: &Matrix<F>,
    y: &[F],
    offset: &[F],
    init: &[F],
    opts: &PoissonOptions<F>,
) -> Result<PoissonFit<F>> {
    let p = x.cols();
    if y.len() != x.rows() || offset.len() != x.rows() || init.len() != p {
        return Err(Error::Invalid("poisson fit: dimension mismatch".into()));
    }
    if y.iter().all(|v| *v == F::zero()) {
        return Err(Error::Estimation { component: "poisson".into(), reason: "all responses are zero".into() });
    }
    let mut b = init.to_vec();
    let (mut ll, mut scale, mut g, mut info) = poisson_eval(x, y, offset, &b);
    let fail = |b: &[F], g: &[F], why: &str| Error::Estimation {
        component: "poisson".into(),
        reason: format!("{why}; last iterate {b:?}, score {g:?}"),
    };
    let maxabs = |g: &[F]| g.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    for it in 0..opts.max_iter {
        if maxabs(&g) < opts.tol {
            return Ok(PoissonFit { coef: b, iterations: it, max_abs_score: maxabs(&g) });
        }
        let step = info
            .solve_spd(&g)
            .map_err(|e| Error::Estimation { component: "poisson".into(), reason: e.to_string() })?;
        let mut t = F::one();
        loop {
            let cand: Vec<F> = b.iter().zip(&step).map(|(&a, &s)| a + t * s).collect();
            let (ll2, scale2, g2, info2) = poisson_eval(x, y, offset, &cand);
            // accept any step that does not lose more than summation rounding
            if ll2.is_finite() && ll2 >= ll - F::of(64.0) * F::epsilon() * scale.max(scale2) {
                b = cand;
                ll = ll2;
                scale = scale2;
                g = g2;
                info = info2;
                break;
            }
            t = t * F::of(0.5);
            if t < F::of(1e-12) {
                if maxabs(&g) < opts.tol.sqrt() {
                    // stalled at rounding level of the objective
                    return Ok(PoissonFit { max_abs_score: maxabs(&g), coef: b, iterations: it });
                }
                return Err(fail(&b, &g, "line search failed"));
            }
        }
        if b.iter().any(|v| !(v.abs() < opts.max_coef)) {
            return Err(fail(&b, &g, "coefficients diverge (separation)"));
        }
    }
    if maxabs(&g) < opts.tol {
        return Ok(PoissonFit { max_abs_score: maxabs(&g), coef: b, iterations: opts.max_iter });
    }
    Err(fail(&b, &g, "no convergence"))
}

/// Components held at given values instead of being estimated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FixedMask {
    pub beta: Option<f64>,
    pub b_s: Option<Vec<f64>>,
    pub exp_eta: Option<f64>,
    pub phi: Option<f64>,
    pub gamma: Option<f64>,
    pub p_s: Option<f64>,
    pub alpha: Option<LinkRates>,
    pub omega: Option<LinkRates>,
}

impl FixedMask {
    /// Layout indices held fixed.
    pub fn indices(&self, layout: &ParamLayout) -> Vec<usize> {
        let mut v = Vec::new();
        if self.beta.is_some() {
            v.push(ParamLayout::BETA);
        }
        if self.exp_eta.is_some() {
            v.push(ParamLayout::THETA);
        }
        if self.b_s.is_some() {
            v.extend((0..layout.dim).map(|k| layout.b_s(k)));
        }
        for (set, idx) in [(self.phi, layout.phi()), (self.gamma, layout.gamma()), (self.p_s, layout.p_s())] {
            if set.is_some() {
                v.push(idx);
            }
        }
        for (k, ab) in LinkRates::slots() {
            if self.alpha.is_some() {
                v.push(layout.alpha(k, ab));
            }
            if self.omega.is_some() {
                v.push(layout.omega(k, ab));
            }
        }
        v.sort_unstable();
        v
    }

    /// Overwrites the held components of `p`.
    pub fn apply(&self, p: &mut Parameters) {
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = &self.b_s {
            p.b_s = v.clone();
        }
        if let Some(v) = self.exp_eta {
            p.exp_eta = v;
        }
        if let Some(v) = self.phi {
            p.phi = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.p_s {
            p.p_s = v;
        }
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        if let Some(v) = self.omega {
            p.omega = v;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpidemicFit {
    pub beta: f64,
    pub b_s: Vec<f64>,
    pub exp_eta: f64,
    pub beta_status: EstimateStatus,
    pub b_s_status: EstimateStatus,
    pub exp_eta_status: EstimateStatus,
    pub iterations: usize,
    pub max_abs_score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative change between sweeps below which the iterate has settled.
    pub tol: f64,
    /// Required bound on the free score entries at the solution.
    pub score_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, score_tol: 1e-6, max_iter: 500 }
    }
}

/// Exposed rows of the regression: `F_i(θ) = A_i + θ S_i` and the indicators.
fn theta_equation(stats: &SufficientStats, theta: f64) -> f64 {
    let mut lhs = 0.0;
    for i in 0..stats.population {
        if stats.exposed[i] {
            let (a, s) = stats.exposure_snapshot[i];
            if s > 0 {
                lhs += f64::from(s) / (f64::from(a) + theta * f64::from(s));
            }
        }
    }
    lhs
}

/// Root of the decreasing map `θ ↦ Σ_exp s/(a + θ s) - c` on `(0, ∞)`.
fn solve_theta(stats: &SufficientStats, c: f64) -> Result<(f64, EstimateStatus)> {
    let at_zero = theta_equation(stats, 0.0);
    if at_zero <= c {
        return Ok((0.0, EstimateStatus::Boundary));
    }
    let mut hi = 1.0;
    let mut n = 0;
    while theta_equation(stats, hi) > c {
        hi *= 2.0;
        n += 1;
        if n > 2000 {
            return Err(Error::Estimation { component: "exp_eta".into(), reason: "no upper bracket".into() });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if theta_equation(stats, mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), EstimateStatus::Ok))
}

/// Joint maximisation over `(β, b_S, θ)`, alternating the Poisson regression
/// for `(log β, b_S)` given `θ` with the one-dimensional `θ` equation.
pub fn solve_beta_bs_eta(
    stats: &SufficientStats,
    cov: &Covariates,
    fixed: &FixedMask,
    opts: &SolverOptions,
) -> Result<EpidemicFit> {
    let n = stats.population;
    let d = cov.dim();
    let n_e = stats.n_exposure as f64;
    let mut theta = fixed.exp_eta.unwrap_or(1.0);
    let mut b_s = fixed.b_s.clone().unwrap_or_else(|| vec![0.0; d]);
    if b_s.len() != d {
        return Err(Error::Invalid(format!("fixed b_S has {} entries, expected {d}", b_s.len())));
    }
    let total_is: f64 = (0..n).map(|i| stats.pressure_is[i]).sum();
    let theta_free = fixed.exp_eta.is_none();
    let theta_identified = total_is > 0.0 || !theta_free;

    if n_e == 0.0 {
        return Ok(EpidemicFit {
            beta: fixed.beta.unwrap_or(0.0),
            b_s,
            exp_eta: theta,
            beta_status: if fixed.beta.is_some() { EstimateStatus::Fixed } else { EstimateStatus::Boundary },
            b_s_status: if fixed.b_s.is_some() { EstimateStatus::Fixed } else { EstimateStatus::Undetermined },
            exp_eta_status: if theta_free { EstimateStatus::Undetermined } else { EstimateStatus::Fixed },
            iterations: 0,
            max_abs_score: 0.0,
        });
    }

    let lin = |i: usize, b: &[f64]| cov.dot(i, b);
    let mut beta = match fixed.beta {
        Some(b) => b,
        None => {
            let denom: f64 = (0..n).map(|i| lin(i, &b_s).exp() * stats.pressure(i, theta)).sum();
            n_e / denom
        }
    };
    let mut theta_status = if !theta_free {
        EstimateStatus::Fixed
    } else if theta_identified {
        EstimateStatus::Ok
    } else {
        EstimateStatus::Undetermined
    };
    let popts = PoissonOptions::<f64>::default();
    let fit_beta = fixed.beta.is_none();
    let fit_b = fixed.b_s.is_none();
    for outer in 1..=opts.max_iter {
        let (old_beta, old_theta, old_b) = (beta, theta, b_s.clone());

        if fit_beta || fit_b {
            let rows: Vec<usize> = (0..n).filter(|&i| stats.pressure(i, theta) > 0.0).collect();
            let cols = usize::from(fit_beta) + if fit_b { d } else { 0 };
            let mut x = Matrix::zeros(rows.len(), cols);
            let mut y = Vec::with_capacity(rows.len());
            let mut off = Vec::with_capacity(rows.len());
            for (r, &i) in rows.iter().enumerate() {
                let mut c = 0;
                if fit_beta {
                    x[(r, 0)] = 1.0;
                    c = 1;
                }
                if fit_b {
                    for (k, v) in cov.row(i).iter().enumerate() {
                        x[(r, c + k)] = *v;
                    }
                }
                y.push(if stats.exposed[i] { 1.0 } else { 0.0 });
                let mut o = stats.pressure(i, theta).ln();
                if !fit_beta {
                    o += beta.ln();
                }
                if !fit_b {
                    o += lin(i, &b_s);
                }
                off.push(o);
            }
            let mut init = Vec::with_capacity(cols);
            if fit_beta {
                init.push(beta.ln());
            }
            if fit_b {
                init.extend_from_slice(&b_s);
            }
            let fit = poisson_offset_fit(&x, &y, &off, &init, &popts)?;
            if fit_beta {
                beta = fit.coef[0].exp();
            }
            if fit_b {
                b_s = fit.coef[usize::from(fit_beta)..].to_vec();
            }
        }

        if theta_free && theta_identified {
            let k: f64 = (0..n)
                .filter(|&i| stats.pressure_is[i] > 0.0)
                .map(|i| lin(i, &b_s).exp() * stats.pressure_is[i])
                .sum();
            let (t, st) = solve_theta(stats, beta * k)?;
            theta = t;
            theta_status = st;
        }

        let rel = |a: f64, b: f64| (a - b).abs() <= opts.tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let mut settled = rel(beta, old_beta) && rel(theta, old_theta) && b_s.iter().zip(&old_b).all(|(a, b)| rel(*a, *b));
        // Alternation crawls along the β/θ ridge; finish with joint Newton steps.
        if !settled && outer >= NEWTON_AFTER {
            let fit_theta = theta_free && theta_status == EstimateStatus::Ok;
            if let Some((nb, nbs, nt)) = newton_polish(stats, cov, beta, &b_s, theta, fit_beta, fit_b, fit_theta, opts) {
                (beta, b_s, theta) = (nb, nbs, nt);
                settled = true;
            }
        }
        let residual = epidemic_residual(stats, cov, beta, &b_s, theta, fit_beta, fit_b, theta_free && theta_status == EstimateStatus::Ok);
        if (settled && residual < opts.score_tol) || !(theta_free && theta_identified) {
            return Ok(EpidemicFit {
                beta,
                b_s,
                exp_eta: theta,
                beta_status: if fit_beta { EstimateStatus::Ok } else { EstimateStatus::Fixed },
                b_s_status: if fit_b { EstimateStatus::Ok } else { EstimateStatus::Fixed },
                exp_eta_status: theta_status,
                iterations: outer,
                max_abs_score: residual,
            });
        }
    }
    let residual = epidemic_residual(stats, cov, beta, &b_s, theta, fit_beta, fit_b, theta_free);
    Err(Error::Estimation {
        component: "beta/b_S/exp_eta".into(),
        reason: format!(
            "no convergence in {} iterations: beta={beta}, b_S={b_s:?}, exp_eta={theta}, max |score|={residual}",
            opts.max_iter
        ),
    })
}

/// Alternating sweeps before joint Newton steps are tried.
const NEWTON_AFTER: usize = 10;
const NEWTON_STEPS: usize = 100;

/// Log-likelihood of the exposure block with its gradient and Hessian over
/// `(β, b_S.., θ)`.
fn epidemic_derivatives(
    stats: &SufficientStats,
    cov: &Covariates,
    beta: f64,
    b_s: &[f64],
    theta: f64,
) -> (f64, Vec<f64>, Matrix<f64>) {
    let d = cov.dim();
    let m = d + 2;
    let n_e = stats.n_exposure as f64;
    let mut ll = n_e * beta.ln();
    let mut g = vec![0.0; m];
    let mut h = Matrix::zeros(m, m);
    g[0] = n_e / beta;
    h[(0, 0)] = -n_e / (beta * beta);
    for i in 0..stats.population {
        let x = cov.row(i);
        if stats.exposed[i] {
            let (a, s) = stats.exposure_snapshot[i];
            let (a, s) = (f64::from(a), f64::from(s));
            ll += cov.dot(i, b_s) + (a + theta * s).ln();
            g[m - 1] += s / (a + theta * s);
            h[(m - 1, m - 1)] -= s * s / ((a + theta * s) * (a + theta * s));
            for k in 0..d {
                g[1 + k] += x[k];
            }
        }
        let f = stats.pressure(i, theta);
        if f > 0.0 {
            let e = cov.dot(i, b_s).exp();
            let ps = stats.pressure_is[i];
            ll -= beta * e * f;
            g[0] -= e * f;
            g[m - 1] -= beta * e * ps;
            h[(0, m - 1)] -= e * ps;
            for k in 0..d {
                g[1 + k] -= beta * e * f * x[k];
                h[(0, 1 + k)] -= e * f * x[k];
                h[(1 + k, m - 1)] -= beta * e * ps * x[k];
                for l in 0..=k {
                    h[(1 + l, 1 + k)] -= beta * e * f * x[k] * x[l];
                }
            }
        }
    }
    for r in 0..m {
        for q in 0..r {
            h[(r, q)] = h[(q, r)];
        }
    }
    (ll, g, h)
}

/// Damped Newton ascent on the free members of the exposure block. Returns
/// the converged point, or `None` where the Hessian is not negative definite
/// or no step improves the likelihood.
#[allow(clippy::too_many_arguments)]
fn newton_polish(
    stats: &SufficientStats,
    cov: &Covariates,
    beta: f64,
    b_s: &[f64],
    theta: f64,
    fit_beta: bool,
    fit_b: bool,
    fit_theta: bool,
    opts: &SolverOptions,
) -> Option<(f64, Vec<f64>, f64)> {
    let d = cov.dim();
    let mut free = Vec::new();
    if fit_beta {
        free.push(0);
    }
    if fit_b {
        free.extend(1..=d);
    }
    if fit_theta {
        free.push(d + 1);
    }
    if free.is_empty() {
        return None;
    }
    let mut x: Vec<f64> = std::iter::once(beta).chain(b_s.iter().copied()).chain([theta]).collect();
    let (mut ll, mut g, mut h) = epidemic_derivatives(stats, cov, x[0], &x[1..=d], x[d + 1]);
    for _ in 0..NEWTON_STEPS {
        let gf: Vec<f64> = free.iter().map(|&k| g[k]).collect();
        let mut neg = Matrix::zeros(free.len(), free.len());
        for (a, &r) in free.iter().enumerate() {
            for (b, &q) in free.iter().enumerate() {
                neg[(a, b)] = -h[(r, q)];
            }
        }
        let step = neg.solve_spd(&gf).ok()?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut y = x.clone();
            for (a, &k) in free.iter().enumerate() {
                y[k] += t * step[a];
            }
            if y[0] > 0.0 && y[d + 1] > 0.0 {
                let next = epidemic_derivatives(stats, cov, y[0], &y[1..=d], y[d + 1]);
                if next.0.is_finite() && next.0 >= ll {
                    accepted = Some((y, next));
                    break;
                }
            }
            t *= 0.5;
        }
        let (y, next) = accepted?;
        let small = free.iter().all(|&k| (y[k] - x[k]).abs() <= opts.tol * y[k].abs().max(x[k].abs()).max(1.0));
        x = y;
        (ll, g, h) = next;
        let residual = free.iter().fold(0.0_f64, |m, &k| m.max(g[k].abs()));
        if small && residual < opts.score_tol {
            return Some((x[0], x[1..=d].to_vec(), x[d + 1]));
        }
    }
    None
}

/// Largest absolute score entry over the free members of the exposure block.
#[allow(clippy::too_many_arguments)]
fn epidemic_residual(
    stats: &SufficientStats,
    cov: &Covariates,
    beta: f64,
    b_s: &[f64],
    theta: f64,
    fit_beta: bool,
    fit_b: bool,
    fit_theta: bool,
) -> f64 {
    let d = cov.dim();
    let mut g_beta = stats.n_exposure as f64 / beta;
    let mut g_theta = theta_equation(stats, theta);
    let mut g_b = vec![0.0; d];
    for i in 0..stats.population {
        let x = cov.row(i);
        if stats.exposed[i] {
            for k in 0..d {
                g_b[k] += x[k];
            }
        }
        let f = stats.pressure(i, theta);
        if f > 0.0 {
            let e = cov.dot(i, b_s).exp();
            g_beta -= e * f;
            g_theta -= beta * e * stats.pressure_is[i];
            for k in 0..d {
                g_b[k] -= beta * e * f * x[k];
            }
        }
    }
    let mut m: f64 = 0.0;
    if fit_beta {
        m = m.max(g_beta.abs());
    }
    if fit_theta {
        m = m.max(g_theta.abs());
    }
    if fit_b {
        m = g_b.iter().fold(m, |m, v| m.max(v.abs()));
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExternalFit {
    pub xi: f64,
    pub b_e: Vec<f64>,
    pub xi_status: EstimateStatus,
    pub b_e_status: EstimateStatus,
}

/// Maximises the external block: `(log ξ, b_E)` as a Poisson regression of
/// the external-case indicators with offset `log τ_i`.
pub fn solve_external(stats: &SufficientStats, cov: &Covariates) -> Result<ExternalFit> {
    let d = cov.dim();
    if stats.n_external == 0 {
        return Ok(ExternalFit {
            xi: 0.0,
            b_e: vec![0.0; d],
            xi_status: EstimateStatus::Boundary,
            b_e_status: EstimateStatus::Undetermined,
        });
    }
    let rows: Vec<usize> = (0..stats.population).filter(|&i| stats.external_exposure[i] > 0.0).collect();
    let mut x = Matrix::zeros(rows.len(), 1 + d);
    let mut y = Vec::with_capacity(rows.len());
    let mut off = Vec::with_capacity(rows.len());
    let total: f64 = rows.iter().map(|&i| stats.external_exposure[i]).sum();
    for (r, &i) in rows.iter().enumerate() {
        x[(r, 0)] = 1.0;
        for (k, v) in cov.row(i).iter().enumerate() {
            x[(r, 1 + k)] = *v;
        }
        y.push(if stats.external_case[i] { 1.0 } else { 0.0 });
        off.push(stats.external_exposure[i].ln());
    }
    let mut init = vec![0.0; 1 + d];
    init[0] = (stats.n_external as f64 / total).ln();
    let fit = poisson_offset_fit(&x, &y, &off, &init, &PoissonOptions::default())?;
    Ok(ExternalFit {
        xi: fit.coef[0].exp(),
        b_e: fit.coef[1..].to_vec(),
        xi_status: EstimateStatus::Ok,
        b_e_status: EstimateStatus::Ok,
    })
}

/// `count / exposure` with its status.
fn rate(count: u64, exposure: f64) -> (f64, EstimateStatus) {
    if exposure <= 0.0 {
        (0.0, EstimateStatus::Undetermined)
    } else if count == 0 {
        (0.0, EstimateStatus::Boundary)
    } else {
        (count as f64 / exposure, EstimateStatus::Ok)
    }
}

#[derive(Clone, Debug, Default)]
pub struct FitOptions {
    /// Estimate the external block; forced on when the log has external onsets.
    pub external: bool,
    pub fixed: FixedMask,
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompleteFit {
    pub params: Parameters,
    pub layout: ParamLayout,
    /// Per-entry status in layout order.
    pub status: Vec<EstimateStatus>,
    /// Score at the estimate in layout order.
    pub score: Vec<f64>,
    pub epidemic_iterations: usize,
}

impl CompleteFit {
    pub fn names(&self) -> Vec<String> {
        self.layout.names()
    }

    /// Largest score entry over interior estimates.
    pub fn max_interior_score(&self) -> f64 {
        self.score
            .iter()
            .zip(&self.status)
            .filter(|(_, s)| **s == EstimateStatus::Ok)
            .fold(0.0, |m, (g, _)| m.max(g.abs()))
    }
}

/// Maximum likelihood estimate from complete-data sufficient statistics.
pub fn fit_complete(stats: &SufficientStats, cov: &Covariates, opts: &FitOptions) -> Result<CompleteFit> {
    let external = opts.external || stats.n_external > 0;
    let layout = ParamLayout::new(cov.dim(), external);
    let mut status = vec![EstimateStatus::Ok; layout.len()];

    let epi = solve_beta_bs_eta(stats, cov, &opts.fixed, &opts.solver)?;
    status[ParamLayout::BETA] = epi.beta_status;
    status[ParamLayout::THETA] = epi.exp_eta_status;
    for k in 0..layout.dim {
        status[layout.b_s(k)] = epi.b_s_status;
    }

    let (phi, s) = rate(stats.n_manifestation, stats.exposed_integral);
    status[layout.phi()] = s;
    let (gamma, s) = rate(stats.n_recovery, stats.infectious_integral);
    status[layout.gamma()] = s;
    let n_sub = stats.n_is + stats.n_ia;
    let p_s = if n_sub == 0 {
        status[layout.p_s()] = EstimateStatus::Undetermined;
        0.5
    } else {
        if stats.n_is == 0 || stats.n_ia == 0 {
            status[layout.p_s()] = EstimateStatus::Boundary;
        }
        stats.n_is as f64 / n_sub as f64
    };
    let mut alpha = LinkRates::default();
    let mut omega = LinkRates::default();
    for (k, ab) in LinkRates::slots() {
        let (ki, ai) = (k.index(), ab.index());
        let (a, s) = rate(stats.activations[ki][ai], stats.disconnected_integral[ki][ai]);
        alpha.set(k, ab, a);
        status[layout.alpha(k, ab)] = s;
        let (w, s) = rate(stats.terminations[ki][ai], stats.connected_integral[ki][ai]);
        omega.set(k, ab, w);
        status[layout.omega(k, ab)] = s;
    }
    let ext = if external {
        let f = solve_external(stats, cov)?;
        status[layout.xi()] = f.xi_status;
        for k in 0..layout.dim {
            status[layout.b_e(k)] = f.b_e_status;
        }
        Some(ExternalParams { xi: f.xi, b_e: f.b_e })
    } else {
        None
    };
    let fixed = &opts.fixed;
    let mut hold = |value: Option<f64>, idx: usize, est: f64| match value {
        Some(v) => {
            status[idx] = EstimateStatus::Fixed;
            v
        }
        None => est,
    };
    let phi = hold(fixed.phi, layout.phi(), phi);
    let gamma = hold(fixed.gamma, layout.gamma(), gamma);
    let p_s = hold(fixed.p_s, layout.p_s(), p_s);
    for (k, ab) in LinkRates::slots() {
        if let Some(a) = &fixed.alpha {
            alpha.set(k, ab, hold(Some(a.get(k, ab)), layout.alpha(k, ab), 0.0));
        }
        if let Some(w) = &fixed.omega {
            omega.set(k, ab, hold(Some(w.get(k, ab)), layout.omega(k, ab), 0.0));
        }
    }
    let params = Parameters {
        beta: epi.beta,
        exp_eta: epi.exp_eta,
        phi,
        gamma,
        p_s,
        b_s: epi.b_s,
        alpha,
        omega,
        external: ext,
    };
    let g = score(stats, cov, &params)?;
    Ok(CompleteFit { params, layout, status, score: g, epidemic_iterations: epi.iterations })
}
