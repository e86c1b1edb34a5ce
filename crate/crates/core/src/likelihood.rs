//! Complete-data log-likelihood, score and Hessian.
//!
//! All three are functions of [`SufficientStats`] and the covariates only.
//! The parameter vector is ordered by [`ParamLayout`]; the infectiousness
//! multiplier enters as `θ = e^η`.

use crate::error::{Error, Result};
use crate::Matrix;
use crate::model::{Covariates, ExternalParams, LinkRates, PairType, Parameters, Phase};
use crate::stats::SufficientStats;

/// Index map of the flat parameter vector:
/// `β, θ, b_S.., φ, γ, p_s, α(6), ω(6)[, ξ, b_E..]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub dim: usize,
    pub external: bool,
}

impl ParamLayout {
    pub fn new(dim: usize, external: bool) -> Self {
        ParamLayout { dim, external }
    }

    pub fn of(params: &Parameters) -> Self {
        ParamLayout::new(params.dim(), params.external.is_some())
    }

    pub const BETA: usize = 0;
    pub const THETA: usize = 1;

    pub fn b_s(&self, k: usize) -> usize {
        2 + k
    }

    pub fn phi(&self) -> usize {
        2 + self.dim
    }

    pub fn gamma(&self) -> usize {
        3 + self.dim
    }

    pub fn p_s(&self) -> usize {
        4 + self.dim
    }

    pub fn alpha(&self, phase: Phase, pair: PairType) -> usize {
        5 + self.dim + 3 * phase.index() + pair.index()
    }

    pub fn omega(&self, phase: Phase, pair: PairType) -> usize {
        11 + self.dim + 3 * phase.index() + pair.index()
    }

    pub fn xi(&self) -> usize {
        assert!(self.external, "layout has no external block");
        17 + self.dim
    }

    pub fn b_e(&self, k: usize) -> usize {
        self.xi() + 1 + k
    }

    pub fn len(&self) -> usize {
        17 + self.dim + if self.external { 1 + self.dim } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stable names used in output files.
    pub fn names(&self) -> Vec<String> {
        let mut v = vec!["beta".to_string(), "exp_eta".to_string()];
        v.extend((0..self.dim).map(|k| format!("b_S_{k}")));
        v.extend(["phi", "gamma", "p_s"].map(String::from));
        for prefix in ["alpha", "omega"] {
            for (k, ab) in LinkRates::slots() {
                v.push(format!("{prefix}_{}{}", ab.label(), k.index()));
            }
        }
        if self.external {
            v.push("xi".into());
            v.extend((0..self.dim).map(|k| format!("b_E_{k}")));
        }
        v
    }

    pub fn to_vec(&self, p: &Parameters) -> Vec<f64> {
        let mut v = vec![p.beta, p.exp_eta];
        v.extend_from_slice(&p.b_s);
        v.extend([p.phi, p.gamma, p.p_s]);
        v.extend(p.alpha.flat());
        v.extend(p.omega.flat());
        if self.external {
            let ext = p.external.as_ref().expect("layout requires external parameters");
            v.push(ext.xi);
            v.extend_from_slice(&ext.b_e);
        }
        v
    }

    pub fn from_vec(&self, v: &[f64]) -> Parameters {
        assert_eq!(v.len(), self.len());
        let d = self.dim;
        let six = |o: usize| -> [f64; 6] { v[o..o + 6].try_into().unwrap() };
        Parameters {
            beta: v[0],
            exp_eta: v[1],
            b_s: v[2..2 + d].to_vec(),
            phi: v[self.phi()],
            gamma: v[self.gamma()],
            p_s: v[self.p_s()],
            alpha: LinkRates::from_flat(six(5 + d)),
            omega: LinkRates::from_flat(six(11 + d)),
            external: self.external.then(|| ExternalParams { xi: v[17 + d], b_e: v[18 + d..18 + 2 * d].to_vec() }),
        }
    }
}

/// Log-likelihood split by sub-model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLikelihood {
    pub epidemic: f64,
    pub progression: f64,
    pub network: f64,
    pub external: f64,
}

impl LogLikelihood {
    pub fn total(&self) -> f64 {
        self.epidemic + self.progression + self.network + self.external
    }

    /// The complete data have probability zero under the parameters.
    pub fn is_impossible(&self) -> bool {
        self.total() == f64::NEG_INFINITY
    }
}

/// `c · ln(y)` with `0 · ln 0 = 0`.
fn xlogy(c: f64, y: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * y.ln()
    }
}

/// `c / y` with `0 / 0 = 0`.
fn ratio(c: f64, y: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c / y
    }
}

fn check(stats: &SufficientStats, cov: &Covariates, params: &Parameters) -> Result<()> {
    if cov.len() != stats.population {
        return Err(Error::Invalid(format!(
            "covariates cover {} individuals, statistics {}",
            cov.len(),
            stats.population
        )));
    }
    if params.b_s.len() != cov.dim() {
        return Err(Error::Invalid(format!(
            "b_S has {} entries, covariates have {} columns",
            params.b_s.len(),
            cov.dim()
        )));
    }
    if stats.n_external > 0 && params.external.is_none() {
        return Err(Error::Invalid("log has external onsets but the external block is disabled".into()));
    }
    if let Some(ext) = &params.external {
        if ext.b_e.len() != cov.dim() {
            return Err(Error::Invalid("b_E length differs from the covariate dimension".into()));
        }
    }
    Ok(())
}

/// Complete-data log-likelihood.
pub fn log_likelihood(stats: &SufficientStats, cov: &Covariates, params: &Parameters) -> Result<LogLikelihood> {
    check(stats, cov, params)?;
    let theta = params.exp_eta;
    let mut epidemic = xlogy(stats.n_exposure as f64, params.beta);
    let mut hazard = 0.0;
    for i in 0..stats.population {
        let eta = cov.dot(i, &params.b_s);
        if stats.exposed[i] {
            let (a, s) = stats.exposure_snapshot[i];
            epidemic += eta + (f64::from(a) + theta * f64::from(s)).ln();
        }
        let f = stats.pressure(i, theta);
        if f > 0.0 {
            hazard += eta.exp() * f;
        }
    }
    epidemic -= params.beta * hazard;

    let progression = xlogy(stats.n_manifestation as f64, params.phi) - params.phi * stats.exposed_integral
        + xlogy(stats.n_recovery as f64, params.gamma)
        - params.gamma * stats.infectious_integral
        + xlogy(stats.n_is as f64, params.p_s)
        + xlogy(stats.n_ia as f64, 1.0 - params.p_s);

    let mut network = 0.0;
    for k in 0..2 {
        for ab in 0..3 {
            let (a, w) = (params.alpha.0[k][ab], params.omega.0[k][ab]);
            network += xlogy(stats.activations[k][ab] as f64, a) - a * stats.disconnected_integral[k][ab]
                + xlogy(stats.terminations[k][ab] as f64, w)
                - w * stats.connected_integral[k][ab];
        }
    }

    let mut external = 0.0;
    if let Some(ext) = &params.external {
        external = xlogy(stats.n_external as f64, ext.xi);
        let mut survival = 0.0;
        for i in 0..stats.population {
            let eta = cov.dot(i, &ext.b_e);
            if stats.external_case[i] {
                external += eta;
            }
            if stats.external_exposure[i] > 0.0 {
                survival += stats.external_exposure[i] * eta.exp();
            }
        }
        external -= ext.xi * survival;
    }

    Ok(LogLikelihood { epidemic, progression, network, external })
}

/// Gradient of the complete-data log-likelihood in [`ParamLayout`] order.
pub fn score(stats: &SufficientStats, cov: &Covariates, params: &Parameters) -> Result<Vec<f64>> {
    check(stats, cov, params)?;
    let lay = ParamLayout::of(params);
    let d = lay.dim;
    let theta = params.exp_eta;
    let mut g = vec![0.0; lay.len()];

    let mut sum_f = 0.0;
    let mut sum_s = 0.0;
    let mut sum_fx = vec![0.0; d];
    let mut exposed_x = vec![0.0; d];
    let mut theta_term = 0.0;
    for i in 0..stats.population {
        let x = cov.row(i);
        let e = cov.dot(i, &params.b_s).exp();
        if stats.exposed[i] {
            let (a, s) = stats.exposure_snapshot[i];
            theta_term += ratio(f64::from(s), f64::from(a) + theta * f64::from(s));
            for k in 0..d {
                exposed_x[k] += x[k];
            }
        }
        let f = stats.pressure(i, theta);
        if f > 0.0 {
            sum_f += e * f;
            sum_s += e * stats.pressure_is[i];
            for k in 0..d {
                sum_fx[k] += e * f * x[k];
            }
        }
    }
    g[ParamLayout::BETA] = ratio(stats.n_exposure as f64, params.beta) - sum_f;
    g[ParamLayout::THETA] = theta_term - params.beta * sum_s;
    for k in 0..d {
        g[lay.b_s(k)] = exposed_x[k] - params.beta * sum_fx[k];
    }
    g[lay.phi()] = ratio(stats.n_manifestation as f64, params.phi) - stats.exposed_integral;
    g[lay.gamma()] = ratio(stats.n_recovery as f64, params.gamma) - stats.infectious_integral;
    g[lay.p_s()] = ratio(stats.n_is as f64, params.p_s) - ratio(stats.n_ia as f64, 1.0 - params.p_s);
    for (k, ab) in LinkRates::slots() {
        let (ki, ai) = (k.index(), ab.index());
        g[lay.alpha(k, ab)] =
            ratio(stats.activations[ki][ai] as f64, params.alpha.0[ki][ai]) - stats.disconnected_integral[ki][ai];
        g[lay.omega(k, ab)] =
            ratio(stats.terminations[ki][ai] as f64, params.omega.0[ki][ai]) - stats.connected_integral[ki][ai];
    }
    if let Some(ext) = &params.external {
        let (surv, surv_x, case_x) = external_sums(stats, cov, &ext.b_e);
        g[lay.xi()] = ratio(stats.n_external as f64, ext.xi) - surv;
        for k in 0..d {
            g[lay.b_e(k)] = case_x[k] - ext.xi * surv_x[k];
        }
    }
    Ok(g)
}

/// `(Σ τ e^{x b}, Σ τ e^{x b} x, Σ_ext x)`.
fn external_sums(stats: &SufficientStats, cov: &Covariates, b_e: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let d = cov.dim();
    let mut surv = 0.0;
    let mut surv_x = vec![0.0; d];
    let mut case_x = vec![0.0; d];
    for i in 0..stats.population {
        let x = cov.row(i);
        if stats.external_case[i] {
            for k in 0..d {
                case_x[k] += x[k];
            }
        }
        let tau = stats.external_exposure[i];
        if tau > 0.0 {
            let w = tau * cov.dot(i, b_e).exp();
            surv += w;
            for k in 0..d {
                surv_x[k] += w * x[k];
            }
        }
    }
    (surv, surv_x, case_x)
}

/// Analytic Hessian of the complete-data log-likelihood.
pub fn hessian(stats: &SufficientStats, cov: &Covariates, params: &Parameters) -> Result<Matrix> {
    check(stats, cov, params)?;
    let lay = ParamLayout::of(params);
    let d = lay.dim;
    let theta = params.exp_eta;
    let beta = params.beta;
    let mut h = Matrix::zeros(lay.len(), lay.len());

    let mut tt = 0.0;
    for i in 0..stats.population {
        let x = cov.row(i);
        if stats.exposed[i] {
            let (a, s) = stats.exposure_snapshot[i];
            let s = f64::from(s);
            if s > 0.0 {
                let den = f64::from(a) + theta * s;
                tt -= s * s / (den * den);
            }
        }
        let f = stats.pressure(i, theta);
        if f <= 0.0 {
            continue;
        }
        let e = cov.dot(i, &params.b_s).exp();
        let si = stats.pressure_is[i];
        h[(ParamLayout::BETA, ParamLayout::THETA)] -= e * si;
        for k in 0..d {
            h[(ParamLayout::BETA, lay.b_s(k))] -= e * f * x[k];
            h[(ParamLayout::THETA, lay.b_s(k))] -= beta * e * si * x[k];
            for l in 0..=k {
                h[(lay.b_s(k), lay.b_s(l))] -= beta * e * f * x[k] * x[l];
            }
        }
    }
    h[(ParamLayout::BETA, ParamLayout::BETA)] = -ratio(stats.n_exposure as f64, beta * beta);
    h[(ParamLayout::THETA, ParamLayout::THETA)] = tt;
    h[(lay.phi(), lay.phi())] = -ratio(stats.n_manifestation as f64, params.phi * params.phi);
    h[(lay.gamma(), lay.gamma())] = -ratio(stats.n_recovery as f64, params.gamma * params.gamma);
    h[(lay.p_s(), lay.p_s())] = -ratio(stats.n_is as f64, params.p_s * params.p_s)
        - ratio(stats.n_ia as f64, (1.0 - params.p_s) * (1.0 - params.p_s));
    for (k, ab) in LinkRates::slots() {
        let (ki, ai) = (k.index(), ab.index());
        let a = params.alpha.0[ki][ai];
        let w = params.omega.0[ki][ai];
        h[(lay.alpha(k, ab), lay.alpha(k, ab))] = -ratio(stats.activations[ki][ai] as f64, a * a);
        h[(lay.omega(k, ab), lay.omega(k, ab))] = -ratio(stats.terminations[ki][ai] as f64, w * w);
    }
    if let Some(ext) = &params.external {
        let xi = lay.xi();
        h[(xi, xi)] = -ratio(stats.n_external as f64, ext.xi * ext.xi);
        for i in 0..stats.population {
            let tau = stats.external_exposure[i];
            if tau <= 0.0 {
                continue;
            }
            let x = cov.row(i);
            let w = tau * cov.dot(i, &ext.b_e).exp();
            for k in 0..d {
                h[(xi, lay.b_e(k))] -= w * x[k];
                for l in 0..=k {
                    h[(lay.b_e(k), lay.b_e(l))] -= ext.xi * w * x[k] * x[l];
                }
            }
        }
    }
    // mirror the filled triangle
    let n = lay.len();
    for i in 0..n {
        for j in 0..i {
            let v = h[(i, j)] + h[(j, i)];
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// Central differences of the score, symmetrised. Steps are relative to each
/// coordinate and clipped so that rates stay positive and `p_s` stays in (0, 1).
pub fn numerical_hessian(stats: &SufficientStats, cov: &Covariates, params: &Parameters) -> Result<Matrix> {
    let lay = ParamLayout::of(params);
    let x0 = lay.to_vec(params);
    let n = lay.len();
    let mut h = Matrix::zeros(n, n);
    for j in 0..n {
        let mut step = 1e-5 * x0[j].abs().max(1e-3);
        if j != ParamLayout::THETA && !is_coefficient(&lay, j) {
            step = step.min(0.5 * x0[j].abs().max(f64::MIN_POSITIVE));
        }
        if j == lay.p_s() {
            step = step.min(0.5 * (1.0 - x0[j]));
        }
        let mut up = x0.clone();
        let mut dn = x0.clone();
        up[j] += step;
        dn[j] -= step;
        let gu = score(stats, cov, &lay.from_vec(&up))?;
        let gd = score(stats, cov, &lay.from_vec(&dn))?;
        for i in 0..n {
            h[(i, j)] = (gu[i] - gd[i]) / (2.0 * step);
        }
    }
    Ok(h.symmetrized())
}

fn is_coefficient(lay: &ParamLayout, j: usize) -> bool {
    (2..2 + lay.dim).contains(&j) || (lay.external && j > lay.xi())
}
