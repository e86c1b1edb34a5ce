//! Test-side oracles shared by the integration suites.
#![allow(dead_code)]

pub mod suites;

use epinet::simulate::{simulate_until, SimConfig, Simulation};
use epinet::Parameters;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic Kolmogorov-Smirnov constant at the 0.001 level.
pub const KS_C_001: f64 = 1.949_47;
/// Two-sided standard normal quantile at the 0.001 level.
pub const Z_001: f64 = 3.290_53;

/// `sup |F_n - F|` of a sample against a continuous CDF.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0_f64, |d, (k, &x)| {
        let f = cdf(x);
        d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n)
    })
}

pub fn ks_critical(n: usize) -> f64 {
    KS_C_001 / (n as f64).sqrt()
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_p(stat: f64, df: f64) -> f64 {
    1.0 - ChiSquared::new(df).expect("positive df").cdf(stat)
}

/// CDF of an unnormalised density on `[a, b]`, tabulated by the trapezoid
/// rule on `n` cells and interpolated linearly.
pub struct GridCdf {
    a: f64,
    h: f64,
    cum: Vec<f64>,
}

impl GridCdf {
    pub fn new(a: f64, b: f64, n: usize, density: impl Fn(f64) -> f64) -> Self {
        let h = (b - a) / n as f64;
        let f: Vec<f64> = (0..=n).map(|k| density(a + k as f64 * h)).collect();
        let mut cum = vec![0.0; n + 1];
        for k in 0..n {
            cum[k + 1] = cum[k] + 0.5 * h * (f[k] + f[k + 1]);
        }
        let total = cum[n];
        cum.iter_mut().for_each(|c| *c /= total);
        GridCdf { a, h, cum }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (t - self.a) / self.h;
        if x <= 0.0 {
            return 0.0;
        }
        let k = x.floor() as usize;
        if k + 1 >= self.cum.len() {
            return 1.0;
        }
        let w = x - k as f64;
        self.cum[k] * (1.0 - w) + self.cum[k + 1] * w
    }
}

/// Log of `∫ e^{f}` over `[a, b]` by the trapezoid rule on `n` cells.
pub fn log_integral(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let v: Vec<f64> = (0..=n).map(|k| f(a + k as f64 * h)).collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = v
        .iter()
        .enumerate()
        .map(|(k, x)| if k == 0 || k == n { 0.5 } else { 1.0 } * (x - top).exp())
        .sum();
    top + (sum * h).ln()
}

/// Outbreak under the synthetic-study design that reaches 10% attack.
pub fn reference_outbreak(n: usize, seed: u64) -> Simulation {
    simulate_until(&Parameters::reference(), &SimConfig::reference(n, seed), 0.1, 200)
        .expect("outbreak within retries")
        .0
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn mean_abs_error(est: &[f64], truth: f64) -> f64 {
    mean(&est.iter().map(|e| (e - truth).abs()).collect::<Vec<_>>())
}
