//! Piecewise-constant hazards and the truncated samplers built on them.
//!
//! A [`StepHazard`] is constant on each `(t_{j-1}, t_j)`. Sampling from the
//! hazard truncated to its support is done in two stages: pick a piece with
//! probability equal to the mass the truncated law puts on it, then invert
//! the truncated exponential CDF inside that piece.

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::{expm1_over_x, Real};

/// Hazard with levels `levels[j]` on `(points[j], points[j + 1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepHazard<F> {
    points: Vec<F>,
    levels: Vec<F>,
}

impl<F: Real> StepHazard<F> {
    pub fn new(points: Vec<F>, levels: Vec<F>) -> Result<Self> {
        if levels.is_empty() || points.len() != levels.len() + 1 {
            return Err(Error::Invalid(format!(
                "step hazard needs n >= 1 levels and n + 1 change points, got {} and {}",
                levels.len(),
                points.len()
            )));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("change points must be finite and strictly increasing".into()));
        }
        if levels.iter().any(|l| !(l.is_finite() && *l >= F::zero())) {
            return Err(Error::Invalid("hazard levels must be finite and nonnegative".into()));
        }
        Ok(StepHazard { points, levels })
    }

    /// A single level over `(lo, hi)`.
    pub fn constant(lo: F, hi: F, level: F) -> Result<Self> {
        StepHazard::new(vec![lo, hi], vec![level])
    }

    pub fn points(&self) -> &[F] {
        &self.points
    }

    pub fn levels(&self) -> &[F] {
        &self.levels
    }

    pub fn pieces(&self) -> usize {
        self.levels.len()
    }

    pub fn start(&self) -> F {
        self.points[0]
    }

    pub fn end(&self) -> F {
        self.points[self.points.len() - 1]
    }

    pub fn len_of(&self, j: usize) -> F {
        self.points[j + 1] - self.points[j]
    }

    /// Level at `t`; change points take the level on their right.
    pub fn level_at(&self, t: F) -> F {
        if t < self.start() || t > self.end() {
            return F::zero();
        }
        let j = self.points.partition_point(|&p| p <= t).saturating_sub(1).min(self.pieces() - 1);
        self.levels[j]
    }

    /// `∫_{start}^{t} λ(u) du`, clamped to the support.
    pub fn cumulative(&self, t: F) -> F {
        let mut acc = F::zero();
        for j in 0..self.pieces() {
            let (a, b) = (self.points[j], self.points[j + 1]);
            if t <= a {
                break;
            }
            acc = acc + self.levels[j] * (t.min(b) - a);
        }
        acc
    }

    /// Integral over the whole support, `Σ_j λ_j len(A_j)`.
    pub fn total(&self) -> F {
        (0..self.pieces()).fold(F::zero(), |acc, j| acc + self.levels[j] * self.len_of(j))
    }

    /// Probability that the truncated inhomogeneous exponential falls in each piece:
    /// `[e^{-H_{j-1}} - e^{-H_j}] / [1 - e^{-H_n}]`.
    pub fn piece_probabilities(&self) -> Result<Vec<F>> {
        let total = self.total();
        if !(total > F::zero()) {
            return Err(Error::Numerical("step hazard has no mass on its support".into()));
        }
        let denom = -(-total).exp_m1();
        let mut before = F::zero();
        let mut out = Vec::with_capacity(self.pieces());
        for j in 0..self.pieces() {
            let h = self.levels[j] * self.len_of(j);
            // e^{-H_{j-1}} (1 - e^{-h_j})
            out.push((-before).exp() * -(-h).exp_m1() / denom);
            before = before + h;
        }
        Ok(out)
    }

    /// Density of the proposal law: the hazard's first-event time truncated to the support.
    pub fn truncated_density(&self, t: F) -> F {
        let total = self.total();
        if !(total > F::zero()) || t <= self.start() || t >= self.end() {
            return F::zero();
        }
        self.level_at(t) * (-self.cumulative(t)).exp() / -(-total).exp_m1()
    }

    /// CDF of the proposal law.
    pub fn truncated_cdf(&self, t: F) -> F {
        let total = self.total();
        if t <= self.start() {
            return F::zero();
        }
        if t >= self.end() {
            return F::one();
        }
        (-self.cumulative(t)).exp_m1() / (-total).exp_m1()
    }
}

/// Uniform draw in the open interval `(0, 1)`.
fn open_uniform<F: Real, R: Rng + ?Sized>(rng: &mut R) -> F {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return F::of(u);
        }
    }
}

/// Inverse-CDF draw from `Exponential(rate)` truncated to `(lower, upper)`.
///
/// `rate = 0` gives the uniform law. The result always lies strictly inside
/// the interval.
pub fn sample_truncated_exp<F: Real, R: Rng + ?Sized>(rate: F, lower: F, upper: F, rng: &mut R) -> F {
    debug_assert!(rate >= F::zero() && lower < upper);
    let width = upper - lower;
    loop {
        let u: F = open_uniform(rng);
        let x = if rate * width < F::epsilon() {
            lower + u * width
        } else {
            // lower - ln(1 - u (1 - e^{-r w})) / r
            lower - (u * (-rate * width).exp_m1()).ln_1p() / rate
        };
        if x > lower && x < upper {
            return x;
        }
    }
}

/// Draws from the density `λ(t) e^{-∫_{start}^t λ} / (1 - e^{-∫λ})` on the support.
pub fn sample_truncated_inhomo_exp<F: Real, R: Rng + ?Sized>(hazard: &StepHazard<F>, rng: &mut R) -> Result<F> {
    let probs = hazard.piece_probabilities()?;
    let u: F = open_uniform(rng);
    let mut acc = F::zero();
    let mut chosen = None;
    for (j, p) in probs.iter().enumerate() {
        if *p > F::zero() {
            chosen = Some(j);
            acc = acc + *p;
            if u <= acc {
                break;
            }
        }
    }
    let j = chosen.expect("positive total mass implies a positive piece");
    Ok(sample_truncated_exp(hazard.levels[j], hazard.points[j], hazard.points[j + 1], rng))
}

/// Normalising constant of the exposure-time density on the hazard support,
/// `C = ∫ λ(t) e^{-∫_{start}^t λ} φ e^{-φ (t_I - t)} dt`, in closed form.
///
/// Pieces where `φ` and the level coincide (relative gap below `1e-12`) use
/// the length branch of the piecewise integral.
pub fn exposure_normalizer<F: Real>(hazard: &StepHazard<F>, phi: F, onset: F) -> F {
    let mut before = F::zero();
    let mut acc = F::zero();
    for j in 0..hazard.pieces() {
        let lam = hazard.levels[j];
        let (a, b) = (hazard.points[j], hazard.points[j + 1]);
        let w = b - a;
        if lam > F::zero() {
            let gap = phi - lam;
            let scale = phi.max(lam);
            let integral = if gap.abs() < F::of(1e-12) * scale {
                w
            } else {
                w * expm1_over_x(gap * w)
            };
            acc = acc + lam * (-before - phi * (onset - a)).exp() * integral;
        }
        before = before + lam * w;
    }
    phi * acc
}

/// Exposure-time density `p(t)`, normalised with [`exposure_normalizer`].
pub fn exposure_density<F: Real>(hazard: &StepHazard<F>, phi: F, onset: F, t: F) -> F {
    if t <= hazard.start() || t >= hazard.end() {
        return F::zero();
    }
    let c = exposure_normalizer(hazard, phi, onset);
    hazard.level_at(t) * (-hazard.cumulative(t)).exp() * phi * (-phi * (onset - t)).exp() / c
}

/// Exposure-time CDF via the normalising constant of the hazard cut at `t`.
pub fn exposure_cdf<F: Real>(hazard: &StepHazard<F>, phi: F, onset: F, t: F) -> F {
    if t <= hazard.start() {
        return F::zero();
    }
    if t >= hazard.end() {
        return F::one();
    }
    let j = hazard.points.partition_point(|&p| p < t);
    let mut points = hazard.points[..j].to_vec();
    points.push(t);
    let levels = hazard.levels[..j].to_vec();
    let head = StepHazard { points, levels };
    exposure_normalizer(&head, phi, onset) / exposure_normalizer(hazard, phi, onset)
}

/// Acceptance probability `exp(-φ (t_I - t))` of a proposed exposure time.
pub fn acceptance_probability<F: Real>(phi: F, onset: F, t: F) -> F {
    (-phi * (onset - t)).exp()
}

/// Rejection sampler for an exposure time given the manifestation time `onset`.
///
/// Proposals come from the truncated inhomogeneous exponential of the hazard
/// and are accepted with probability `exp(-φ (t_I - t))`. Returns the accepted
/// time and the number of proposals used.
pub fn sample_exposure_time<F: Real, R: Rng + ?Sized>(
    individual: usize,
    hazard: &StepHazard<F>,
    phi: F,
    onset: F,
    max_attempts: usize,
    rng: &mut R,
) -> Result<(F, usize)> {
    if hazard.end() > onset {
        return Err(Error::Invalid(format!(
            "latency interval of {individual} ends after its manifestation time"
        )));
    }
    for attempt in 1..=max_attempts {
        let t = sample_truncated_inhomo_exp(hazard, rng)?;
        let u: F = open_uniform(rng);
        if u < acceptance_probability(phi, onset, t) {
            return Ok((t, attempt));
        }
    }
    Err(Error::SamplerExhausted { individual, attempts: max_attempts })
}
