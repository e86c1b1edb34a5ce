//! Conditional samplers for hidden exposure and recovery times.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hazard::{sample_exposure_time, sample_truncated_exp, StepHazard};
use crate::model::{Id, Parameters, Subtype, Time};
use crate::observed::{Augmentation, ExposureSlot, ObservedData, RecoverySlot};
use crate::simulate::substream;

/// Stream offset separating recovery-cell generators from per-individual ones.
const CELL_STREAM_BASE: u64 = 1 << 40;

/// Infectious period `(from, to]` of `j` under the augmentation.
fn infectious_window(obs: &ObservedData, aug: &Augmentation, j: Id) -> Option<(Time, Time, Subtype)> {
    let from = obs.infectious_from(j)?;
    let to = aug.recovery[j].unwrap_or(f64::INFINITY);
    Some((from, to, obs.subtype[j].expect("infectious individuals carry a subtype")))
}

/// Change points `(time, Δa, Δs)` of the Ia/Is neighbour counts of `i` inside `(lower, upper)`.
fn neighbour_changes(obs: &ObservedData, aug: &Augmentation, i: Id, lower: Time, upper: Time) -> Vec<(Time, i32, i32)> {
    let mut changes = Vec::new();
    for span in &obs.contacts[i] {
        let Some((from, to, sub)) = infectious_window(obs, aug, span.partner) else {
            continue;
        };
        let a = span.start.max(from).max(lower);
        let b = span.end.min(to).min(upper);
        if a < b {
            let (da, ds) = match sub {
                Subtype::Ia => (1, 0),
                Subtype::Is => (0, 1),
            };
            changes.push((a, da, ds));
            changes.push((b, -da, -ds));
        }
    }
    changes.sort_by(|x, y| x.0.total_cmp(&y.0));
    changes
}

/// Ia and Is neighbour counts of `i` on the pieces of `(lower, upper)`:
/// change points `lower = p_0 < … < p_K = upper` and one `(a, s)` per piece.
pub fn infectious_counts(
    obs: &ObservedData,
    aug: &Augmentation,
    i: Id,
    lower: Time,
    upper: Time,
) -> (Vec<Time>, Vec<(i32, i32)>) {
    let changes = neighbour_changes(obs, aug, i, lower, upper);
    let mut points = vec![lower];
    let mut counts = Vec::new();
    let (mut a, mut s) = (0i32, 0i32);
    let mut current = (0, 0);
    let mut k = 0;
    while k < changes.len() {
        let t = changes[k].0;
        if t >= upper {
            break;
        }
        while k < changes.len() && changes[k].0 == t {
            a += changes[k].1;
            s += changes[k].2;
            k += 1;
        }
        if t > lower {
            counts.push(current);
            points.push(t);
        }
        current = (a, s);
    }
    counts.push(current);
    points.push(upper);
    (points, counts)
}

/// Exposure hazard `β e^{b_S·x_i} (I^a_i(t) + e^η I^s_i(t))` of `i` on `(lower, upper)`,
/// with change points where an infectious contact starts or ends.
pub fn build_exposure_hazard(
    obs: &ObservedData,
    aug: &Augmentation,
    params: &Parameters,
    i: Id,
    lower: Time,
    upper: Time,
) -> Result<StepHazard<f64>> {
    let scale = params.beta * obs.covariates.dot(i, &params.b_s).exp();
    let (points, counts) = infectious_counts(obs, aug, i, lower, upper);
    let levels = counts.iter().map(|&(a, s)| scale * (f64::from(a) + params.exp_eta * f64::from(s))).collect();
    StepHazard::new(points, levels)
}

/// Acceptance counters of the exposure sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProposalCount {
    pub accepted: u64,
    pub proposed: u64,
}

impl ProposalCount {
    pub fn fraction(&self) -> f64 {
        self.accepted as f64 / self.proposed as f64
    }

    pub fn add(&mut self, other: ProposalCount) {
        self.accepted += other.accepted;
        self.proposed += other.proposed;
    }
}

/// Draws one exposure time for `i` from its exact conditional law.
pub fn impute_exposure<R: Rng + ?Sized>(
    obs: &ObservedData,
    aug: &Augmentation,
    params: &Parameters,
    i: Id,
    max_attempts: usize,
    rng: &mut R,
) -> Result<(Time, usize)> {
    let ExposureSlot::Hidden { lower, upper } = obs.exposure[i] else {
        return Err(Error::Invalid(format!("exposure of {i} is not hidden")));
    };
    let onset = obs.onset[i].expect("hidden exposures have an onset");
    let hazard = build_exposure_hazard(obs, aug, params, i, lower, upper)?;
    if !(hazard.total() > 0.0) {
        return Err(Error::Incompatible { individual: i, time: onset });
    }
    sample_exposure_time(i, &hazard, params.phi, onset, max_attempts, rng)
}

/// Generator of individual `i` for draw `round` under `seed`.
fn individual_rng(seed: u64, i: Id, round: u64) -> ChaCha8Rng {
    substream(seed ^ round.wrapping_mul(0xD1B5_4A32_D192_ED03), i as u64)
}

/// Redraws every hidden exposure in `ids`, concurrently, given the current
/// recovery times. Each individual uses its own substream of `seed`.
pub fn impute_exposures(
    obs: &ObservedData,
    aug: &mut Augmentation,
    params: &Parameters,
    ids: &[Id],
    seed: u64,
    round: u64,
    max_attempts: usize,
) -> Result<ProposalCount> {
    let view: &Augmentation = aug;
    let draws: Vec<Result<(Id, Time, usize)>> = ids
        .par_iter()
        .map(|&i| {
            let mut rng = individual_rng(seed, i, round);
            impute_exposure(obs, view, params, i, max_attempts, &mut rng).map(|(t, n)| (i, t, n))
        })
        .collect();
    let mut count = ProposalCount::default();
    for d in draws {
        let (i, t, n) = d?;
        aug.exposure[i] = Some(t);
        count.accepted += 1;
        count.proposed += n as u64;
    }
    Ok(count)
}

/// Recovery sampler for one survey cell `(u, v]`.
///
/// `q` lists the individuals whose hidden recovery lies in the cell. Exposures
/// inside the cell are visited in time order; one with no certain source
/// forces one of its candidate sources in `q` to stay infectious past the
/// exposure, chosen with weight 1 (Ia) or `e^η` (Is). Recovery times are then
/// drawn from `Exp(γ)` truncated to `(LB_q, v)`.
pub fn sample_cell_recoveries<R: Rng + ?Sized>(
    obs: &ObservedData,
    aug: &Augmentation,
    params: &Parameters,
    cell: usize,
    q: &[Id],
    rng: &mut R,
) -> Result<Vec<(Id, Time)>> {
    if q.is_empty() {
        return Ok(Vec::new());
    }
    let (u, v) = (obs.grid[cell], obs.grid[cell + 1]);
    let mut lb: Vec<(Id, Time)> = q
        .iter()
        .map(|&j| match obs.recovery[j] {
            RecoverySlot::Hidden { lower, .. } => (j, lower),
            _ => unreachable!("cell members have hidden recoveries"),
        })
        .collect();

    let mut exposures: Vec<(Time, Id)> = (0..obs.population())
        .filter_map(|p| aug.exposure[p].filter(|&t| t > u && t <= v).map(|t| (t, p)))
        .collect();
    exposures.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for &(tp, p) in &exposures {
        candidates.clear();
        let mut known = false;
        for span in &obs.contacts[p] {
            if !(span.start < tp && tp <= span.end) {
                continue;
            }
            let j = span.partner;
            let Some(from) = obs.infectious_from(j) else { continue };
            if from >= tp {
                continue;
            }
            match lb.iter().position(|&(x, _)| x == j) {
                Some(k) => {
                    if lb[k].1 >= tp {
                        known = true;
                        break;
                    }
                    let w = match obs.subtype[j] {
                        Some(Subtype::Is) => params.exp_eta,
                        _ => 1.0,
                    };
                    candidates.push((k, w));
                }
                None => {
                    if aug.recovery[j].is_none_or(|r| r > tp) {
                        known = true;
                        break;
                    }
                }
            }
        }
        if known {
            continue;
        }
        let total: f64 = candidates.iter().map(|c| c.1).sum();
        if candidates.is_empty() || !(total > 0.0) {
            return Err(Error::Incompatible { individual: p, time: tp });
        }
        let mut x = rng.random::<f64>() * total;
        let mut pick = candidates[candidates.len() - 1].0;
        for &(k, w) in &candidates {
            if x < w {
                pick = k;
                break;
            }
            x -= w;
        }
        lb[pick].1 = tp;
    }
    Ok(lb.into_iter().map(|(j, lo)| (j, sample_truncated_exp(params.gamma, lo, v, rng))).collect())
}

/// Redraws every hidden recovery, one survey cell at a time (cells in parallel).
pub fn impute_recoveries(obs: &ObservedData, aug: &mut Augmentation, params: &Parameters, seed: u64) -> Result<()> {
    let cells = obs.grid.len() - 1;
    let mut members: Vec<Vec<Id>> = vec![Vec::new(); cells];
    for j in 0..obs.population() {
        if let RecoverySlot::Hidden { cell, .. } = obs.recovery[j] {
            members[cell].push(j);
        }
    }
    let view: &Augmentation = aug;
    let draws: Vec<Result<Vec<(Id, Time)>>> = members
        .par_iter()
        .enumerate()
        .map(|(k, q)| {
            let mut rng = substream(seed, CELL_STREAM_BASE + k as u64);
            sample_cell_recoveries(obs, view, params, k, q, &mut rng)
        })
        .collect();
    for d in draws {
        for (j, t) in d? {
            aug.recovery[j] = Some(t);
        }
    }
    Ok(())
}

/// Checks that every exposure has an infectious contact at its time and that
/// every imputed time respects its bounds.
pub fn check_compatibility(obs: &ObservedData, aug: &Augmentation) -> Result<()> {
    for p in 0..obs.population() {
        if let Some(tp) = aug.exposure[p] {
            if let ExposureSlot::Hidden { lower, upper } = obs.exposure[p] {
                if !(tp > lower && tp < upper) {
                    return Err(Error::Invalid(format!("exposure of {p} at {tp} outside ({lower}, {upper})")));
                }
            }
            let ok = obs.contacts[p].iter().any(|s| {
                s.start < tp
                    && tp <= s.end
                    && infectious_window(obs, aug, s.partner).is_some_and(|(from, to, _)| from < tp && tp <= to)
            });
            if !ok {
                return Err(Error::Incompatible { individual: p, time: tp });
            }
        }
        if let RecoverySlot::Hidden { lower, upper, .. } = obs.recovery[p] {
            let t = aug.recovery[p].ok_or_else(|| Error::Invalid(format!("recovery of {p} not imputed")))?;
            if !(t > lower && t <= upper) {
                return Err(Error::Invalid(format!("recovery of {p} at {t} outside ({lower}, {upper}]")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Covariates, DiseaseStatus, Event, EventLog, Network, Phase, PhaseSchedule};
    use crate::observed::{Hide, ObservedSpec};
    use rand::SeedableRng;

    fn observe(log: &EventLog, spec: &ObservedSpec) -> ObservedData {
        let cov = Covariates::from_rows(&vec![vec![0.0]; log.population()]).unwrap();
        ObservedData::from_log(log, &cov, spec).unwrap()
    }

    fn params() -> Parameters {
        let mut p = Parameters::reference();
        p.b_s = vec![0.0];
        p
    }

    #[test]
    fn hazard_with_both_subtypes() {
        let log = EventLog::new(
            10.0,
            vec![DiseaseStatus::S, DiseaseStatus::Ia, DiseaseStatus::Is],
            Network::from_edges(3, [(0, 1), (0, 2)]).unwrap(),
            PhaseSchedule::single(10.0, Phase::Zero).unwrap(),
            vec![Event::exposure(3.0, 0, Some(1)), Event::manifestation(5.0, 0, Subtype::Ia)],
        )
        .unwrap();
        let obs = observe(&log, &ObservedSpec::hide_exposures());
        let aug = obs.initial_augmentation();
        let h = build_exposure_hazard(&obs, &aug, &params(), 0, 0.0, 5.0).unwrap();
        assert_eq!(h.points(), &[0.0, 5.0]);
        assert!((h.levels()[0] - 0.444281).abs() < 1e-6, "{}", h.levels()[0]);
    }

    #[test]
    fn hazard_switches_on_at_neighbour_onset() {
        let log = EventLog::new(
            10.0,
            vec![DiseaseStatus::S, DiseaseStatus::E],
            Network::from_edges(2, [(0, 1)]).unwrap(),
            PhaseSchedule::single(10.0, Phase::Zero).unwrap(),
            vec![
                Event::manifestation(2.0, 1, Subtype::Ia),
                Event::exposure(3.0, 0, Some(1)),
                Event::manifestation(6.0, 0, Subtype::Is),
            ],
        )
        .unwrap();
        let obs = observe(&log, &ObservedSpec::hide_exposures());
        let aug = obs.initial_augmentation();
        let h = build_exposure_hazard(&obs, &aug, &params(), 0, 0.0, 6.0).unwrap();
        assert_eq!(h.points(), &[0.0, 2.0, 6.0]);
        assert_eq!(h.levels(), &[0.0, 0.2]);
    }

    #[test]
    fn no_infectious_contact_is_incompatible() {
        let log = EventLog::new(
            10.0,
            vec![DiseaseStatus::S, DiseaseStatus::Ia],
            Network::from_edges(2, [(0, 1)]).unwrap(),
            PhaseSchedule::single(10.0, Phase::Zero).unwrap(),
            vec![
                Event::exposure(1.0, 0, Some(1)),
                Event::link_terminate(1.5, 0, 1),
                Event::manifestation(4.0, 0, Subtype::Ia),
            ],
        )
        .unwrap();
        let obs = observe(&log, &ObservedSpec::hide_exposures());
        let mut aug = obs.initial_augmentation();
        // the source is removed before the contact window opens
        aug.recovery[1] = Some(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            impute_exposure(&obs, &aug, &params(), 0, 100, &mut rng),
            Err(Error::Incompatible { individual: 0, .. })
        ));
    }

    /// 0 is exposed at 8 with sources 1 (Ia) and 2 (Is), both recovering
    /// unobserved in the survey cell (7, 14].
    fn two_source_cell() -> ObservedData {
        let log = EventLog::new(
            14.0,
            vec![DiseaseStatus::S, DiseaseStatus::Ia, DiseaseStatus::Is],
            Network::from_edges(3, [(0, 1), (0, 2)]).unwrap(),
            PhaseSchedule::single(14.0, Phase::Zero).unwrap(),
            vec![
                Event::exposure(8.0, 0, Some(1)),
                Event::manifestation(9.0, 0, Subtype::Ia),
                Event::recovery(10.0, 1),
                Event::recovery(11.0, 2),
            ],
        )
        .unwrap();
        let spec = ObservedSpec { hide_recoveries: Hide::Ids(vec![1, 2]), ..ObservedSpec::default() };
        observe(&log, &spec)
    }

    #[test]
    fn single_source_must_outlive_the_exposure() {
        let obs = two_source_cell();
        let mut aug = obs.initial_augmentation();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = params();
        let mut alone = aug.clone();
        alone.recovery[2] = Some(7.5);
        for _ in 0..2000 {
            let draws = sample_cell_recoveries(&obs, &alone, &p, 1, &[1], &mut rng).unwrap();
            assert_eq!(draws.len(), 1);
            assert!(draws[0].1 > 8.0 && draws[0].1 < 14.0);
        }
        // with both in the cell, the final augmentation stays compatible
        for round in 0..200 {
            impute_recoveries(&obs, &mut aug, &p, round).unwrap();
            check_compatibility(&obs, &aug).unwrap();
        }
    }

    #[test]
    fn forced_source_chosen_by_infectiousness() {
        let obs = two_source_cell();
        let aug = obs.initial_augmentation();
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut early_ia = 0;
        for _ in 0..n {
            let draws = sample_cell_recoveries(&obs, &aug, &p, 1, &[1, 2], &mut rng).unwrap();
            let r1 = draws.iter().find(|d| d.0 == 1).unwrap().1;
            if r1 < 8.0 {
                early_ia += 1;
            }
        }
        // 1 can recover before 8 only when 2 is the forced source
        let pick_is = p.exp_eta / (1.0 + p.exp_eta);
        assert!((pick_is - 0.549834).abs() < 1e-6);
        let below = (1.0 - (-p.gamma).exp()) / (1.0 - (-7.0 * p.gamma).exp());
        let expect = pick_is * below;
        let freq = early_ia as f64 / n as f64;
        let sd = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((freq - expect).abs() < 4.0 * sd, "{freq} vs {expect}");
    }
}
