//! Sufficient statistics of a complete event log.
//!
//! Every integrand in the complete-data likelihood is piecewise constant
//! between events and phase boundaries, so one chronological sweep
//! accumulates all integrals exactly as sums of level times length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Covariates, DiseaseStatus, EventKind, EventLog, HealthClass, Id, PairType, SystemState, Time};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub population: usize,
    pub horizon: Time,
    /// `n_E`: exposures inside the window.
    pub n_exposure: u64,
    /// Manifestations (E to I), the internal cases `n_I^int`.
    pub n_manifestation: u64,
    /// External onsets (S to I), `n_I^ext`.
    pub n_external: u64,
    pub n_recovery: u64,
    /// `n_Is` and `n_Ia` over manifestations and external onsets.
    pub n_is: u64,
    pub n_ia: u64,
    /// `C_{ABk}` as `[phase][pair type]`.
    pub activations: [[u64; 3]; 2],
    /// `D_{ABk}` as `[phase][pair type]`.
    pub terminations: [[u64; 3]; 2],
    /// `∫ E(t) dt`.
    pub exposed_integral: f64,
    /// `∫ (I^a(t) + I^s(t)) dt`.
    pub infectious_integral: f64,
    /// `∫_{T_k} M^d_{AB}(t) dt`.
    pub disconnected_integral: [[f64; 3]; 2],
    /// `∫_{T_k} M^c_{AB}(t) dt`.
    pub connected_integral: [[f64; 3]; 2],
    /// `∫ I^a_i(t) dt` over the time `i` spends susceptible.
    pub pressure_ia: Vec<f64>,
    /// `∫ I^s_i(t) dt` over the time `i` spends susceptible.
    pub pressure_is: Vec<f64>,
    /// Whether `i` was exposed inside the window.
    pub exposed: Vec<bool>,
    /// `(I^a_i, I^s_i)` at the exposure time of `i`, zero if never exposed.
    pub exposure_snapshot: Vec<(u32, u32)>,
    /// Whether `i` is an external case.
    pub external_case: Vec<bool>,
    /// `t_i^(E)`, `T` if never exposed in the window.
    pub exposure_time: Vec<Time>,
    /// `t_i^(I)` (manifestation or external onset), `T` if never.
    pub onset_time: Vec<Time>,
    /// Time at external risk in the onset-rate survival term: `t_i^(I)` for
    /// individuals susceptible at time zero, zero otherwise.
    pub external_exposure: Vec<Time>,
}

impl SufficientStats {
    /// `n_I`.
    pub fn n_infectious(&self) -> u64 {
        self.n_manifestation + self.n_external
    }

    /// Exposure pressure `F_i(e^η) = ∫ (I^a_i + e^η I^s_i)` over the susceptible period.
    pub fn pressure(&self, i: Id, exp_eta: f64) -> f64 {
        self.pressure_ia[i] + exp_eta * self.pressure_is[i]
    }

    /// Exposed individuals whose snapshot has no infectious neighbour.
    pub fn impossible_exposures(&self) -> Vec<Id> {
        (0..self.population)
            .filter(|&i| self.exposed[i] && self.exposure_snapshot[i] == (0, 0))
            .collect()
    }
}

struct Sweep {
    t: Time,
    statuses: Vec<DiseaseStatus>,
    nb_ia: Vec<u32>,
    nb_is: Vec<u32>,
    last_touch: Vec<Time>,
    n_e: u64,
    n_i: u64,
    n_h: u64,
    connected: [u64; 3],
}

impl Sweep {
    fn disconnected(&self) -> [f64; 3] {
        let h = self.n_h as f64;
        let i = self.n_i as f64;
        [
            h * (h - 1.0) / 2.0 - self.connected[0] as f64,
            h * i - self.connected[1] as f64,
            i * (i - 1.0) / 2.0 - self.connected[2] as f64,
        ]
    }
}

/// Accumulates all counts and exact integrals of a complete log.
pub fn sufficient_statistics(log: &EventLog, covariates: &Covariates) -> Result<SufficientStats> {
    let n = log.population();
    if covariates.len() != n {
        return Err(Error::Invalid(format!(
            "covariates cover {} individuals, log has {n}",
            covariates.len()
        )));
    }
    let horizon = log.horizon();
    let schedule = log.schedule();
    let mut state = log.initial_state();

    let mut s = SufficientStats {
        population: n,
        horizon,
        n_exposure: 0,
        n_manifestation: 0,
        n_external: 0,
        n_recovery: 0,
        n_is: 0,
        n_ia: 0,
        activations: [[0; 3]; 2],
        terminations: [[0; 3]; 2],
        exposed_integral: 0.0,
        infectious_integral: 0.0,
        disconnected_integral: [[0.0; 3]; 2],
        connected_integral: [[0.0; 3]; 2],
        pressure_ia: vec![0.0; n],
        pressure_is: vec![0.0; n],
        exposed: vec![false; n],
        exposure_snapshot: vec![(0, 0); n],
        external_case: vec![false; n],
        exposure_time: vec![horizon; n],
        onset_time: vec![horizon; n],
        external_exposure: vec![0.0; n],
    };

    let mut sw = Sweep {
        t: 0.0,
        statuses: state.statuses.clone(),
        nb_ia: vec![0; n],
        nb_is: vec![0; n],
        last_touch: vec![0.0; n],
        n_e: 0,
        n_i: 0,
        n_h: 0,
        connected: [0; 3],
    };
    for i in 0..n {
        match sw.statuses[i] {
            DiseaseStatus::E => sw.n_e += 1,
            DiseaseStatus::Ia | DiseaseStatus::Is => sw.n_i += 1,
            _ => {}
        }
        if sw.statuses[i].health() == HealthClass::H {
            sw.n_h += 1;
        }
        if sw.statuses[i] == DiseaseStatus::S {
            s.external_exposure[i] = horizon;
        }
        for &k in state.network.neighbors(i) {
            match sw.statuses[k] {
                DiseaseStatus::Ia => sw.nb_ia[i] += 1,
                DiseaseStatus::Is => sw.nb_is[i] += 1,
                _ => {}
            }
        }
    }
    for pair in state.network.sorted_edges() {
        let ab = PairType::of(sw.statuses[pair.lo].health(), sw.statuses[pair.hi].health());
        sw.connected[ab.index()] += 1;
    }

    let advance = |sw: &mut Sweep, s: &mut SufficientStats, to: Time| {
        let dt = to - sw.t;
        if dt <= 0.0 {
            return;
        }
        s.exposed_integral += sw.n_e as f64 * dt;
        s.infectious_integral += sw.n_i as f64 * dt;
        let disc = sw.disconnected();
        let conn = sw.connected;
        schedule.for_each_piece(sw.t, to, |phase, len| {
            let k = phase.index();
            for ab in 0..3 {
                s.disconnected_integral[k][ab] += disc[ab] * len;
                s.connected_integral[k][ab] += conn[ab] as f64 * len;
            }
        });
        sw.t = to;
    };
    // brings the pressure integral of a susceptible up to `t`
    let touch = |sw: &mut Sweep, s: &mut SufficientStats, i: Id, t: Time| {
        if sw.statuses[i] == DiseaseStatus::S {
            let dt = t - sw.last_touch[i];
            s.pressure_ia[i] += f64::from(sw.nb_ia[i]) * dt;
            s.pressure_is[i] += f64::from(sw.nb_is[i]) * dt;
        }
        sw.last_touch[i] = t;
    };

    let mut prev = f64::NEG_INFINITY;
    for (index, ev) in log.events().iter().enumerate() {
        if !(ev.time >= 0.0 && ev.time <= horizon) || ev.time <= prev {
            return Err(Error::InvalidEvent { index, reason: format!("time {} out of order or window", ev.time) });
        }
        prev = ev.time;
        state.apply(index, ev)?;
        advance(&mut sw, &mut s, ev.time);
        let t = ev.time;
        let i = ev.actor;
        match ev.kind {
            EventKind::Exposure => {
                touch(&mut sw, &mut s, i, t);
                s.exposed[i] = true;
                s.exposure_time[i] = t;
                s.exposure_snapshot[i] = (sw.nb_ia[i], sw.nb_is[i]);
                s.n_exposure += 1;
                sw.statuses[i] = DiseaseStatus::E;
                sw.n_e += 1;
            }
            EventKind::Manifestation | EventKind::ExternalOnset => {
                let sub = ev.subtype.expect("validated");
                if ev.kind == EventKind::Manifestation {
                    s.n_manifestation += 1;
                    sw.n_e -= 1;
                } else {
                    touch(&mut sw, &mut s, i, t);
                    s.n_external += 1;
                    s.external_case[i] = true;
                }
                match sub {
                    crate::model::Subtype::Ia => s.n_ia += 1,
                    crate::model::Subtype::Is => s.n_is += 1,
                }
                s.onset_time[i] = t;
                if s.external_exposure[i] > 0.0 {
                    s.external_exposure[i] = t;
                }
                let new = DiseaseStatus::infectious(sub);
                become_class(&mut sw, &state, i, new, HealthClass::I);
                let (da, ds) = if new == DiseaseStatus::Ia { (1, 0) } else { (0, 1) };
                for &k in state.network.neighbors(i) {
                    touch(&mut sw, &mut s, k, t);
                    sw.nb_ia[k] += da;
                    sw.nb_is[k] += ds;
                }
                sw.n_i += 1;
            }
            EventKind::Recovery => {
                s.n_recovery += 1;
                let old = sw.statuses[i];
                become_class(&mut sw, &state, i, DiseaseStatus::R, HealthClass::H);
                for &k in state.network.neighbors(i) {
                    touch(&mut sw, &mut s, k, t);
                    if old == DiseaseStatus::Ia {
                        sw.nb_ia[k] -= 1;
                    } else {
                        sw.nb_is[k] -= 1;
                    }
                }
                sw.n_i -= 1;
            }
            EventKind::LinkActivate | EventKind::LinkTerminate => {
                let j = ev.partner.expect("validated");
                let ab = PairType::of(sw.statuses[i].health(), sw.statuses[j].health());
                let k = schedule.phase_at(t).index();
                let on = ev.kind == EventKind::LinkActivate;
                if on {
                    s.activations[k][ab.index()] += 1;
                    sw.connected[ab.index()] += 1;
                } else {
                    s.terminations[k][ab.index()] += 1;
                    sw.connected[ab.index()] -= 1;
                }
                for (a, b) in [(i, j), (j, i)] {
                    let (da, ds) = match sw.statuses[b] {
                        DiseaseStatus::Ia => (1, 0),
                        DiseaseStatus::Is => (0, 1),
                        _ => continue,
                    };
                    touch(&mut sw, &mut s, a, t);
                    if on {
                        sw.nb_ia[a] += da;
                        sw.nb_is[a] += ds;
                    } else {
                        sw.nb_ia[a] -= da;
                        sw.nb_is[a] -= ds;
                    }
                }
            }
        }
    }
    advance(&mut sw, &mut s, horizon);
    for i in 0..n {
        touch(&mut sw, &mut s, i, horizon);
    }
    Ok(s)
}

/// Updates status, head counts and connected pair types when `i` changes class.
fn become_class(sw: &mut Sweep, state: &SystemState, i: Id, new: DiseaseStatus, class: HealthClass) {
    let old = sw.statuses[i];
    if old.health() != class {
        for &k in state.network.neighbors(i) {
            let other = sw.statuses[k].health();
            sw.connected[PairType::of(old.health(), other).index()] -= 1;
            sw.connected[PairType::of(class, other).index()] += 1;
        }
        if class == HealthClass::H {
            sw.n_h += 1;
        } else {
            sw.n_h -= 1;
        }
    }
    sw.statuses[i] = new;
}
