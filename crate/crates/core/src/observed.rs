//! Partially observed epidemics: which event times are hidden, the bounds
//! that constrain them, and reassembly of augmented complete logs.
//!
//! Network events, manifestation times and subtypes are always observed.
//! Exposure times may be hidden (constrained to a latency interval ending no
//! later than the onset) and recovery times may be hidden (known only up to a
//! cell of a fixed survey grid).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Covariates, DiseaseStatus, Event, EventKind, EventLog, Id, Network, PhaseSchedule, Subtype, Time,
};

pub const OBSERVED_SPEC_VERSION: u32 = 1;

/// Selection of individuals whose times are hidden.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hide {
    #[default]
    None,
    All,
    Ids(Vec<Id>),
}

impl Hide {
    pub fn hides(&self, i: Id) -> bool {
        match self {
            Hide::None => false,
            Hide::All => true,
            Hide::Ids(ids) => ids.contains(&i),
        }
    }
}

/// Plausible latency interval for a hidden exposure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Latency {
    /// `(0, t_I)`.
    #[default]
    Full,
    /// `(max(0, t_I - max), max(0, t_I - min))`.
    Window { min: f64, max: f64 },
}

fn default_version() -> u32 {
    OBSERVED_SPEC_VERSION
}

fn default_grid() -> f64 {
    7.0
}

/// Declares the missingness pattern applied to a complete log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservedSpec {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub hide_exposures: Hide,
    #[serde(default)]
    pub hide_recoveries: Hide,
    /// Width of the survey cells `(k w, (k+1) w]` that bound hidden recoveries.
    #[serde(default = "default_grid")]
    pub recovery_grid: f64,
    #[serde(default)]
    pub latency: Latency,
}

impl Default for ObservedSpec {
    fn default() -> Self {
        ObservedSpec {
            schema_version: OBSERVED_SPEC_VERSION,
            hide_exposures: Hide::None,
            hide_recoveries: Hide::None,
            recovery_grid: default_grid(),
            latency: Latency::Full,
        }
    }
}

impl ObservedSpec {
    pub fn hide_exposures() -> Self {
        ObservedSpec { hide_exposures: Hide::All, ..Default::default() }
    }

    pub fn hide_both() -> Self {
        ObservedSpec { hide_exposures: Hide::All, hide_recoveries: Hide::All, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != OBSERVED_SPEC_VERSION {
            return Err(Error::Invalid(format!("unsupported observed-spec schema_version {}", self.schema_version)));
        }
        if !(self.recovery_grid.is_finite() && self.recovery_grid > 0.0) {
            return Err(Error::Invalid("recovery_grid must be positive".into()));
        }
        if let Latency::Window { min, max } = self.latency {
            if !(min >= 0.0 && max > min && max.is_finite()) {
                return Err(Error::Invalid(format!("latency window ({min}, {max}) is invalid")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExposureSlot {
    /// No exposure inside the window.
    None,
    Observed(Time),
    /// Hidden, known to lie in `(lower, upper)`.
    Hidden { lower: Time, upper: Time },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RecoverySlot {
    /// No recovery inside the window.
    None,
    Observed(Time),
    /// Hidden, known to lie in `(lower, upper]` inside grid cell `cell`.
    Hidden { cell: usize, lower: Time, upper: Time },
}

/// Link present on `(start, end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub partner: Id,
    pub start: Time,
    pub end: Time,
}

/// Everything the inference engine may condition on.
#[derive(Clone, Debug)]
pub struct ObservedData {
    pub horizon: Time,
    pub schedule: PhaseSchedule,
    pub initial_statuses: Vec<DiseaseStatus>,
    pub initial_network: Network,
    pub link_events: Vec<Event>,
    pub covariates: Covariates,
    /// Manifestation or external-onset time inside the window.
    pub onset: Vec<Option<Time>>,
    /// Subtype of everyone infectious at some point of the window.
    pub subtype: Vec<Option<Subtype>>,
    pub external: Vec<bool>,
    pub exposure: Vec<ExposureSlot>,
    pub recovery: Vec<RecoverySlot>,
    /// Survey cell boundaries `0 = g_0 < … < g_K = T`.
    pub grid: Vec<Time>,
    /// Contact spans per individual over the whole window.
    pub contacts: Vec<Vec<Span>>,
}

/// Imputed (or observed) epidemic times per individual.
#[derive(Clone, Debug, PartialEq)]
pub struct Augmentation {
    pub exposure: Vec<Option<Time>>,
    pub recovery: Vec<Option<Time>>,
}

impl ObservedData {
    /// Applies `spec` to a complete log.
    ///
    /// Exposures that have no onset inside the window cannot be detected; when
    /// such an exposure is hidden it is dropped from the data altogether.
    pub fn from_log(log: &EventLog, covariates: &Covariates, spec: &ObservedSpec) -> Result<Self> {
        spec.validate()?;
        let n = log.population();
        if covariates.len() != n {
            return Err(Error::Invalid(format!("covariates cover {} individuals, log has {n}", covariates.len())));
        }
        if let Hide::Ids(ids) = &spec.hide_exposures {
            if let Some(bad) = ids.iter().find(|&&i| i >= n) {
                return Err(Error::Invalid(format!("hidden exposure id {bad} outside population")));
            }
        }
        if let Hide::Ids(ids) = &spec.hide_recoveries {
            if let Some(bad) = ids.iter().find(|&&i| i >= n) {
                return Err(Error::Invalid(format!("hidden recovery id {bad} outside population")));
            }
        }
        let horizon = log.horizon();
        let mut onset = vec![None; n];
        let mut subtype: Vec<Option<Subtype>> = log.initial_statuses().iter().map(|s| s.subtype()).collect();
        let mut external = vec![false; n];
        let mut exposure_t = vec![None; n];
        let mut recovery_t = vec![None; n];
        let mut link_events = Vec::new();
        for ev in log.events() {
            match ev.kind {
                EventKind::Exposure => exposure_t[ev.actor] = Some(ev.time),
                EventKind::Manifestation | EventKind::ExternalOnset => {
                    onset[ev.actor] = Some(ev.time);
                    subtype[ev.actor] = ev.subtype;
                    external[ev.actor] = ev.kind == EventKind::ExternalOnset;
                }
                EventKind::Recovery => recovery_t[ev.actor] = Some(ev.time),
                EventKind::LinkActivate | EventKind::LinkTerminate => link_events.push(*ev),
            }
        }

        let grid = survey_grid(horizon, spec.recovery_grid);
        let mut exposure = vec![ExposureSlot::None; n];
        let mut recovery = vec![RecoverySlot::None; n];
        for i in 0..n {
            if let Some(te) = exposure_t[i] {
                exposure[i] = match (spec.hide_exposures.hides(i), onset[i]) {
                    (false, _) => ExposureSlot::Observed(te),
                    (true, None) => ExposureSlot::None,
                    (true, Some(ti)) => {
                        let (lower, upper) = latency_interval(spec.latency, ti);
                        if !(lower < upper) || te <= lower || te >= upper {
                            return Err(Error::Invalid(format!(
                                "exposure of {i} at {te} lies outside its latency interval ({lower}, {upper})"
                            )));
                        }
                        ExposureSlot::Hidden { lower, upper }
                    }
                };
            }
            if let Some(tr) = recovery_t[i] {
                recovery[i] = if spec.hide_recoveries.hides(i) {
                    let cell = grid.partition_point(|&g| g < tr) - 1;
                    let start = if log.initial_statuses()[i].is_infectious() { 0.0 } else { onset[i].unwrap() };
                    RecoverySlot::Hidden { cell, lower: grid[cell].max(start), upper: grid[cell + 1] }
                } else {
                    RecoverySlot::Observed(tr)
                };
            }
        }

        let contacts = contact_spans(log.initial_network(), &link_events, n, horizon);
        Ok(ObservedData {
            horizon,
            schedule: log.schedule().clone(),
            initial_statuses: log.initial_statuses().to_vec(),
            initial_network: log.initial_network().clone(),
            link_events,
            covariates: covariates.clone(),
            onset,
            subtype,
            external,
            exposure,
            recovery,
            grid,
            contacts,
        })
    }

    pub fn population(&self) -> usize {
        self.initial_statuses.len()
    }

    pub fn hidden_exposures(&self) -> Vec<Id> {
        (0..self.population()).filter(|&i| matches!(self.exposure[i], ExposureSlot::Hidden { .. })).collect()
    }

    pub fn hidden_recoveries(&self) -> Vec<Id> {
        (0..self.population()).filter(|&i| matches!(self.recovery[i], RecoverySlot::Hidden { .. })).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.hidden_exposures().is_empty() && self.hidden_recoveries().is_empty()
    }

    /// Start of the infectious period: 0 for initial infectives, else the onset.
    pub fn infectious_from(&self, i: Id) -> Option<Time> {
        if self.initial_statuses[i].is_infectious() {
            Some(0.0)
        } else {
            self.onset[i]
        }
    }

    /// Observed times, with hidden recoveries placed just below their upper
    /// bound (the placement with the widest infectious periods) and hidden
    /// exposures left unset.
    pub fn initial_augmentation(&self) -> Augmentation {
        let n = self.population();
        let mut aug = Augmentation { exposure: vec![None; n], recovery: vec![None; n] };
        for i in 0..n {
            if let ExposureSlot::Observed(t) = self.exposure[i] {
                aug.exposure[i] = Some(t);
            }
            aug.recovery[i] = match self.recovery[i] {
                RecoverySlot::None => None,
                RecoverySlot::Observed(t) => Some(t),
                RecoverySlot::Hidden { lower, upper, .. } => Some(lower + (upper - lower) * (1.0 - 1e-6)),
            };
        }
        aug
    }

    /// Reassembles the complete log implied by `aug`.
    pub fn complete_log(&self, aug: &Augmentation) -> Result<EventLog> {
        let n = self.population();
        let mut epi = Vec::with_capacity(3 * n);
        for i in 0..n {
            if let Some(t) = aug.exposure[i] {
                epi.push(Event::exposure(t, i, None));
            }
            if let Some(t) = self.onset[i] {
                let sub = self.subtype[i].expect("onset carries a subtype");
                epi.push(if self.external[i] {
                    Event::external_onset(t, i, sub)
                } else {
                    Event::manifestation(t, i, sub)
                });
            }
            if let Some(t) = aug.recovery[i] {
                epi.push(Event::recovery(t, i));
            }
        }
        epi.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut events = Vec::with_capacity(epi.len() + self.link_events.len());
        let (mut a, mut b) = (0, 0);
        while a < epi.len() || b < self.link_events.len() {
            let take_epi = b == self.link_events.len() || (a < epi.len() && epi[a].time < self.link_events[b].time);
            let ev = if take_epi {
                a += 1;
                epi[a - 1]
            } else {
                b += 1;
                self.link_events[b - 1]
            };
            if let Some(last) = events.last() {
                let last: &Event = last;
                if ev.time <= last.time {
                    return Err(Error::Numerical(format!("augmented events tie at time {}", ev.time)));
                }
            }
            events.push(ev);
        }
        Ok(EventLog::new_unchecked(
            self.horizon,
            self.initial_statuses.clone(),
            self.initial_network.clone(),
            self.schedule.clone(),
            events,
        ))
    }
}

/// `(lower, upper)` for an onset at `ti`.
pub fn latency_interval(latency: Latency, ti: Time) -> (Time, Time) {
    match latency {
        Latency::Full => (0.0, ti),
        Latency::Window { min, max } => ((ti - max).max(0.0), (ti - min).max(0.0)),
    }
}

/// Boundaries `0, w, 2w, …, T` (the last cell may be short).
pub fn survey_grid(horizon: Time, width: f64) -> Vec<Time> {
    let mut g = vec![0.0];
    let mut k = 1.0;
    while k * width < horizon {
        g.push(k * width);
        k += 1.0;
    }
    g.push(horizon);
    g
}

/// Contact spans of every individual from the initial network and link events.
pub fn contact_spans(initial: &Network, link_events: &[Event], n: usize, horizon: Time) -> Vec<Vec<Span>> {
    use std::collections::HashMap;
    let mut open: HashMap<(Id, Id), Time> = HashMap::new();
    for p in initial.sorted_edges() {
        open.insert((p.lo, p.hi), 0.0);
    }
    let mut spans = vec![Vec::new(); n];
    let mut close = |i: Id, j: Id, start: Time, end: Time| {
        spans[i].push(Span { partner: j, start, end });
        spans[j].push(Span { partner: i, start, end });
    };
    for ev in link_events {
        let j = ev.partner.expect("link events carry a partner");
        let key = (ev.actor.min(j), ev.actor.max(j));
        match ev.kind {
            EventKind::LinkActivate => {
                open.insert(key, ev.time);
            }
            EventKind::LinkTerminate => {
                let start = open.remove(&key).expect("validated log");
                close(key.0, key.1, start, ev.time);
            }
            _ => {}
        }
    }
    let mut rest: Vec<_> = open.into_iter().collect();
    rest.sort_by_key(|r| r.0);
    for ((i, j), start) in rest {
        close(i, j, start, horizon);
    }
    spans
}
