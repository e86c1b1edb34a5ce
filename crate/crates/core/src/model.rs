//! Domain types shared by the simulator, the likelihood and the samplers.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time in days.
pub type Time = f64;

/// Individual index in `0..N`.
pub type Id = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subtype {
    Ia,
    Is,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiseaseStatus {
    S,
    E,
    Ia,
    Is,
    R,
}

impl DiseaseStatus {
    pub fn infectious(subtype: Subtype) -> Self {
        match subtype {
            Subtype::Ia => DiseaseStatus::Ia,
            Subtype::Is => DiseaseStatus::Is,
        }
    }

    pub fn is_infectious(self) -> bool {
        matches!(self, DiseaseStatus::Ia | DiseaseStatus::Is)
    }

    pub fn subtype(self) -> Option<Subtype> {
        match self {
            DiseaseStatus::Ia => Some(Subtype::Ia),
            DiseaseStatus::Is => Some(Subtype::Is),
            _ => None,
        }
    }

    /// Healthy/infectious view used by the link rates.
    pub fn health(self) -> HealthClass {
        if self.is_infectious() {
            HealthClass::I
        } else {
            HealthClass::H
        }
    }
}

impl fmt::Display for DiseaseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `H` collects S, E and R; `I` collects Ia and Is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HealthClass {
    H,
    I,
}

/// Unordered pair type of a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairType {
    HH,
    HI,
    II,
}

impl PairType {
    pub const ALL: [PairType; 3] = [PairType::HH, PairType::HI, PairType::II];

    pub fn of(a: HealthClass, b: HealthClass) -> Self {
        match (a, b) {
            (HealthClass::H, HealthClass::H) => PairType::HH,
            (HealthClass::I, HealthClass::I) => PairType::II,
            _ => PairType::HI,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            PairType::HH => "HH",
            PairType::HI => "HI",
            PairType::II => "II",
        }
    }
}

/// Behavioural phase label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Phase {
    Zero,
    One,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Zero, Phase::One];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for Phase {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Phase::Zero),
            1 => Ok(Phase::One),
            other => Err(format!("phase label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Phase> for u8 {
    fn from(p: Phase) -> u8 {
        p as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Exposure,
    Manifestation,
    Recovery,
    LinkActivate,
    LinkTerminate,
    ExternalOnset,
}

impl EventKind {
    pub fn is_link(self) -> bool {
        matches!(self, EventKind::LinkActivate | EventKind::LinkTerminate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: Time,
    pub kind: EventKind,
    pub actor: Id,
    /// Other endpoint of a link event, or the (optional) infector of an exposure.
    pub partner: Option<Id>,
    /// Present exactly for manifestations and external onsets.
    pub subtype: Option<Subtype>,
}

impl Event {
    pub fn exposure(time: Time, actor: Id, infector: Option<Id>) -> Self {
        Event { time, kind: EventKind::Exposure, actor, partner: infector, subtype: None }
    }

    pub fn manifestation(time: Time, actor: Id, subtype: Subtype) -> Self {
        Event { time, kind: EventKind::Manifestation, actor, partner: None, subtype: Some(subtype) }
    }

    pub fn recovery(time: Time, actor: Id) -> Self {
        Event { time, kind: EventKind::Recovery, actor, partner: None, subtype: None }
    }

    pub fn external_onset(time: Time, actor: Id, subtype: Subtype) -> Self {
        Event { time, kind: EventKind::ExternalOnset, actor, partner: None, subtype: Some(subtype) }
    }

    pub fn link_activate(time: Time, actor: Id, partner: Id) -> Self {
        Event { time, kind: EventKind::LinkActivate, actor, partner: Some(partner), subtype: None }
    }

    pub fn link_terminate(time: Time, actor: Id, partner: Id) -> Self {
        Event { time, kind: EventKind::LinkTerminate, actor, partner: Some(partner), subtype: None }
    }
}

/// Unordered pair, stored as `(min, max)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub lo: Id,
    pub hi: Id,
}

impl Pair {
    pub fn new(i: Id, j: Id) -> Self {
        if i <= j {
            Pair { lo: i, hi: j }
        } else {
            Pair { lo: j, hi: i }
        }
    }
}

/// Undirected simple graph on `0..n`: a sparse pair set plus neighbour lists.
#[derive(Clone, Debug, Default)]
pub struct Network {
    edges: HashSet<Pair>,
    neighbors: Vec<Vec<Id>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.neighbors.len() == other.neighbors.len() && self.edges == other.edges
    }
}

impl Network {
    pub fn empty(n: usize) -> Self {
        Network { edges: HashSet::new(), neighbors: vec![Vec::new(); n] }
    }

    pub fn from_edges<I: IntoIterator<Item = (Id, Id)>>(n: usize, edges: I) -> Result<Self> {
        let mut net = Network::empty(n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Invalid(format!("edge ({i}, {j}) outside population of {n}")));
            }
            if i == j {
                return Err(Error::Invalid(format!("self loop on {i}")));
            }
            if !net.insert(i, j) {
                return Err(Error::Invalid(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, i: Id, j: Id) -> bool {
        self.edges.contains(&Pair::new(i, j))
    }

    pub fn neighbors(&self, i: Id) -> &[Id] {
        &self.neighbors[i]
    }

    /// Returns `false` if the edge was already present.
    pub fn insert(&mut self, i: Id, j: Id) -> bool {
        if !self.edges.insert(Pair::new(i, j)) {
            return false;
        }
        self.neighbors[i].push(j);
        self.neighbors[j].push(i);
        true
    }

    /// Returns `false` if the edge was absent.
    pub fn remove(&mut self, i: Id, j: Id) -> bool {
        if !self.edges.remove(&Pair::new(i, j)) {
            return false;
        }
        drop_value(&mut self.neighbors[i], j);
        drop_value(&mut self.neighbors[j], i);
        true
    }

    /// Edges in ascending `(lo, hi)` order.
    pub fn sorted_edges(&self) -> Vec<Pair> {
        let mut v: Vec<Pair> = self.edges.iter().copied().collect();
        v.sort_unstable();
        v
    }
}

fn drop_value(v: &mut Vec<Id>, x: Id) {
    if let Some(pos) = v.iter().position(|&y| y == x) {
        v.swap_remove(pos);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseInterval {
    pub start: Time,
    pub end: Time,
    pub phase: Phase,
}

/// Partition of `(0, T]` into half-open intervals `(start, end]` with phase labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PhaseInterval>", into = "Vec<PhaseInterval>")]
pub struct PhaseSchedule {
    intervals: Vec<PhaseInterval>,
}

impl TryFrom<Vec<PhaseInterval>> for PhaseSchedule {
    type Error = Error;
    fn try_from(v: Vec<PhaseInterval>) -> Result<Self> {
        PhaseSchedule::new(v)
    }
}

impl From<PhaseSchedule> for Vec<PhaseInterval> {
    fn from(s: PhaseSchedule) -> Self {
        s.intervals
    }
}

impl PhaseSchedule {
    pub fn new(intervals: Vec<PhaseInterval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Invalid("phase schedule has no intervals".into()));
        }
        if intervals[0].start != 0.0 {
            return Err(Error::Invalid("phase schedule must start at 0".into()));
        }
        for (k, iv) in intervals.iter().enumerate() {
            if !(iv.start.is_finite() && iv.end.is_finite() && iv.start < iv.end) {
                return Err(Error::Invalid(format!("phase interval {k} is empty or not finite")));
            }
            if k > 0 && intervals[k - 1].end != iv.start {
                return Err(Error::Invalid(format!("phase interval {k} does not abut its predecessor")));
            }
        }
        Ok(PhaseSchedule { intervals })
    }

    /// One phase covering the whole window.
    pub fn single(horizon: Time, phase: Phase) -> Result<Self> {
        PhaseSchedule::new(vec![PhaseInterval { start: 0.0, end: horizon, phase }])
    }

    /// Phase 0 on `(0, switch]`, phase 1 on `(switch, T]`.
    pub fn two_phase(horizon: Time, switch: Time) -> Result<Self> {
        PhaseSchedule::new(vec![
            PhaseInterval { start: 0.0, end: switch, phase: Phase::Zero },
            PhaseInterval { start: switch, end: horizon, phase: Phase::One },
        ])
    }

    pub fn intervals(&self) -> &[PhaseInterval] {
        &self.intervals
    }

    pub fn horizon(&self) -> Time {
        self.intervals[self.intervals.len() - 1].end
    }

    fn index_at(&self, t: Time) -> usize {
        // first interval whose end is >= t
        self.intervals.partition_point(|iv| iv.end < t).min(self.intervals.len() - 1)
    }

    /// Phase in force at `t`; boundary times belong to the interval they close.
    pub fn phase_at(&self, t: Time) -> Phase {
        self.intervals[self.index_at(t)].phase
    }

    /// Phase in force just after `t`.
    pub fn phase_after(&self, t: Time) -> Phase {
        let k = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals[k.min(self.intervals.len() - 1)].phase
    }

    /// Smallest interval end strictly greater than `t`, if any.
    pub fn next_boundary(&self, t: Time) -> Option<Time> {
        let k = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals.get(k).map(|iv| iv.end)
    }

    /// Calls `f(phase, length)` for each piece of `(a, b]` cut by the schedule.
    pub fn for_each_piece(&self, a: Time, b: Time, mut f: impl FnMut(Phase, f64)) {
        if b <= a {
            return;
        }
        let mut k = self.index_at(a);
        if self.intervals[k].end <= a && k + 1 < self.intervals.len() {
            k += 1;
        }
        let mut lo = a;
        while lo < b {
            let iv = &self.intervals[k];
            let hi = if k + 1 == self.intervals.len() { b } else { iv.end.min(b) };
            if hi > lo {
                f(iv.phase, hi - lo);
            }
            lo = hi;
            k += 1;
            if k == self.intervals.len() {
                break;
            }
        }
    }

    /// Total measure of each phase inside `(0, T]`.
    pub fn phase_measure(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for iv in &self.intervals {
            m[iv.phase.index()] += iv.end - iv.start;
        }
        m
    }
}

/// Per-individual covariate rows of a fixed dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

impl Covariates {
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * dim {
            return Err(Error::Invalid(format!(
                "covariate matrix has {} values, expected {n}x{dim}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("covariate value {bad} is not finite")));
        }
        Ok(Covariates { n, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Invalid("covariate rows differ in length".into()));
        }
        Covariates::new(rows.len(), dim, rows.concat())
    }

    pub fn none(n: usize) -> Self {
        Covariates { n, dim: 0, values: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: Id) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dot(&self, i: Id, coef: &[f64]) -> f64 {
        self.row(i).iter().zip(coef).map(|(x, b)| x * b).sum()
    }
}

/// Six link rates indexed by phase and unordered pair type.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkRates(pub [[f64; 3]; 2]);

impl LinkRates {
    /// From the `(HH0, HI0, II0, HH1, HI1, II1)` ordering.
    pub fn from_flat(v: [f64; 6]) -> Self {
        LinkRates([[v[0], v[1], v[2]], [v[3], v[4], v[5]]])
    }

    pub fn flat(&self) -> [f64; 6] {
        let r = &self.0;
        [r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2]]
    }

    pub fn get(&self, phase: Phase, pair: PairType) -> f64 {
        self.0[phase.index()][pair.index()]
    }

    pub fn set(&mut self, phase: Phase, pair: PairType, value: f64) {
        self.0[phase.index()][pair.index()] = value;
    }

    /// `(phase, pair type)` in the flat ordering.
    pub fn slots() -> impl Iterator<Item = (Phase, PairType)> {
        Phase::ALL.into_iter().flat_map(|k| PairType::ALL.into_iter().map(move |ab| (k, ab)))
    }
}

/// External-onset block: population onset rate and covariate coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalParams {
    pub xi: f64,
    pub b_e: Vec<f64>,
}

/// Full parameter vector. `exp_eta` is stored on the multiplicative scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub beta: f64,
    pub exp_eta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub p_s: f64,
    pub b_s: Vec<f64>,
    pub alpha: LinkRates,
    pub omega: LinkRates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalParams>,
}

impl Parameters {
    pub fn eta(&self) -> f64 {
        self.exp_eta.ln()
    }

    /// Ground truth of the synthetic study: two binary/normal covariates with
    /// unit coefficients and a lockdown-like second phase for H-I links.
    pub fn reference() -> Self {
        Parameters {
            beta: 0.2,
            exp_eta: 0.2_f64.exp(),
            phi: 0.2,
            gamma: 0.1,
            p_s: 0.6,
            b_s: vec![1.0, 1.0],
            alpha: LinkRates::from_flat([6e-4, 6e-4, 6e-4, 6e-4, 2e-4, 6e-4]),
            omega: LinkRates::from_flat([5e-3, 5e-3, 5e-3, 5e-3, 50e-3, 5e-3]),
            external: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.b_s.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let scalars = [
            ("beta", self.beta),
            ("exp_eta", self.exp_eta),
            ("phi", self.phi),
            ("gamma", self.gamma),
        ];
        for (name, v) in scalars {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_s) {
            return Err(Error::Invalid(format!("p_s must lie in [0, 1], got {}", self.p_s)));
        }
        for r in self.alpha.flat().iter().chain(self.omega.flat().iter()) {
            if !(r.is_finite() && *r >= 0.0) {
                return Err(Error::Invalid(format!("link rate {r} is invalid")));
            }
        }
        if self.b_s.len() != dim || self.b_s.iter().any(|b| !b.is_finite()) {
            return Err(Error::Invalid(format!("b_S must have {dim} finite entries")));
        }
        if let Some(ext) = &self.external {
            if !(ext.xi.is_finite() && ext.xi >= 0.0) {
                return Err(Error::Invalid(format!("xi must be finite and nonnegative, got {}", ext.xi)));
            }
            if ext.b_e.len() != dim || ext.b_e.iter().any(|b| !b.is_finite()) {
                return Err(Error::Invalid(format!("b_E must have {dim} finite entries")));
            }
        }
        Ok(())
    }
}

/// Activation rate when the pair is disconnected, termination rate when connected.
pub fn rate_lookup(
    params: &Parameters,
    a: HealthClass,
    b: HealthClass,
    connected: bool,
    phase: Phase,
) -> f64 {
    let pair = PairType::of(a, b);
    if connected {
        params.omega.get(phase, pair)
    } else {
        params.alpha.get(phase, pair)
    }
}

/// Statuses and contacts at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub statuses: Vec<DiseaseStatus>,
    pub network: Network,
}

impl SystemState {
    /// Applies one event, checking it against the current state.
    pub fn apply(&mut self, index: usize, ev: &Event) -> Result<()> {
        let n = self.statuses.len();
        let bad = |reason: String| Error::InvalidEvent { index, reason };
        if ev.actor >= n {
            return Err(bad(format!("actor {} outside population of {n}", ev.actor)));
        }
        if let Some(p) = ev.partner {
            if p >= n {
                return Err(bad(format!("partner {p} outside population of {n}")));
            }
            if p == ev.actor {
                return Err(bad("partner equals actor".into()));
            }
        }
        let wants_subtype = matches!(ev.kind, EventKind::Manifestation | EventKind::ExternalOnset);
        if wants_subtype != ev.subtype.is_some() {
            return Err(bad(format!("{:?} event with subtype {:?}", ev.kind, ev.subtype)));
        }
        let status = self.statuses[ev.actor];
        match ev.kind {
            EventKind::Exposure => {
                if status != DiseaseStatus::S {
                    return Err(bad(format!("exposure of {} in status {status}", ev.actor)));
                }
                self.statuses[ev.actor] = DiseaseStatus::E;
            }
            EventKind::Manifestation => {
                if status != DiseaseStatus::E {
                    return Err(bad(format!("manifestation of {} in status {status}", ev.actor)));
                }
                self.statuses[ev.actor] = DiseaseStatus::infectious(ev.subtype.unwrap());
            }
            EventKind::ExternalOnset => {
                if status != DiseaseStatus::S {
                    return Err(bad(format!("external onset of {} in status {status}", ev.actor)));
                }
                self.statuses[ev.actor] = DiseaseStatus::infectious(ev.subtype.unwrap());
            }
            EventKind::Recovery => {
                if !status.is_infectious() {
                    return Err(bad(format!("recovery of {} in status {status}", ev.actor)));
                }
                self.statuses[ev.actor] = DiseaseStatus::R;
            }
            EventKind::LinkActivate => {
                let j = ev.partner.ok_or_else(|| bad("link event without partner".into()))?;
                if !self.network.insert(ev.actor, j) {
                    return Err(bad(format!("activation of existing link ({}, {j})", ev.actor)));
                }
            }
            EventKind::LinkTerminate => {
                let j = ev.partner.ok_or_else(|| bad("link event without partner".into()))?;
                if !self.network.remove(ev.actor, j) {
                    return Err(bad(format!("termination of missing link ({}, {j})", ev.actor)));
                }
            }
        }
        Ok(())
    }
}

/// Complete record of one realisation on `(0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    horizon: Time,
    initial_statuses: Vec<DiseaseStatus>,
    initial_network: Network,
    schedule: PhaseSchedule,
    events: Vec<Event>,
}

impl EventLog {
    /// Builds a log and validates it by full replay.
    pub fn new(
        horizon: Time,
        initial_statuses: Vec<DiseaseStatus>,
        initial_network: Network,
        schedule: PhaseSchedule,
        events: Vec<Event>,
    ) -> Result<Self> {
        let log = EventLog::new_unchecked(horizon, initial_statuses, initial_network, schedule, events);
        log.validate()?;
        Ok(log)
    }

    /// Builds a log without replaying it. Callers that construct events from
    /// a consistent state (the simulator, augmentation) use this.
    pub fn new_unchecked(
        horizon: Time,
        initial_statuses: Vec<DiseaseStatus>,
        initial_network: Network,
        schedule: PhaseSchedule,
        events: Vec<Event>,
    ) -> Self {
        EventLog { horizon, initial_statuses, initial_network, schedule, events }
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn population(&self) -> usize {
        self.initial_statuses.len()
    }

    pub fn initial_statuses(&self) -> &[DiseaseStatus] {
        &self.initial_statuses
    }

    pub fn initial_network(&self) -> &Network {
        &self.initial_network
    }

    pub fn schedule(&self) -> &PhaseSchedule {
        &self.schedule
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn initial_state(&self) -> SystemState {
        SystemState {
            statuses: self.initial_statuses.clone(),
            network: self.initial_network.clone(),
        }
    }

    /// Checks horizon, schedule, ordering and replay consistency.
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.schedule.horizon() != self.horizon {
            return Err(Error::Invalid(format!(
                "phase schedule ends at {}, horizon is {}",
                self.schedule.horizon(),
                self.horizon
            )));
        }
        if self.initial_network.len() != self.initial_statuses.len() {
            return Err(Error::Invalid("initial network and statuses disagree on N".into()));
        }
        let mut state = self.initial_state();
        let mut prev = f64::NEG_INFINITY;
        for (index, ev) in self.events.iter().enumerate() {
            if !(ev.time.is_finite() && ev.time >= 0.0 && ev.time <= self.horizon) {
                return Err(Error::InvalidEvent {
                    index,
                    reason: format!("time {} outside [0, {}]", ev.time, self.horizon),
                });
            }
            if ev.time <= prev {
                return Err(Error::InvalidEvent {
                    index,
                    reason: format!("time {} does not follow {}", ev.time, prev),
                });
            }
            prev = ev.time;
            state.apply(index, ev)?;
        }
        Ok(())
    }

    /// State after applying every event with time `<= t`.
    pub fn replay(&self, t: Time) -> Result<SystemState> {
        let mut state = self.initial_state();
        for (index, ev) in self.events.iter().enumerate() {
            if ev.time > t {
                break;
            }
            state.apply(index, ev)?;
        }
        Ok(state)
    }

    pub fn into_parts(self) -> (Time, Vec<DiseaseStatus>, Network, PhaseSchedule, Vec<Event>) {
        (self.horizon, self.initial_statuses, self.initial_network, self.schedule, self.events)
    }
}

/// Convenience wrapper over [`EventLog::replay`].
pub fn replay(log: &EventLog, t: Time) -> Result<SystemState> {
    log.replay(t)
}
