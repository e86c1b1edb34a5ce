//! Exact event-driven simulation of the joint epidemic-network chain.
//!
//! Aggregate rates are kept per event category and updated incrementally:
//! per-susceptible exposure hazards live in a [`SumTree`], connected pairs
//! are bucketed by pair type, and disconnected counts follow from the H/I
//! head counts. At a phase boundary the clock is restarted, which is exact
//! because the waiting times are memoryless.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::collections::{IndexedSet, SumTree};
use crate::error::{Error, Result};
use crate::model::{
    Covariates, DiseaseStatus, Event, EventLog, HealthClass, Id, Network, Pair, PairType, Parameters, Phase,
    PhaseSchedule, Subtype, SystemState, Time,
};

/// How the contact network at time zero is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialNetwork {
    ErdosRenyi { density: f64 },
    Explicit { edges: Vec<(Id, Id)> },
}

/// Initially infected individuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSpec {
    /// `count` individuals chosen uniformly, all in `status`.
    Random { count: usize, status: DiseaseStatus },
    Explicit { seeds: Vec<(Id, DiseaseStatus)> },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Random { count: 1, status: DiseaseStatus::E }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateColumn {
    Bernoulli { p: f64 },
    Normal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateSource {
    Explicit(Covariates),
    Generated(Vec<CovariateColumn>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub population: usize,
    pub horizon: Time,
    pub network: InitialNetwork,
    pub seeds: SeedSpec,
    pub schedule: PhaseSchedule,
    pub covariates: CovariateSource,
    pub seed: u64,
}

impl SimConfig {
    /// Synthetic-study design: ER(0.05) on `population`, one exposed seed,
    /// one Bernoulli(0.5) and one standard normal covariate, horizon 50 days
    /// with the second phase starting at day 25.
    pub fn reference(population: usize, seed: u64) -> Self {
        SimConfig {
            population,
            horizon: 50.0,
            network: InitialNetwork::ErdosRenyi { density: 0.05 },
            seeds: SeedSpec::default(),
            schedule: PhaseSchedule::two_phase(50.0, 25.0).expect("valid schedule"),
            covariates: CovariateSource::Generated(vec![
                CovariateColumn::Bernoulli { p: 0.5 },
                CovariateColumn::Normal,
            ]),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Invalid("population must be at least 2".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Invalid("horizon must be positive".into()));
        }
        if self.schedule.horizon() != self.horizon {
            return Err(Error::Invalid("phase schedule does not end at the horizon".into()));
        }
        if let InitialNetwork::ErdosRenyi { density } = self.network {
            if !(0.0..=1.0).contains(&density) {
                return Err(Error::Invalid(format!("density {density} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Stream ids carved out of one master seed.
const STREAM_NETWORK: u64 = 1;
const STREAM_COVARIATES: u64 = 2;
const STREAM_SEEDS: u64 = 3;
const STREAM_DYNAMICS: u64 = 4;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of replicate `index` under `master`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Erdős–Rényi graph: every unordered pair present independently with probability `density`.
pub fn sample_initial_network<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Network {
    let mut net = Network::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                net.insert(i, j);
            }
        }
    }
    net
}

pub fn generate_covariates<R: Rng + ?Sized>(n: usize, columns: &[CovariateColumn], rng: &mut R) -> Covariates {
    let mut values = Vec::with_capacity(n * columns.len());
    for _ in 0..n {
        for col in columns {
            values.push(match *col {
                CovariateColumn::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
                CovariateColumn::Normal => StandardNormal.sample(rng),
            });
        }
    }
    Covariates::new(n, columns.len(), values).expect("generated covariates are well formed")
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub log: EventLog,
    pub covariates: Covariates,
    /// Total rate hit zero before the horizon with no later phase change.
    pub ended_early: bool,
}

impl Simulation {
    /// Fraction of the population that left S by the horizon.
    pub fn attack_rate(&self) -> f64 {
        let fin = self.log.replay(self.log.horizon()).expect("simulated logs are valid");
        let n = fin.statuses.len();
        fin.statuses.iter().filter(|s| **s != DiseaseStatus::S).count() as f64 / n as f64
    }
}

/// Rate of each event category in a given state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RateBreakdown {
    pub exposure: f64,
    pub manifestation: f64,
    pub recovery: f64,
    pub external: f64,
    pub activation: [f64; 3],
    pub termination: [f64; 3],
}

impl RateBreakdown {
    pub fn total(&self) -> f64 {
        self.exposure
            + self.manifestation
            + self.recovery
            + self.external
            + self.activation.iter().sum::<f64>()
            + self.termination.iter().sum::<f64>()
    }
}

/// Full recomputation of every category rate from a state, scanning all pairs.
pub fn total_rate(state: &SystemState, params: &Parameters, covariates: &Covariates, phase: Phase) -> RateBreakdown {
    let n = state.statuses.len();
    let mut r = RateBreakdown::default();
    for (j, &s) in state.statuses.iter().enumerate() {
        match s {
            DiseaseStatus::S => {
                let mut pressure = 0.0;
                for &k in state.network.neighbors(j) {
                    match state.statuses[k] {
                        DiseaseStatus::Ia => pressure += 1.0,
                        DiseaseStatus::Is => pressure += params.exp_eta,
                        _ => {}
                    }
                }
                r.exposure += params.beta * covariates.dot(j, &params.b_s).exp() * pressure;
                if let Some(ext) = &params.external {
                    r.external += ext.xi * covariates.dot(j, &ext.b_e).exp();
                }
            }
            DiseaseStatus::E => r.manifestation += params.phi,
            DiseaseStatus::Ia | DiseaseStatus::Is => r.recovery += params.gamma,
            DiseaseStatus::R => {}
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let ab = PairType::of(state.statuses[i].health(), state.statuses[j].health());
            if state.network.contains(i, j) {
                r.termination[ab.index()] += params.omega.get(phase, ab);
            } else {
                r.activation[ab.index()] += params.alpha.get(phase, ab);
            }
        }
    }
    r
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SimOptions {
    /// Compare incremental rates against [`total_rate`] after every event.
    pub verify_rates: bool,
}

struct Engine<'a> {
    params: &'a Parameters,
    statuses: Vec<DiseaseStatus>,
    network: Network,
    susceptibility: Vec<f64>,
    external_weight: Vec<f64>,
    nb_ia: Vec<u32>,
    nb_is: Vec<u32>,
    exposure_tree: SumTree,
    external_tree: SumTree,
    exposed: IndexedSet<Id>,
    infectious: IndexedSet<Id>,
    healthy: IndexedSet<Id>,
    connected: [IndexedSet<Pair>; 3],
}

impl<'a> Engine<'a> {
    fn new(params: &'a Parameters, covariates: &Covariates, statuses: Vec<DiseaseStatus>, network: Network) -> Self {
        let n = statuses.len();
        let susceptibility = (0..n).map(|j| covariates.dot(j, &params.b_s).exp()).collect();
        let external_weight = match &params.external {
            Some(ext) => (0..n).map(|j| covariates.dot(j, &ext.b_e).exp()).collect(),
            None => vec![0.0; n],
        };
        let mut eng = Engine {
            params,
            statuses,
            network,
            susceptibility,
            external_weight,
            nb_ia: vec![0; n],
            nb_is: vec![0; n],
            exposure_tree: SumTree::new(n),
            external_tree: SumTree::new(n),
            exposed: IndexedSet::default(),
            infectious: IndexedSet::default(),
            healthy: IndexedSet::default(),
            connected: Default::default(),
        };
        for j in 0..n {
            match eng.statuses[j] {
                DiseaseStatus::E => {
                    eng.exposed.insert(j);
                }
                DiseaseStatus::Ia | DiseaseStatus::Is => {
                    eng.infectious.insert(j);
                }
                _ => {}
            }
            if eng.statuses[j].health() == HealthClass::H {
                eng.healthy.insert(j);
            }
        }
        for pair in eng.network.sorted_edges() {
            let ab = eng.pair_type(pair.lo, pair.hi);
            eng.connected[ab.index()].insert(pair);
        }
        for j in 0..n {
            for &k in eng.network.neighbors(j) {
                match eng.statuses[k] {
                    DiseaseStatus::Ia => eng.nb_ia[j] += 1,
                    DiseaseStatus::Is => eng.nb_is[j] += 1,
                    _ => {}
                }
            }
            eng.refresh(j);
        }
        eng
    }

    fn pair_type(&self, i: Id, j: Id) -> PairType {
        PairType::of(self.statuses[i].health(), self.statuses[j].health())
    }

    /// Recomputes the tree leaves of `j` from its status and neighbour counts.
    fn refresh(&mut self, j: Id) {
        if self.statuses[j] == DiseaseStatus::S {
            let pressure = f64::from(self.nb_ia[j]) + self.params.exp_eta * f64::from(self.nb_is[j]);
            self.exposure_tree.set(j, self.susceptibility[j] * pressure);
            self.external_tree.set(j, self.external_weight[j]);
        } else {
            self.exposure_tree.set(j, 0.0);
            self.external_tree.set(j, 0.0);
        }
    }

    fn disconnected(&self) -> [f64; 3] {
        let h = self.healthy.len() as f64;
        let i = self.infectious.len() as f64;
        let totals = [h * (h - 1.0) / 2.0, h * i, i * (i - 1.0) / 2.0];
        [
            totals[0] - self.connected[0].len() as f64,
            totals[1] - self.connected[1].len() as f64,
            totals[2] - self.connected[2].len() as f64,
        ]
    }

    fn rates(&self, phase: Phase) -> RateBreakdown {
        let p = self.params;
        let disc = self.disconnected();
        let mut r = RateBreakdown {
            exposure: p.beta * self.exposure_tree.total(),
            manifestation: p.phi * self.exposed.len() as f64,
            recovery: p.gamma * self.infectious.len() as f64,
            external: p.external.as_ref().map_or(0.0, |e| e.xi * self.external_tree.total()),
            ..Default::default()
        };
        for ab in PairType::ALL {
            r.activation[ab.index()] = p.alpha.get(phase, ab) * disc[ab.index()];
            r.termination[ab.index()] = p.omega.get(phase, ab) * self.connected[ab.index()].len() as f64;
        }
        r
    }

    fn state(&self) -> SystemState {
        SystemState { statuses: self.statuses.clone(), network: self.network.clone() }
    }

    /// Moves `j` between health classes and retypes its links.
    fn set_status(&mut self, j: Id, status: DiseaseStatus) {
        let old = self.statuses[j];
        let old_types: Vec<(Pair, PairType)> = if old.health() != status.health() {
            self.network
                .neighbors(j)
                .iter()
                .map(|&k| (Pair::new(j, k), self.pair_type(j, k)))
                .collect()
        } else {
            Vec::new()
        };
        self.statuses[j] = status;
        match old {
            DiseaseStatus::E => {
                self.exposed.remove(&j);
            }
            DiseaseStatus::Ia | DiseaseStatus::Is => {
                self.infectious.remove(&j);
            }
            _ => {}
        }
        match status {
            DiseaseStatus::E => {
                self.exposed.insert(j);
            }
            DiseaseStatus::Ia | DiseaseStatus::Is => {
                self.infectious.insert(j);
            }
            _ => {}
        }
        if old.health() != status.health() {
            if status.health() == HealthClass::H {
                self.healthy.insert(j);
            } else {
                self.healthy.remove(&j);
            }
            for (pair, before) in old_types {
                self.connected[before.index()].remove(&pair);
                let after = self.pair_type(pair.lo, pair.hi);
                self.connected[after.index()].insert(pair);
            }
        }
        // neighbour pressure
        let delta = |s: DiseaseStatus| -> (i32, i32) {
            match s {
                DiseaseStatus::Ia => (1, 0),
                DiseaseStatus::Is => (0, 1),
                _ => (0, 0),
            }
        };
        let (oa, os) = delta(old);
        let (na, ns) = delta(status);
        let (da, ds) = (na - oa, ns - os);
        if da != 0 || ds != 0 {
            let nbrs = self.network.neighbors(j).to_vec();
            for k in nbrs {
                self.nb_ia[k] = (self.nb_ia[k] as i32 + da) as u32;
                self.nb_is[k] = (self.nb_is[k] as i32 + ds) as u32;
                self.refresh(k);
            }
        }
        self.refresh(j);
    }

    fn link_changed(&mut self, i: Id, j: Id, added: bool) {
        let ab = self.pair_type(i, j);
        if added {
            self.connected[ab.index()].insert(Pair::new(i, j));
        } else {
            self.connected[ab.index()].remove(&Pair::new(i, j));
        }
        let sign: i32 = if added { 1 } else { -1 };
        for (a, b) in [(i, j), (j, i)] {
            match self.statuses[b] {
                DiseaseStatus::Ia => self.nb_ia[a] = (self.nb_ia[a] as i32 + sign) as u32,
                DiseaseStatus::Is => self.nb_is[a] = (self.nb_is[a] as i32 + sign) as u32,
                _ => continue,
            }
            self.refresh(a);
        }
    }

    fn draw_subtype<R: Rng + ?Sized>(&self, rng: &mut R) -> Subtype {
        if rng.random::<f64>() < self.params.p_s {
            Subtype::Is
        } else {
            Subtype::Ia
        }
    }

    fn draw_pair<R: Rng + ?Sized>(&self, ab: PairType, rng: &mut R) -> (Id, Id) {
        let h = &self.healthy;
        let inf = &self.infectious;
        loop {
            let (i, j) = match ab {
                PairType::HH => (h.at(rng.random_range(0..h.len())), h.at(rng.random_range(0..h.len()))),
                PairType::HI => (h.at(rng.random_range(0..h.len())), inf.at(rng.random_range(0..inf.len()))),
                PairType::II => (inf.at(rng.random_range(0..inf.len())), inf.at(rng.random_range(0..inf.len()))),
            };
            if i != j && !self.network.contains(i, j) {
                return (i, j);
            }
        }
    }

    /// Picks and applies one event at time `t`.
    fn fire<R: Rng + ?Sized>(&mut self, t: Time, rates: &RateBreakdown, rng: &mut R) -> Event {
        let cats = [
            rates.exposure,
            rates.manifestation,
            rates.recovery,
            rates.external,
            rates.activation[0],
            rates.activation[1],
            rates.activation[2],
            rates.termination[0],
            rates.termination[1],
            rates.termination[2],
        ];
        let total: f64 = cats.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut cat = cats.iter().rposition(|&c| c > 0.0).expect("positive total rate");
        for (k, &c) in cats.iter().enumerate() {
            if c > 0.0 && u < c {
                cat = k;
                break;
            }
            u -= c;
        }
        match cat {
            0 => {
                let j = self.exposure_tree.find(rng.random::<f64>()).expect("exposure mass");
                let weights: Vec<(Id, f64)> = self
                    .network
                    .neighbors(j)
                    .iter()
                    .filter_map(|&k| match self.statuses[k] {
                        DiseaseStatus::Ia => Some((k, 1.0)),
                        DiseaseStatus::Is => Some((k, self.params.exp_eta)),
                        _ => None,
                    })
                    .collect();
                let infector = weights.choose_weighted(rng, |w| w.1).ok().map(|w| w.0);
                self.set_status(j, DiseaseStatus::E);
                Event::exposure(t, j, infector)
            }
            1 => {
                let j = self.exposed.at(rng.random_range(0..self.exposed.len()));
                let sub = self.draw_subtype(rng);
                self.set_status(j, DiseaseStatus::infectious(sub));
                Event::manifestation(t, j, sub)
            }
            2 => {
                let j = self.infectious.at(rng.random_range(0..self.infectious.len()));
                self.set_status(j, DiseaseStatus::R);
                Event::recovery(t, j)
            }
            3 => {
                let j = self.external_tree.find(rng.random::<f64>()).expect("external mass");
                let sub = self.draw_subtype(rng);
                self.set_status(j, DiseaseStatus::infectious(sub));
                Event::external_onset(t, j, sub)
            }
            4..=6 => {
                let ab = PairType::ALL[cat - 4];
                let (i, j) = self.draw_pair(ab, rng);
                self.network.insert(i, j);
                self.link_changed(i, j, true);
                Event::link_activate(t, i, j)
            }
            _ => {
                let ab = PairType::ALL[cat - 7];
                let set = &self.connected[ab.index()];
                let pair = set.at(rng.random_range(0..set.len()));
                self.network.remove(pair.lo, pair.hi);
                self.link_changed(pair.lo, pair.hi, false);
                Event::link_terminate(t, pair.lo, pair.hi)
            }
        }
    }
}

fn initial_statuses<R: Rng + ?Sized>(n: usize, seeds: &SeedSpec, rng: &mut R) -> Result<Vec<DiseaseStatus>> {
    let mut statuses = vec![DiseaseStatus::S; n];
    match seeds {
        SeedSpec::Random { count, status } => {
            if *count > n {
                return Err(Error::Invalid(format!("{count} seeds exceed population {n}")));
            }
            let ids = rand::seq::index::sample(rng, n, *count);
            for i in ids.iter() {
                statuses[i] = *status;
            }
        }
        SeedSpec::Explicit { seeds } => {
            for &(i, s) in seeds {
                if i >= n {
                    return Err(Error::Invalid(format!("seed {i} outside population {n}")));
                }
                statuses[i] = s;
            }
        }
    }
    Ok(statuses)
}

/// Simulates one trajectory on `(0, T]`.
pub fn simulate(params: &Parameters, config: &SimConfig) -> Result<Simulation> {
    simulate_with(params, config, SimOptions::default())
}

pub fn simulate_with(params: &Parameters, config: &SimConfig, options: SimOptions) -> Result<Simulation> {
    config.validate()?;
    let n = config.population;
    let covariates = match &config.covariates {
        CovariateSource::Explicit(c) => {
            if c.len() != n {
                return Err(Error::Invalid(format!("covariates cover {} individuals, expected {n}", c.len())));
            }
            c.clone()
        }
        CovariateSource::Generated(cols) => generate_covariates(n, cols, &mut substream(config.seed, STREAM_COVARIATES)),
    };
    params.validate(covariates.dim())?;
    let network = match &config.network {
        InitialNetwork::ErdosRenyi { density } => {
            sample_initial_network(n, *density, &mut substream(config.seed, STREAM_NETWORK))
        }
        InitialNetwork::Explicit { edges } => Network::from_edges(n, edges.iter().copied())?,
    };
    let statuses = initial_statuses(n, &config.seeds, &mut substream(config.seed, STREAM_SEEDS))?;
    let mut rng = substream(config.seed, STREAM_DYNAMICS);

    let mut engine = Engine::new(params, &covariates, statuses.clone(), network.clone());
    let horizon = config.horizon;
    let schedule = &config.schedule;
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut ended_early = false;
    loop {
        let phase = schedule.phase_after(t);
        let boundary = schedule.next_boundary(t).unwrap_or(horizon).min(horizon);
        let rates = engine.rates(phase);
        let total = rates.total();
        if !(total > 0.0) {
            if boundary < horizon {
                t = boundary;
                continue;
            }
            ended_early = true;
            break;
        }
        let wait = Exp::new(total).map_err(|e| Error::Numerical(e.to_string()))?.sample(&mut rng);
        let next = t + wait;
        if next > boundary {
            if boundary >= horizon {
                break;
            }
            t = boundary;
            continue;
        }
        if next <= t {
            // waiting time below the resolution of t
            continue;
        }
        t = next;
        let ev = engine.fire(t, &rates, &mut rng);
        events.push(ev);
        if options.verify_rates {
            let full = total_rate(&engine.state(), params, &covariates, schedule.phase_after(t));
            let inc = engine.rates(schedule.phase_after(t));
            let scale = full.total().max(1e-300);
            if (full.total() - inc.total()).abs() > 1e-9 * scale {
                return Err(Error::Numerical(format!(
                    "incremental rate {} disagrees with recomputed {} after event {}",
                    inc.total(),
                    full.total(),
                    events.len() - 1
                )));
            }
        }
    }
    let log = EventLog::new_unchecked(horizon, statuses, network, schedule.clone(), events);
    Ok(Simulation { log, covariates, ended_early })
}

/// Resimulates with fresh substreams until the attack rate reaches `min_attack`.
/// Returns the accepted run and the number of retries used.
pub fn simulate_until(
    params: &Parameters,
    config: &SimConfig,
    min_attack: f64,
    max_retries: usize,
) -> Result<(Simulation, usize)> {
    let mut cfg = config.clone();
    for retry in 0..=max_retries {
        cfg.seed = if retry == 0 { config.seed } else { replicate_seed(config.seed, retry as u64) };
        let sim = simulate(params, &cfg)?;
        if sim.attack_rate() >= min_attack {
            return Ok((sim, retry));
        }
    }
    Err(Error::Numerical(format!(
        "no run reached attack rate {min_attack} within {max_retries} retries"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        let mut rng = substream(1, 0);
        assert_eq!(sample_initial_network(30, 0.0, &mut rng).edge_count(), 0);
        assert_eq!(sample_initial_network(30, 1.0, &mut rng).edge_count(), 30 * 29 / 2);
    }

    #[test]
    fn zero_exposure_rate_keeps_seed_alone() {
        let mut p = Parameters::reference();
        p.beta = 0.0;
        let cfg = SimConfig::reference(40, 7);
        let sim = simulate(&p, &cfg).unwrap();
        sim.log.validate().unwrap();
        assert!(sim.log.events().iter().all(|e| e.kind != crate::model::EventKind::Exposure));
    }

    #[test]
    fn incremental_rates_match_recomputation() {
        let mut p = Parameters::reference();
        p.alpha = crate::model::LinkRates::from_flat([0.05, 0.03, 0.02, 0.01, 0.04, 0.02]);
        p.omega = crate::model::LinkRates::from_flat([0.1, 0.3, 0.2, 0.05, 0.5, 0.1]);
        p.external = Some(crate::model::ExternalParams { xi: 0.01, b_e: vec![0.5, -0.5] });
        let mut cfg = SimConfig::reference(25, 3);
        cfg.network = InitialNetwork::ErdosRenyi { density: 0.2 };
        let sim = simulate_with(&p, &cfg, SimOptions { verify_rates: true }).unwrap();
        sim.log.validate().unwrap();
        assert!(sim.log.events().len() > 50);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = Parameters::reference();
        let cfg = SimConfig::reference(60, 11);
        let a = simulate(&p, &cfg).unwrap();
        let b = simulate(&p, &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.covariates, b.covariates);
    }
}
