//! File formats: event logs (JSON lines), covariates (CSV), simulation
//! configs (TOML), missingness specs and fit outputs (JSON), chain dumps.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EstimateStatus;
use crate::impute::ProposalCount;
use crate::likelihood::ParamLayout;
use crate::model::{DiseaseStatus, Event, EventKind, EventLog, Id, Network, Parameters, PhaseInterval, PhaseSchedule, Subtype, Time};
use crate::observed::ObservedSpec;
use crate::simulate::{CovariateSource, InitialNetwork, SeedSpec, SimConfig};
use crate::stats::SufficientStats;

/// Version of every file format written here.
pub const SCHEMA_VERSION: u32 = 1;

fn check_version(found: u32, what: &str) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::Invalid(format!("{what} has schema_version {found}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogHeader {
    schema_version: u32,
    #[serde(rename = "T")]
    horizon: Time,
    #[serde(rename = "N")]
    population: usize,
    initial_statuses: Vec<DiseaseStatus>,
    initial_edges: Vec<(Id, Id)>,
    schedule: Vec<PhaseInterval>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    time: Time,
    kind: EventKind,
    actor: Id,
    #[serde(default)]
    partner: Option<Id>,
    #[serde(default)]
    subtype: Option<Subtype>,
}

/// One event as a JSON object, time with 17 significant digits.
fn event_line(ev: &Event) -> String {
    let kind = serde_json::to_string(&ev.kind).expect("enum serialises");
    let mut s = format!("{{\"time\":{:.16e},\"kind\":{kind},\"actor\":{}", ev.time, ev.actor);
    if let Some(p) = ev.partner {
        s.push_str(&format!(",\"partner\":{p}"));
    }
    if let Some(sub) = ev.subtype {
        s.push_str(&format!(",\"subtype\":{}", serde_json::to_string(&sub).expect("enum serialises")));
    }
    s.push('}');
    s
}

pub fn write_event_log_to<W: Write>(log: &EventLog, mut w: W) -> Result<()> {
    let header = LogHeader {
        schema_version: SCHEMA_VERSION,
        horizon: log.horizon(),
        population: log.population(),
        initial_statuses: log.initial_statuses().to_vec(),
        initial_edges: log.initial_network().sorted_edges().iter().map(|p| (p.lo, p.hi)).collect(),
        schedule: log.schedule().intervals().to_vec(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).map_err(|e| Error::Invalid(e.to_string()))?)?;
    for ev in log.events() {
        writeln!(w, "{}", event_line(ev))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_event_log(log: &EventLog, path: &Path) -> Result<()> {
    write_event_log_to(log, BufWriter::new(fs::File::create(path)?))
}

/// Parses an event log; errors name the 1-based line.
pub fn read_event_log_from<R: Read>(r: R) -> Result<EventLog> {
    let mut lines = BufReader::new(r).lines();
    let first = lines.next().ok_or(Error::Parse { line: 1, reason: "empty event log".into() })??;
    let header: LogHeader =
        serde_json::from_str(&first).map_err(|e| Error::Parse { line: 1, reason: format!("header: {e}") })?;
    check_version(header.schema_version, "event log")?;
    if header.initial_statuses.len() != header.population {
        return Err(Error::Parse { line: 1, reason: "initial_statuses length differs from N".into() });
    }
    let network = Network::from_edges(header.population, header.initial_edges)
        .map_err(|e| Error::Parse { line: 1, reason: e.to_string() })?;
    let schedule = PhaseSchedule::new(header.schedule).map_err(|e| Error::Parse { line: 1, reason: e.to_string() })?;
    let mut events = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let no = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord = serde_json::from_str(&line).map_err(|e| Error::Parse { line: no, reason: e.to_string() })?;
        if let Some(prev) = events.last().map(|(_, e): &(usize, Event)| e.time) {
            if !(rec.time > prev) {
                return Err(Error::Parse { line: no, reason: format!("time {} does not follow {prev}", rec.time) });
            }
        }
        events.push((no, Event { time: rec.time, kind: rec.kind, actor: rec.actor, partner: rec.partner, subtype: rec.subtype }));
    }
    let line_of: Vec<usize> = events.iter().map(|e| e.0).collect();
    EventLog::new(header.horizon, header.initial_statuses, network, schedule, events.into_iter().map(|e| e.1).collect())
        .map_err(|e| match e {
            Error::InvalidEvent { index, reason } => Error::Parse { line: line_of[index], reason },
            other => other,
        })
}

pub fn read_event_log(path: &Path) -> Result<EventLog> {
    read_event_log_from(fs::File::open(path)?)
}

/// Covariates with an `id` column first; ids must be `0..N-1`, each once.
pub fn read_covariates_from<R: Read>(r: R) -> Result<crate::model::Covariates> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, reason: e.to_string() })?.clone();
    if headers.is_empty() {
        return Err(Error::Parse { line: 1, reason: "missing id column".into() });
    }
    let dim = headers.len() - 1;
    let mut rows: Vec<(Id, Vec<f64>, usize)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse { line, reason: e.to_string() })?;
        if rec.len() != dim + 1 {
            return Err(Error::Parse { line, reason: format!("expected {} fields, found {}", dim + 1, rec.len()) });
        }
        let id: Id = rec[0].parse().map_err(|_| Error::Parse { line, reason: format!("bad id {:?}", &rec[0]) })?;
        let vals = (1..=dim)
            .map(|c| {
                rec[c].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    reason: format!("non-numeric value {:?} in column {}", &rec[c], &headers[c]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, vals, line));
    }
    let n = rows.len();
    let mut ordered: Vec<Option<Vec<f64>>> = vec![None; n];
    for (id, vals, line) in rows {
        if id >= n {
            return Err(Error::Parse { line, reason: format!("id {id} outside 0..{n}") });
        }
        if ordered[id].is_some() {
            return Err(Error::Parse { line, reason: format!("duplicate id {id}") });
        }
        ordered[id] = Some(vals);
    }
    let values: Vec<f64> = ordered.into_iter().flat_map(|r| r.expect("ids cover 0..N")).collect();
    crate::model::Covariates::new(n, dim, values)
}

pub fn read_covariates(path: &Path) -> Result<crate::model::Covariates> {
    read_covariates_from(fs::File::open(path)?)
}

pub fn write_covariates(cov: &crate::model::Covariates, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut header = vec!["id".to_string()];
    header.extend((0..cov.dim()).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(|e| Error::Invalid(e.to_string()))?;
    for i in 0..cov.len() {
        let mut rec = vec![i.to_string()];
        rec.extend(cov.row(i).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec).map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Simulation config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub schema_version: u32,
    pub population: usize,
    pub horizon: Time,
    #[serde(default)]
    pub seed: u64,
    pub params: Parameters,
    pub network: InitialNetwork,
    #[serde(default)]
    pub seeds: SeedSpec,
    pub schedule: Vec<PhaseInterval>,
    pub covariates: CovariateSource,
}

impl SimulationConfig {
    /// The synthetic-study design at `population`.
    pub fn reference(population: usize) -> Self {
        let sim = SimConfig::reference(population, 0);
        SimulationConfig {
            schema_version: SCHEMA_VERSION,
            population,
            horizon: sim.horizon,
            seed: 0,
            params: Parameters::reference(),
            network: sim.network,
            seeds: sim.seeds,
            schedule: sim.schedule.intervals().to_vec(),
            covariates: sim.covariates,
        }
    }

    pub fn to_sim_config(&self, seed: u64) -> Result<SimConfig> {
        check_version(self.schema_version, "config")?;
        Ok(SimConfig {
            population: self.population,
            horizon: self.horizon,
            network: self.network.clone(),
            seeds: self.seeds.clone(),
            schedule: PhaseSchedule::new(self.schedule.clone())?,
            covariates: self.covariates.clone(),
            seed,
        })
    }
}

pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let cfg: SimulationConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
        Error::Parse { line, reason: e.message().to_string() }
    })?;
    check_version(cfg.schema_version, "config")?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<SimulationConfig> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn config_to_toml(cfg: &SimulationConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn read_observed_spec(path: &Path) -> Result<ObservedSpec> {
    let text = fs::read_to_string(path)?;
    let spec: ObservedSpec = serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), reason: e.to_string() })?;
    spec.validate()?;
    Ok(spec)
}

/// Labels `id,label` with label `internal` or `external`.
pub fn read_external_labels(path: &Path, population: usize) -> Result<Vec<bool>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut labels = vec![false; population];
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse { line, reason: e.to_string() })?;
        if rec.len() != 2 {
            return Err(Error::Parse { line, reason: "expected id,label".into() });
        }
        let id: Id = rec[0].parse().map_err(|_| Error::Parse { line, reason: format!("bad id {:?}", &rec[0]) })?;
        if id >= population {
            return Err(Error::Parse { line, reason: format!("id {id} outside 0..{population}") });
        }
        labels[id] = match &rec[1] {
            "external" => true,
            "internal" => false,
            other => return Err(Error::Parse { line, reason: format!("label must be internal or external, got {other:?}") }),
        };
    }
    Ok(labels)
}

/// Rewrites the manifestation of every labelled case as an external onset
/// and drops its exposure.
pub fn apply_external_labels(log: &EventLog, external: &[bool]) -> Result<EventLog> {
    if external.len() != log.population() {
        return Err(Error::Invalid("label count differs from the population".into()));
    }
    let events = log
        .events()
        .iter()
        .filter(|e| !(e.kind == EventKind::Exposure && external[e.actor]))
        .map(|e| {
            let mut e = *e;
            if e.kind == EventKind::Manifestation && external[e.actor] {
                e.kind = EventKind::ExternalOnset;
            }
            e
        })
        .collect();
    EventLog::new(
        log.horizon(),
        log.initial_statuses().to_vec(),
        log.initial_network().clone(),
        log.schedule().clone(),
        events,
    )
}

/// Result of `fit-complete` or `fit-stem`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub schema_version: u32,
    pub method: String,
    pub estimates: BTreeMap<String, f64>,
    pub status: BTreeMap<String, EstimateStatus>,
    /// Complete-data score at the estimate (complete fits only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub score: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub standard_errors: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

pub fn named<T: Clone>(layout: &ParamLayout, values: &[T]) -> BTreeMap<String, T> {
    layout.names().into_iter().zip(values.iter().cloned()).collect()
}

/// Parameters from a name-keyed map; every name of `layout` must be present.
pub fn parameters_from_map(layout: &ParamLayout, map: &BTreeMap<String, f64>) -> Result<Parameters> {
    let v = layout
        .names()
        .iter()
        .map(|n| map.get(n).copied().ok_or_else(|| Error::Invalid(format!("estimate {n} missing"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(layout.from_vec(&v))
}

/// Layout implied by the names of an estimate map.
pub fn layout_from_names(map: &BTreeMap<String, f64>) -> Result<ParamLayout> {
    let dim = map.keys().filter(|k| k.starts_with("b_S_")).count();
    let layout = ParamLayout::new(dim, map.contains_key("xi"));
    if layout.names().len() != map.len() || layout.names().iter().any(|n| !map.contains_key(n)) {
        return Err(Error::Invalid("estimate names do not form a parameter layout".into()));
    }
    Ok(layout)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Invalid(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), reason: e.to_string() })
}

/// `meta.json` of a chain directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub schema_version: u32,
    pub names: Vec<String>,
    pub runs: usize,
    pub total_iters: usize,
    pub burn_in: usize,
    pub m_it: usize,
    pub seed: u64,
    /// Names of parameters held fixed during the fit.
    pub fixed: Vec<String>,
    /// Covariates of the fitted data, needed to evaluate scores.
    pub covariates: crate::model::Covariates,
}

/// `chain_<run>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDump {
    pub run: usize,
    /// One row per iteration in layout order.
    pub params: Vec<Vec<f64>>,
    pub status: Vec<EstimateStatus>,
    pub accepted: u64,
    pub proposed: u64,
    pub repairs: usize,
    /// Augmented-data statistics of the averaging window.
    pub samples: Vec<SufficientStats>,
}

impl ChainDump {
    pub fn from_chain(run: usize, chain: &crate::stem::ParameterChain) -> Self {
        ChainDump {
            run,
            params: chain.params.iter().map(|p| chain.layout.to_vec(p)).collect(),
            status: chain.status.clone(),
            accepted: chain.proposals.accepted,
            proposed: chain.proposals.proposed,
            repairs: chain.repairs,
            samples: chain.samples.clone(),
        }
    }

    pub fn proposals(&self) -> ProposalCount {
        ProposalCount { accepted: self.accepted, proposed: self.proposed }
    }
}

pub fn chain_file(dir: &Path, run: usize) -> std::path::PathBuf {
    dir.join(format!("chain_{run}.json"))
}

pub fn write_chains(dir: &Path, meta: &ChainMeta, chains: &[crate::stem::ParameterChain]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(meta, &dir.join("meta.json"))?;
    for (r, c) in chains.iter().enumerate() {
        write_json(&ChainDump::from_chain(r, c), &chain_file(dir, r))?;
    }
    Ok(())
}

pub fn read_chains(dir: &Path) -> Result<(ChainMeta, Vec<ChainDump>)> {
    let meta: ChainMeta = read_json(&dir.join("meta.json"))?;
    check_version(meta.schema_version, "chain metadata")?;
    let dumps = (0..meta.runs).map(|r| read_json(&chain_file(dir, r))).collect::<Result<Vec<ChainDump>>>()?;
    Ok((meta, dumps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::simulate;

    #[test]
    fn event_log_round_trip_is_bit_exact() {
        let sim = simulate(&Parameters::reference(), &SimConfig::reference(60, 9)).unwrap();
        let mut buf = Vec::new();
        write_event_log_to(&sim.log, &mut buf).unwrap();
        let back = read_event_log_from(buf.as_slice()).unwrap();
        assert_eq!(back, sim.log);
    }

    #[test]
    fn non_monotone_time_names_the_line() {
        let text = concat!(
            r#"{"schema_version":1,"T":10.0,"N":2,"initial_statuses":["S","S"],"initial_edges":[],"schedule":[{"start":0.0,"end":10.0,"phase":0}]}"#,
            "\n",
            r#"{"time":2.0,"kind":"link_activate","actor":0,"partner":1}"#,
            "\n",
            r#"{"time":1.0,"kind":"link_terminate","actor":0,"partner":1}"#,
            "\n"
        );
        match read_event_log_from(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_event_names_the_line() {
        let text = concat!(
            r#"{"schema_version":1,"T":10.0,"N":2,"initial_statuses":["S","S"],"initial_edges":[],"schedule":[{"start":0.0,"end":10.0,"phase":0}]}"#,
            "\n",
            r#"{"time":2.0,"kind":"link_terminate","actor":0,"partner":1}"#,
            "\n"
        );
        assert!(matches!(read_event_log_from(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn covariates_parse_and_reject() {
        let c = read_covariates_from("id,a,b\n1,0,2.5\n0,1,-1\n".as_bytes()).unwrap();
        assert_eq!((c.len(), c.dim()), (2, 2));
        assert_eq!(c.row(0), &[1.0, -1.0]);
        let c = read_covariates_from("id\n0\n1\n2\n".as_bytes()).unwrap();
        assert_eq!((c.len(), c.dim()), (3, 0));
        assert!(matches!(read_covariates_from("id,a\n0,1\n0,2\n".as_bytes()), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_covariates_from("id,a\n0,x\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(read_covariates_from("id,a\n0,1\n2,2\n".as_bytes()).is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = SimulationConfig::reference(200);
        let text = config_to_toml(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
        let bad = text.replace("schema_version = 1", "schema_version = 7");
        assert!(parse_config(&bad).is_err());
    }
}
