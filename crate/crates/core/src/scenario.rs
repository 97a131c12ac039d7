//! Scenario files, random instance generation and report output.
//!
//! Scenarios are TOML documents:
//!
//! ```toml
//! format_version = 1
//! kind = "auction"            # ranking | auction | equilibrium | diversity
//! bids = [10.0, 2.4]          # auction only, one per advertiser
//! k = 0.8                     # optional taxonomy constant
//!
//! [simulation]                # optional
//! trials = 100000
//! seed = 7
//!
//! [[advertisers]]
//! id = "a1"
//! value = 10.0
//! ctr = 0.5
//! abandon_prob = 0.5
//! ```
//!
//! Ranking scenarios list `[[entities]]` (`id`, `utility`, `click_prob`,
//! `abandon_prob`). Diversity scenarios give either entities plus an optional
//! `similarity` matrix, or a `[graph]` table with `adjacency` and the shared
//! `utility`, `click_prob` and `abandon_prob`.
//!
//! Reports are written as pretty JSON (structured) or CSV (tabular, one row
//! per position).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diversity::{instance_from_graph, DiversityInstance, ResidualRule, SimilarityMode};
use crate::error::Error as ModelError;
use crate::mechanism::{Advertiser, BidVector};
use crate::model::Entity;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Re-roots a model validation error under `prefix` (e.g. `entities[2].`).
fn at(prefix: &str, err: ModelError) -> ScenarioError {
    match err {
        ModelError::InvalidParameter { field, reason } => {
            ScenarioError::invalid(format!("{prefix}{field}"), reason)
        }
        other => ScenarioError::invalid(prefix.trim_end_matches('.'), other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Ranking,
    Auction,
    Equilibrium,
    Diversity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub trials: u64,
    pub seed: u64,
}

/// Graph-defined diversity instance: every vertex is an entity with the same parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub adjacency: Vec<Vec<u8>>,
    pub utility: f64,
    pub click_prob: f64,
    pub abandon_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub entities: Vec<Entity>,
    pub advertisers: Vec<Advertiser>,
    pub bids: Option<BidVector>,
    pub k: Option<f64>,
    pub similarity: Option<Vec<Vec<f64>>>,
    pub similarity_mode: SimilarityMode,
    pub residual_rule: ResidualRule,
    pub graph: Option<GraphSpec>,
    pub simulation: Option<SimulationSpec>,
}

impl Scenario {
    pub fn ranking(entities: Vec<Entity>) -> Self {
        Self::empty(ScenarioKind::Ranking).with_entities(entities)
    }

    pub fn auction(advertisers: Vec<Advertiser>, bids: BidVector) -> Self {
        Self {
            advertisers,
            bids: Some(bids),
            ..Self::empty(ScenarioKind::Auction)
        }
    }

    pub fn equilibrium(advertisers: Vec<Advertiser>) -> Self {
        Self {
            advertisers,
            ..Self::empty(ScenarioKind::Equilibrium)
        }
    }

    pub fn graph(graph: GraphSpec) -> Self {
        Self {
            graph: Some(graph),
            ..Self::empty(ScenarioKind::Diversity)
        }
    }

    fn empty(kind: ScenarioKind) -> Self {
        Self {
            kind,
            entities: Vec::new(),
            advertisers: Vec::new(),
            bids: None,
            k: None,
            similarity: None,
            similarity_mode: SimilarityMode::Binary,
            residual_rule: ResidualRule::ZeroIfDuplicateAbove,
            graph: None,
            simulation: None,
        }
    }

    fn with_entities(mut self, entities: Vec<Entity>) -> Self {
        self.entities = entities;
        self
    }

    /// Number of rankable items in the scenario.
    pub fn len(&self) -> usize {
        match self.kind {
            ScenarioKind::Ranking => self.entities.len(),
            ScenarioKind::Auction | ScenarioKind::Equilibrium => self.advertisers.len(),
            ScenarioKind::Diversity => match &self.graph {
                Some(g) => g.adjacency.len(),
                None => self.entities.len(),
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The diversity instance described by a diversity scenario.
    pub fn diversity_instance(&self) -> Result<DiversityInstance, ScenarioError> {
        if let Some(g) = &self.graph {
            return instance_from_graph(&g.adjacency, g.utility, g.click_prob, g.abandon_prob)
                .map_err(|e| at("graph.", e));
        }
        match &self.similarity {
            Some(sim) => DiversityInstance::new(
                self.entities.clone(),
                sim.clone(),
                self.similarity_mode,
                self.residual_rule,
            ),
            None => DiversityInstance::independent(self.entities.clone(), self.residual_rule),
        }
        .map_err(|e| at("", e))
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if let Some(k) = self.k {
            if !(k.is_finite() && k > 0.0 && k <= 1.0) {
                return Err(ScenarioError::invalid(
                    "k",
                    format!("must lie in (0, 1], got {k}"),
                ));
            }
        }
        if let Some(sim) = &self.simulation {
            if sim.trials == 0 {
                return Err(ScenarioError::invalid(
                    "simulation.trials",
                    "must be at least 1",
                ));
            }
        }
        match self.kind {
            ScenarioKind::Ranking => {
                if self.entities.is_empty() {
                    return Err(ScenarioError::invalid(
                        "entities",
                        "a ranking scenario needs at least one entity",
                    ));
                }
            }
            ScenarioKind::Auction | ScenarioKind::Equilibrium => {
                if self.advertisers.is_empty() {
                    return Err(ScenarioError::invalid(
                        "advertisers",
                        "at least one advertiser is required",
                    ));
                }
                match &self.bids {
                    None if self.kind == ScenarioKind::Auction => {
                        return Err(ScenarioError::invalid(
                            "bids",
                            "an auction scenario requires bids",
                        ))
                    }
                    Some(b) if b.len() != self.advertisers.len() => {
                        return Err(ScenarioError::invalid(
                            "bids",
                            format!(
                                "expected {} bids, found {}",
                                self.advertisers.len(),
                                b.len()
                            ),
                        ))
                    }
                    _ => {}
                }
            }
            ScenarioKind::Diversity => {
                if self.graph.is_some() && !self.entities.is_empty() {
                    return Err(ScenarioError::invalid(
                        "graph",
                        "give either a graph or entities, not both",
                    ));
                }
                if self.graph.is_none() && self.entities.is_empty() {
                    return Err(ScenarioError::invalid(
                        "entities",
                        "a diversity scenario needs entities or a graph",
                    ));
                }
                self.diversity_instance()?;
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        raw.into_scenario()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RawScenario::from(self)).expect("scenario values serialize to TOML")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntity {
    id: String,
    utility: f64,
    click_prob: f64,
    abandon_prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdvertiser {
    id: String,
    value: f64,
    ctr: f64,
    abandon_prob: f64,
}

/// On-disk layout. Plain values come before tables so the TOML stays valid.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    format_version: u32,
    kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bids: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residual_rule: Option<ResidualRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    similarity_mode: Option<SimilarityMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    similarity: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    simulation: Option<SimulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    entities: Vec<RawEntity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    advertisers: Vec<RawAdvertiser>,
}

impl RawScenario {
    fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ScenarioError::invalid(
                "format_version",
                format!(
                    "unsupported version {} (expected {FORMAT_VERSION})",
                    self.format_version
                ),
            ));
        }
        let entities = self
            .entities
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                Entity::new(e.id, e.utility, e.click_prob, e.abandon_prob)
                    .map_err(|err| at(&format!("entities[{i}]."), err))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let advertisers = self
            .advertisers
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                Advertiser::new(a.id, a.value, a.ctr, a.abandon_prob)
                    .map_err(|err| at(&format!("advertisers[{i}]."), err))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bids = self
            .bids
            .map(BidVector::new)
            .transpose()
            .map_err(|e| at("", e))?;
        let scenario = Scenario {
            kind: self.kind,
            entities,
            advertisers,
            bids,
            k: self.k,
            similarity_mode: self.similarity_mode.unwrap_or(SimilarityMode::Binary),
            residual_rule: self
                .residual_rule
                .unwrap_or(ResidualRule::ZeroIfDuplicateAbove),
            similarity: self.similarity,
            graph: self.graph,
            simulation: self.simulation,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for RawScenario {
    fn from(s: &Scenario) -> Self {
        let diversity = s.kind == ScenarioKind::Diversity;
        RawScenario {
            format_version: FORMAT_VERSION,
            kind: s.kind,
            k: s.k,
            bids: s.bids.as_ref().map(|b| b.as_slice().to_vec()),
            residual_rule: diversity.then_some(s.residual_rule),
            similarity_mode: diversity.then_some(s.similarity_mode),
            similarity: s.similarity.clone(),
            simulation: s.simulation.clone(),
            graph: s.graph.clone(),
            entities: s
                .entities
                .iter()
                .map(|e| {
                    use crate::model::ClickParams;
                    RawEntity {
                        id: e.id().to_string(),
                        utility: e.utility(),
                        click_prob: e.click_prob(),
                        abandon_prob: e.abandon_prob(),
                    }
                })
                .collect(),
            advertisers: s
                .advertisers
                .iter()
                .map(|a| {
                    use crate::model::ClickParams;
                    RawAdvertiser {
                        id: a.id().to_string(),
                        value: a.value(),
                        ctr: a.ctr(),
                        abandon_prob: a.abandon_prob(),
                    }
                })
                .collect(),
        }
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    Scenario::from_toml_str(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, scenario.to_toml_string()).map_err(|e| ScenarioError::io(path, e))
}

// ─────────────────────────────────────────────────────────────────────────────
// Random instances
// ─────────────────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbandonmentModel {
    /// `γ = u · (1 − C)` with `u` uniform in `[lo, hi)`.
    Fraction { lo: f64, hi: f64 },
    /// `γ = 0`.
    Zero,
    /// `γ = k − C`; `C` is capped at `k`.
    Linear { k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstanceSpec {
    pub kind: ScenarioKind,
    pub count: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Range for entity utility or advertiser value.
    pub utility: (f64, f64),
    pub click: (f64, f64),
    pub abandonment: AbandonmentModel,
    pub bid: (f64, f64),
    /// Edge probability for diversity graphs.
    pub edge_prob: f64,
}

impl Default for RandomInstanceSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::Ranking,
            count: 100,
            n_min: 2,
            n_max: 8,
            seed: 0,
            utility: (0.0, 10.0),
            click: (0.05, 0.95),
            abandonment: AbandonmentModel::Fraction { lo: 0.0, hi: 1.0 },
            bid: (0.0, 10.0),
            edge_prob: 0.5,
        }
    }
}

impl RandomInstanceSpec {
    pub fn new(kind: ScenarioKind, count: usize, seed: u64) -> Self {
        Self {
            kind,
            count,
            seed,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let range = |name: &str, (lo, hi): (f64, f64), max: f64| {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= max) {
                return Err(ScenarioError::invalid(
                    name,
                    format!("need 0 <= lo <= hi <= {max}, got ({lo}, {hi})"),
                ));
            }
            Ok(())
        };
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(ScenarioError::invalid(
                "n_range",
                format!(
                    "need 1 <= n_min <= n_max, got {}..={}",
                    self.n_min, self.n_max
                ),
            ));
        }
        range("utility", self.utility, f64::MAX)?;
        range("click", self.click, 1.0)?;
        range("bid", self.bid, f64::MAX)?;
        range("edge_prob", (self.edge_prob, self.edge_prob), 1.0)?;
        match self.abandonment {
            AbandonmentModel::Fraction { lo, hi } => range("abandonment", (lo, hi), 1.0)?,
            AbandonmentModel::Zero => {}
            AbandonmentModel::Linear { k } => {
                if !(k > 0.0 && k <= 1.0 && self.click.0 <= k) {
                    return Err(ScenarioError::invalid(
                        "abandonment.k",
                        format!("need click.lo <= k <= 1, got k = {k}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws `(C, γ)` from the generator's click range and abandonment model.
fn click_pair(rng: &mut ChaCha8Rng, spec: &RandomInstanceSpec) -> (f64, f64) {
    match spec.abandonment {
        AbandonmentModel::Fraction { lo, hi } => {
            let c = uniform(rng, spec.click);
            let g = uniform(rng, (lo, hi)) * (1.0 - c);
            (c, g)
        }
        AbandonmentModel::Zero => (uniform(rng, spec.click), 0.0),
        AbandonmentModel::Linear { k } => {
            let c = uniform(rng, (spec.click.0, spec.click.1.min(k)));
            (c, k - c)
        }
    }
}

/// Deterministic batch of valid scenarios.
pub fn generate_instances(spec: &RandomInstanceSpec) -> Result<Vec<Scenario>, ScenarioError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = match spec.abandonment {
        AbandonmentModel::Linear { k } => Some(k),
        _ => None,
    };
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let n = rng.random_range(spec.n_min..=spec.n_max);
        let mut scenario = match spec.kind {
            ScenarioKind::Ranking => {
                let entities = (0..n)
                    .map(|i| {
                        let u = uniform(&mut rng, spec.utility);
                        let (c, g) = click_pair(&mut rng, spec);
                        Entity::new(format!("e{i}"), u, c, g).map_err(|e| at("", e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Scenario::ranking(entities)
            }
            ScenarioKind::Auction | ScenarioKind::Equilibrium => {
                let mut bids = Vec::with_capacity(n);
                let advertisers = (0..n)
                    .map(|i| {
                        let v = uniform(&mut rng, spec.utility);
                        let (c, g) = click_pair(&mut rng, spec);
                        bids.push(uniform(&mut rng, spec.bid));
                        Advertiser::new(format!("a{i}"), v, c, g).map_err(|e| at("", e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if spec.kind == ScenarioKind::Auction {
                    Scenario::auction(advertisers, BidVector::new(bids).map_err(|e| at("", e))?)
                } else {
                    Scenario::equilibrium(advertisers)
                }
            }
            ScenarioKind::Diversity => {
                let mut adjacency = vec![vec![0u8; n]; n];
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.random_bool(spec.edge_prob) {
                            adjacency[i][j] = 1;
                            adjacency[j][i] = 1;
                        }
                    }
                }
                let utility = uniform(&mut rng, spec.utility);
                let (click_prob, abandon_prob) = click_pair(&mut rng, spec);
                Scenario::graph(GraphSpec {
                    adjacency,
                    utility,
                    click_prob,
                    abandon_prob,
                })
            }
        };
        scenario.k = k;
        out.push(scenario);
    }
    Ok(out)
}

// ─────────────────────────────────────────────────────────────────────────────
// Reports
// ─────────────────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Structured,
    Tabular,
}

/// One ranked position. `position` is one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRow {
    pub position: usize,
    pub id: String,
    pub score: f64,
    pub price: Option<f64>,
    pub click_prob: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub command: String,
    pub label: String,
    pub rows: Vec<PositionRow>,
    pub metrics: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            command: command.into(),
            label: label.into(),
            rows: Vec::new(),
            metrics: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Records a metric; non-finite values become a note since JSON has no encoding for them.
    pub fn metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(name.to_string(), value);
        } else {
            self.notes.push(format!("{name} = {value}"));
        }
    }

    pub fn verdict(&mut self, name: &str, ok: bool) {
        self.verdicts.insert(name.to_string(), ok);
    }

    /// True when every recorded verdict passed.
    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Structured => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            ReportFormat::Tabular => self.to_csv(),
        }
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "position",
            "id",
            "score",
            "price",
            "click_prob",
            "contribution",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.position.to_string(),
                r.id.clone(),
                sig17(r.score),
                r.price.map(sig17).unwrap_or_default(),
                sig17(r.click_prob),
                sig17(r.contribution),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("csv output is utf-8")
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_report(
    report: &Report,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, report.render(format)).map_err(|e| ScenarioError::io(path, e))
}

/// Reads a structured report back.
pub fn read_report(path: impl AsRef<Path>) -> Result<Report, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))
}
