//! Dataset ingestion and validation, value-option matrix files, result
//! tables and experiment configuration files.
//!
//! # Dataset file
//!
//! A JSON document:
//!
//! ```json
//! {
//!   "schema": "valuepref-dataset/1",
//!   "budget": 100,
//!   "values": [{"id": "v1", "name": "Cost-effectiveness"}],
//!   "options": [{"id": "o1", "description": "..."}],
//!   "participants": [
//!     {"id": "p1", "choices": [100, 0],
//!      "motivations": [{"option_id": "o1", "text": "...", "labels": ["v1"]}]}
//!   ]
//! }
//! ```
//!
//! Known value systems (synthetic data) live in a sidecar next to the
//! dataset, `<stem>.truth.json`, holding `{"schema": "valuepref-truth/1",
//! "rankings": [{"participant": "p1", "ranking": "v1 > v2=v3"}]}`.
//!
//! # Tables
//!
//! Every table is comma-separated. Leading lines starting with `#` carry
//! metadata (`# key: value`), including a JSON snapshot of the
//! configuration that produced the file; readers skip them.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::estimation::EstimationResult;
use crate::model::{
    ChoiceAllocation, Dataset, LabelSet, Motivation, MotivationSet, OptionDef, OptionSet, Participant,
    Ranking, UtilityVector, ValueDef, ValueOptionMatrix, ValueSet, DEFAULT_BUDGET,
};

pub const DATASET_SCHEMA: &str = "valuepref-dataset/1";
pub const TRUTH_SCHEMA: &str = "valuepref-truth/1";
pub const CURVES_HEADER: &str =
    "strategy,fold,iteration,labeled_motivations,labeled_fraction,micro_f1,macro_f1,mean_kemeny,std_kemeny";
pub const CONFIG_ENV: &str = "VALUEPREF_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "valuepref.toml";

#[derive(Debug, Serialize, Deserialize)]
struct DatasetDoc {
    schema: String,
    #[serde(default = "default_budget")]
    budget: u64,
    values: Vec<ValueDef>,
    options: Vec<OptionDef>,
    participants: Vec<ParticipantDoc>,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Serialize, Deserialize)]
struct ParticipantDoc {
    id: String,
    choices: Vec<u64>,
    #[serde(default)]
    motivations: Vec<MotivationDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MotivationDoc {
    option_id: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthDoc {
    schema: String,
    rankings: Vec<TruthRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRow {
    participant: String,
    ranking: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Drop invalid participants with a warning instead of failing.
    pub lenient: bool,
}

/// Result of a lenient load: the dataset plus what was dropped.
#[derive(Debug)]
pub struct Loaded {
    pub dataset: Dataset,
    pub dropped: Vec<ValidationError>,
}

fn participant_from_doc(
    i: usize,
    doc: ParticipantDoc,
    values: &ValueSet,
    options: &OptionSet,
    budget: u64,
) -> std::result::Result<Participant, ValidationError> {
    let subject = format!("participant `{}`", doc.id);
    let err = |kind, field: String, detail: String| {
        ValidationError::new(kind, subject.clone(), format!("/participants/{i}{field}"), detail)
    };
    if doc.choices.len() != options.len() {
        return Err(err(
            "dimension mismatch",
            "/choices".into(),
            format!("{} points for {} options", doc.choices.len(), options.len()),
        ));
    }
    let total: u64 = doc.choices.iter().sum();
    if total != budget {
        return Err(err(
            "budget violation",
            "/choices".into(),
            format!("points sum to {total}, budget is {budget}"),
        ));
    }
    let choices = ChoiceAllocation::new(doc.choices, budget).expect("sum checked");
    let mut entries: Vec<Option<Motivation>> = vec![None; options.len()];
    for (k, m) in doc.motivations.into_iter().enumerate() {
        let field = format!("/motivations/{k}");
        let o = options
            .index_of(&m.option_id)
            .map_err(|_| err("unknown option", format!("{field}/option_id"), format!("`{}`", m.option_id)))?;
        if choices.points()[o] == 0 {
            return Err(err(
                "motivation on zero-point option",
                field,
                format!(
                    "option `{}` received no points; motivations may only support options with points",
                    m.option_id
                ),
            ));
        }
        if entries[o].is_some() {
            return Err(err(
                "duplicate motivation",
                field,
                format!("option `{}` already has a motivation", m.option_id),
            ));
        }
        let labels = m
            .labels
            .iter()
            .map(|l| {
                values
                    .index_of(l)
                    .map_err(|_| err("unknown label", format!("{field}/labels"), format!("`{l}` is not a value id")))
            })
            .collect::<std::result::Result<LabelSet, _>>()?;
        entries[o] = Some(Motivation { text: m.text, labels });
    }
    Ok(Participant {
        id: doc.id,
        choices,
        motivations: MotivationSet::from_entries(entries),
    })
}

/// Parses and validates a dataset document.
pub fn parse_dataset(text: &str, origin: &Path, opts: LoadOptions) -> Result<Loaded> {
    let doc: DatasetDoc = serde_json::from_str(text).map_err(|e| Error::parse(origin, e))?;
    if doc.schema != DATASET_SCHEMA {
        return Err(Error::Schema {
            expected: DATASET_SCHEMA.into(),
            found: doc.schema,
        });
    }
    let values = ValueSet::new(doc.values)?;
    let options = OptionSet::new(doc.options)?;
    if doc.budget == 0 {
        return Err(Error::InvalidConfig("budget must be positive".into()));
    }
    let mut participants = Vec::with_capacity(doc.participants.len());
    let mut errors = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, p) in doc.participants.into_iter().enumerate() {
        if let Some(prev) = seen.get(&p.id) {
            errors.push(ValidationError::new(
                "duplicate id",
                format!("participant `{}`", p.id),
                format!("/participants/{i}/id"),
                format!("also used by participant #{prev}"),
            ));
            continue;
        }
        seen.insert(p.id.clone(), i);
        match participant_from_doc(i, p, &values, &options, doc.budget) {
            Ok(p) => participants.push(p),
            Err(e) => errors.push(e),
        }
    }
    if !opts.lenient && !errors.is_empty() {
        return Err(if errors.len() == 1 {
            errors.remove(0).into()
        } else {
            Error::ValidationMany(errors)
        });
    }
    for e in &errors {
        log::warn!("dropping invalid participant: {e}");
    }
    let dataset = Dataset::new(values, options, doc.budget, participants, None)?;
    Ok(Loaded { dataset, dropped: errors })
}

/// `data.json` → `data.truth.json`.
pub fn truth_path(dataset_path: &Path) -> PathBuf {
    let stem = dataset_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    dataset_path.with_file_name(format!("{stem}.truth.json"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Loads a dataset and, when present, its ground-truth sidecar.
pub fn load_dataset_with(path: &Path, opts: LoadOptions) -> Result<Loaded> {
    let mut loaded = parse_dataset(&read(path)?, path, opts)?;
    let sidecar = truth_path(path);
    if sidecar.exists() {
        let truth = parse_truth(&read(&sidecar)?, &sidecar, &loaded.dataset)?;
        loaded.dataset.ground_truth = Some(truth);
    }
    Ok(loaded)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    Ok(load_dataset_with(path, LoadOptions::default())?.dataset)
}

fn parse_truth(text: &str, origin: &Path, ds: &Dataset) -> Result<Vec<Ranking>> {
    let doc: TruthDoc = serde_json::from_str(text).map_err(|e| Error::parse(origin, e))?;
    if doc.schema != TRUTH_SCHEMA {
        return Err(Error::Schema {
            expected: TRUTH_SCHEMA.into(),
            found: doc.schema,
        });
    }
    let by_id: HashMap<&str, &str> = doc
        .rankings
        .iter()
        .map(|r| (r.participant.as_str(), r.ranking.as_str()))
        .collect();
    ds.participants
        .iter()
        .map(|p| {
            let text = by_id.get(p.id.as_str()).ok_or_else(|| {
                ValidationError::new(
                    "missing ground truth",
                    format!("participant `{}`", p.id),
                    "/rankings",
                    "no ranking in the sidecar",
                )
            })?;
            Ranking::parse(text, &ds.values)
        })
        .collect()
}

pub fn dataset_to_json(ds: &Dataset) -> String {
    let doc = DatasetDoc {
        schema: DATASET_SCHEMA.into(),
        budget: ds.budget,
        values: ds.values.defs().to_vec(),
        options: ds.options.defs().to_vec(),
        participants: ds
            .participants
            .iter()
            .map(|p| ParticipantDoc {
                id: p.id.clone(),
                choices: p.choices.points().to_vec(),
                motivations: p
                    .motivations
                    .iter()
                    .map(|(o, m)| MotivationDoc {
                        option_id: ds.options.id(o).to_owned(),
                        text: m.text.clone(),
                        labels: m.labels.iter().map(|&v| ds.values.id(v).to_owned()).collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("dataset serializes") + "\n"
}

/// Writes the dataset and, if it carries ground truth, the sidecar.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    write(path, &dataset_to_json(ds))?;
    if let Some(truth) = &ds.ground_truth {
        let doc = TruthDoc {
            schema: TRUTH_SCHEMA.into(),
            rankings: ds
                .participants
                .iter()
                .zip(truth)
                .map(|(p, r)| TruthRow {
                    participant: p.id.clone(),
                    ranking: r.render(&ds.values),
                })
                .collect(),
        };
        write(
            &truth_path(path),
            &(serde_json::to_string_pretty(&doc).expect("truth serializes") + "\n"),
        )?;
    }
    Ok(())
}

/// `counts[v][o]`: motivations for option `o` annotated with value `v`.
pub fn annotation_counts(ds: &Dataset) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; ds.options.len()]; ds.values.len()];
    for p in &ds.participants {
        for (o, m) in p.motivations.iter() {
            for &v in &m.labels {
                counts[v][o] += 1;
            }
        }
    }
    counts
}

/// Ordered `# key: value` metadata lines.
pub type Meta = Vec<(String, String)>;

fn write_meta(out: &mut String, meta: &Meta) {
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
}

/// Splits a table into metadata and data lines (header first).
fn split_table(text: &str) -> (Meta, Vec<&str>) {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(m) = line.strip_prefix('#') {
            if let Some((k, v)) = m.trim().split_once(':') {
                meta.push((k.trim().to_owned(), v.trim().to_owned()));
            }
        } else if !line.trim().is_empty() {
            rows.push(line);
        }
    }
    (meta, rows)
}

pub fn vo_to_csv(vo: &ValueOptionMatrix, values: &ValueSet, options: &OptionSet, meta: &Meta) -> String {
    let mut out = String::new();
    write_meta(&mut out, meta);
    out.push_str("value");
    for o in 0..options.len() {
        let _ = write!(out, ",{}", options.id(o));
    }
    out.push('\n');
    for (v, row) in vo.to_rows().iter().enumerate() {
        out.push_str(values.id(v));
        for c in row {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

/// Parses a VO grid, checking its header ids against the dataset.
pub fn parse_vo(text: &str, origin: &Path, values: &ValueSet, options: &OptionSet) -> Result<ValueOptionMatrix> {
    let (_, rows) = split_table(text);
    let (header, body) = rows.split_first().ok_or_else(|| Error::parse(origin, "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: Vec<&str> = (0..options.len()).map(|o| options.id(o)).collect();
    if cols.len() != options.len() + 1 || cols[1..] != expected[..] {
        return Err(Error::parse(origin, format!("header {cols:?} does not list options {expected:?}")));
    }
    if body.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "value-option matrix rows",
            expected: values.len(),
            actual: body.len(),
        });
    }
    let mut grid = Vec::with_capacity(values.len());
    for (v, line) in body.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells[0] != values.id(v) {
            return Err(Error::parse(origin, format!("row {v} is `{}`, expected `{}`", cells[0], values.id(v))));
        }
        let row = cells[1..]
            .iter()
            .map(|c| c.parse::<u8>().map_err(|e| Error::parse(origin, format!("cell `{c}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        grid.push(row);
    }
    let vo = ValueOptionMatrix::from_rows(&grid)?;
    vo.check_shape(values.len(), options.len())?;
    Ok(vo)
}

pub fn read_vo(path: &Path, values: &ValueSet, options: &OptionSet) -> Result<ValueOptionMatrix> {
    parse_vo(&read(path)?, path, values, options)
}

pub fn write_vo(path: &Path, vo: &ValueOptionMatrix, values: &ValueSet, options: &OptionSet, meta: &Meta) -> Result<()> {
    write(path, &vo_to_csv(vo, values, options, meta))
}

/// Fold column of a curve row: a fold index or an across-fold aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum FoldLabel {
    Fold(usize),
    Mean,
    Std,
}

impl std::fmt::Display for FoldLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FoldLabel::Fold(i) => write!(f, "{i}"),
            FoldLabel::Mean => f.write_str("mean"),
            FoldLabel::Std => f.write_str("std"),
        }
    }
}

impl std::str::FromStr for FoldLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(FoldLabel::Mean),
            "std" => Ok(FoldLabel::Std),
            _ => s.parse().map(FoldLabel::Fold).map_err(|e| format!("fold `{s}`: {e}")),
        }
    }
}

/// One learning-curve point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub strategy: String,
    pub fold: FoldLabel,
    pub iteration: usize,
    pub labeled_motivations: f64,
    pub labeled_fraction: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub mean_kemeny: f64,
    pub std_kemeny: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    /// Config snapshot and decisions needed to reproduce the run.
    pub meta: Meta,
    /// Per-fold rows, ordered by strategy, fold, iteration.
    pub rows: Vec<CurveRow>,
    /// Across-fold mean and std rows per strategy and iteration.
    pub aggregates: Vec<CurveRow>,
}

impl ExperimentReport {
    pub fn all_rows(&self) -> impl Iterator<Item = &CurveRow> {
        self.rows.iter().chain(&self.aggregates)
    }
}

/// Floats use the shortest representation that parses back exactly.
pub fn curves_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    write_meta(&mut out, &report.meta);
    out.push_str(CURVES_HEADER);
    out.push('\n');
    for r in report.all_rows() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.strategy,
            r.fold,
            r.iteration,
            r.labeled_motivations,
            r.labeled_fraction,
            r.micro_f1,
            r.macro_f1,
            r.mean_kemeny,
            r.std_kemeny
        );
    }
    out
}

pub fn parse_curves(text: &str) -> Result<(Meta, Vec<CurveRow>)> {
    let origin = Path::new("<curves>");
    let (meta, rows) = split_table(text);
    let (header, body) = rows.split_first().ok_or_else(|| Error::parse(origin, "empty table"))?;
    if *header != CURVES_HEADER {
        return Err(Error::parse(origin, format!("unexpected header `{header}`")));
    }
    let f = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(origin, format!("`{s}`: {e}")));
    let parsed = body
        .iter()
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 9 {
                return Err(Error::parse(origin, format!("expected 9 columns in `{line}`")));
            }
            Ok(CurveRow {
                strategy: c[0].to_owned(),
                fold: c[1].parse().map_err(|e: String| Error::parse(origin, e))?,
                iteration: c[2].parse().map_err(|e| Error::parse(origin, format!("iteration: {e}")))?,
                labeled_motivations: f(c[3])?,
                labeled_fraction: f(c[4])?,
                micro_f1: f(c[5])?,
                macro_f1: f(c[6])?,
                mean_kemeny: f(c[7])?,
                std_kemeny: f(c[8])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, parsed))
}

pub fn write_curves(report: &ExperimentReport, path: &Path) -> Result<()> {
    write(path, &curves_to_csv(report))
}

/// One row of a rankings table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingRow {
    pub participant: String,
    pub method: String,
    pub ranking: Ranking,
    pub utility: Option<UtilityVector>,
}

pub const RANKINGS_HEADER: &str = "participant,method,ranking,utility";

pub fn ranking_rows(ds: &Dataset, method: &str, results: &[EstimationResult]) -> Vec<RankingRow> {
    ds.participants
        .iter()
        .zip(results)
        .map(|(p, r)| RankingRow {
            participant: p.id.clone(),
            method: method.to_owned(),
            ranking: r.ranking.clone(),
            utility: r.utility.clone(),
        })
        .collect()
}

/// Rankings render as `v1 > v4 > v2=v3 > v5`; utilities as space-separated
/// integers in value order.
pub fn rankings_to_csv(rows: &[RankingRow], values: &ValueSet, meta: &Meta) -> String {
    let mut out = String::new();
    write_meta(&mut out, meta);
    out.push_str(RANKINGS_HEADER);
    out.push('\n');
    for r in rows {
        let utility = r
            .utility
            .as_ref()
            .map(|u| u.0.iter().map(u64::to_string).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.participant, r.method, r.ranking.render(values), utility);
    }
    out
}

pub fn parse_rankings(text: &str, values: &ValueSet) -> Result<(Meta, Vec<RankingRow>)> {
    let origin = Path::new("<rankings>");
    let (meta, rows) = split_table(text);
    let (header, body) = rows.split_first().ok_or_else(|| Error::parse(origin, "empty table"))?;
    if *header != RANKINGS_HEADER {
        return Err(Error::parse(origin, format!("unexpected header `{header}`")));
    }
    let parsed = body
        .iter()
        .map(|line| {
            let c: Vec<&str> = line.splitn(4, ',').collect();
            if c.len() != 4 {
                return Err(Error::parse(origin, format!("expected 4 columns in `{line}`")));
            }
            let utility = if c[3].trim().is_empty() {
                None
            } else {
                Some(UtilityVector(
                    c[3].split_whitespace()
                        .map(|x| x.parse().map_err(|e| Error::parse(origin, format!("utility `{x}`: {e}"))))
                        .collect::<Result<_>>()?,
                ))
            };
            Ok(RankingRow {
                participant: c[0].to_owned(),
                method: c[1].to_owned(),
                ranking: Ranking::parse(c[2], values)?,
                utility,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, parsed))
}

pub fn write_rankings(path: &Path, rows: &[RankingRow], values: &ValueSet, meta: &Meta) -> Result<()> {
    write(path, &rankings_to_csv(rows, values, meta))
}

/// Config file to use: the explicit path, else `$VALUEPREF_CONFIG`, else
/// `valuepref.toml` in the working directory if it exists.
pub fn resolve_config_path(explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os(CONFIG_ENV) {
        return Some(PathBuf::from(p));
    }
    let default = PathBuf::from(DEFAULT_CONFIG_FILE);
    default.exists().then_some(default)
}

/// Reads a TOML config file into `T`; unknown keys are rejected by `T`.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    toml::from_str(&read(path)?).map_err(|e| Error::parse(path, e))
}

/// Compact JSON of any serializable config, for `# config:` lines.
pub fn config_snapshot<T: Serialize>(config: &T) -> String {
    serde_json::to_string(config).expect("config serializes")
}

/// Sorted key/value view of a snapshot, convenient for assertions.
pub fn meta_map(meta: &Meta) -> BTreeMap<&str, &str> {
    meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect()
}
