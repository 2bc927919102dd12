//! Domain types shared by every other module.
//!
//! Values and options are addressed by their position in the dataset
//! (`usize` indices); string identifiers only matter at the I/O boundary.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result, ValidationError};

/// Set of value indices attached to a motivation.
pub type LabelSet = BTreeSet<usize>;

pub const DEFAULT_BUDGET: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueDef {
    pub id: String,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionDef {
    pub id: String,
    #[serde(default)]
    pub description: String,
}

fn index_ids<'a>(
    what: &'static str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::new();
    for (i, id) in ids.enumerate() {
        if index.insert(id.to_owned(), i).is_some() {
            return Err(ValidationError::new(
                "duplicate id",
                what,
                format!("/{what}/{i}/id"),
                format!("`{id}` appears more than once"),
            )
            .into());
        }
    }
    if index.is_empty() {
        return Err(Error::Empty(what));
    }
    Ok(index)
}

/// The fixed, ordered set of values every ranking is defined over.
#[derive(Debug, Clone)]
pub struct ValueSet {
    values: Vec<ValueDef>,
    index: HashMap<String, usize>,
}

impl PartialEq for ValueSet {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl ValueSet {
    pub fn new(values: Vec<ValueDef>) -> Result<Self> {
        let index = index_ids("values", values.iter().map(|v| v.id.as_str()))?;
        Ok(Self { values, index })
    }

    /// Values named `v1..vn`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new(
            (1..=n)
                .map(|i| ValueDef {
                    id: format!("v{i}"),
                    name: String::new(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.values[idx].id
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownValue(id.to_owned()))
    }

    pub fn defs(&self) -> &[ValueDef] {
        &self.values
    }
}

/// The fixed, ordered set of options points are allocated over.
#[derive(Debug, Clone)]
pub struct OptionSet {
    options: Vec<OptionDef>,
    index: HashMap<String, usize>,
}

impl PartialEq for OptionSet {
    fn eq(&self, other: &Self) -> bool {
        self.options == other.options
    }
}

impl OptionSet {
    pub fn new(options: Vec<OptionDef>) -> Result<Self> {
        let index = index_ids("options", options.iter().map(|o| o.id.as_str()))?;
        Ok(Self { options, index })
    }

    /// Options named `o1..on`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new(
            (1..=n)
                .map(|i| OptionDef {
                    id: format!("o{i}"),
                    description: String::new(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.options[idx].id
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownOption(id.to_owned()))
    }

    pub fn defs(&self) -> &[OptionDef] {
        &self.options
    }
}

/// A total preorder over `n` values, stored as ordered groups of tied
/// values. Earlier groups are strictly preferred to later ones.
///
/// Groups are kept sorted internally so that two rankings expressing the
/// same preorder compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl Ranking {
    pub fn new(mut groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut group_of = vec![usize::MAX; n];
        for (g, group) in groups.iter_mut().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidRanking(format!("group {g} is empty")));
            }
            group.sort_unstable();
            for &v in group.iter() {
                if v >= n {
                    return Err(Error::InvalidRanking(format!(
                        "value index {v} out of range for {n} values"
                    )));
                }
                if group_of[v] != usize::MAX {
                    return Err(Error::InvalidRanking(format!(
                        "value index {v} appears twice"
                    )));
                }
                group_of[v] = g;
            }
        }
        if let Some(v) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidRanking(format!(
                "value index {v} is not ranked"
            )));
        }
        Ok(Self { groups, group_of })
    }

    /// Builds a ranking from a per-value group key: lower keys are more
    /// preferred, equal keys tie. Keys need not be contiguous.
    pub fn from_group_keys(keys: &[usize]) -> Self {
        let mut distinct: Vec<usize> = keys.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let mut groups = vec![Vec::new(); distinct.len()];
        for (v, k) in keys.iter().enumerate() {
            let g = distinct.binary_search(k).expect("key present");
            groups[g].push(v);
        }
        Self::new(groups, keys.len()).expect("keys define a partition")
    }

    /// Values ordered by descending score; equal scores share a group.
    pub fn from_scores(scores: &[u64]) -> Self {
        let keys: Vec<usize> = {
            let mut distinct: Vec<u64> = scores.to_vec();
            distinct.sort_unstable_by(|a, b| b.cmp(a));
            distinct.dedup();
            scores
                .iter()
                .map(|s| distinct.iter().position(|d| d == s).expect("present"))
                .collect()
        };
        Self::from_group_keys(&keys)
    }

    /// Every value in a single indifference group.
    pub fn all_tied(n: usize) -> Self {
        Self::from_group_keys(&vec![0; n])
    }

    /// A strict ranking following `order` (most preferred first).
    pub fn strict(order: &[usize]) -> Result<Self> {
        Self::new(order.iter().map(|&v| vec![v]).collect(), order.len())
    }

    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Index of the group holding each value.
    pub fn group_indices(&self) -> &[usize] {
        &self.group_of
    }

    pub fn is_strict(&self) -> bool {
        self.groups.len() == self.len()
    }

    /// Competition ("minimum ordinal") positions, 1-based: a group's
    /// position is one plus the number of values ranked strictly above it.
    pub fn positions(&self) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        let mut offset = 0;
        for group in &self.groups {
            for &v in group {
                out[v] = offset + 1;
            }
            offset += group.len();
        }
        out
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownValue(format!("#{v}")))
        }
    }

    pub fn strictly_prefers(&self, a: usize, b: usize) -> Result<bool> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.group_of[a] < self.group_of[b])
    }

    pub fn is_tied(&self, a: usize, b: usize) -> Result<bool> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.group_of[a] == self.group_of[b])
    }

    /// Renders as `v1 > v4 > v2=v3 > v5`.
    pub fn render(&self, values: &ValueSet) -> String {
        self.groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|&v| values.id(v))
                    .collect::<Vec<_>>()
                    .join("=")
            })
            .collect::<Vec<_>>()
            .join(" > ")
    }

    /// Inverse of [`Ranking::render`].
    pub fn parse(text: &str, values: &ValueSet) -> Result<Self> {
        let groups = text
            .split('>')
            .map(|g| {
                g.split('=')
                    .map(|id| values.index_of(id.trim()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups, values.len())
    }
}

/// Checked variant of [`Ranking::from_scores`] against a value set.
pub fn rank_from_scores(values: &ValueSet, scores: &UtilityVector) -> Result<Ranking> {
    dim_check("utility vector length", values.len(), scores.len())?;
    Ok(Ranking::from_scores(scores.as_slice()))
}

/// Per-value importance scores.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UtilityVector(pub Vec<u64>);

impl UtilityVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn ranking(&self) -> Ranking {
        Ranking::from_scores(&self.0)
    }
}

/// Points distributed over the options; always sums to `budget`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceAllocation {
    points: Vec<u64>,
    budget: u64,
}

impl ChoiceAllocation {
    pub fn new(points: Vec<u64>, budget: u64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidConfig("budget must be positive".into()));
        }
        let total: u64 = points.iter().sum();
        if total != budget {
            return Err(ValidationError::new(
                "budget violation",
                "allocation",
                "/choices",
                format!("points sum to {total}, budget is {budget}"),
            )
            .into());
        }
        Ok(Self { points, budget })
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Motivation {
    pub text: String,
    pub labels: LabelSet,
}

/// One optional motivation per option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotivationSet {
    entries: Vec<Option<Motivation>>,
}

impl MotivationSet {
    pub fn empty(n_options: usize) -> Self {
        Self {
            entries: vec![None; n_options],
        }
    }

    pub fn from_entries(entries: Vec<Option<Motivation>>) -> Self {
        Self { entries }
    }

    /// Label-only motivation set, mostly useful for tests and examples.
    pub fn from_labels(n_options: usize, labels: &[(usize, &[usize])]) -> Self {
        let mut set = Self::empty(n_options);
        for (o, ls) in labels {
            set.entries[*o] = Some(Motivation {
                text: String::new(),
                labels: ls.iter().copied().collect(),
            });
        }
        set
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, option: usize) -> Option<&Motivation> {
        self.entries.get(option).and_then(Option::as_ref)
    }

    pub fn entries(&self) -> &[Option<Motivation>] {
        &self.entries
    }

    /// Present motivations with their option index.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Motivation)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(o, m)| m.as_ref().map(|m| (o, m)))
    }

    pub fn count(&self) -> usize {
        self.entries.iter().filter(|m| m.is_some()).count()
    }

    /// `mentioned[v]` is true when any motivation carries label `v`.
    pub fn mentioned(&self, n_values: usize) -> Vec<bool> {
        let mut out = vec![false; n_values];
        for (_, m) in self.iter() {
            for &v in &m.labels {
                if v < n_values {
                    out[v] = true;
                }
            }
        }
        out
    }

    /// Same motivations (and texts) with labels replaced per option.
    pub fn relabeled(&self, mut labels: impl FnMut(usize, &Motivation) -> LabelSet) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(o, m)| {
                    m.as_ref().map(|m| Motivation {
                        text: m.text.clone(),
                        labels: labels(o, m),
                    })
                })
                .collect(),
        }
    }

    /// Checks the zero-points and label-membership constraints.
    pub fn validate(&self, choices: &ChoiceAllocation, n_values: usize) -> Result<(), ValidationError> {
        if self.entries.len() != choices.len() {
            return Err(ValidationError::new(
                "dimension mismatch",
                "motivations",
                "/motivations",
                format!("{} entries for {} options", self.entries.len(), choices.len()),
            ));
        }
        for (o, m) in self.iter() {
            if choices.points()[o] == 0 {
                return Err(ValidationError::new(
                    "motivation on zero-point option",
                    "motivations",
                    format!("/motivations/option/{o}"),
                    "a motivation may only be given for an option that received points",
                ));
            }
            if let Some(&v) = m.labels.iter().find(|&&v| v >= n_values) {
                return Err(ValidationError::new(
                    "unknown label",
                    "motivations",
                    format!("/motivations/option/{o}/labels"),
                    format!("value index {v} outside the value set"),
                ));
            }
        }
        Ok(())
    }
}

/// Binary value × option relevance matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ValueOptionMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl fmt::Debug for ValueOptionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ValueOptionMatrix {}x{}", self.rows, self.cols)?;
        for v in 0..self.rows {
            let row: String = (0..self.cols)
                .map(|o| if self.get(v, o) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

impl ValueOptionMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![false; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![true; rows * cols],
        }
    }

    /// Builds from 0/1 rows; any other cell value is rejected.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(n_rows, n_cols);
        for (v, row) in rows.iter().enumerate() {
            dim_check("value-option row length", n_cols, row.len())?;
            for (o, &cell) in row.iter().enumerate() {
                match cell {
                    0 => {}
                    1 => m.set(v, o, true),
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "value-option cell ({v},{o}) is {other}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, v: usize, o: usize) -> bool {
        self.cells[v * self.cols + o]
    }

    pub fn set(&mut self, v: usize, o: usize, relevant: bool) {
        self.cells[v * self.cols + o] = relevant;
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|v| (0..self.cols).map(|o| u8::from(self.get(v, o))).collect())
            .collect()
    }

    /// True when every 1 in `self` is also a 1 in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    pub fn check_shape(&self, n_values: usize, n_options: usize) -> Result<()> {
        dim_check("value-option matrix rows", n_values, self.rows)?;
        dim_check("value-option matrix columns", n_options, self.cols)
    }

    /// `U = VO × Cᵀ`.
    pub fn utility(&self, choices: &ChoiceAllocation) -> Result<UtilityVector> {
        dim_check("allocation length", self.cols, choices.len())?;
        let pts = choices.points();
        Ok(UtilityVector(
            (0..self.rows)
                .map(|v| {
                    (0..self.cols)
                        .filter(|&o| self.get(v, o))
                        .map(|o| pts[o])
                        .sum()
                })
                .collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Participant {
    pub id: String,
    pub choices: ChoiceAllocation,
    pub motivations: MotivationSet,
}

/// A participatory dataset. Participants share the value and option sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: ValueSet,
    pub options: OptionSet,
    pub budget: u64,
    pub participants: Vec<Participant>,
    /// Known value systems, present for synthetic data.
    pub ground_truth: Option<Vec<Ranking>>,
}

/// Address of one motivation inside a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MotivationRef {
    pub participant: usize,
    pub option: usize,
}

impl Dataset {
    /// Checks the cross-participant invariants and every participant's own.
    pub fn new(
        values: ValueSet,
        options: OptionSet,
        budget: u64,
        participants: Vec<Participant>,
        ground_truth: Option<Vec<Ranking>>,
    ) -> Result<Self> {
        let ds = Self {
            values,
            options,
            budget,
            participants,
            ground_truth,
        };
        let errors = ds.violations();
        match errors.len() {
            0 => Ok(ds),
            1 => Err(errors.into_iter().next().unwrap().into()),
            _ => Err(Error::ValidationMany(errors)),
        }
    }

    pub(crate) fn participant_violation(&self, i: usize) -> Option<ValidationError> {
        let p = &self.participants[i];
        let attach = |mut e: ValidationError| {
            e.subject = format!("participant `{}`", p.id);
            e.field = format!("/participants/{i}{}", e.field);
            e
        };
        if p.choices.len() != self.options.len() {
            return Some(attach(ValidationError::new(
                "dimension mismatch",
                "",
                "/choices",
                format!("{} points for {} options", p.choices.len(), self.options.len()),
            )));
        }
        if p.choices.budget() != self.budget {
            return Some(attach(ValidationError::new(
                "budget violation",
                "",
                "/choices",
                format!(
                    "points sum to {}, budget is {}",
                    p.choices.budget(),
                    self.budget
                ),
            )));
        }
        p.motivations
            .validate(&p.choices, self.values.len())
            .err()
            .map(attach)
    }

    fn violations(&self) -> Vec<ValidationError> {
        let mut errors = Vec::new();
        let mut seen = HashMap::new();
        for (i, p) in self.participants.iter().enumerate() {
            if let Some(prev) = seen.insert(p.id.as_str(), i) {
                errors.push(ValidationError::new(
                    "duplicate id",
                    format!("participant `{}`", p.id),
                    format!("/participants/{i}/id"),
                    format!("also used by participant #{prev}"),
                ));
            }
            errors.extend(self.participant_violation(i));
        }
        if let Some(gt) = &self.ground_truth {
            if gt.len() != self.participants.len() {
                errors.push(ValidationError::new(
                    "dimension mismatch",
                    "ground truth",
                    "/rankings",
                    format!(
                        "{} rankings for {} participants",
                        gt.len(),
                        self.participants.len()
                    ),
                ));
            }
        }
        errors
    }

    /// Every motivation in dataset order: by participant, then option.
    /// The position in this list is the motivation id.
    pub fn motivation_refs(&self) -> Vec<MotivationRef> {
        self.participants
            .iter()
            .enumerate()
            .flat_map(|(pi, p)| {
                p.motivations.iter().map(move |(o, _)| MotivationRef {
                    participant: pi,
                    option: o,
                })
            })
            .collect()
    }

    pub fn motivation(&self, r: MotivationRef) -> &Motivation {
        self.participants[r.participant]
            .motivations
            .get(r.option)
            .expect("motivation ref points at a present motivation")
    }

    pub fn motivation_count(&self) -> usize {
        self.participants.iter().map(|p| p.motivations.count()).sum()
    }
}
