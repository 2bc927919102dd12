//! Value preference estimation from choices and motivations.
//!
//! Five methods are provided: `C` (choices only), `M` (motivations only),
//! `TB` (motivations break ties of a prior ranking), `MC` (motivations
//! override choices by clearing value-option cells) and `MO` (conflicting
//! motivations across options clear cells). [`method_comb`] chains them.
//! Nothing in this module is random; every function is pure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::model::{ChoiceAllocation, MotivationSet, Participant, Ranking, UtilityVector, ValueOptionMatrix};

/// Default annotation-count threshold for [`init_vo`].
pub const DEFAULT_VO_THRESHOLD: u64 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimationResult {
    pub ranking: Ranking,
    pub utility: Option<UtilityVector>,
    pub vo_after: ValueOptionMatrix,
}

/// How the MC method decides whether a more-preferred value loses its
/// relevance for a motivated option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McSemantics {
    /// Clear `(v_b, o)` only when `v_b` is mentioned in none of the
    /// participant's motivations.
    #[default]
    Prose,
    /// Clear `(v_b, o)` for every more-preferred `v_b`, mentioned or not.
    Pseudocode,
}

impl FromStr for McSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prose" => Ok(Self::Prose),
            "pseudocode" => Ok(Self::Pseudocode),
            other => Err(Error::InvalidConfig(format!("unknown MC semantics `{other}`"))),
        }
    }
}

impl fmt::Display for McSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Prose => "prose",
            Self::Pseudocode => "pseudocode",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    MO,
    MC,
    TB,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::MO => "MO",
            Stage::MC => "MC",
            Stage::TB => "TB",
        })
    }
}

/// Ordered stages for [`method_comb`]. TB may only appear last and no
/// stage may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pipeline(Vec<Stage>);

impl Pipeline {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        for (i, s) in stages.iter().enumerate() {
            if stages[..i].contains(s) {
                return Err(Error::InvalidPipeline(format!("stage {s} repeated")));
            }
            if *s == Stage::TB && i + 1 != stages.len() {
                return Err(Error::InvalidPipeline(
                    "TB must be the last stage since it does not update the value-option matrix"
                        .into(),
                ));
            }
        }
        Ok(Self(stages))
    }

    pub fn stages(&self) -> &[Stage] {
        &self.0
    }
}

impl Default for Pipeline {
    fn default() -> Self {
        Self(vec![Stage::MO, Stage::MC, Stage::TB])
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    /// Accepts `MO,MC,TB`, `MO>MC>TB` or `MO=>MC=>TB`.
    fn from_str(s: &str) -> Result<Self> {
        let stages = s
            .replace("=>", ",")
            .replace('>', ",")
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| match t.to_ascii_uppercase().as_str() {
                "MO" => Ok(Stage::MO),
                "MC" => Ok(Stage::MC),
                "TB" => Ok(Stage::TB),
                other => Err(Error::InvalidPipeline(format!("unknown stage `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(stages)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Stage::to_string).collect();
        f.write_str(&parts.join(">"))
    }
}

impl TryFrom<String> for Pipeline {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Pipeline> for String {
    fn from(p: Pipeline) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    C,
    M,
    TB,
    MC,
    MO,
    #[serde(rename = "comb")]
    Comb,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::C, Method::M, Method::TB, Method::MC, Method::MO, Method::Comb];
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C" => Ok(Self::C),
            "M" => Ok(Self::M),
            "TB" => Ok(Self::TB),
            "MC" => Ok(Self::MC),
            "MO" => Ok(Self::MO),
            "COMB" => Ok(Self::Comb),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::C => "C",
            Method::M => "M",
            Method::TB => "TB",
            Method::MC => "MC",
            Method::MO => "MO",
            Method::Comb => "comb",
        })
    }
}

/// Method plus the knobs the combined methods need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Estimator {
    pub method: Method,
    #[serde(default)]
    pub semantics: McSemantics,
    #[serde(default)]
    pub pipeline: Pipeline,
}

impl Default for Estimator {
    fn default() -> Self {
        Self::new(Method::Comb)
    }
}

impl Estimator {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            semantics: McSemantics::default(),
            pipeline: Pipeline::default(),
        }
    }

    /// Runs the configured method on one participant. Stand-alone TB and
    /// MC use the method-C ranking as their prior.
    pub fn estimate(
        &self,
        vo: &ValueOptionMatrix,
        choices: &ChoiceAllocation,
        motivations: &MotivationSet,
    ) -> Result<EstimationResult> {
        match self.method {
            Method::C => method_c(vo, choices),
            Method::M => {
                let counts = mention_counts(motivations, vo.rows());
                Ok(EstimationResult {
                    ranking: counts.ranking(),
                    utility: Some(counts),
                    vo_after: vo.clone(),
                })
            }
            Method::TB => {
                let mut c = method_c(vo, choices)?;
                c.ranking = method_tb(&c.ranking, motivations);
                Ok(c)
            }
            Method::MC => {
                let prior = method_c(vo, choices)?.ranking;
                method_mc(&prior, motivations, vo, choices, self.semantics)
            }
            Method::MO => method_mo(motivations, vo, choices),
            Method::Comb => method_comb(vo, choices, motivations, &self.pipeline, self.semantics),
        }
    }

    pub fn estimate_participant(&self, vo: &ValueOptionMatrix, p: &Participant) -> Result<EstimationResult> {
        self.estimate(vo, &p.choices, &p.motivations)
    }
}

/// One point per motivation entry that carries the value.
pub fn mention_counts(m: &MotivationSet, n_values: usize) -> UtilityVector {
    let mut counts = vec![0u64; n_values];
    for (_, mot) in m.iter() {
        for &v in &mot.labels {
            if v < n_values {
                counts[v] += 1;
            }
        }
    }
    UtilityVector(counts)
}

/// Method M: rank values by how many motivations mention them.
pub fn method_m(m: &MotivationSet, n_values: usize) -> Ranking {
    mention_counts(m, n_values).ranking()
}

/// Method C: `rank(VO × Cᵀ)`.
pub fn method_c(vo: &ValueOptionMatrix, c: &ChoiceAllocation) -> Result<EstimationResult> {
    let utility = vo.utility(c)?;
    Ok(EstimationResult {
        ranking: utility.ranking(),
        utility: Some(utility),
        vo_after: vo.clone(),
    })
}

/// Method TB: within each tied group, values mentioned in some motivation
/// move strictly ahead of values mentioned in none. Strict pairs are kept.
pub fn method_tb(r: &Ranking, m: &MotivationSet) -> Ranking {
    let mentioned = m.mentioned(r.len());
    let mut groups = Vec::with_capacity(r.groups().len());
    for group in r.groups() {
        let (yes, no): (Vec<usize>, Vec<usize>) = group.iter().partition(|&&v| mentioned[v]);
        groups.extend([yes, no].into_iter().filter(|g| !g.is_empty()));
    }
    Ranking::new(groups, r.len()).expect("refinement of a valid ranking")
}

/// Method MC: for every motivated option `o` and every value `v_a` in its
/// motivation, clear `(v_b, o)` for each `v_b` the prior ranks strictly
/// above `v_a`. All comparisons use the prior `r`; the ranking is
/// recomputed once at the end.
pub fn method_mc(
    r: &Ranking,
    m: &MotivationSet,
    vo: &ValueOptionMatrix,
    c: &ChoiceAllocation,
    semantics: McSemantics,
) -> Result<EstimationResult> {
    let n = vo.rows();
    dim_check("prior ranking length", n, r.len())?;
    dim_check("motivation entries", vo.cols(), m.len())?;
    dim_check("allocation length", vo.cols(), c.len())?;
    let mentioned = m.mentioned(n);
    let groups = r.group_indices();
    let mut out = vo.clone();
    for (o, mot) in m.iter() {
        for &va in &mot.labels {
            if !vo.get(va, o) {
                log::trace!("MC: value #{va} motivates option #{o} but is not relevant there; left unchanged");
            }
            for vb in (0..n).filter(|&vb| vb != va && groups[vb] < groups[va]) {
                let clear = match semantics {
                    McSemantics::Prose => !mentioned[vb],
                    McSemantics::Pseudocode => true,
                };
                if clear {
                    out.set(vb, o, false);
                }
            }
        }
    }
    let utility = out.utility(c)?;
    Ok(EstimationResult {
        ranking: utility.ranking(),
        utility: Some(utility),
        vo_after: out,
    })
}

/// Method MO: if value `x` is relevant to option `a` but unmentioned in its
/// motivation `m_a`, while `m_b` mentions `x` and some `y ∈ m_a` is
/// relevant to `b` but unmentioned in `m_b`, then `(x, a)` is cleared.
/// Membership checks always read the input matrix; updates go to a copy.
pub fn method_mo(m: &MotivationSet, vo: &ValueOptionMatrix, c: &ChoiceAllocation) -> Result<EstimationResult> {
    let n = vo.rows();
    dim_check("motivation entries", vo.cols(), m.len())?;
    dim_check("allocation length", vo.cols(), c.len())?;
    let mut out = vo.clone();
    for (a, ma) in m.iter().filter(|(_, mot)| !mot.labels.is_empty()) {
        for (b, mb) in m.iter().filter(|&(b, _)| b != a) {
            // V_alpha: relevant to a, not mentioned in m_a.
            for vx in (0..n).filter(|&v| vo.get(v, a) && !ma.labels.contains(&v)) {
                if !mb.labels.contains(&vx) {
                    continue;
                }
                // Some v_y in m_a lies in V_beta: relevant to b, not in m_b.
                let conflict = ma
                    .labels
                    .iter()
                    .any(|&vy| vy < n && vo.get(vy, b) && !mb.labels.contains(&vy));
                if conflict {
                    out.set(vx, a, false);
                }
            }
        }
    }
    let utility = out.utility(c)?;
    Ok(EstimationResult {
        ranking: utility.ranking(),
        utility: Some(utility),
        vo_after: out,
    })
}

/// Chains MO / MC / TB. Each stage receives the ranking and matrix of the
/// previous one; the chain starts from method C's ranking. An empty
/// pipeline is method C.
pub fn method_comb(
    vo: &ValueOptionMatrix,
    c: &ChoiceAllocation,
    m: &MotivationSet,
    pipeline: &Pipeline,
    semantics: McSemantics,
) -> Result<EstimationResult> {
    let mut state = method_c(vo, c)?;
    for stage in pipeline.stages() {
        state = match stage {
            Stage::MO => method_mo(m, &state.vo_after, c)?,
            Stage::MC => method_mc(&state.ranking, m, &state.vo_after, c, semantics)?,
            Stage::TB => EstimationResult {
                ranking: method_tb(&state.ranking, m),
                ..state
            },
        };
    }
    Ok(state)
}

/// Cell `(v, o)` is relevant iff at least `threshold` motivations for `o`
/// were annotated with `v`.
pub fn init_vo(counts: &[Vec<u64>], threshold: u64) -> ValueOptionMatrix {
    let cols = counts.first().map_or(0, Vec::len);
    let mut vo = ValueOptionMatrix::zeros(counts.len(), cols);
    for (v, row) in counts.iter().enumerate() {
        for (o, &n) in row.iter().enumerate() {
            vo.set(v, o, n >= threshold);
        }
    }
    vo
}
