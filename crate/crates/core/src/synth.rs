//! Synthetic participatory datasets with known value systems.
//!
//! Each participant gets a ground-truth ranking, a personal relevance
//! matrix derived from a shared population matrix, a point allocation that
//! follows the values' rank weights, and motivations that mention the
//! participant's most-preferred values relevant to each motivated option.
//! Motivation text is drawn from per-value keyword vocabularies that are
//! disjoint by construction.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ChoiceAllocation, Dataset, LabelSet, Motivation, MotivationSet, OptionSet, Participant, Ranking,
    ValueOptionMatrix, ValueSet,
};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub participants: usize,
    pub values: usize,
    pub options: usize,
    pub budget: u64,
    /// Probability that a value is relevant to an option in the shared
    /// population matrix.
    pub vo_density: f64,
    /// Probability that a population-relevant cell is irrelevant for a
    /// given participant.
    pub personal_vo_drop: f64,
    /// Number of highest-utility options that receive points.
    pub max_options: usize,
    /// Probability that an option with points gets a motivation.
    pub motivation_rate: f64,
    /// Fraction of participants who motivate with `terse_motivation_rate`
    /// instead.
    pub terse_fraction: f64,
    pub terse_motivation_rate: f64,
    /// Relative weights of 0, 1, 2, ... labels per motivation.
    pub label_weights: Vec<f64>,
    pub vocab_size: usize,
    pub text_len_min: usize,
    pub text_len_max: usize,
    /// Probability that a token is drawn from a vocabulary shared by all
    /// values instead of a label's own.
    pub overlap: f64,
    /// Probability that two adjacent values of a ground-truth ranking tie.
    pub tie_probability: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            participants: 1000,
            values: 5,
            options: 6,
            budget: 100,
            vo_density: 0.6,
            personal_vo_drop: 0.2,
            max_options: 3,
            motivation_rate: 0.7,
            terse_fraction: 0.0,
            terse_motivation_rate: 0.2,
            label_weights: vec![0.1, 0.6, 0.3],
            vocab_size: 60,
            text_len_min: 2,
            text_len_max: 6,
            overlap: 0.0,
            tie_probability: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synth: {m}")));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.values == 0 || self.options == 0 {
            return bad("value and option counts must be positive");
        }
        if self.budget == 0 {
            return bad("budget must be positive");
        }
        if !(self.vo_density > 0.0 && self.vo_density <= 1.0) {
            return bad("vo_density must lie in (0, 1]");
        }
        if ![
            self.personal_vo_drop,
            self.motivation_rate,
            self.terse_fraction,
            self.terse_motivation_rate,
            self.overlap,
            self.tie_probability,
        ]
        .into_iter()
        .all(prob)
        {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.personal_vo_drop >= 1.0 {
            return bad("personal_vo_drop of 1 leaves every option without values");
        }
        if self.max_options == 0 {
            return bad("max_options must be at least 1");
        }
        if self.label_weights.is_empty()
            || self.label_weights.iter().any(|w| w.is_nan() || *w < 0.0)
            || self.label_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("label_weights must be non-negative with a positive sum");
        }
        if self.vocab_size == 0 || self.vocab_size > SYLLABLES.len() * SYLLABLES.len() {
            return bad("vocab_size out of range");
        }
        if self.values + 2 > SYLLABLES.len() * SYLLABLES.len() {
            return bad("too many values");
        }
        if self.text_len_min == 0 || self.text_len_min > self.text_len_max {
            return bad("text length range is empty");
        }
        Ok(())
    }
}

const SYLLABLES: [&str; 60] = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe", "fi", "fo", "fu", "ga",
    "ge", "gi", "go", "gu", "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu", "ma", "me",
    "mi", "mo", "mu", "na", "ne", "ni", "no", "nu", "pa", "pe", "pi", "po", "pu", "ra", "re", "ri",
    "ro", "ru", "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu",
];

fn two_syllables(i: usize) -> String {
    let n = SYLLABLES.len();
    format!("{}{}", SYLLABLES[i / n], SYLLABLES[i % n])
}

/// Keyword `j` of vocabulary `owner`. Owners `0..values` are the values,
/// `values` is the vocabulary of label-free motivations and `values + 1`
/// the shared filler vocabulary. The fixed-width owner prefix keeps the
/// vocabularies disjoint.
pub fn keyword(owner: usize, j: usize) -> String {
    format!("{}{}", two_syllables(owner), two_syllables(j))
}

/// Shared relevance matrix; every row and column keeps at least one 1.
pub fn population_vo(config: &SynthConfig) -> Result<ValueOptionMatrix> {
    config.validate()?;
    let mut rng = seed::stream(config.seed, "synth-population-vo", 0);
    let (nv, no) = (config.values, config.options);
    let mut vo = ValueOptionMatrix::zeros(nv, no);
    for v in 0..nv {
        for o in 0..no {
            vo.set(v, o, rng.random::<f64>() < config.vo_density);
        }
    }
    for o in 0..no {
        if (0..nv).all(|v| !vo.get(v, o)) {
            vo.set(rng.random_range(0..nv), o, true);
        }
    }
    for v in 0..nv {
        if (0..no).all(|o| !vo.get(v, o)) {
            vo.set(v, rng.random_range(0..no), true);
        }
    }
    Ok(vo)
}

/// Splits `budget` proportionally to `weights` with largest-remainder
/// rounding; remainder ties go to the lower index.
pub fn largest_remainder(weights: &[u64], budget: u64) -> Vec<u64> {
    let total: u64 = weights.iter().sum();
    assert!(total > 0, "at least one positive weight");
    let mut out: Vec<u64> = weights
        .iter()
        .map(|&w| ((w as u128 * budget as u128) / total as u128) as u64)
        .collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| {
        let rem = (weights[i] as u128 * budget as u128) % total as u128;
        (std::cmp::Reverse(rem), i)
    });
    for &i in order.iter().take((budget - assigned) as usize) {
        out[i] += 1;
    }
    out
}

fn sample_ranking(config: &SynthConfig, rng: &mut Rng) -> Ranking {
    let mut order: Vec<usize> = (0..config.values).collect();
    order.shuffle(rng);
    let mut keys = vec![0usize; config.values];
    let mut group = 0;
    for (pos, &v) in order.iter().enumerate() {
        if pos > 0 && rng.random::<f64>() >= config.tie_probability {
            group += 1;
        }
        keys[v] = group;
    }
    Ranking::from_group_keys(&keys)
}

fn weighted_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn motivation_text(config: &SynthConfig, labels: &[usize], rng: &mut Rng) -> String {
    let len = rng
        .random_range(config.text_len_min..=config.text_len_max)
        .max(labels.len());
    let mut words = Vec::with_capacity(len);
    for i in 0..len {
        let owner = if labels.is_empty() {
            config.values
        } else if i < labels.len() {
            // Every label contributes at least one keyword.
            labels[i]
        } else if rng.random::<f64>() < config.overlap {
            config.values + 1
        } else {
            labels[rng.random_range(0..labels.len())]
        };
        words.push(keyword(owner, rng.random_range(0..config.vocab_size)));
    }
    words.shuffle(rng);
    words.join(" ")
}

fn participant(
    config: &SynthConfig,
    population: &ValueOptionMatrix,
    index: usize,
) -> (Participant, Ranking) {
    let mut rng = seed::stream(config.seed, "synth-participant", index as u64);
    let (nv, no) = (config.values, config.options);
    let truth = sample_ranking(config, &mut rng);
    let positions = truth.positions();
    let weight: Vec<u64> = positions.iter().map(|&p| (nv + 1 - p) as u64).collect();

    let mut personal = population.clone();
    for v in 0..nv {
        for o in 0..no {
            if personal.get(v, o) && rng.random::<f64>() < config.personal_vo_drop {
                personal.set(v, o, false);
            }
        }
    }
    let utility: Vec<u64> = (0..no)
        .map(|o| (0..nv).filter(|&v| personal.get(v, o)).map(|v| weight[v]).sum())
        .collect();

    let mut ranked: Vec<(u64, u64, usize)> = (0..no)
        .map(|o| (utility[o], rng.random::<u64>(), o))
        .collect();
    ranked.sort_by(|a, b| b.cmp(a));
    let mut alloc_weights = vec![0u64; no];
    for &(u, _, o) in ranked.iter().take(config.max_options) {
        alloc_weights[o] = u;
    }
    if alloc_weights.iter().all(|&w| w == 0) {
        alloc_weights[ranked[0].2] = 1;
    }
    let points = largest_remainder(&alloc_weights, config.budget);

    let rate = if rng.random::<f64>() < config.terse_fraction {
        config.terse_motivation_rate
    } else {
        config.motivation_rate
    };
    // Preference order with ties shuffled.
    let mut pref: Vec<usize> = (0..nv).collect();
    let tiebreak: Vec<u64> = (0..nv).map(|_| rng.random()).collect();
    pref.sort_by_key(|&v| (positions[v], tiebreak[v]));

    let mut entries = vec![None; no];
    for o in (0..no).filter(|&o| points[o] > 0) {
        if rng.random::<f64>() >= rate {
            continue;
        }
        let k = weighted_index(&config.label_weights, &mut rng);
        let labels: Vec<usize> = pref
            .iter()
            .copied()
            .filter(|&v| personal.get(v, o))
            .take(k)
            .collect();
        let text = motivation_text(config, &labels, &mut rng);
        entries[o] = Some(Motivation {
            text,
            labels: labels.into_iter().collect::<LabelSet>(),
        });
    }

    let p = Participant {
        id: format!("p{:04}", index + 1),
        choices: ChoiceAllocation::new(points, config.budget).expect("largest remainder conserves the budget"),
        motivations: MotivationSet::from_entries(entries),
    };
    (p, truth)
}

pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    let population = population_vo(config)?;
    let (participants, truth): (Vec<_>, Vec<_>) = (0..config.participants)
        .map(|i| participant(config, &population, i))
        .unzip();
    Dataset::new(
        ValueSet::numbered(config.values)?,
        OptionSet::numbered(config.options)?,
        config.budget,
        participants,
        Some(truth),
    )
}
