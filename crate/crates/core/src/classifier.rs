//! Multi-label value classifiers.
//!
//! Two implementations sit behind [`Classifier`]: an annotation oracle that
//! replays stored ground-truth labels with optional per-label noise, and a
//! one-vs-rest logistic regression over token counts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LabelSet;
use crate::seed;

pub const ARTIFACT_FORMAT: &str = "valuepref-classifier";
pub const ARTIFACT_VERSION: u32 = 1;

/// A motivation with its ground-truth labels. `id` is the motivation's
/// dataset-wide index; the oracle uses it as its lookup key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledMotivation {
    pub id: usize,
    pub text: String,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub id: usize,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub labels: LabelSet,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>, threshold: f64) -> Self {
        let labels = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= threshold)
            .map(|(v, _)| v)
            .collect();
        Self { scores, labels }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Oracle,
    BagOfWords,
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "oracle" => Ok(Self::Oracle),
            "bagofwords" | "bow" => Ok(Self::BagOfWords),
            other => Err(Error::InvalidConfig(format!("unknown classifier `{other}`"))),
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::BagOfWords => "bagofwords",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyMeasure {
    /// Sum of per-label binary entropies, in bits.
    #[default]
    EntropySum,
    /// Largest per-label binary entropy.
    EntropyMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    /// Per-label flip probability of the oracle.
    pub noise: f64,
    pub threshold: f64,
    /// Fraction of the largest step that still guarantees descent.
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub uncertainty: UncertaintyMeasure,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::BagOfWords,
            noise: 0.0,
            threshold: 0.5,
            learning_rate: 1.0,
            epochs: 150,
            l2: 1e-4,
            seed: 0,
            uncertainty: UncertaintyMeasure::EntropySum,
        }
    }
}

impl ClassifierConfig {
    pub fn oracle(noise: f64) -> Self {
        Self {
            kind: ClassifierKind::Oracle,
            noise,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 1]", self.noise));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold {} outside (0, 1)", self.threshold));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning rate {} outside (0, 1]", self.learning_rate));
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return bad(format!("regularization {} must be non-negative", self.l2));
        }
        Ok(())
    }
}

/// Ground-truth labels indexed by motivation id.
pub type LabelStore = Arc<Vec<LabelSet>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    n_values: usize,
    noise: f64,
    threshold: f64,
    seed: u64,
    truth: LabelStore,
}

impl Oracle {
    pub fn new(n_values: usize, config: &ClassifierConfig, truth: LabelStore) -> Self {
        Self {
            n_values,
            noise: config.noise,
            threshold: config.threshold,
            seed: config.seed,
            truth,
        }
    }

    /// Each label bit is flipped with probability `noise`, drawn from a
    /// stream keyed by the motivation id so that results do not depend on
    /// query order. Emitted labels score `1 − noise/2`, others `noise/2`,
    /// clamped to stay on the correct side of the threshold.
    fn predict(&self, q: Query<'_>) -> Result<Prediction> {
        let truth = self.truth.get(q.id).ok_or(Error::MissingGroundTruth(q.id))?;
        let mut rng = seed::stream(self.seed, "oracle-noise", q.id as u64);
        let below = f64::from_bits(self.threshold.to_bits() - 1);
        let mut scores = Vec::with_capacity(self.n_values);
        let mut labels = LabelSet::new();
        for v in 0..self.n_values {
            let flip = rng.random::<f64>() < self.noise;
            if truth.contains(&v) != flip {
                labels.insert(v);
                scores.push((1.0 - self.noise / 2.0).max(self.threshold));
            } else {
                scores.push((self.noise / 2.0).min(below));
            }
        }
        Ok(Prediction { scores, labels })
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// One-vs-rest logistic regression over token counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagOfWords {
    threshold: f64,
    vocabulary: BTreeMap<String, usize>,
    /// Per value: one weight per vocabulary entry, bias last.
    weights: Vec<Vec<f64>>,
}

type Sparse = Vec<(usize, f64)>;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl BagOfWords {
    fn features(&self, text: &str) -> Sparse {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for tok in tokenize(text) {
            if let Some(&i) = self.vocabulary.get(&tok) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        counts.into_iter().collect()
    }

    fn logit(w: &[f64], x: &Sparse) -> f64 {
        let bias = w[w.len() - 1];
        bias + x.iter().map(|&(i, c)| w[i] * c).sum::<f64>()
    }

    /// Trains with full-batch gradient descent and returns the model with
    /// the objective value (summed over labels) before each epoch and after
    /// the last.
    pub fn fit_with_history(
        n_values: usize,
        config: &ClassifierConfig,
        training: &[LabeledMotivation],
    ) -> Result<(Self, Vec<f64>)> {
        if training.is_empty() {
            return Err(Error::Empty("bag-of-words training set"));
        }
        let mut vocabulary = BTreeMap::new();
        for ex in training {
            for tok in tokenize(&ex.text) {
                vocabulary.entry(tok).or_insert(0);
            }
        }
        for (i, idx) in vocabulary.values_mut().enumerate() {
            *idx = i;
        }
        let dim = vocabulary.len() + 1;
        let mut model = Self {
            threshold: config.threshold,
            vocabulary,
            weights: vec![vec![0.0; dim]; n_values],
        };
        let xs: Vec<Sparse> = training.iter().map(|ex| model.features(&ex.text)).collect();
        let n = xs.len() as f64;

        // Per-coordinate steps from a diagonal bound on the Hessian of the
        // mean logistic loss: with r_i the L1 norm of row i (bias included),
        // (1/4n) XᵀX ≤ diag((1/4n) Σ_i |x_ij| r_i). Steps no larger than the
        // inverse of that bound plus the ridge term decrease the objective
        // every epoch, and rare tokens are not starved.
        let mut curvature = vec![0.0; dim];
        for x in &xs {
            let r = 1.0 + x.iter().map(|(_, c)| c.abs()).sum::<f64>();
            for &(i, c) in x {
                curvature[i] += c.abs() * r;
            }
            curvature[dim - 1] += r;
        }
        let steps: Vec<f64> = curvature
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let ridge = if i + 1 == dim { 0.0 } else { config.l2 };
                let bound = 0.25 * d / n + ridge;
                if bound > 0.0 {
                    config.learning_rate / bound
                } else {
                    0.0
                }
            })
            .collect();

        let objective = |w: &[f64], v: usize| -> f64 {
            let data: f64 = xs
                .iter()
                .zip(training)
                .map(|(x, ex)| {
                    let z = Self::logit(w, x);
                    if ex.labels.contains(&v) {
                        softplus(-z)
                    } else {
                        softplus(z)
                    }
                })
                .sum::<f64>()
                / n;
            let ridge: f64 = w[..w.len() - 1].iter().map(|x| x * x).sum();
            data + 0.5 * config.l2 * ridge
        };

        let mut history = Vec::with_capacity(config.epochs + 1);
        let mut grad = vec![0.0; dim];
        for epoch in 0..=config.epochs {
            history.push((0..n_values).map(|v| objective(&model.weights[v], v)).sum());
            if epoch == config.epochs {
                break;
            }
            for v in 0..n_values {
                let w = &mut model.weights[v];
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (x, ex) in xs.iter().zip(training) {
                    let y = if ex.labels.contains(&v) { 1.0 } else { 0.0 };
                    let r = (sigmoid(Self::logit(w, x)) - y) / n;
                    for &(i, c) in x {
                        grad[i] += r * c;
                    }
                    grad[dim - 1] += r;
                }
                for i in 0..dim - 1 {
                    grad[i] += config.l2 * w[i];
                }
                for ((wi, gi), si) in w.iter_mut().zip(&grad).zip(&steps) {
                    *wi -= si * gi;
                }
            }
        }
        Ok((model, history))
    }

    fn predict(&self, q: Query<'_>) -> Prediction {
        let x = self.features(q.text);
        let scores = self
            .weights
            .iter()
            .map(|w| sigmoid(Self::logit(w, &x)))
            .collect();
        Prediction::from_scores(scores, self.threshold)
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocabulary.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Oracle(Oracle),
    #[serde(rename = "bagofwords")]
    BagOfWords(BagOfWords),
}

/// A fitted classifier. Immutable; prediction is pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    n_values: usize,
    uncertainty: UncertaintyMeasure,
    model: Model,
}

/// Fits a classifier. The oracle needs `truth` and ignores `training`;
/// the bag-of-words model needs a non-empty `training` set.
pub fn fit(
    config: &ClassifierConfig,
    n_values: usize,
    training: &[LabeledMotivation],
    truth: Option<&LabelStore>,
) -> Result<Classifier> {
    config.validate()?;
    let model = match config.kind {
        ClassifierKind::Oracle => {
            let truth = truth.ok_or(Error::MissingGroundTruth(usize::MAX))?;
            Model::Oracle(Oracle::new(n_values, config, Arc::clone(truth)))
        }
        ClassifierKind::BagOfWords => {
            Model::BagOfWords(BagOfWords::fit_with_history(n_values, config, training)?.0)
        }
    };
    Ok(Classifier {
        n_values,
        uncertainty: config.uncertainty,
        model,
    })
}

#[derive(Serialize, Deserialize)]
struct Artifact {
    format: String,
    version: u32,
    classifier: Classifier,
}

impl Classifier {
    pub fn n_values(&self) -> usize {
        self.n_values
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn predict(&self, q: Query<'_>) -> Result<Prediction> {
        match &self.model {
            Model::Oracle(o) => o.predict(q),
            Model::BagOfWords(b) => Ok(b.predict(q)),
        }
    }

    pub fn uncertainty(&self, p: &Prediction) -> f64 {
        uncertainty_with(self.uncertainty, p)
    }

    /// Versioned JSON artifact: `format`, `version`, then the model state.
    pub fn to_artifact(&self) -> String {
        serde_json::to_string_pretty(&Artifact {
            format: ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            classifier: self.clone(),
        })
        .expect("classifier state serializes")
    }

    pub fn from_artifact(text: &str) -> Result<Self> {
        let a: Artifact = serde_json::from_str(text).map_err(|e| Error::parse("<classifier>", e))?;
        let found = format!("{}/{}", a.format, a.version);
        let expected = format!("{ARTIFACT_FORMAT}/{ARTIFACT_VERSION}");
        if found != expected {
            return Err(Error::Schema { expected, found });
        }
        Ok(a.classifier)
    }
}

/// Binary entropy in bits; 0 at 0 and 1.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}

/// Sum of per-value binary entropies of the prediction scores.
pub fn uncertainty(p: &Prediction) -> f64 {
    uncertainty_with(UncertaintyMeasure::EntropySum, p)
}

pub fn uncertainty_with(measure: UncertaintyMeasure, p: &Prediction) -> f64 {
    let hs = p.scores.iter().map(|&s| binary_entropy(s));
    match measure {
        UncertaintyMeasure::EntropySum => hs.sum(),
        UncertaintyMeasure::EntropyMax => hs.fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> LabelSet {
        v.iter().copied().collect()
    }

    fn store(labels: Vec<LabelSet>) -> LabelStore {
        Arc::new(labels)
    }

    #[test]
    fn oracle_without_noise_returns_truth() {
        let truth = store(vec![set(&[2]), set(&[]), set(&[0, 4])]);
        let c = fit(&ClassifierConfig::oracle(0.0), 5, &[], Some(&truth)).unwrap();
        for (id, t) in truth.iter().enumerate() {
            let p = c.predict(Query { id, text: "" }).unwrap();
            assert_eq!(&p.labels, t);
            for v in 0..5 {
                assert_eq!(p.scores[v], if t.contains(&v) { 1.0 } else { 0.0 });
            }
            assert_eq!(c.uncertainty(&p), 0.0);
        }
    }

    #[test]
    fn oracle_full_noise_complements() {
        let truth = store(vec![set(&[2]), set(&[0, 1, 3])]);
        let c = fit(&ClassifierConfig::oracle(1.0), 5, &[], Some(&truth)).unwrap();
        for (id, t) in truth.iter().enumerate() {
            let p = c.predict(Query { id, text: "" }).unwrap();
            let complement: LabelSet = (0..5).filter(|v| !t.contains(v)).collect();
            assert_eq!(p.labels, complement);
            assert_eq!(p, Prediction::from_scores(p.scores.clone(), 0.5));
        }
    }

    #[test]
    fn oracle_half_noise_flip_rate() {
        // 2,000 motivations x 5 labels = 10,000 label draws.
        let truth = store(vec![set(&[1, 3]); 2000]);
        let c = fit(&ClassifierConfig::oracle(0.5), 5, &[], Some(&truth)).unwrap();
        let mut flips = 0usize;
        for id in 0..2000 {
            let p = c.predict(Query { id, text: "" }).unwrap();
            flips += (0..5).filter(|v| p.labels.contains(v) != truth[id].contains(v)).count();
        }
        let rate = flips as f64 / 10_000.0;
        assert!((rate - 0.5).abs() <= 0.02, "flip rate {rate}");
    }

    #[test]
    fn oracle_requires_store() {
        assert!(matches!(
            fit(&ClassifierConfig::oracle(0.0), 5, &[], None),
            Err(Error::MissingGroundTruth(_))
        ));
        let truth = store(vec![set(&[])]);
        let c = fit(&ClassifierConfig::oracle(0.0), 5, &[], Some(&truth)).unwrap();
        assert!(c.predict(Query { id: 9, text: "" }).is_err());
    }

    #[test]
    fn oracle_is_order_independent() {
        let truth = store(vec![set(&[0]); 50]);
        let c = fit(&ClassifierConfig::oracle(0.3), 5, &[], Some(&truth)).unwrap();
        let fwd: Vec<_> = (0..50).map(|id| c.predict(Query { id, text: "" }).unwrap()).collect();
        let rev: Vec<_> = (0..50).rev().map(|id| c.predict(Query { id, text: "" }).unwrap()).collect();
        assert!(fwd.iter().eq(rev.iter().rev()));
    }

    #[test]
    fn bag_of_words_needs_data() {
        let cfg = ClassifierConfig::default();
        assert!(matches!(fit(&cfg, 3, &[], None), Err(Error::Empty(_))));
    }

    fn separable_corpus() -> Vec<LabeledMotivation> {
        let words = [["alpha", "apple", "axe"], ["beta", "bread", "bolt"], ["gamma", "grape", "gear"]];
        let mut out = Vec::new();
        for i in 0..60 {
            let v = i % 3;
            let w = &words[v];
            out.push(LabeledMotivation {
                id: i,
                text: format!("{} {}, {}!", w[i % 3], w[(i + 1) % 3], w[(i / 3) % 3]),
                labels: set(&[v]),
            });
        }
        out
    }

    #[test]
    fn bag_of_words_separable() {
        let cfg = ClassifierConfig::default();
        let c = fit(&cfg, 3, &separable_corpus(), None).unwrap();
        let p = c.predict(Query { id: 0, text: "Bread and BOLT" }).unwrap();
        assert_eq!(p.labels, set(&[1]));
        let p = c.predict(Query { id: 0, text: "nothing known" }).unwrap();
        assert!(p.labels.is_empty());
    }

    #[test]
    fn bag_of_words_loss_is_monotone() {
        let cfg = ClassifierConfig {
            epochs: 80,
            ..ClassifierConfig::default()
        };
        let too_fast = ClassifierConfig {
            learning_rate: 1.5,
            ..cfg.clone()
        };
        assert!(too_fast.validate().is_err());
        let (_, hist) = BagOfWords::fit_with_history(3, &cfg, &separable_corpus()).unwrap();
        for w in hist.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!(hist.last().unwrap() < &hist[0]);
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Hello, WORLD-42!x"), vec!["hello", "world", "42", "x"]);
    }

    #[test]
    fn uncertainty_cases() {
        let p = |s: Vec<f64>| Prediction::from_scores(s, 0.5);
        assert_eq!(uncertainty(&p(vec![0.5; 5])), 5.0);
        assert_eq!(uncertainty(&p(vec![0.0, 1.0, 1.0, 0.0, 0.0])), 0.0);
        assert_eq!(uncertainty(&p(vec![0.5, 1.0, 0.0, 0.0, 1.0])), 1.0);
        assert_eq!(uncertainty_with(UncertaintyMeasure::EntropyMax, &p(vec![0.5, 0.0])), 1.0);
    }

    #[test]
    fn artifact_round_trip() {
        let c = fit(&ClassifierConfig::default(), 3, &separable_corpus(), None).unwrap();
        let text = c.to_artifact();
        assert_eq!(Classifier::from_artifact(&text).unwrap(), c);
        let truth = store(vec![set(&[1])]);
        let o = fit(&ClassifierConfig::oracle(0.1), 3, &[], Some(&truth)).unwrap();
        assert_eq!(Classifier::from_artifact(&o.to_artifact()).unwrap(), o);
        let bad = text.replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(Classifier::from_artifact(&bad), Err(Error::Schema { .. })));
    }

    #[test]
    fn config_ranges() {
        assert!(ClassifierConfig::oracle(1.5).validate().is_err());
        let cfg = ClassifierConfig { threshold: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
