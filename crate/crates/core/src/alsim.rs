//! Pool-based active-learning simulation.
//!
//! Participants are split into folds. Per fold, the held-out participants
//! form the test pool, a seeded share of the rest is labeled up front
//! (warm-up) and the remainder is the unlabeled pool. Each iteration fits
//! the classifier on the labeled motivations, evaluates it, and moves a
//! batch chosen by the strategy into the labeled pool. Labels come from the
//! dataset's annotations; nothing is queried live.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, Classifier, ClassifierConfig, LabelStore, LabeledMotivation, Prediction, Query};
use crate::dataio::{self, CurveRow, ExperimentReport, FoldLabel, Meta};
use crate::error::{Error, Result};
use crate::estimation::{self, Estimator, DEFAULT_VO_THRESHOLD};
use crate::metrics::{self, LabelConfusion};
use crate::model::{Dataset, LabelSet, MotivationRef, Ranking, ValueOptionMatrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Disambiguation,
    Uncertainty,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Disambiguation, Strategy::Uncertainty, Strategy::Random];
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "disambiguation" => Ok(Self::Disambiguation),
            "uncertainty" => Ok(Self::Uncertainty),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Disambiguation => "disambiguation",
            Self::Uncertainty => "uncertainty",
            Self::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ALConfig {
    pub warmup_fraction: f64,
    /// Share of a fold's non-test pool taken per iteration, used for
    /// whichever of the two batch sizes is not set explicitly.
    pub batch_fraction: f64,
    /// Participants per batch (participant-level strategies).
    pub batch_participants: Option<usize>,
    /// Motivations per batch (uncertainty strategy).
    pub batch_motivations: Option<usize>,
    pub iterations: usize,
    pub folds: usize,
    pub strategy: Strategy,
    pub classifier: ClassifierConfig,
    pub estimator: Estimator,
    /// Annotation-count threshold for the shared value-option matrix.
    pub vo_threshold: u64,
    pub seed: u64,
}

impl Default for ALConfig {
    fn default() -> Self {
        Self {
            warmup_fraction: 0.10,
            batch_fraction: 0.05,
            batch_participants: None,
            batch_motivations: None,
            iterations: 5,
            folds: 10,
            strategy: Strategy::Disambiguation,
            classifier: ClassifierConfig::default(),
            estimator: Estimator::default(),
            vo_threshold: DEFAULT_VO_THRESHOLD,
            seed: 0,
        }
    }
}

impl ALConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, f) in [("warmup fraction", self.warmup_fraction), ("batch fraction", self.batch_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name} {f} outside (0, 1)"));
            }
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if self.folds < 2 {
            return bad(format!("{} folds; at least 2 required", self.folds));
        }
        if self.batch_participants == Some(0) || self.batch_motivations == Some(0) {
            return bad("batch sizes must be positive".into());
        }
        self.classifier.validate()
    }

    /// The classifier config with its seed derived from the run seed.
    fn classifier_config(&self) -> ClassifierConfig {
        ClassifierConfig {
            seed: seed::derive_seed(self.seed, "classifier", 0),
            ..self.classifier.clone()
        }
    }
}

/// `round(fraction × n)`, at least 1.
pub fn batch_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).max(1)
}

/// Precomputed, read-only data shared by all folds and strategies.
pub struct Context<'a> {
    pub dataset: &'a Dataset,
    pub refs: Vec<MotivationRef>,
    /// Motivation ids per participant, ascending.
    pub by_participant: Vec<Vec<usize>>,
    pub truth: LabelStore,
    /// Shared value-option matrix; every estimate starts from it.
    pub vo: ValueOptionMatrix,
    /// Method-C ranking per participant under `vo`.
    pub rc: Vec<Ranking>,
}

impl<'a> Context<'a> {
    pub fn new(dataset: &'a Dataset, vo: ValueOptionMatrix) -> Result<Self> {
        vo.check_shape(dataset.values.len(), dataset.options.len())?;
        let refs = dataset.motivation_refs();
        let mut by_participant = vec![Vec::new(); dataset.participants.len()];
        for (id, r) in refs.iter().enumerate() {
            by_participant[r.participant].push(id);
        }
        let truth = LabelStore::new(refs.iter().map(|&r| dataset.motivation(r).labels.clone()).collect());
        let rc = dataset
            .participants
            .iter()
            .map(|p| estimation::method_c(&vo, &p.choices).map(|r| r.ranking))
            .collect::<Result<_>>()?;
        Ok(Self {
            dataset,
            refs,
            by_participant,
            truth,
            vo,
            rc,
        })
    }

    /// Context with the matrix thresholded from the dataset's annotations.
    pub fn from_annotations(dataset: &'a Dataset, threshold: u64) -> Result<Self> {
        Self::new(dataset, estimation::init_vo(&dataio::annotation_counts(dataset), threshold))
    }

    pub fn n_values(&self) -> usize {
        self.dataset.values.len()
    }

    pub fn text(&self, id: usize) -> &str {
        &self.dataset.motivation(self.refs[id]).text
    }

    fn training(&self, ids: impl IntoIterator<Item = usize>) -> Vec<LabeledMotivation> {
        ids.into_iter()
            .map(|id| LabeledMotivation {
                id,
                text: self.text(id).to_owned(),
                labels: self.truth[id].clone(),
            })
            .collect()
    }

    fn fit(&self, config: &ClassifierConfig, ids: impl IntoIterator<Item = usize>) -> Result<Classifier> {
        classifier::fit(config, self.n_values(), &self.training(ids), Some(&self.truth))
    }

    /// Predictions for every motivation, indexed by id.
    pub fn predict_all(&self, c: &Classifier) -> Result<Vec<Prediction>> {
        (0..self.refs.len())
            .map(|id| c.predict(Query { id, text: self.text(id) }))
            .collect()
    }

    /// Estimates participant `p` with its motivations relabeled by `labels`
    /// (indexed by motivation id).
    pub fn estimate(&self, estimator: &Estimator, p: usize, labels: &[LabelSet]) -> Result<Ranking> {
        let part = &self.dataset.participants[p];
        let ids = &self.by_participant[p];
        let mut k = 0;
        let m = part.motivations.relabeled(|_, _| {
            let l = labels[ids[k]].clone();
            k += 1;
            l
        });
        Ok(estimator.estimate(&self.vo, &part.choices, &m)?.ranking)
    }

    /// Method-M ranking of `p` from `labels`.
    pub fn ranking_m(&self, p: usize, labels: &[LabelSet]) -> Ranking {
        let mut counts = vec![0u64; self.n_values()];
        for &id in &self.by_participant[p] {
            for &v in &labels[id] {
                counts[v] += 1;
            }
        }
        Ranking::from_scores(&counts)
    }
}

/// Participant ids of one fold's three pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold: usize,
    pub test: Vec<usize>,
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

/// Shuffles participants into `folds` near-equal test chunks, then labels
/// a seeded `warmup_fraction` of each fold's remaining participants.
pub fn warmup_split(n_participants: usize, config: &ALConfig) -> Result<Vec<FoldSplit>> {
    config.validate()?;
    if n_participants < config.folds {
        return Err(Error::InvalidConfig(format!(
            "{n_participants} participants cannot fill {} folds",
            config.folds
        )));
    }
    let mut order: Vec<usize> = (0..n_participants).collect();
    order.shuffle(&mut seed::stream(config.seed, "folds", 0));
    let (q, r) = (n_participants / config.folds, n_participants % config.folds);
    let mut start = 0;
    (0..config.folds)
        .map(|fold| {
            let len = q + usize::from(fold < r);
            let test: BTreeSet<usize> = order[start..start + len].iter().copied().collect();
            start += len;
            let mut rest: Vec<usize> = (0..n_participants).filter(|i| !test.contains(i)).collect();
            let warm = (config.warmup_fraction * rest.len() as f64).round() as usize;
            if warm == 0 {
                return Err(Error::InvalidConfig(format!(
                    "warm-up fraction {} labels no participant out of {}",
                    config.warmup_fraction,
                    rest.len()
                )));
            }
            rest.shuffle(&mut seed::stream(config.seed, "warmup", fold as u64));
            let mut labeled = rest[..warm].to_vec();
            let mut unlabeled = rest[warm..].to_vec();
            labeled.sort_unstable();
            unlabeled.sort_unstable();
            Ok(FoldSplit {
                fold,
                test: test.into_iter().collect(),
                labeled,
                unlabeled,
            })
        })
        .collect()
}

/// Top `k` ids by descending score; equal scores go to the smaller id.
pub fn select_top(scored: &[(usize, f64)], k: usize) -> Vec<usize> {
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if k > 0 && k < sorted.len() && sorted[k - 1].1 == sorted[k].1 {
        log::debug!("score tie at the batch boundary ({}); broken by ascending id", sorted[k].1);
    }
    sorted.into_iter().take(k).map(|(id, _)| id).collect()
}

/// Kemeny distance between each pooled participant's method-C ranking and
/// its method-M ranking under `labels`.
pub fn disambiguation_scores(ctx: &Context<'_>, pool: &[usize], labels: &[LabelSet]) -> Result<Vec<(usize, f64)>> {
    pool.iter()
        .map(|&p| Ok((p, metrics::kemeny_distance(&ctx.rc[p], &ctx.ranking_m(p, labels))?)))
        .collect()
}

pub fn strategy_disambiguation(ctx: &Context<'_>, pool: &[usize], labels: &[LabelSet], p: usize) -> Result<Vec<usize>> {
    Ok(select_top(&disambiguation_scores(ctx, pool, labels)?, p))
}

/// Most uncertain motivations of the pool.
pub fn strategy_uncertainty(pool: &[usize], uncertainty: impl Fn(usize) -> f64, m: usize) -> Vec<usize> {
    let scored: Vec<(usize, f64)> = pool.iter().map(|&id| (id, uncertainty(id))).collect();
    select_top(&scored, m)
}

/// `p` distinct uniform draws from the pool, returned ascending.
pub fn strategy_random(pool: &[usize], p: usize, rng: &mut seed::Rng) -> Vec<usize> {
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, pool.len(), p.min(pool.len()))
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Reference point for the curves: the classifier trained on all data.
#[derive(Debug, Clone, PartialEq)]
pub struct Topline {
    /// Mean per-fold micro F1 under cross-validation.
    pub nlp_micro_f1: f64,
    pub rankings: Vec<Ranking>,
}

pub fn compute_topline(ctx: &Context<'_>, config: &ALConfig, splits: &[FoldSplit]) -> Result<Topline> {
    let cc = config.classifier_config();
    let f1s = splits
        .par_iter()
        .map(|s| {
            let test: BTreeSet<usize> = s.test.iter().copied().collect();
            let train = (0..ctx.dataset.participants.len())
                .filter(|p| !test.contains(p))
                .flat_map(|p| ctx.by_participant[p].iter().copied());
            let c = ctx.fit(&cc, train)?;
            let mut conf = LabelConfusion::new(ctx.n_values());
            for &p in &s.test {
                for &id in &ctx.by_participant[p] {
                    let pred = c.predict(Query { id, text: ctx.text(id) })?;
                    conf.add(&pred.labels, &ctx.truth[id]);
                }
            }
            Ok(conf.scores().micro)
        })
        .collect::<Result<Vec<f64>>>()?;
    let full = ctx.fit(&cc, 0..ctx.refs.len())?;
    let labels: Vec<LabelSet> = ctx.predict_all(&full)?.into_iter().map(|p| p.labels).collect();
    let rankings = (0..ctx.dataset.participants.len())
        .into_par_iter()
        .map(|p| ctx.estimate(&config.estimator, p, &labels))
        .collect::<Result<_>>()?;
    Ok(Topline {
        nlp_micro_f1: metrics::mean_std(&f1s).0,
        rankings,
    })
}

/// Metrics logged after fitting at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub labeled_motivations: usize,
    pub labeled_fraction: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub mean_kemeny: f64,
    pub std_kemeny: f64,
}

/// Pools of one fold during a run.
#[derive(Debug, Clone)]
pub struct ALState {
    pub fold: usize,
    pub test: BTreeSet<usize>,
    pub labeled: BTreeSet<usize>,
    pub unlabeled: BTreeSet<usize>,
    /// Ids of motivations whose annotations have been retrieved.
    pub labeled_motivations: BTreeSet<usize>,
    pub iteration: usize,
    pub log: Vec<IterationMetrics>,
}

impl ALState {
    pub fn new(ctx: &Context<'_>, split: &FoldSplit) -> Self {
        let labeled: BTreeSet<usize> = split.labeled.iter().copied().collect();
        let labeled_motivations = labeled
            .iter()
            .flat_map(|&p| ctx.by_participant[p].iter().copied())
            .collect();
        Self {
            fold: split.fold,
            test: split.test.iter().copied().collect(),
            labeled,
            unlabeled: split.unlabeled.iter().copied().collect(),
            labeled_motivations,
            iteration: 0,
            log: Vec::new(),
        }
    }

    /// The three participant pools are disjoint and cover `n`.
    pub fn is_partition(&self, n: usize) -> bool {
        let total = self.test.len() + self.labeled.len() + self.unlabeled.len();
        total == n
            && self.test.is_disjoint(&self.labeled)
            && self.test.is_disjoint(&self.unlabeled)
            && self.labeled.is_disjoint(&self.unlabeled)
    }

    fn label_participants(&mut self, ctx: &Context<'_>, picked: &[usize]) {
        for &p in picked {
            assert!(self.unlabeled.remove(&p), "participant {p} selected twice");
            self.labeled.insert(p);
            self.labeled_motivations.extend(ctx.by_participant[p].iter().copied());
        }
    }

    /// Retrieves single motivations; an author whose motivations are then
    /// all labeled moves to the labeled pool.
    fn label_motivations(&mut self, ctx: &Context<'_>, picked: &[usize]) {
        for &id in picked {
            assert!(self.labeled_motivations.insert(id), "motivation {id} selected twice");
            let p = ctx.refs[id].participant;
            if ctx.by_participant[p].iter().all(|m| self.labeled_motivations.contains(m)) {
                self.unlabeled.remove(&p);
                self.labeled.insert(p);
            }
        }
    }
}

struct Batches {
    participants: usize,
    motivations: usize,
    /// Motivations of non-test participants; the denominator of the
    /// labeled fraction.
    pool_motivations: usize,
}

fn batches(ctx: &Context<'_>, config: &ALConfig, split: &FoldSplit) -> Batches {
    let non_test = split.labeled.len() + split.unlabeled.len();
    let pool_motivations = split
        .labeled
        .iter()
        .chain(&split.unlabeled)
        .map(|&p| ctx.by_participant[p].len())
        .sum();
    Batches {
        participants: config
            .batch_participants
            .unwrap_or_else(|| batch_size(config.batch_fraction, non_test)),
        motivations: config
            .batch_motivations
            .unwrap_or_else(|| batch_size(config.batch_fraction, pool_motivations)),
        pool_motivations,
    }
}

/// Runs one fold of one strategy and returns its final state.
pub fn run_fold(
    ctx: &Context<'_>,
    config: &ALConfig,
    strategy: Strategy,
    split: &FoldSplit,
    topline: &Topline,
) -> Result<ALState> {
    let cc = config.classifier_config();
    let sizes = batches(ctx, config, split);
    let mut state = ALState::new(ctx, split);
    for iteration in 0..=config.iterations {
        state.iteration = iteration;
        let tag = format!("[{strategy} fold {} iter {iteration}]", split.fold);
        let c = ctx.fit(&cc, state.labeled_motivations.iter().copied())?;
        let preds = ctx.predict_all(&c)?;
        // Retrieved annotations take precedence over predictions.
        let labels: Vec<LabelSet> = preds
            .iter()
            .enumerate()
            .map(|(id, p)| {
                if state.labeled_motivations.contains(&id) {
                    ctx.truth[id].clone()
                } else {
                    p.labels.clone()
                }
            })
            .collect();

        let mut conf = LabelConfusion::new(ctx.n_values());
        let mut distances = Vec::with_capacity(state.test.len());
        for &p in &state.test {
            for &id in &ctx.by_participant[p] {
                conf.add(&preds[id].labels, &ctx.truth[id]);
            }
            let r = ctx.estimate(&config.estimator, p, &labels)?;
            distances.push(metrics::kemeny_distance(&r, &topline.rankings[p])?);
        }
        let f1 = conf.scores();
        let (mean_kemeny, std_kemeny) = metrics::mean_std(&distances);
        let labeled = state.labeled_motivations.len();
        let row = IterationMetrics {
            iteration,
            labeled_motivations: labeled,
            labeled_fraction: if sizes.pool_motivations == 0 {
                0.0
            } else {
                labeled as f64 / sizes.pool_motivations as f64
            },
            micro_f1: f1.micro,
            macro_f1: f1.macro_,
            mean_kemeny,
            std_kemeny,
        };
        log::info!(
            "{tag} labeled={labeled} micro_f1={:.4} macro_f1={:.4} kemeny={:.4}±{:.4}",
            row.micro_f1,
            row.macro_f1,
            row.mean_kemeny,
            row.std_kemeny
        );
        state.log.push(row);
        if iteration == config.iterations {
            break;
        }

        let pool: Vec<usize> = state.unlabeled.iter().copied().collect();
        match strategy {
            Strategy::Disambiguation => {
                let picked = strategy_disambiguation(ctx, &pool, &labels, sizes.participants)?;
                log::debug!("{tag} selected participants {picked:?}");
                state.label_participants(ctx, &picked);
            }
            Strategy::Random => {
                let mut rng = seed::stream(
                    config.seed,
                    "random-strategy",
                    (split.fold * 1000 + iteration) as u64,
                );
                let picked = strategy_random(&pool, sizes.participants, &mut rng);
                log::debug!("{tag} selected participants {picked:?}");
                state.label_participants(ctx, &picked);
            }
            Strategy::Uncertainty => {
                let open: Vec<usize> = pool
                    .iter()
                    .flat_map(|&p| ctx.by_participant[p].iter().copied())
                    .filter(|id| !state.labeled_motivations.contains(id))
                    .collect();
                let picked = strategy_uncertainty(&open, |id| c.uncertainty(&preds[id]), sizes.motivations);
                log::debug!("{tag} selected motivations {picked:?}");
                state.label_motivations(ctx, &picked);
            }
        }
        debug_assert!(state.is_partition(ctx.dataset.participants.len()));
    }
    Ok(state)
}

fn row(strategy: Strategy, fold: FoldLabel, m: &IterationMetrics) -> CurveRow {
    CurveRow {
        strategy: strategy.to_string(),
        fold,
        iteration: m.iteration,
        labeled_motivations: m.labeled_motivations as f64,
        labeled_fraction: m.labeled_fraction,
        micro_f1: m.micro_f1,
        macro_f1: m.macro_f1,
        mean_kemeny: m.mean_kemeny,
        std_kemeny: m.std_kemeny,
    }
}

fn aggregate(strategy: Strategy, logs: &[Vec<IterationMetrics>]) -> Vec<CurveRow> {
    let iterations = logs.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(2 * iterations);
    for i in 0..iterations {
        let col = |f: fn(&IterationMetrics) -> f64| {
            metrics::mean_std(&logs.iter().map(|l| f(&l[i])).collect::<Vec<_>>())
        };
        let stats = [
            col(|m| m.labeled_motivations as f64),
            col(|m| m.labeled_fraction),
            col(|m| m.micro_f1),
            col(|m| m.macro_f1),
            col(|m| m.mean_kemeny),
            col(|m| m.std_kemeny),
        ];
        for (fold, pick) in [(FoldLabel::Mean, 0), (FoldLabel::Std, 1)] {
            let s = |k: usize| if pick == 0 { stats[k].0 } else { stats[k].1 };
            out.push(CurveRow {
                strategy: strategy.to_string(),
                fold,
                iteration: i,
                labeled_motivations: s(0),
                labeled_fraction: s(1),
                micro_f1: s(2),
                macro_f1: s(3),
                mean_kemeny: s(4),
                std_kemeny: s(5),
            });
        }
    }
    out
}

/// Runs every listed strategy over the same folds and topline.
pub fn run_strategies(dataset: &Dataset, config: &ALConfig, strategies: &[Strategy]) -> Result<ExperimentReport> {
    config.validate()?;
    let ctx = Context::from_annotations(dataset, config.vo_threshold)?;
    let splits = warmup_split(dataset.participants.len(), config)?;
    let topline = compute_topline(&ctx, config, &splits)?;
    log::info!("topline micro F1 {:.4}", topline.nlp_micro_f1);

    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for &strategy in strategies {
        let states = splits
            .par_iter()
            .map(|s| run_fold(&ctx, config, strategy, s, &topline))
            .collect::<Result<Vec<_>>>()?;
        for s in &states {
            rows.extend(s.log.iter().map(|m| row(strategy, FoldLabel::Fold(s.fold), m)));
        }
        let logs: Vec<_> = states.into_iter().map(|s| s.log).collect();
        aggregates.extend(aggregate(strategy, &logs));
    }

    let strategies_text = strategies.iter().map(Strategy::to_string).collect::<Vec<_>>().join(",");
    let meta: Meta = vec![
        ("config".into(), dataio::config_snapshot(config)),
        ("strategies".into(), strategies_text),
        ("participants".into(), dataset.participants.len().to_string()),
        ("motivations".into(), ctx.refs.len().to_string()),
        ("topline_micro_f1".into(), topline.nlp_micro_f1.to_string()),
        ("tie_break".into(), "equal strategy scores go to the smaller participant or motivation index".into()),
        (
            "label_precedence".into(),
            "retrieved annotations override predictions for partially labeled participants".into(),
        ),
        (
            "batch_sizes".into(),
            "unset batch sizes are round(batch_fraction x the fold's non-test pool), at least 1".into(),
        ),
    ];
    Ok(ExperimentReport { meta, rows, aggregates })
}

pub fn run_experiment(dataset: &Dataset, config: &ALConfig) -> Result<ExperimentReport> {
    run_strategies(dataset, config, &[config.strategy])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, SynthConfig};

    fn small(n: usize) -> Dataset {
        synth::generate(&SynthConfig {
            participants: n,
            seed: 5,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn hundred_participants_ten_folds() {
        let splits = warmup_split(100, &ALConfig::default()).unwrap();
        assert_eq!(splits.len(), 10);
        let mut seen = BTreeSet::new();
        for s in &splits {
            assert_eq!((s.test.len(), s.labeled.len(), s.unlabeled.len()), (10, 9, 81));
            seen.extend(s.test.iter().copied());
        }
        assert_eq!(seen.len(), 100);
        assert_eq!(splits, warmup_split(100, &ALConfig::default()).unwrap());
    }

    #[test]
    fn warmup_must_label_someone() {
        let config = ALConfig {
            warmup_fraction: 0.01,
            ..ALConfig::default()
        };
        assert!(warmup_split(20, &config).is_err());
        assert!(warmup_split(5, &ALConfig::default()).is_err());
    }

    #[test]
    fn select_top_breaks_ties_by_id() {
        assert_eq!(select_top(&[(4, 0.0), (2, 0.0), (7, 0.0)], 2), vec![2, 4]);
        // Hand-built scores {4, 0, 9}.
        assert_eq!(select_top(&[(0, 4.0), (1, 0.0), (2, 9.0)], 2), vec![2, 0]);
        assert_eq!(select_top(&[(0, 1.2), (1, 0.3), (2, 2.0)], 1), vec![2]);
        assert_eq!(select_top(&[(0, 1.0)], 5), vec![0]);
    }

    #[test]
    fn disambiguation_scores_use_kemeny_between_rc_and_rm() {
        let ds = small(30);
        let ctx = Context::from_annotations(&ds, 1).unwrap();
        let empty = vec![LabelSet::new(); ctx.refs.len()];
        let pool: Vec<usize> = (0..30).collect();
        for (p, s) in disambiguation_scores(&ctx, &pool, &empty).unwrap() {
            let tied = Ranking::all_tied(5);
            assert_eq!(s, metrics::kemeny_distance(&ctx.rc[p], &tied).unwrap());
        }
    }

    #[test]
    fn random_strategy_is_seeded_and_exhausts_small_pools() {
        let pool: Vec<usize> = (10..30).collect();
        let a = strategy_random(&pool, 5, &mut seed::stream(1, "r", 0));
        let b = strategy_random(&pool, 5, &mut seed::stream(1, "r", 0));
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert_eq!(strategy_random(&pool, 50, &mut seed::stream(1, "r", 0)), pool);
    }

    #[test]
    fn random_strategy_is_uniform() {
        let pool: Vec<usize> = (0..20).collect();
        let (draws, p) = (4000usize, 5usize);
        let mut hits = [0usize; 20];
        for i in 0..draws {
            for x in strategy_random(&pool, p, &mut seed::stream(9, "uniform", i as u64)) {
                hits[x] += 1;
            }
        }
        let q = p as f64 / 20.0;
        let mean = draws as f64 * q;
        let sd = (draws as f64 * q * (1.0 - q)).sqrt();
        for h in hits {
            assert!((h as f64 - mean).abs() <= 3.0 * sd + 1.0, "{h} vs {mean}");
        }
    }

    #[test]
    fn uncertainty_prefers_high_entropy() {
        let preds = [
            Prediction::from_scores(vec![0.0; 5], 0.5),
            Prediction::from_scores(vec![0.5; 5], 0.5),
            Prediction::from_scores(vec![1.0; 5], 0.5),
        ];
        let picked = strategy_uncertainty(&[0, 1, 2], |id| classifier::uncertainty(&preds[id]), 1);
        assert_eq!(picked, vec![1]);
        assert_eq!(strategy_uncertainty(&[5, 3, 4], |_| 0.0, 2), vec![3, 4]);
    }

    #[test]
    fn oracle_topline_is_exact() {
        let ds = small(60);
        let config = ALConfig {
            classifier: ClassifierConfig::oracle(0.0),
            folds: 3,
            ..ALConfig::default()
        };
        let ctx = Context::from_annotations(&ds, config.vo_threshold).unwrap();
        let splits = warmup_split(60, &config).unwrap();
        let t = compute_topline(&ctx, &config, &splits).unwrap();
        assert_eq!(t.nlp_micro_f1, 1.0);
        for (p, r) in t.rankings.iter().enumerate() {
            assert_eq!(r, &config.estimator.estimate_participant(&ctx.vo, &ds.participants[p]).unwrap().ranking);
        }
    }

    #[test]
    fn pools_stay_partitioned_and_grow() {
        let ds = small(80);
        for strategy in Strategy::ALL {
            let config = ALConfig {
                classifier: ClassifierConfig::oracle(0.2),
                folds: 4,
                iterations: 3,
                strategy,
                ..ALConfig::default()
            };
            let ctx = Context::from_annotations(&ds, config.vo_threshold).unwrap();
            let splits = warmup_split(80, &config).unwrap();
            let topline = compute_topline(&ctx, &config, &splits).unwrap();
            for s in &splits {
                let st = run_fold(&ctx, &config, strategy, s, &topline).unwrap();
                assert!(st.is_partition(80));
                assert_eq!(st.log.len(), 4);
                assert!(st.log.windows(2).all(|w| w[0].labeled_motivations < w[1].labeled_motivations));
                assert!(st.labeled_motivations.iter().all(|&id| !st.test.contains(&ctx.refs[id].participant)));
            }
        }
    }

    #[test]
    fn bag_of_words_sees_only_labeled_text() {
        let ds = small(60);
        let config = ALConfig {
            folds: 3,
            iterations: 1,
            ..ALConfig::default()
        };
        let ctx = Context::from_annotations(&ds, config.vo_threshold).unwrap();
        let split = &warmup_split(60, &config).unwrap()[0];
        let state = ALState::new(&ctx, split);
        let c = ctx.fit(&config.classifier_config(), state.labeled_motivations.iter().copied()).unwrap();
        let seen: BTreeSet<String> = state
            .labeled_motivations
            .iter()
            .flat_map(|&id| classifier::tokenize(ctx.text(id)))
            .collect();
        let classifier::Model::BagOfWords(b) = c.model() else { panic!("expected bag of words") };
        assert!(b.vocabulary().all(|t| seen.contains(t)));
    }
}
