//! Ranking distances, mean positions and multi-label F1.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::model::{LabelSet, Ranking};

/// Antisymmetric preference matrix of a ranking: `x[j][k]` is 1 when `j`
/// is preferred over `k`, -1 in the reverse case and 0 on ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseMatrix {
    n: usize,
    x: Vec<i8>,
}

impl PairwiseMatrix {
    pub fn from_ranking(r: &Ranking) -> Self {
        let n = r.len();
        let g = r.group_indices();
        let mut x = vec![0i8; n * n];
        for j in 0..n {
            for k in 0..n {
                x[j * n + k] = match g[j].cmp(&g[k]) {
                    std::cmp::Ordering::Less => 1,
                    std::cmp::Ordering::Greater => -1,
                    std::cmp::Ordering::Equal => 0,
                };
            }
        }
        Self { n, x }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, j: usize, k: usize) -> i8 {
        self.x[j * self.n + k]
    }
}

/// Kemeny distance `½ Σ_j Σ_k |x1_jk − x2_jk|`. Strict disagreements
/// cost 2 per ordered pair, tie-vs-strict 1; the result is therefore
/// half-integral and at most `n(n−1)`.
pub fn kemeny_distance(r1: &Ranking, r2: &Ranking) -> Result<f64> {
    Ok(kemeny_twice(r1, r2)? as f64 / 2.0)
}

/// Twice the Kemeny distance, as an exact integer.
pub fn kemeny_twice(r1: &Ranking, r2: &Ranking) -> Result<u64> {
    dim_check("ranking length", r1.len(), r2.len())?;
    let (g1, g2) = (r1.group_indices(), r2.group_indices());
    let n = r1.len();
    let mut total = 0u64;
    for j in 0..n {
        for k in 0..n {
            let a = g1[j].cmp(&g1[k]) as i8;
            let b = g2[j].cmp(&g2[k]) as i8;
            total += (a - b).unsigned_abs() as u64;
        }
    }
    Ok(total)
}

/// Sum over values of the absolute change in competition position.
pub fn position_changes(base: &Ranking, other: &Ranking) -> Result<u64> {
    dim_check("ranking length", base.len(), other.len())?;
    Ok(base
        .positions()
        .iter()
        .zip(other.positions())
        .map(|(&a, b)| a.abs_diff(b) as u64)
        .sum())
}

/// Exact per-value mean competition position.
pub fn mean_positions(rankings: &[Ranking]) -> Result<Vec<Ratio<u64>>> {
    let first = rankings.first().ok_or(Error::Empty("ranking list"))?;
    let mut sums = vec![0u64; first.len()];
    for r in rankings {
        dim_check("ranking length", first.len(), r.len())?;
        for (s, p) in sums.iter_mut().zip(r.positions()) {
            *s += p as u64;
        }
    }
    let n = rankings.len() as u64;
    Ok(sums.into_iter().map(|s| Ratio::new(s, n)).collect())
}

pub fn ratio_to_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Per-value confusion counts pooled over samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelConfusion {
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub fn_: Vec<u64>,
}

impl LabelConfusion {
    pub fn new(n_values: usize) -> Self {
        Self {
            tp: vec![0; n_values],
            fp: vec![0; n_values],
            fn_: vec![0; n_values],
        }
    }

    pub fn add(&mut self, predicted: &LabelSet, truth: &LabelSet) {
        for &v in predicted.union(truth) {
            if v >= self.tp.len() {
                continue;
            }
            match (predicted.contains(&v), truth.contains(&v)) {
                (true, true) => self.tp[v] += 1,
                (true, false) => self.fp[v] += 1,
                (false, true) => self.fn_[v] += 1,
                (false, false) => unreachable!(),
            }
        }
    }

    pub fn merge(&mut self, other: &LabelConfusion) {
        for (a, b) in [
            (&mut self.tp, &other.tp),
            (&mut self.fp, &other.fp),
            (&mut self.fn_, &other.fn_),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scores(&self) -> F1Scores {
        let micro = f1(
            self.tp.iter().sum(),
            self.fp.iter().sum(),
            self.fn_.iter().sum(),
        );
        let n = self.tp.len();
        let macro_ = if n == 0 {
            0.0
        } else {
            (0..n)
                .map(|v| f1(self.tp[v], self.fp[v], self.fn_[v]))
                .sum::<f64>()
                / n as f64
        };
        F1Scores { micro, macro_ }
    }
}

/// F1 = 2TP / (2TP + FP + FN); defined as 0 when TP is 0.
fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F1Scores {
    pub micro: f64,
    #[serde(rename = "macro")]
    pub macro_: f64,
}

pub fn f1_scores(predictions: &[LabelSet], truths: &[LabelSet], n_values: usize) -> Result<F1Scores> {
    dim_check("prediction count", truths.len(), predictions.len())?;
    let mut c = LabelConfusion::new(n_values);
    for (p, t) in predictions.iter().zip(truths) {
        c.add(p, t);
    }
    Ok(c.scores())
}

/// Population mean and standard deviation (divisor n). Zero for empty input.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> LabelSet {
        v.iter().copied().collect()
    }

    /// Straight transcription of the double sum over the sign function.
    fn kemeny_oracle(a: &Ranking, b: &Ranking) -> f64 {
        let (pa, pb) = (PairwiseMatrix::from_ranking(a), PairwiseMatrix::from_ranking(b));
        let mut s = 0i64;
        for j in 0..a.len() {
            for k in 0..a.len() {
                s += (pa.get(j, k) as i64 - pb.get(j, k) as i64).abs();
            }
        }
        s as f64 / 2.0
    }

    #[test]
    fn kemeny_identity_and_reversal() {
        let r = Ranking::strict(&[0, 1, 2, 3, 4]).unwrap();
        let rev = Ranking::strict(&[4, 3, 2, 1, 0]).unwrap();
        assert_eq!(kemeny_distance(&r, &r).unwrap(), 0.0);
        assert_eq!(kemeny_distance(&r, &rev).unwrap(), 20.0);
        assert_eq!(kemeny_oracle(&r, &rev), 20.0);
    }

    #[test]
    fn kemeny_strict_vs_tie_is_one() {
        let a = Ranking::strict(&[0, 1, 2]).unwrap();
        let b = Ranking::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        assert_eq!(kemeny_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn kemeny_rejects_mismatch() {
        let a = Ranking::all_tied(3);
        let b = Ranking::all_tied(4);
        assert!(kemeny_distance(&a, &b).is_err());
    }

    #[test]
    fn pairwise_matrix_is_antisymmetric() {
        let r = Ranking::from_scores(&[3, 1, 3, 2]);
        let x = PairwiseMatrix::from_ranking(&r);
        for j in 0..4 {
            assert_eq!(x.get(j, j), 0);
            for k in 0..4 {
                assert_eq!(x.get(j, k), -x.get(k, j));
            }
        }
    }

    #[test]
    fn position_change_example() {
        let r1 = Ranking::strict(&[0, 1, 2, 3, 4]).unwrap();
        let r2 = Ranking::strict(&[1, 2, 0, 3, 4]).unwrap();
        assert_eq!(position_changes(&r1, &r2).unwrap(), 4);
        assert_eq!(position_changes(&r1, &r1).unwrap(), 0);
        let rev = Ranking::strict(&[4, 3, 2, 1, 0]).unwrap();
        assert_eq!(position_changes(&r1, &rev).unwrap(), 12);
    }

    #[test]
    fn mean_positions_cases() {
        let r = Ranking::strict(&[0, 1, 2, 3, 4]).unwrap();
        let rev = Ranking::strict(&[4, 3, 2, 1, 0]).unwrap();
        let single = mean_positions(std::slice::from_ref(&r)).unwrap();
        assert_eq!(single, (1..=5).map(Ratio::from_integer).collect::<Vec<_>>());
        let both = mean_positions(&[r.clone(), rev]).unwrap();
        assert!(both.iter().all(|m| *m == Ratio::from_integer(3)));
        let same = mean_positions(&[r.clone(), r.clone(), r.clone()]).unwrap();
        assert_eq!(same, single);
        assert!(mean_positions(&[]).is_err());
    }

    #[test]
    fn f1_cases() {
        let truths = vec![set(&[0]), set(&[1, 2])];
        let perfect = f1_scores(&truths, &truths, 5).unwrap();
        assert_eq!(perfect.micro, 1.0);
        let empty = f1_scores(&[set(&[]), set(&[])], &truths, 5).unwrap();
        assert_eq!(empty.micro, 0.0);
        let s = f1_scores(&[set(&[0]), set(&[0])], &[set(&[0]), set(&[1])], 5).unwrap();
        assert_eq!(s.micro, 0.5);
        assert!(f1_scores(&truths[..1], &truths, 5).is_err());
    }

    #[test]
    fn macro_counts_absent_labels_as_zero() {
        let truths = vec![set(&[0]), set(&[1])];
        let s = f1_scores(&truths, &truths, 4).unwrap();
        assert_eq!(s.micro, 1.0);
        assert_eq!(s.macro_, 0.5);
    }

    #[test]
    fn mean_std_population() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
        assert_eq!(mean_std(&[]), (0.0, 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ranking(n: usize) -> impl Strategy<Value = Ranking> {
            proptest::collection::vec(0usize..n, n).prop_map(|k| Ranking::from_group_keys(&k))
        }

        proptest! {
            #[test]
            fn kemeny_matches_oracle(a in ranking(6), b in ranking(6)) {
                prop_assert_eq!(kemeny_distance(&a, &b).unwrap(), kemeny_oracle(&a, &b));
            }

            #[test]
            fn position_changes_symmetric(a in ranking(5), b in ranking(5)) {
                let ab = position_changes(&a, &b).unwrap();
                prop_assert_eq!(ab, position_changes(&b, &a).unwrap());
                prop_assert_eq!(ab == 0, a.positions() == b.positions());
            }

            #[test]
            fn positions_skip_after_ties(a in ranking(7)) {
                let pos = a.positions();
                prop_assert_eq!(*pos.iter().min().unwrap(), 1);
                let mut distinct: Vec<usize> = pos.clone();
                distinct.sort_unstable();
                distinct.dedup();
                for w in distinct.windows(2) {
                    let k = pos.iter().filter(|&&p| p == w[0]).count();
                    prop_assert_eq!(w[1], w[0] + k);
                }
            }

            #[test]
            fn rank_scale_invariant(scores in proptest::collection::vec(0u64..200, 5), k in 1u64..50) {
                let scaled: Vec<u64> = scores.iter().map(|s| s * k).collect();
                prop_assert_eq!(Ranking::from_scores(&scores), Ranking::from_scores(&scaled));
            }

            #[test]
            fn totality(a in ranking(6)) {
                for x in 0..6 {
                    for y in 0..6 {
                        let n = [
                            a.strictly_prefers(x, y).unwrap(),
                            a.strictly_prefers(y, x).unwrap(),
                            a.is_tied(x, y).unwrap(),
                        ]
                        .iter()
                        .filter(|&&b| b)
                        .count();
                        prop_assert_eq!(n, 1);
                    }
                }
            }

            #[test]
            fn micro_f1_order_invariant(
                pairs in proptest::collection::vec(
                    (proptest::collection::btree_set(0usize..5, 0..3),
                     proptest::collection::btree_set(0usize..5, 0..3)),
                    1..20),
                seed in any::<u64>(),
            ) {
                let (p, t): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
                let base = f1_scores(&p, &t, 5).unwrap();
                let mut idx: Vec<usize> = (0..p.len()).collect();
                idx.rotate_left((seed as usize) % p.len());
                let p2: Vec<_> = idx.iter().map(|&i| p[i].clone()).collect();
                let t2: Vec<_> = idx.iter().map(|&i| t[i].clone()).collect();
                let shuffled = f1_scores(&p2, &t2, 5).unwrap();
                prop_assert_eq!(base.micro, shuffled.micro);
                prop_assert!((0.0..=1.0).contains(&base.micro));
                prop_assert!((0.0..=1.0).contains(&base.macro_));
            }
        }
    }
}
