use ndarray::ArrayView1;

use crate::stats::percentile;

/// Feature/target dependence score in `[0, 1]`, used as the bandit prior.
pub trait AssociationScorer {
    fn score(&self, column: ArrayView1<'_, f64>, labels: &[u8]) -> f64;
}

/// Mutual information between the quantile-binned column and the label,
/// in units of `ln 2` and capped at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinnedMutualInformation {
    pub bins: usize,
}

impl Default for BinnedMutualInformation {
    fn default() -> Self {
        Self { bins: 10 }
    }
}

impl AssociationScorer for BinnedMutualInformation {
    fn score(&self, column: ArrayView1<'_, f64>, labels: &[u8]) -> f64 {
        let n = column.len();
        if n == 0 || labels.len() != n {
            return 0.0;
        }
        let values = column.to_vec();
        let mut edges: Vec<f64> = (1..self.bins.max(1))
            .map(|k| percentile(&values, k as f64 / self.bins as f64))
            .collect();
        edges.dedup();
        let n_bins = edges.len() + 1;
        let mut joint = vec![[0usize; 2]; n_bins];
        for (&v, &y) in values.iter().zip(labels) {
            let bin = edges.partition_point(|&e| e < v);
            joint[bin][usize::from(y == 1)] += 1;
        }
        let total = n as f64;
        let py = [0, 1].map(|c| joint.iter().map(|row| row[c]).sum::<usize>() as f64 / total);
        let mut mi = 0.0;
        for row in &joint {
            let px = (row[0] + row[1]) as f64 / total;
            for c in 0..2 {
                if row[c] == 0 {
                    continue;
                }
                let pxy = row[c] as f64 / total;
                mi += pxy * (pxy / (px * py[c])).ln();
            }
        }
        (mi / std::f64::consts::LN_2).clamp(0.0, 1.0)
    }
}

/// Score with the default binned mutual-information estimator.
pub fn association_score(column: ArrayView1<'_, f64>, labels: &[u8]) -> f64 {
    BinnedMutualInformation::default().score(column, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_column_scores_one() {
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let col = Array1::from_iter(labels.iter().map(|&l| l as f64));
        assert!((association_score(col.view(), &labels) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_noise_scores_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let col = Array1::from_iter((0..n).map(|_| rng.gen_range(0.0..1.0)));
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        assert!(association_score(col.view(), &labels) < 0.05);
    }

    #[test]
    fn affine_rescaling_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let col = Array1::from_iter((0..500).map(|_| rng.gen_range(0.0..1.0)));
        let labels: Vec<u8> = col.iter().map(|&v| u8::from(v + rng.gen_range(-0.3..0.3) > 0.5)).collect();
        let a = association_score(col.view(), &labels);
        let b = association_score(col.mapv(|v| 3.0 * v - 7.0).view(), &labels);
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.1);
    }

    proptest! {
        #[test]
        fn permutation_equivariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 200;
            let col: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let labels: Vec<u8> = col.iter().map(|&v| u8::from(v > rng.gen_range(0.2..0.8))).collect();
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let pc = Array1::from_iter(idx.iter().map(|&i| col[i]));
            let pl: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            let a = association_score(Array1::from(col).view(), &labels);
            let b = association_score(pc.view(), &pl);
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
