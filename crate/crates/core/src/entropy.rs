//! Neural-entropy fitness: normalized Shannon entropy of the neuron-output
//! time series over a 100-bins-per-dimension histogram, pooled across the
//! trials of one evaluation.

use crate::neural::NEURONS;
use std::collections::HashMap;

/// Histogram bins along each output dimension.
pub const BINS_PER_DIM: usize = 100;

/// Sparse histogram over the `[0,1]^3` neuron-output cube.
///
/// Sparse storage keeps per-individual memory small during parallel
/// evaluation; counts are merged bin-wise, so accumulation order never
/// matters.
#[derive(Debug, Clone, Default)]
pub struct Histogram3d {
    counts: HashMap<[u16; NEURONS], u64>,
    total: u64,
}

/// Maximum attainable entropy: uniform occupancy of every bin.
pub fn max_entropy() -> f64 {
    (BINS_PER_DIM as f64).powi(NEURONS as i32).ln()
}

fn bin_index(value: f64) -> u16 {
    ((value * BINS_PER_DIM as f64) as usize).min(BINS_PER_DIM - 1) as u16
}

impl Histogram3d {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one output sample. Components must lie in `[0, 1]`; the value
    /// 1.0 is clamped into the last bin.
    pub fn accumulate(&mut self, sample: [f64; NEURONS]) {
        let mut key = [0u16; NEURONS];
        for (k, value) in key.iter_mut().zip(sample) {
            assert!(
                (0.0..=1.0).contains(&value),
                "output sample {value} outside [0, 1]"
            );
            *k = bin_index(value);
        }
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    /// Bin-wise sum; associative and commutative.
    pub fn merge(&mut self, other: &Histogram3d) {
        for (key, count) in &other.counts {
            *self.counts.entry(*key).or_insert(0) += count;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.len()
    }

    /// Shannon entropy in nats over occupied bins, or `None` for an empty
    /// histogram (degenerate: callers may map it to zero).
    ///
    /// Summation runs over sorted counts so the value is a pure function of
    /// the count multiset: independent of accumulation order, merge
    /// splitting, and hash iteration order across processes. Kahan
    /// compensation keeps the rounding error flat even over a million
    /// occupied bins.
    pub fn shannon_entropy(&self) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let mut counts: Vec<u64> = self.counts.values().copied().collect();
        counts.sort_unstable();
        let total = self.total as f64;
        let mut h = 0.0;
        let mut compensation = 0.0;
        for count in counts {
            let p = count as f64 / total;
            let term = -(p * p.ln()) - compensation;
            let updated = h + term;
            compensation = (updated - h) - term;
            h = updated;
        }
        Some(h)
    }

    /// Entropy divided by [`max_entropy`], in `[0, 1]`.
    pub fn normalized_entropy(&self) -> Option<f64> {
        self.shannon_entropy().map(|h| h / max_entropy())
    }
}

/// Normalized entropy of one histogram pooled over several output series
/// (one per trial). `None` when no samples were supplied.
pub fn pooled_normalized_entropy<'a, I>(series: I) -> Option<f64>
where
    I: IntoIterator<Item = &'a [[f64; NEURONS]]>,
{
    let mut histogram = Histogram3d::new();
    for outputs in series {
        for &sample in outputs {
            histogram.accumulate(sample);
        }
    }
    histogram.normalized_entropy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn bin_indices_cover_boundaries() {
        let mut h = Histogram3d::new();
        h.accumulate([0.005, 0.005, 0.005]);
        assert_eq!(h.counts.keys().next(), Some(&[0, 0, 0]));
        let mut h = Histogram3d::new();
        h.accumulate([1.0, 1.0, 1.0]);
        assert_eq!(h.counts.keys().next(), Some(&[99, 99, 99]));
    }

    #[test]
    fn repeated_point_fills_one_bin() {
        let mut h = Histogram3d::new();
        for _ in 0..17 {
            h.accumulate([0.4, 0.2, 0.9]);
        }
        assert_eq!(h.occupied_bins(), 1);
        assert_eq!(h.total(), 17);
        assert_eq!(h.shannon_entropy(), Some(0.0));
        assert_eq!(h.normalized_entropy(), Some(0.0));
    }

    #[test]
    fn two_equal_bins_give_ln2() {
        let mut h = Histogram3d::new();
        for _ in 0..5 {
            h.accumulate([0.1, 0.1, 0.1]);
            h.accumulate([0.9, 0.9, 0.9]);
        }
        let entropy = h.shannon_entropy().unwrap();
        assert!((entropy - 2.0f64.ln()).abs() < 1e-15);
        let normalized = h.normalized_entropy().unwrap();
        assert!((normalized - 0.050171).abs() < 1e-6);
    }

    #[test]
    fn uniform_occupancy_normalizes_to_one() {
        // Uniform over a full axis-aligned slab of 100x100 bins is exactly
        // uniform over 10^4 outcomes; check against the analytic ratio.
        let mut h = Histogram3d::new();
        for i in 0..BINS_PER_DIM {
            for j in 0..BINS_PER_DIM {
                let x = (i as f64 + 0.5) / BINS_PER_DIM as f64;
                let y = (j as f64 + 0.5) / BINS_PER_DIM as f64;
                h.accumulate([x, y, 0.5]);
            }
        }
        let expected = (1e4f64).ln() / max_entropy();
        assert!((h.normalized_entropy().unwrap() - expected).abs() < 1e-12);
        // Full uniform occupancy reaches exactly 1 by construction of the
        // normalizer; simulate with counts rather than 10^6 samples.
        assert!((max_entropy() - 1e6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_histogram_is_degenerate() {
        let h = Histogram3d::new();
        assert_eq!(h.shannon_entropy(), None);
        assert_eq!(h.normalized_entropy(), None);
    }

    #[test]
    #[should_panic(expected = "outside [0, 1]")]
    fn out_of_range_sample_rejected() {
        let mut h = Histogram3d::new();
        h.accumulate([1.5, 0.0, 0.0]);
    }

    #[test]
    fn entropy_matches_direct_summation_oracle() {
        let mut rng = crate::rng::derive_rng(3, 42, 0);
        let mut h = Histogram3d::new();
        let mut samples = Vec::new();
        for _ in 0..5000 {
            let s = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            samples.push(s);
            h.accumulate(s);
        }
        // Independent route: count into a dense map keyed by tuple, then sum
        // in a different (sorted) order.
        let mut dense: std::collections::BTreeMap<(u16, u16, u16), u64> = Default::default();
        for s in &samples {
            let key = (bin_index(s[0]), bin_index(s[1]), bin_index(s[2]));
            *dense.entry(key).or_insert(0) += 1;
        }
        let n = samples.len() as f64;
        let expected: f64 = dense.values().map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        }).sum();
        assert!((h.shannon_entropy().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn merge_equals_sequential_accumulation() {
        let mut rng = crate::rng::derive_rng(5, 42, 0);
        let samples: Vec<[f64; 3]> = (0..600)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let mut whole = Histogram3d::new();
        for &s in &samples {
            whole.accumulate(s);
        }
        let mut left = Histogram3d::new();
        let mut right = Histogram3d::new();
        for (i, &s) in samples.iter().enumerate() {
            if i % 2 == 0 {
                left.accumulate(s);
            } else {
                right.accumulate(s);
            }
        }
        left.merge(&right);
        assert_eq!(left.total(), whole.total());
        assert_eq!(left.shannon_entropy(), whole.shannon_entropy());
    }

    proptest! {
        #[test]
        fn order_and_duplication_invariance(
            points in prop::collection::vec(prop::array::uniform3(0.0f64..=1.0), 1..80),
            seed in 0u64..1000,
        ) {
            let mut h = Histogram3d::new();
            for &p in &points {
                h.accumulate(p);
            }
            // Permuted order.
            let mut shuffled = points.clone();
            let mut rng = crate::rng::derive_rng(seed, 7, 0);
            for i in (1..shuffled.len()).rev() {
                let j = rng.random_range(0..=i);
                shuffled.swap(i, j);
            }
            let mut hp = Histogram3d::new();
            for &p in &shuffled {
                hp.accumulate(p);
            }
            prop_assert_eq!(h.shannon_entropy(), hp.shannon_entropy());
            // Duplicating the whole multiset leaves relative frequencies alone.
            let mut doubled = Histogram3d::new();
            for &p in points.iter().chain(points.iter()) {
                doubled.accumulate(p);
            }
            let a = h.normalized_entropy().unwrap();
            let b = doubled.normalized_entropy().unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn pooling_matches_concatenation_oracle() {
        let mut rng = crate::rng::derive_rng(9, 42, 0);
        let trials: Vec<Vec<[f64; 3]>> = (0..4)
            .map(|_| (0..300).map(|_| [rng.random(), rng.random(), rng.random()]).collect())
            .collect();
        let pooled = pooled_normalized_entropy(trials.iter().map(|t| t.as_slice())).unwrap();
        let concatenated: Vec<[f64; 3]> = trials.iter().flatten().copied().collect();
        let mut h = Histogram3d::new();
        for s in concatenated {
            h.accumulate(s);
        }
        assert_eq!(pooled, h.normalized_entropy().unwrap());
    }
}
