//! Core domain types: points of the simplex, samples, per-class counts, and
//! deterministic seeded sampling.
//!
//! Class labels are 1-based throughout the public API (`dirac(1, 3)` is the
//! first canonical vector); probability vectors are ordinary 0-indexed slices.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Absolute tolerance on the simplex sum. Tight enough to catch real
/// normalization bugs, loose enough for compensated double-precision sums.
pub const SIMPLEX_SUM_TOLERANCE: f64 = 1e-12;

/// A probability distribution on {1, ..., d}: nonnegative entries summing to
/// one within `SIMPLEX_SUM_TOLERANCE`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates an already-normalized probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Invalid("distribution needs at least one class"));
        }
        if !probs.iter().all(|&p| p.is_finite() && p >= 0.0) {
            return Err(Error::Invalid("probabilities must be finite and >= 0"));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > SIMPLEX_SUM_TOLERANCE {
            return Err(Error::Invalid("probabilities must sum to 1"));
        }
        Ok(Self { probs })
    }

    /// Uniform distribution on d classes.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("distribution needs at least one class"));
        }
        Ok(Self {
            probs: vec![1.0 / d as f64; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Normalizes a vector of nonnegative weights onto the simplex.
pub fn make_distribution(raw: &[f64]) -> Result<Distribution> {
    if raw.is_empty() {
        return Err(Error::Invalid("distribution needs at least one class"));
    }
    if !raw.iter().all(|&w| w.is_finite() && w >= 0.0) {
        return Err(Error::Invalid("weights must be finite and >= 0"));
    }
    let total = compensated_sum(raw.iter().copied());
    if total <= 0.0 {
        return Err(Error::Invalid("weights must not all be zero"));
    }
    Distribution::new(raw.iter().map(|&w| w / total).collect())
}

/// Point mass on class j (1-based), embedded in dimension d.
pub fn dirac(j: usize, d: usize) -> Result<Distribution> {
    if d == 0 {
        return Err(Error::Invalid("distribution needs at least one class"));
    }
    if j == 0 || j > d {
        return Err(Error::Invalid("dirac class out of range"));
    }
    let mut probs = vec![0.0; d];
    probs[j - 1] = 1.0;
    Ok(Distribution { probs })
}

/// Per-class occurrence counts of a sample of size n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
    n: u64,
}

impl CountVector {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
}

/// An observed i.i.d. sample: class labels in {1, ..., d}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    classes: Vec<u32>,
}

impl Sample {
    /// Validates labels against the dimension d.
    pub fn new(classes: Vec<u32>, d: usize) -> Result<Self> {
        if !classes.iter().all(|&c| c >= 1 && (c as usize) <= d) {
            return Err(Error::Invalid("sample label out of range"));
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Seed for one logical random stream. Replication i of an experiment runs on
/// `stream_id = i` under a fixed master seed, so results merge identically
/// whether replications execute serially or in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    /// Generator for this stream. Identical (master_seed, stream_id) replays
    /// identical draws.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub(crate) fn sampler(p: &Distribution) -> WeightedIndex<f64> {
    // Cumulative sums + binary search; zero-mass classes are never drawn.
    WeightedIndex::new(p.probs().iter().copied()).expect("valid distribution has positive total")
}

/// n i.i.d. draws from P, deterministic given the seed.
pub fn sample_iid(p: &Distribution, n: usize, seed: RngSeed) -> Sample {
    let dist = sampler(p);
    let mut rng = seed.rng();
    let classes = (0..n).map(|_| (dist.sample(&mut rng) + 1) as u32).collect();
    Sample { classes }
}

/// Counts occurrences of each class. Panics on labels outside {1, ..., d};
/// `Sample::new` enforces the range for externally built samples.
pub fn count_classes(s: &Sample, d: usize) -> CountVector {
    let mut counts = vec![0u64; d];
    for &c in s.classes() {
        assert!(c >= 1 && (c as usize) <= d, "sample label out of range");
        counts[(c - 1) as usize] += 1;
    }
    CountVector {
        counts,
        n: s.len() as u64,
    }
}

/// Fused `count_classes(sample_iid(p, n, seed), d)` without materializing the
/// sample; consumes the random stream identically.
pub fn sample_counts(p: &Distribution, n: usize, seed: RngSeed) -> CountVector {
    let dist = sampler(p);
    let mut rng = seed.rng();
    let mut counts = vec![0u64; p.dim()];
    for _ in 0..n {
        counts[dist.sample(&mut rng)] += 1;
    }
    CountVector {
        counts,
        n: n as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_distribution_normalizes() {
        let p = make_distribution(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn make_distribution_keeps_degenerate_mass() {
        let p = make_distribution(&[2.0, 0.0]).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn make_distribution_rejects_bad_input() {
        assert!(make_distribution(&[-1.0, 2.0]).is_err());
        assert!(make_distribution(&[0.0, 0.0]).is_err());
        assert!(make_distribution(&[]).is_err());
    }

    #[test]
    fn dirac_places_unit_mass() {
        assert_eq!(dirac(1, 3).unwrap().probs(), &[1.0, 0.0, 0.0]);
        assert_eq!(dirac(3, 3).unwrap().probs(), &[0.0, 0.0, 1.0]);
        assert!(dirac(4, 3).is_err());
        assert!(dirac(0, 3).is_err());
    }

    #[test]
    fn count_classes_tallies_labels() {
        let s = Sample::new(vec![1, 1, 2], 2).unwrap();
        let c = count_classes(&s, 2);
        assert_eq!(c.counts(), &[2, 1]);
        assert_eq!(c.n(), 3);

        let empty = Sample::new(vec![], 3).unwrap();
        let c = count_classes(&empty, 3);
        assert_eq!(c.counts(), &[0, 0, 0]);
        assert_eq!(c.n(), 0);

        let s = Sample::new(vec![3, 3, 3, 1], 3).unwrap();
        let c = count_classes(&s, 3);
        assert_eq!(c.counts(), &[1, 0, 3]);
    }

    #[test]
    fn dirac_sampling_is_constant() {
        let p = dirac(1, 3).unwrap();
        let s = sample_iid(&p, 5, RngSeed::new(7, 0));
        assert_eq!(s.classes(), &[1, 1, 1, 1, 1]);
    }

    #[test]
    fn empty_sample_for_n_zero() {
        let p = Distribution::uniform(4).unwrap();
        assert!(sample_iid(&p, 0, RngSeed::new(1, 0)).is_empty());
    }

    #[test]
    fn replay_is_bit_identical() {
        let p = make_distribution(&[0.5, 0.3, 0.2]).unwrap();
        let seed = RngSeed::new(42, 9);
        assert_eq!(sample_iid(&p, 1000, seed), sample_iid(&p, 1000, seed));
        // A different stream diverges.
        assert_ne!(
            sample_iid(&p, 1000, seed),
            sample_iid(&p, 1000, seed.with_stream(10))
        );
    }

    #[test]
    fn sample_counts_matches_count_of_sample() {
        let p = make_distribution(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let seed = RngSeed::new(5, 3);
        let via_sample = count_classes(&sample_iid(&p, 5000, seed), 4);
        assert_eq!(sample_counts(&p, 5000, seed), via_sample);
    }

    #[test]
    fn coin_frequency_near_half_at_one_million() {
        // Binomial 4-sigma band: |freq - 0.5| <= 4 * 0.5 / 1000 = 0.002.
        let p = Distribution::uniform(2).unwrap();
        let c = sample_counts(&p, 1_000_000, RngSeed::new(2024, 0));
        let freq = c.counts()[0] as f64 / 1e6;
        assert!((freq - 0.5).abs() < 0.002, "freq {freq}");
    }

    #[test]
    fn zero_mass_class_never_drawn() {
        let p = make_distribution(&[0.0, 1.0, 0.0]).unwrap();
        let s = sample_iid(&p, 10_000, RngSeed::new(3, 0));
        assert!(s.classes().iter().all(|&c| c == 2));
    }

    #[test]
    fn frequencies_track_probabilities_for_random_simplex_point() {
        // Golden seeded check: max_j |N_j/n - p_j| within five binomial
        // standard deviations plus 1e-3 at n = 1e6, d = 50.
        let mut rng = RngSeed::new(77, 0).rng();
        let raw: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let p = make_distribution(&raw).unwrap();
        let n = 1_000_000usize;
        let c = sample_counts(&p, n, RngSeed::new(77, 1));
        for (j, (&cnt, &pj)) in c.counts().iter().zip(p.probs()).enumerate() {
            let freq = cnt as f64 / n as f64;
            let band = 5.0 * (pj * (1.0 - pj) / n as f64).sqrt() + 1e-3;
            assert!((freq - pj).abs() <= band, "class {j} freq {freq} p {pj}");
        }
    }
}
