//! Flip probabilities under wrong keys and the average differential entropy.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::key::LockingKey;
use crate::sim::{Compiled, Machine, OutputBits, PreparedInput, RunStatus};

/// Binary entropy in bits, with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Mean binary entropy of the per-bit flip probabilities; 0 for no bits.
pub fn differential_entropy(p: &[f64]) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    p.iter().map(|&x| binary_entropy(x)).sum::<f64>() / p.len() as f64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrongKeySet {
    pub keys: Vec<LockingKey>,
    /// `None` for an exhaustively enumerated set.
    pub seed: Option<u64>,
}

/// Draws `w` distinct keys of the correct key's length, none equal to it.
pub fn make_wrong_keys(correct: &LockingKey, w: usize, seed: u64) -> Result<WrongKeySet> {
    let bits = correct.len();
    let space = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
    if w == 0 {
        return Err(Error::EmptyWrongKeys);
    }
    if w as u64 > space {
        return Err(Error::TooManyWrongKeys { requested: w, bits });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(w);
    let mut keys = Vec::with_capacity(w);
    while keys.len() < w {
        let k = LockingKey::from_bits((0..bits).map(|_| rng.gen_range(0..=1u8)).collect())?;
        if &k != correct && seen.insert(k.clone()) {
            keys.push(k);
        }
    }
    Ok(WrongKeySet { keys, seed: Some(seed) })
}

impl WrongKeySet {
    /// Every key of the correct key's length except the correct one, in
    /// ascending numeric order.
    pub fn exhaustive(correct: &LockingKey) -> Result<Self> {
        let bits = correct.len();
        if bits == 0 || bits > 20 {
            return Err(Error::TooManyWrongKeys { requested: usize::MAX, bits });
        }
        let keys = (0u32..1 << bits)
            .map(|v| LockingKey::from_bits((0..bits).map(|j| ((v >> j) & 1) as u8).collect()).unwrap())
            .filter(|k| k != correct)
            .collect();
        Ok(WrongKeySet { keys, seed: None })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Integer flip counts; exact regardless of how the work is split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipCounts {
    pub flips: Vec<u64>,
    pub runs: u64,
    pub statuses: BTreeMap<RunStatus, u64>,
}

impl FlipCounts {
    fn zero(n: usize) -> Self {
        FlipCounts { flips: vec![0; n], runs: 0, statuses: BTreeMap::new() }
    }

    fn merge(mut self, other: FlipCounts) -> Self {
        for (a, b) in self.flips.iter_mut().zip(&other.flips) {
            *a += b;
        }
        self.runs += other.runs;
        for (s, c) in other.statuses {
            *self.statuses.entry(s).or_default() += c;
        }
        self
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.flips.iter().map(|&f| f as f64 / self.runs as f64).collect()
    }
}

/// Counts, per output bit, how many (test, wrong key) runs disagree with the
/// golden output. Runs with abnormal status count with their sentinel bits.
pub fn flip_counts(
    locked: &Compiled,
    tests: &[PreparedInput],
    golden: &[OutputBits],
    wrong_keys: &[LockingKey],
    step_budget: u64,
) -> Result<FlipCounts> {
    if tests.is_empty() {
        return Err(Error::EmptyTests);
    }
    if wrong_keys.is_empty() {
        return Err(Error::EmptyWrongKeys);
    }
    if golden.len() != tests.len() {
        return Err(Error::Input("golden outputs do not match the test set".into()));
    }
    let n = locked.output_bits();
    wrong_keys
        .par_iter()
        .map_init(Machine::default, |m, key| {
            let mut c = FlipCounts::zero(n);
            for (t, g) in tests.iter().zip(golden) {
                let o = locked.run_prepared(m, t, Some(key.bits()), step_budget)?;
                for (f, (a, b)) in c.flips.iter_mut().zip(o.bits.iter().zip(&g.bits)) {
                    *f += u64::from(a ^ b);
                }
                c.runs += 1;
                if o.status != RunStatus::Normal {
                    *c.statuses.entry(o.status).or_default() += 1;
                }
            }
            Ok(c)
        })
        .try_reduce(|| FlipCounts::zero(n), |a, b| Ok(a.merge(b)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub p: Vec<f64>,
    #[serde(rename = "H")]
    pub h: f64,
    /// H scaled by the output width.
    #[serde(rename = "NH")]
    pub nh: f64,
    pub runs: u64,
    /// Abnormal run statuses and their counts.
    pub statuses: BTreeMap<RunStatus, u64>,
}

impl EntropyReport {
    pub fn from_counts(c: &FlipCounts) -> Self {
        let p = c.probabilities();
        let h = differential_entropy(&p);
        EntropyReport { nh: h * p.len() as f64, p, h, runs: c.runs, statuses: c.statuses.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(differential_entropy(&[0.5; 7]), 1.0);
        assert_eq!(differential_entropy(&[0.0, 1.0, 1.0]), 0.0);
        let want = -(0.25f64.log2() * 0.25 + 0.75 * 0.75f64.log2());
        assert!((differential_entropy(&[0.25, 0.75]) - want).abs() < 1e-15);
        assert!((want - 0.811278).abs() < 1e-6);
        assert_eq!(differential_entropy(&[]), 0.0);
    }

    #[test]
    fn exhaustive_small_key() {
        let k = LockingKey::from_bits(vec![1, 0]).unwrap();
        let w = make_wrong_keys(&k, 3, 4).unwrap();
        let mut got: Vec<_> = w.keys.iter().map(|k| k.bits().to_vec()).collect();
        got.sort();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        assert!(make_wrong_keys(&k, 4, 4).is_err());
        assert!(make_wrong_keys(&k, 0, 4).is_err());
        let e = WrongKeySet::exhaustive(&k).unwrap();
        assert_eq!(e.len(), 3);
        assert!(!e.keys.contains(&k));
    }

    #[test]
    fn wrong_keys_deterministic_and_distinct() {
        let k = LockingKey::random(40, 3);
        let a = make_wrong_keys(&k, 200, 11).unwrap();
        assert_eq!(a, make_wrong_keys(&k, 200, 11).unwrap());
        assert_ne!(a, make_wrong_keys(&k, 200, 12).unwrap());
        let set: HashSet<_> = a.keys.iter().collect();
        assert_eq!(set.len(), 200);
        assert!(!set.contains(&k));
    }

    #[test]
    fn wrong_key_bits_are_balanced() {
        let k = LockingKey::random(24, 0);
        let w = make_wrong_keys(&k, 10_000, 5).unwrap();
        for i in 0..24 {
            let mean = w.keys.iter().map(|k| f64::from(k.bit(i))).sum::<f64>() / 10_000.0;
            assert!((mean - 0.5).abs() <= 0.02, "bit {i}: {mean}");
        }
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_symmetry(p in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let h = differential_entropy(&p);
            prop_assert!((0.0..=1.0).contains(&h));
            let q: Vec<f64> = p.iter().map(|x| 1.0 - x).collect();
            prop_assert!((h - differential_entropy(&q)).abs() < 1e-12);
            if p.iter().any(|&x| x != 0.5) {
                prop_assert!(h < 1.0);
            }
        }
    }
}
