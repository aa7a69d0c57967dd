//! Design-space exploration engines.

mod baselines;
mod ga;

use std::collections::HashMap;
use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::Evaluator;
use crate::lockpoints::{key_bits, ObfuscationPoint, SolutionVector};

pub use baselines::{full_solution, random_search, tao_baseline, Full, RandomSearch, Tao};
pub use ga::{ga_explore, Ga};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DseConfig {
    pub population: usize,
    pub max_generations: usize,
    pub stagnation_limit: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub gene_mutation_prob: f64,
    pub elite: usize,
    pub tournament: usize,
    pub seed: u64,
}

impl Default for DseConfig {
    fn default() -> Self {
        DseConfig {
            population: 300,
            max_generations: 1000,
            stagnation_limit: 10,
            crossover_prob: 0.5,
            mutation_prob: 0.2,
            gene_mutation_prob: 0.05,
            elite: 1,
            tournament: 3,
            seed: 0,
        }
    }
}

impl DseConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        for p in [self.crossover_prob, self.mutation_prob, self.gene_mutation_prob] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.elite >= self.population {
            return bad("elite count must be below the population size");
        }
        if self.tournament == 0 {
            return bad("tournament size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    /// Distinct solutions evaluated so far.
    pub evaluations: usize,
    pub best_key_bits: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DseTrace {
    pub generations: Vec<GenerationStats>,
}

impl DseTrace {
    /// Plot-ready CSV, one row per generation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best,mean,std,evaluations,best_key_bits\n");
        for g in &self.generations {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                g.generation, g.best, g.mean, g.std, g.evaluations, g.best_key_bits
            );
        }
        out
    }

    pub fn best_is_monotone(&self) -> bool {
        self.generations.windows(2).all(|w| w[1].best >= w[0].best)
    }
}

/// A search outcome: the best solution and every distinct solution scored.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best: SolutionVector,
    pub best_h: f64,
    /// Distinct evaluated solutions, in evaluation order.
    pub evaluated: Vec<(SolutionVector, f64)>,
    pub trace: DseTrace,
}

impl SearchResult {
    /// Evaluated solutions with H ≥ (1 − ε)·H_best, best first.
    pub fn near_best(&self, epsilon: f64, points: &[ObfuscationPoint]) -> Vec<(SolutionVector, f64)> {
        let floor = (1.0 - epsilon) * self.best_h;
        let mut band: Vec<_> = self.evaluated.iter().filter(|(_, h)| *h >= floor).cloned().collect();
        band.sort_by(|a, b| compare((&a.0, a.1), (&b.0, b.1), points));
        band
    }
}

/// Total order on scored solutions: higher H, then fewer key bits, then the
/// lexicographically smaller vector.
pub fn compare(
    a: (&SolutionVector, f64),
    b: (&SolutionVector, f64),
    points: &[ObfuscationPoint],
) -> std::cmp::Ordering {
    let bits = |s: &SolutionVector| key_bits(s, points).unwrap_or(usize::MAX);
    b.1.total_cmp(&a.1)
        .then_with(|| bits(a.0).cmp(&bits(b.0)))
        .then_with(|| a.0.cmp(b.0))
}

/// A search strategy over solution vectors.
pub trait SearchEngine {
    fn name(&self) -> &'static str;
    fn search(&self, ev: &Evaluator) -> Result<SearchResult>;
}

/// Deactivates active non-forced points, most expensive first (ties: higher
/// point id first), until the solution fits in `key_len` bits.
pub fn repair(solution: &mut SolutionVector, points: &[ObfuscationPoint], key_len: usize) {
    let Ok(mut bits) = key_bits(solution, points) else { return };
    if bits <= key_len {
        return;
    }
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| !points[i].forced).collect();
    order.sort_by(|&a, &b| points[b].key_cost.cmp(&points[a].key_cost).then(b.cmp(&a)));
    for i in order {
        if bits <= key_len {
            break;
        }
        if solution.0[i] != 0 {
            solution.0[i] = 0;
            bits -= points[i].key_cost as usize;
        }
    }
}

/// Independent RNG stream for one (generation, individual) pair.
pub(crate) fn stream(seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | index as u64);
    rng
}

/// Fitness cache shared by the engines. Each distinct vector is scored once.
pub(crate) struct Scores<'a> {
    ev: &'a Evaluator,
    cache: HashMap<SolutionVector, f64>,
    order: Vec<(SolutionVector, f64)>,
}

impl<'a> Scores<'a> {
    pub fn new(ev: &'a Evaluator) -> Self {
        Scores { ev, cache: HashMap::new(), order: Vec::new() }
    }

    /// Scores the unseen vectors of `batch` in parallel and returns the
    /// fitness of every member.
    pub fn score(&mut self, batch: &[SolutionVector]) -> Result<Vec<f64>> {
        let mut fresh: Vec<&SolutionVector> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for s in batch {
            if !self.cache.contains_key(s) && queued.insert(s) {
                fresh.push(s);
            }
        }
        let ev = self.ev;
        let results: Vec<Result<f64>> = fresh.par_iter().map(|s| ev.fitness(s)).collect();
        for (s, r) in fresh.into_iter().zip(results) {
            let h = r?;
            self.cache.insert(s.clone(), h);
            self.order.push((s.clone(), h));
        }
        Ok(batch.iter().map(|s| self.cache[s]).collect())
    }

    pub fn evaluations(&self) -> usize {
        self.order.len()
    }

    pub fn best(&self, points: &[ObfuscationPoint]) -> (SolutionVector, f64) {
        self.order
            .iter()
            .min_by(|a, b| compare((&a.0, a.1), (&b.0, b.1), points))
            .cloned()
            .expect("at least one evaluation")
    }

    pub fn into_result(self, points: &[ObfuscationPoint], trace: DseTrace) -> SearchResult {
        let (best, best_h) = self.best(points);
        SearchResult { best, best_h, evaluated: self.order, trace }
    }
}

pub(crate) fn stats(
    generation: usize,
    fitness: &[f64],
    scores: &Scores<'_>,
    points: &[ObfuscationPoint],
) -> GenerationStats {
    let n = fitness.len() as f64;
    let mean = fitness.iter().sum::<f64>() / n;
    let var = fitness.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
    let (best, best_h) = scores.best(points);
    GenerationStats {
        generation,
        best: best_h,
        mean,
        std: var.sqrt(),
        evaluations: scores.evaluations(),
        best_key_bits: key_bits(&best, points).unwrap_or(0),
    }
}

#[cfg(test)]
mod tests;
