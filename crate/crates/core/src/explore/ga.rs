use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{repair, stats, stream, DseConfig, DseTrace, Scores, SearchEngine, SearchResult};
use crate::error::Result;
use crate::evaluate::Evaluator;
use crate::lockpoints::{ObfuscationPoint, SolutionVector};

pub struct Ga(pub DseConfig);

impl SearchEngine for Ga {
    fn name(&self) -> &'static str {
        "ga"
    }

    fn search(&self, ev: &Evaluator) -> Result<SearchResult> {
        ga_explore(ev, &self.0)
    }
}

fn random_gene(rng: &mut ChaCha8Rng, p: &ObfuscationPoint) -> u32 {
    rng.gen_range(p.min_value()..=p.alternatives)
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64], size: usize) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Integer-encoded genetic algorithm with elitism, tournament selection,
/// single-point crossover and per-gene resampling mutation. Infeasible
/// offspring are repaired before scoring; an offspring that duplicates one
/// already in the next generation is replaced by a random immigrant. The result depends only on the
/// seed, never on thread count.
pub fn ga_explore(ev: &Evaluator, cfg: &DseConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let points = &ev.points;
    let n = points.len();
    let k = ev.key_len();
    let mut scores = Scores::new(ev);
    let mut trace = DseTrace::default();

    if n == 0 {
        let pop = vec![SolutionVector::default()];
        let fit = scores.score(&pop)?;
        trace.generations.push(stats(0, &fit, &scores, points));
        return Ok(scores.into_result(points, trace));
    }

    let mut pop: Vec<SolutionVector> = (0..cfg.population)
        .map(|i| {
            let mut rng = stream(cfg.seed, 0, i);
            let mut s = SolutionVector(points.iter().map(|p| random_gene(&mut rng, p)).collect());
            repair(&mut s, points, k);
            s
        })
        .collect();
    let mut fit = scores.score(&pop)?;
    trace.generations.push(stats(0, &fit, &scores, points));
    let mut best = scores.best(points).1;
    let mut stagnant = 0;

    for gen in 1..=cfg.max_generations {
        if stagnant >= cfg.stagnation_limit {
            break;
        }
        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| {
            super::compare((&pop[a], fit[a]), (&pop[b], fit[b]), points).then(a.cmp(&b))
        });
        let mut next: Vec<SolutionVector> = ranked[..cfg.elite].iter().map(|&i| pop[i].clone()).collect();
        let mut seen: HashSet<SolutionVector> = next.iter().cloned().collect();
        for i in cfg.elite..cfg.population {
            let mut rng = stream(cfg.seed, gen, i);
            let a = tournament(&mut rng, &fit, cfg.tournament);
            let b = tournament(&mut rng, &fit, cfg.tournament);
            let mut child = pop[a].clone();
            if rng.gen::<f64>() < cfg.crossover_prob && n >= 2 {
                let cut = rng.gen_range(1..n);
                child.0[cut..].copy_from_slice(&pop[b].0[cut..]);
            }
            if rng.gen::<f64>() < cfg.mutation_prob {
                for (j, p) in points.iter().enumerate() {
                    if rng.gen::<f64>() < cfg.gene_mutation_prob {
                        child.0[j] = random_gene(&mut rng, p);
                    }
                }
            }
            repair(&mut child, points, k);
            if seen.contains(&child) {
                child = SolutionVector(points.iter().map(|p| random_gene(&mut rng, p)).collect());
                repair(&mut child, points, k);
            }
            seen.insert(child.clone());
            next.push(child);
        }
        pop = next;
        fit = scores.score(&pop)?;
        trace.generations.push(stats(gen, &fit, &scores, points));
        let gen_best = scores.best(points).1;
        if gen_best > best {
            best = gen_best;
            stagnant = 0;
        } else {
            stagnant += 1;
        }
    }
    Ok(scores.into_result(points, trace))
}
