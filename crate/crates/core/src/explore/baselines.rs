use num_bigint::BigUint;
use rand::Rng;

use super::{repair, stats, stream, DseTrace, Scores, SearchEngine, SearchResult};
use crate::error::{Error, Result};
use crate::evaluate::Evaluator;
use crate::lockpoints::{forced_budget, is_feasible, key_bits, space_size, ObfuscationPoint, SolutionVector};

/// Depth-first greedy locking: forced points first, then every point in
/// ascending id order that still fits the remaining budget. Unaffordable
/// points are skipped, not a reason to stop.
pub fn tao_baseline(points: &[ObfuscationPoint], key_len: usize) -> SolutionVector {
    let mut left = key_len.saturating_sub(forced_budget(points));
    let mut s = SolutionVector::zeros(points);
    for (i, p) in points.iter().enumerate() {
        if p.forced {
            continue;
        }
        let cost = p.key_cost as usize;
        if cost <= left {
            s.0[i] = 1;
            left -= cost;
        }
    }
    s
}

/// All points locked with their first variant.
pub fn full_solution(points: &[ObfuscationPoint], key_len: usize) -> Result<SolutionVector> {
    let s = SolutionVector::full(points);
    let needed = key_bits(&s, points)?;
    if needed > key_len {
        return Err(Error::Infeasible { needed, available: key_len });
    }
    Ok(s)
}

fn single(ev: &Evaluator, s: SolutionVector) -> Result<SearchResult> {
    let mut scores = Scores::new(ev);
    let fit = scores.score(std::slice::from_ref(&s))?;
    let trace = DseTrace { generations: vec![stats(0, &fit, &scores, &ev.points)] };
    Ok(scores.into_result(&ev.points, trace))
}

pub struct Tao;

impl SearchEngine for Tao {
    fn name(&self) -> &'static str {
        "tao"
    }

    fn search(&self, ev: &Evaluator) -> Result<SearchResult> {
        single(ev, tao_baseline(&ev.points, ev.key_len()))
    }
}

pub struct Full;

impl SearchEngine for Full {
    fn name(&self) -> &'static str {
        "full"
    }

    fn search(&self, ev: &Evaluator) -> Result<SearchResult> {
        single(ev, full_solution(&ev.points, ev.key_len())?)
    }
}

pub struct RandomSearch {
    pub budget: usize,
    pub seed: u64,
}

impl SearchEngine for RandomSearch {
    fn name(&self) -> &'static str {
        "random"
    }

    fn search(&self, ev: &Evaluator) -> Result<SearchResult> {
        random_search(ev, self.budget, self.seed)
    }
}

/// Every feasible solution, in mixed-radix order.
fn enumerate(points: &[ObfuscationPoint], key_len: usize) -> Vec<SolutionVector> {
    let mut out = Vec::new();
    let mut cur = SolutionVector::zeros(points);
    loop {
        if is_feasible(&cur, points, key_len) {
            out.push(cur.clone());
        }
        let mut j = 0;
        loop {
            if j == points.len() {
                return out;
            }
            if cur.0[j] < points[j].alternatives {
                cur.0[j] += 1;
                break;
            }
            cur.0[j] = points[j].min_value();
            j += 1;
        }
    }
}

/// Best of `budget` uniformly drawn feasible solutions. When the whole space
/// fits in the budget it is enumerated instead.
pub fn random_search(ev: &Evaluator, budget: usize, seed: u64) -> Result<SearchResult> {
    let points = &ev.points;
    let k = ev.key_len();
    if budget == 0 {
        return Err(Error::Config("random search budget must be positive".into()));
    }
    let batch = if space_size(points) <= BigUint::from(budget) {
        enumerate(points, k)
    } else {
        (0..budget)
            .map(|i| {
                let mut rng = stream(seed, 0, i);
                let mut s = SolutionVector::zeros(points);
                for _ in 0..100 {
                    for (j, p) in points.iter().enumerate() {
                        s.0[j] = rng.gen_range(p.min_value()..=p.alternatives);
                    }
                    if is_feasible(&s, points, k) {
                        break;
                    }
                }
                repair(&mut s, points, k);
                s
            })
            .collect()
    };
    let mut scores = Scores::new(ev);
    let fit = scores.score(&batch)?;
    let trace = DseTrace { generations: vec![stats(0, &fit, &scores, points)] };
    Ok(scores.into_result(points, trace))
}
