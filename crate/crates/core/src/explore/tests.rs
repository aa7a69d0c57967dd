use super::*;
use crate::entropy::make_wrong_keys;
use crate::key::LockingKey;
use crate::lockpoints::{descriptor_points, find_points, full_budget, Constraints, PointKind, CONST_BITS};
use crate::minic::parse;
use crate::sim::random_inputs;

fn evaluator(src: &str, tests: usize, wrong: usize) -> Evaluator {
    let p = parse(src, None).unwrap();
    let points = find_points(&p, &Constraints::default()).unwrap();
    let key = LockingKey::random(full_budget(&points).max(1), 7);
    let wk = make_wrong_keys(&key, wrong, 8).unwrap();
    let t = random_inputs(&p, tests, 9);
    Evaluator::new(p, points, key, t, wk, None).unwrap()
}

const TOY12: &str = "int top(int a, int b){ return (a ? 3 : b) + b; }";

fn small_ga(seed: u64) -> DseConfig {
    DseConfig { population: 12, seed, ..DseConfig::default() }
}

#[test]
fn toy_space_has_twelve_solutions() {
    let ev = evaluator(TOY12, 16, 32);
    let alts: Vec<u32> = ev.points.iter().map(|p| p.alternatives).collect();
    assert_eq!(alts, vec![2, 1, 1]);
    assert_eq!(crate::lockpoints::space_size(&ev.points), 12u32.into());
}

#[test]
fn ga_finds_exhaustive_optimum_on_toy() {
    let ev = evaluator(TOY12, 16, 32);
    let all = random_search(&ev, 12, 0).unwrap();
    assert_eq!(all.evaluated.len(), 12);
    let r = ga_explore(&ev, &small_ga(3)).unwrap();
    assert_eq!(r.best_h, all.best_h);
    assert!(r.trace.best_is_monotone());
}

#[test]
fn ga_is_deterministic() {
    let ev = evaluator(TOY12, 8, 16);
    let a = ga_explore(&ev, &small_ga(5)).unwrap();
    let b = ga_explore(&ev, &small_ga(5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
}

#[test]
fn ga_with_no_points_scores_once() {
    let ev = evaluator("int top(int a){ return a; }", 4, 1);
    let r = ga_explore(&ev, &small_ga(1)).unwrap();
    assert!(r.best.is_empty());
    assert_eq!(r.evaluated.len(), 1);
    assert_eq!(r.best_h, 0.0);
}

#[test]
fn ga_caches_and_stays_feasible() {
    let ev = evaluator("int top(int a, int b){ int c = a * b + 7; return c - (a ^ b) * 5; }", 8, 16);
    let mut key = ev.key.clone();
    key = key.truncated(full_budget(&ev.points) / 2);
    let wk = make_wrong_keys(&key, 16, 1).unwrap();
    let ev = Evaluator::new(ev.program, ev.points, key, ev.tests, wk, None).unwrap();
    let r = ga_explore(&ev, &DseConfig { population: 20, max_generations: 15, ..Default::default() }).unwrap();
    let mut seen = std::collections::HashSet::new();
    for (s, _) in &r.evaluated {
        assert!(seen.insert(s.clone()), "evaluated twice: {s}");
        assert!(is_ok(s, &ev));
    }
    assert_eq!(r.trace.generations.last().unwrap().evaluations, r.evaluated.len());
}

fn is_ok(s: &SolutionVector, ev: &Evaluator) -> bool {
    s.validate(&ev.points).is_ok() && crate::lockpoints::is_feasible(s, &ev.points, ev.key_len())
}

#[test]
fn tao_greedy_skips_unaffordable() {
    let mut pts = descriptor_points(0, 2, 1, CONST_BITS);
    // reorder as [const, op, op]
    pts.rotate_right(1);
    for (i, p) in pts.iter_mut().enumerate() {
        p.point_id = i;
    }
    assert_eq!(pts[0].kind, PointKind::Constant);
    assert_eq!(tao_baseline(&pts, 33).0, vec![1, 1, 0]);
    assert_eq!(tao_baseline(&pts, 1).0, vec![0, 1, 0]);
    assert_eq!(tao_baseline(&pts, 34).0, vec![1, 1, 1]);
    assert_eq!(tao_baseline(&pts, 100), full_solution(&pts, 100).unwrap());
    assert!(full_solution(&pts, 33).is_err());
}

#[test]
fn tao_honours_forced_points() {
    let mut pts = descriptor_points(0, 2, 1, CONST_BITS);
    pts[2].forced = true;
    assert_eq!(tao_baseline(&pts, 33).0, vec![1, 0, 1]);
}

#[test]
fn repair_order() {
    let pts = descriptor_points(1, 2, 2, CONST_BITS);
    let mut s = SolutionVector(vec![1, 1, 2, 1, 1]);
    repair(&mut s, &pts, 40);
    // drop the later constant first
    assert_eq!(s.0, vec![1, 1, 2, 1, 0]);
    let mut s = SolutionVector(vec![1, 1, 2, 1, 1]);
    repair(&mut s, &pts, 1);
    assert_eq!(s.0, vec![1, 0, 0, 0, 0]);
}

#[test]
fn random_search_is_seeded() {
    let ev = evaluator("int top(int a, int b){ int c = a * b + 7; return c - (a ^ b) * 5 + (a << 2); }", 8, 16);
    let a = random_search(&ev, 5, 42).unwrap();
    assert_eq!(a, random_search(&ev, 5, 42).unwrap());
    let one = random_search(&ev, 1, 42).unwrap();
    assert_eq!(one.evaluated.len(), 1);
    assert_eq!(one.best_h, ev.fitness(&one.best).unwrap());
}

#[test]
fn band_filter() {
    let pts = descriptor_points(0, 3, 0, CONST_BITS);
    let r = SearchResult {
        best: SolutionVector(vec![1, 1, 1]),
        best_h: 0.5,
        evaluated: vec![
            (SolutionVector(vec![0, 1, 0]), 0.495),
            (SolutionVector(vec![1, 1, 1]), 0.5),
            (SolutionVector(vec![1, 0, 0]), 0.48),
        ],
        trace: DseTrace::default(),
    };
    let band = r.near_best(0.02, &pts);
    assert_eq!(band.len(), 2);
    assert_eq!(band[0].0 .0, vec![1, 1, 1]);
}

#[test]
fn config_validation() {
    assert!(DseConfig::default().validate().is_ok());
    assert!(DseConfig { population: 1, ..Default::default() }.validate().is_err());
    assert!(DseConfig { elite: 300, ..Default::default() }.validate().is_err());
    assert!(DseConfig { mutation_prob: 1.5, ..Default::default() }.validate().is_err());
}
