//! Differential entropy recomputed by enumerating every wrong key, running
//! the re-parsed locked source, and counting flips by hand.

use lockopt::entropy::WrongKeySet;
use lockopt::evaluate::Evaluator;
use lockopt::explore::repair;
use lockopt::key::LockingKey;
use lockopt::lockpoints::{find_points, Constraints, SolutionVector};
use lockopt::minic::{emit_source, parse};
use lockopt::sim::{random_inputs, run, InputVector};

const PROGRAMS: [&str; 6] = [
    "unsigned char f(unsigned char x, unsigned char y){ return (x + y) ^ (x - y); }",
    "int f(int a, int b){ int r; if (a < b) { r = a * 3; } else { r = b | 5; } return r; }",
    "unsigned short f(unsigned short x){ unsigned short s = 0; int i; for (i = 0; i < 4; i++) { s = s + (x >> i); } return s; }",
    "void f(const unsigned char a[4], unsigned char o[2]){ o[0] = a[0] & a[1]; o[1] = a[2] == a[3] ? a[0] : 7; }",
    "int g(int v){ return v - 1; } int f(int a, int b){ return g(a) * g(b) + (a > b); }",
    "unsigned char f(unsigned char x){ unsigned char y = x; while (y > 10) { y = y - 10; } return y; }",
];

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

fn brute(src: &str, top: &str, tests: &[InputVector], key: &LockingKey, budget: u64, golden: &[Vec<u8>]) -> f64 {
    let p = parse(src, Some(top)).unwrap();
    let k = key.len();
    let width = golden[0].len();
    let mut flips = vec![0u64; width];
    let mut runs = 0u64;
    for code in 0u32..(1 << k) {
        let cand = LockingKey::from_bits((0..k).map(|i| ((code >> i) & 1) as u8).collect()).unwrap();
        if cand == *key {
            continue;
        }
        for (t, g) in tests.iter().zip(golden) {
            let out = run(&p, t, Some(&cand), budget).unwrap();
            for i in 0..width {
                if out.bits[i] != g[i] {
                    flips[i] += 1;
                }
            }
            runs += 1;
        }
    }
    if width == 0 {
        return 0.0;
    }
    flips.iter().map(|&f| h(f as f64 / runs as f64)).sum::<f64>() / width as f64
}

#[test]
fn exhaustive_wrong_keys_match_brute_force() {
    let constraints = Constraints { const_bits: 3, ..Default::default() };
    let mut nonzero = 0;
    for (n, src) in PROGRAMS.iter().enumerate() {
        let p = parse(src, Some("f")).unwrap();
        let pts = find_points(&p, &constraints).unwrap();
        assert!(!pts.is_empty());
        for trial in 0..4u64 {
            let k = 10;
            let mut s = SolutionVector(pts.iter().enumerate().map(|(i, pt)| ((i as u64 + trial) % (pt.alternatives as u64 + 1)) as u32).collect());
            repair(&mut s, &pts, k);
            let key = LockingKey::random(k, trial * 31 + n as u64);
            let tests = random_inputs(&p, 6, trial);
            let ev = Evaluator::new(p.clone(), pts.clone(), key.clone(), tests.clone(), WrongKeySet::exhaustive(&key).unwrap(), None)
                .unwrap();
            let locked = ev.lock(&s).unwrap();
            let got = ev.evaluate_locked(&locked).unwrap().h;
            let golden: Vec<Vec<u8>> = ev.golden.iter().map(|g| g.bits.clone()).collect();
            let want = brute(&emit_source(&locked.ast), "f", &tests, &key, ev.step_budget, &golden);
            assert!((got - want).abs() <= 1e-12, "program {n} trial {trial}: {got} vs {want}");
            nonzero += usize::from(got > 0.0);
        }
    }
    assert!(nonzero >= 12, "only {nonzero} non-trivial cases");
}
