//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances and limits are the constants below.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lockopt::benchmarks::{self, ALL};
use lockopt::entropy::{binary_entropy, differential_entropy, make_wrong_keys, WrongKeySet};
use lockopt::evaluate::Evaluator;
use lockopt::explore::{ga_explore, repair, DseConfig, DseTrace};
use lockopt::key::LockingKey;
use lockopt::locker::apply_locking;
use lockopt::lockpoints::{descriptor_points, find_points, full_budget, Constraints, ObfuscationPoint, PointKind, SolutionVector};
use lockopt::pipeline::{self, EngineKind, RunConfig};
use lockopt::sim::{golden, random_inputs, run, DEFAULT_STEP_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C1_TOLERANCE_BITS: usize = 0;
const C1_MAX_SECONDS: f64 = 1.0;
const C2_MIN_PROGRAMS: usize = 5;
const C2_MAX_KEY_BITS: usize = 10;
const C2_ABS_TOLERANCE: f64 = 1e-12;
const C2_MAX_SECONDS: f64 = 60.0;
const C3_SAMPLES: usize = 10_000;
const C3_SYMMETRY_TOLERANCE: f64 = 1e-12;
/// One flip in a million runs away from one half.
const C3_SMALLEST_PERTURBATION: f64 = 1.0 / 1_048_576.0;
const C4_TRIPLES_PER_BENCHMARK: usize = 30;
const C4_TESTS_PER_TRIPLE: usize = 16;
const C5_MAX_SPACE: u64 = 4096;
const C6_RUNS: u64 = 30;
const C6_MIN_HITS: usize = 28;
const C6_MAX_RUN_SECONDS: f64 = 30.0;
const C6_STAGNATION_LIMIT: usize = 20;
const C7_MAX_SECONDS: f64 = 5.0;
const C8_JOBS: [usize; 2] = [1, 4];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------------------
// 1. key budget of the benchmark descriptors

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let rows: [(&str, usize, usize, usize, usize); 6] = [
        ("aes", 4, 111, 149, 4883),
        ("bubblesort", 0, 11, 4, 139),
        ("adpcm", 7, 121, 69, 2336),
        ("sha", 0, 76, 40, 1356),
        ("patricia", 2, 9, 3, 107),
        ("gsm", 29, 251, 172, 5784),
    ];
    let mut bad = Vec::new();
    for (name, ctrl, op, consts, bits) in rows {
        let pts = descriptor_points(ctrl, op, consts, 32);
        let got = full_budget(&pts);
        if got.abs_diff(bits) > C1_TOLERANCE_BITS {
            bad.push(format!("{name}: {got} != {bits}"));
        }
    }
    let bubble = pipeline::analyze("bench:bubblesort", None, &Constraints::default()).unwrap();
    if bubble.summary.bits != 139 {
        bad.push(format!("bundled bubblesort analyzes to {}", bubble.summary));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= C1_MAX_SECONDS {
        bad.push(format!("took {secs:.3}s"));
    }
    if bad.is_empty() {
        verdict(true, format!("6 rows exact, bundled bubblesort row `{}`, {secs:.3}s", bubble.summary))
    } else {
        verdict(false, bad.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 2. entropy against closed-form models of the locked programs

/// Closed-form output of the locked toy under key `k` when `c` is correct.
type Model = fn(&[i64], &[u8], &[u8]) -> u32;

struct Toy {
    name: &'static str,
    src: &'static str,
    const_bits: u32,
    kinds: &'static [PointKind],
    solution: &'static [u32],
    allocated: usize,
    key_hex: &'static str,
    params: &'static [&'static str],
    inputs: Vec<Vec<i64>>,
    width: usize,
    model: Model,
}

fn ok(k: &[u8], c: &[u8], i: usize) -> bool {
    k[i] == c[i]
}

fn grid(a: &[i64], b: &[i64]) -> Vec<Vec<i64>> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| vec![x, y])).collect()
}

fn toys() -> Vec<Toy> {
    use PointKind::*;
    let bytes: Vec<i64> = (0..256).collect();
    let some = [0, 1, 3, 77, 128, 255];
    let ints = [-5, -1, 0, 1, 2, 7, 1000, i32::MIN as i64, i32::MAX as i64];
    vec![
        Toy {
            name: "add",
            src: "unsigned char f(unsigned char x, unsigned char y){ return x + y; }",
            const_bits: 32,
            kinds: &[Operation],
            solution: &[1],
            allocated: 1,
            key_hex: "a5",
            params: &["x", "y"],
            inputs: grid(&bytes, &some),
            width: 8,
            model: |v, k, c| {
                let (x, y) = (v[0] as u8, v[1] as u8);
                u32::from(if ok(k, c, 0) { x.wrapping_add(y) } else { x.wrapping_sub(y) })
            },
        },
        Toy {
            name: "cancel",
            src: "unsigned char f(unsigned char x, unsigned char y){ unsigned char t; t = x + y; t = t - y; return t; }",
            const_bits: 32,
            kinds: &[Operation, Operation],
            solution: &[1, 2],
            allocated: 2,
            key_hex: "5a",
            params: &["x", "y"],
            inputs: grid(&bytes, &some),
            width: 8,
            model: |v, k, c| {
                let (x, y) = (v[0] as u8, v[1] as u8);
                let t = if ok(k, c, 0) { x.wrapping_add(y) } else { x.wrapping_sub(y) };
                u32::from(if ok(k, c, 1) { t.wrapping_sub(y) } else { t.wrapping_mul(y) })
            },
        },
        Toy {
            name: "branch",
            src: "unsigned char f(unsigned char x, unsigned char y){ unsigned char r; if (x < y) { r = x; } else { r = y; } return r ^ x; }",
            const_bits: 32,
            kinds: &[Branch, Operation],
            solution: &[1, 2],
            allocated: 2,
            key_hex: "c3",
            params: &["x", "y"],
            inputs: grid(&bytes, &some),
            width: 8,
            model: |v, k, c| {
                let (x, y) = (v[0] as u8, v[1] as u8);
                let cond = (x < y) == ok(k, c, 0);
                let r = if cond { x } else { y };
                u32::from(if ok(k, c, 1) { r ^ x } else { r | x })
            },
        },
        Toy {
            name: "constant",
            src: "unsigned char f(unsigned char x){ return x ^ 0x3c; }",
            const_bits: 4,
            kinds: &[Operation, Constant],
            solution: &[2, 1],
            allocated: 5,
            key_hex: "96",
            params: &["x"],
            inputs: (0..256).map(|x| vec![x]).collect(),
            width: 8,
            model: |v, k, c| {
                let x = v[0] as u32;
                let d = (0..4).fold(0, |acc, j| acc | (u32::from(k[1 + j] ^ c[1 + j]) << j));
                let cst = 0x3c ^ d;
                (if ok(k, c, 0) { x ^ cst } else { x | cst }) & 0xff
            },
        },
        Toy {
            name: "loop",
            src: "unsigned char f(unsigned char x){ unsigned char s; unsigned char i; s = 0; for (i = 0; i < 3; i++) { s = s + x; } return s; }",
            const_bits: 2,
            kinds: &[Constant, Constant, Operation, Constant, Operation],
            solution: &[0, 0, 1, 1, 1],
            allocated: 4,
            key_hex: "e1",
            params: &["x"],
            inputs: (0..256).map(|x| vec![x]).collect(),
            width: 8,
            model: |v, k, c| {
                let x = v[0] as u8;
                let n = 3 ^ ((k[1] ^ c[1]) | ((k[2] ^ c[2]) << 1));
                if !ok(k, c, 0) {
                    // `i >= n` either exits at once or, for n = 0, never
                    // terminates, and an aborted run reads as zero
                    return 0;
                }
                let s = n.wrapping_mul(x);
                u32::from(if ok(k, c, 3) { s } else { s.wrapping_neg() })
            },
        },
        Toy {
            name: "compare",
            src: "int f(int a, int b){ return (a > b) + (a == b); }",
            const_bits: 32,
            kinds: &[Operation, Operation, Operation],
            solution: &[1, 1, 1],
            allocated: 3,
            key_hex: "3c",
            params: &["a", "b"],
            inputs: grid(&ints, &ints),
            width: 32,
            model: |v, k, c| {
                let (a, b) = (v[0] as i32, v[1] as i32);
                let g = if ok(k, c, 1) { a > b } else { a <= b } as i32;
                let e = if ok(k, c, 2) { a == b } else { a != b } as i32;
                (if ok(k, c, 0) { g + e } else { g - e }) as u32
            },
        },
    ]
}

fn hex_bits(hex: &str) -> Vec<u8> {
    (0..hex.len() / 2)
        .flat_map(|i| {
            let byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).unwrap();
            (0..8).map(move |j| (byte >> j) & 1)
        })
        .collect()
}

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn oracle_entropy(t: &Toy) -> f64 {
    let c = hex_bits(t.key_hex);
    let k_len = c.len();
    let mut flips = vec![0u64; t.width];
    let mut runs = 0u64;
    for code in 0u32..(1 << k_len) {
        let k: Vec<u8> = (0..k_len).map(|i| ((code >> i) & 1) as u8).collect();
        if k == c {
            continue;
        }
        for v in &t.inputs {
            let diff = (t.model)(v, &k, &c) ^ (t.model)(v, &c, &c);
            for (i, f) in flips.iter_mut().enumerate() {
                *f += u64::from((diff >> i) & 1);
            }
            runs += 1;
        }
    }
    flips.iter().map(|&f| h(f as f64 / runs as f64)).sum::<f64>() / t.width as f64
}

fn criterion_2(dir: &Path) -> Verdict {
    let start = Instant::now();
    let toys = toys();
    let mut bad = Vec::new();
    let mut worst = 0f64;
    for t in &toys {
        let src = dir.join(format!("{}.c", t.name));
        std::fs::write(&src, t.src).unwrap();
        let tests: Vec<serde_json::Value> = t
            .inputs
            .iter()
            .map(|v| serde_json::Value::Object(t.params.iter().zip(v).map(|(n, x)| (n.to_string(), (*x).into())).collect()))
            .collect();
        let tests_path = dir.join(format!("{}.tests.json", t.name));
        std::fs::write(&tests_path, serde_json::to_string(&tests).unwrap()).unwrap();

        let constraints = Constraints { const_bits: t.const_bits, ..Default::default() };
        let analysis = pipeline::analyze(src.to_str().unwrap(), Some("f"), &constraints).unwrap();
        let kinds: Vec<PointKind> = analysis.points.iter().map(|p| p.kind).collect();
        if kinds != t.kinds {
            bad.push(format!("{}: point kinds {kinds:?}", t.name));
            continue;
        }
        let k_len = t.key_hex.len() * 4;
        let cfg = RunConfig {
            src: src.to_str().unwrap().into(),
            top: Some("f".into()),
            key: Some(t.key_hex.into()),
            tests: Some(tests_path.to_str().unwrap().into()),
            wrong_keys: (1 << k_len) - 1,
            constraints,
            ..Default::default()
        };
        let rep = pipeline::evaluate(&cfg, &SolutionVector(t.solution.to_vec())).unwrap();
        if t.allocated > C2_MAX_KEY_BITS || rep.cost.key_bits != t.allocated {
            bad.push(format!("{}: {} allocated key bits", t.name, rep.cost.key_bits));
        }
        let expected_runs = ((1u64 << k_len) - 1) * t.inputs.len() as u64;
        if rep.entropy.runs != expected_runs {
            bad.push(format!("{}: {} runs, expected {expected_runs}", t.name, rep.entropy.runs));
        }
        let want = oracle_entropy(t);
        let err = (rep.entropy.h - want).abs();
        worst = worst.max(err);
        if err > C2_ABS_TOLERANCE || want == 0.0 {
            bad.push(format!("{}: pipeline {} vs oracle {want}", t.name, rep.entropy.h));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= C2_MAX_SECONDS {
        bad.push(format!("took {secs:.1}s"));
    }
    if toys.len() < C2_MIN_PROGRAMS {
        bad.push("too few programs".into());
    }
    if bad.is_empty() {
        verdict(true, format!("{} programs, max |dH| {worst:.1e}, {secs:.1}s", toys.len()))
    } else {
        verdict(false, bad.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 3. shape of the metric

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = Vec::new();
    if binary_entropy(0.0) != 0.0 || binary_entropy(1.0) != 0.0 {
        bad.push("h(0) or h(1) nonzero".to_string());
    }
    let mut at_max = 0;
    for n in 0..C3_SAMPLES {
        let len = rng.gen_range(1..=64);
        let p: Vec<f64> = match n % 4 {
            // every coordinate exactly one half
            0 if n % 8 == 0 => vec![0.5; len],
            // one half except a single coordinate; below about 1e-8 the
            // entropy deficit of a perturbation is lost to f64 rounding
            0 => {
                let mut v = vec![0.5; len];
                let i = rng.gen_range(0..len);
                v[i] = [0.0, 1.0, 0.25, 0.5 + C3_SMALLEST_PERTURBATION][rng.gen_range(0..4)];
                v
            }
            1 => (0..len).map(|_| [0.0, 1.0, 0.5][rng.gen_range(0..3)]).collect(),
            _ => (0..len).map(|_| rng.gen::<f64>()).collect(),
        };
        let hp = differential_entropy(&p);
        let flipped: Vec<f64> = p.iter().map(|x| 1.0 - x).collect();
        let all_half = p.iter().all(|&x| x == 0.5);
        if all_half {
            at_max += 1;
        }
        if (hp == 1.0) != all_half {
            bad.push(format!("H = {hp} for {p:?}"));
        }
        if (hp - differential_entropy(&flipped)).abs() > C3_SYMMETRY_TOLERANCE {
            bad.push(format!("asymmetric at {p:?}"));
        }
        if !(0.0..=1.0).contains(&hp) {
            bad.push(format!("H = {hp} out of range"));
        }
        let oracle = p.iter().map(|&x| h(x)).sum::<f64>() / p.len() as f64;
        if (hp - oracle).abs() > C3_SYMMETRY_TOLERANCE {
            bad.push(format!("H = {hp}, direct formula {oracle}"));
        }
        if bad.len() > 3 {
            break;
        }
    }
    if bad.is_empty() {
        verdict(true, format!("{C3_SAMPLES} vectors, {at_max} at the maximum"))
    } else {
        verdict(false, bad.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 4. correct key reproduces golden outputs

fn random_solution(rng: &mut ChaCha8Rng, pts: &[ObfuscationPoint], k: usize) -> SolutionVector {
    let mut s = SolutionVector(pts.iter().map(|p| rng.gen_range(0..=p.alternatives)).collect());
    repair(&mut s, pts, k);
    s
}

fn criterion_4() -> Verdict {
    let mut mismatches = 0;
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for b in ALL {
        let p = b.program();
        let pts = find_points(&p, &Constraints::default()).unwrap();
        let full = full_budget(&pts);
        for _ in 0..C4_TRIPLES_PER_BENCHMARK {
            let k = rng.gen_range(1..=full.max(1));
            let s = random_solution(&mut rng, &pts, k);
            let key = LockingKey::random(k, rng.gen());
            let locked = apply_locking(&p, &pts, &s, &key).unwrap();
            let tests = random_inputs(&p, C4_TESTS_PER_TRIPLE, rng.gen());
            for (t, g) in tests.iter().zip(golden(&p, &tests).unwrap()) {
                let out = run(&locked.ast, t, Some(&key), DEFAULT_STEP_BUDGET).unwrap();
                checked += 1;
                if out.bits != g.bits || out.status != g.status {
                    mismatches += 1;
                }
            }
        }
    }
    verdict(
        mismatches == 0,
        format!("{} benchmarks x {C4_TRIPLES_PER_BENCHMARK} triples, {checked} runs, {mismatches} mismatches", ALL.len()),
    )
}

// ---------------------------------------------------------------------------
// 5. a partial solution beats locking everything on the cancellation program

fn all_vectors(pts: &[ObfuscationPoint]) -> Vec<SolutionVector> {
    let mut out = vec![SolutionVector(vec![])];
    for p in pts {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..=p.alternatives).map(move |v| {
                    let mut n = s.0.clone();
                    n.push(v);
                    SolutionVector(n)
                })
            })
            .collect();
    }
    out
}

fn criterion_5(traces: &mut Vec<DseTrace>) -> Verdict {
    let base = RunConfig { src: "bench:cancel".into(), seed: 5, ..Default::default() };
    let ga = pipeline::lock(&RunConfig { engine: EngineKind::Ga, ..base.clone() }).unwrap();
    let tao = pipeline::lock(&RunConfig { engine: EngineKind::Tao, ..base.clone() }).unwrap();
    let pts = pipeline::analyze("bench:cancel", None, &Constraints::default()).unwrap().points;
    let space = all_vectors(&pts);
    if space.len() as u64 > C5_MAX_SPACE {
        return verdict(false, format!("space has {} solutions", space.len()));
    }
    let mut best = f64::MIN;
    let mut h_full = f64::NAN;
    for s in &space {
        let h = pipeline::evaluate(&base, s).unwrap().entropy.h;
        best = best.max(h);
        if s.0.iter().all(|&v| v == 1) {
            h_full = h;
        }
    }
    traces.push(DseTrace { generations: ga.report.trace.clone() });
    let g = &ga.report.search;
    let partial = g.best.0.iter().any(|&v| v != 1);
    let pass = g.best_h == best && g.best_h > h_full && partial && g.best_h > tao.report.search.best_h;
    verdict(
        pass,
        format!(
            "GA best {} H {:.6} = exhaustive max over {} solutions; full H {:.6}; tao H {:.6}",
            g.best,
            g.best_h,
            space.len(),
            h_full,
            tao.report.search.best_h
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. GA reaches the exhaustive optimum on small instances

fn criterion_6(traces: &mut Vec<DseTrace>) -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for name in ["cancel", "mix", "shift"] {
        let p = benchmarks::get(name).unwrap().program();
        let pts = find_points(&p, &Constraints::default()).unwrap();
        let key = LockingKey::random(full_budget(&pts), 60);
        let wrong = if key.len() <= 5 { WrongKeySet::exhaustive(&key).unwrap() } else { make_wrong_keys(&key, 32, 61).unwrap() };
        let tests = random_inputs(&p, 32, 62);
        let ev = Evaluator::new(p, pts.clone(), key, tests, wrong, None).unwrap();
        let space = all_vectors(&pts);
        assert!(space.len() as u64 <= C5_MAX_SPACE);
        let optimum = space.iter().map(|s| ev.fitness(s).unwrap()).fold(f64::MIN, f64::max);
        let mut hits = 0;
        let mut slowest = 0f64;
        let mut evals = 0;
        for seed in 0..C6_RUNS {
            let start = Instant::now();
            let r = ga_explore(&ev, &DseConfig { seed, stagnation_limit: C6_STAGNATION_LIMIT, ..Default::default() }).unwrap();
            slowest = slowest.max(start.elapsed().as_secs_f64());
            hits += usize::from(r.best_h == optimum);
            evals += r.evaluated.len();
            traces.push(r.trace);
        }
        pass &= hits >= C6_MIN_HITS && slowest < C6_MAX_RUN_SECONDS;
        lines.push(format!(
            "{name}: {hits}/{C6_RUNS} (space {}, mean {} evaluations, slowest {slowest:.2}s)",
            space.len(),
            evals / C6_RUNS as usize
        ));
    }
    verdict(pass, format!("stagnation limit {C6_STAGNATION_LIMIT}; {}", lines.join("; ")))
}

// ---------------------------------------------------------------------------
// 7. monotone traces, fast baselines

fn criterion_7(traces: &[DseTrace]) -> Verdict {
    let mut bad = Vec::new();
    let mut slowest = (0f64, "");
    let mut all = traces.to_vec();
    for b in ALL {
        for engine in [EngineKind::Tao, EngineKind::Full] {
            let start = Instant::now();
            let o = pipeline::lock(&RunConfig { src: format!("bench:{}", b.name), engine, ..Default::default() }).unwrap();
            let secs = start.elapsed().as_secs_f64();
            if secs > slowest.0 {
                slowest = (secs, b.name);
            }
            if secs >= C7_MAX_SECONDS {
                bad.push(format!("{engine} on {} took {secs:.2}s", b.name));
            }
            all.push(DseTrace { generations: o.report.trace });
        }
    }
    let non_monotone = all.iter().filter(|t| !t.best_is_monotone()).count();
    if non_monotone > 0 {
        bad.push(format!("{non_monotone} traces with a decreasing best"));
    }
    if bad.is_empty() {
        verdict(
            true,
            format!("{} traces monotone; slowest baseline {:.2}s ({})", all.len(), slowest.0, slowest.1),
        )
    } else {
        verdict(false, bad.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 8. byte-identical artifacts regardless of thread count

fn criterion_8(dir: &Path) -> Verdict {
    let runs: [&[&str]; 3] = [
        &["--src", "bench:mix", "--population", "40", "--generations", "20", "--seed", "8"],
        &["--src", "bench:shift", "--engine", "random", "--random-budget", "200", "--seed", "9"],
        &["--src", "bench:bubblesort", "--engine", "tao", "--key-frac", "50"],
    ];
    let mut bad = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for jobs in C8_JOBS {
            let out = dir.join(format!("det{i}_{jobs}"));
            let status = Command::new(env!("CARGO_BIN_EXE_lockopt"))
                .arg("lock")
                .args(*args)
                .args(["--jobs", &jobs.to_string(), "--out", out.to_str().unwrap()])
                .output()
                .unwrap();
            if !status.status.success() {
                bad.push(format!("run {i} failed: {}", String::from_utf8_lossy(&status.stderr)));
                continue;
            }
            let read = |f: &str| std::fs::read(out.join(f)).unwrap();
            outputs.push((read("report.json"), read("trace.csv"), read("locked.c")));
        }
        if outputs.len() == 2 && outputs[0] != outputs[1] {
            bad.push(format!("run {i} differs between --jobs {:?}", C8_JOBS));
        }
    }
    if bad.is_empty() {
        verdict(true, format!("{} configurations identical for --jobs {:?}", runs.len(), C8_JOBS))
    } else {
        verdict(false, bad.join("; "))
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    let results = [
        ("key-budget fixtures", criterion_1()),
        ("entropy oracle equivalence", criterion_2(dir.path())),
        ("metric shape", criterion_3()),
        ("correct-key fidelity", criterion_4()),
        ("partial beats full", criterion_5(&mut traces)),
        ("GA optimality on toys", criterion_6(&mut traces)),
        ("monotone traces, fast baselines", criterion_7(&traces)),
        ("determinism across --jobs", criterion_8(dir.path())),
    ];
    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
