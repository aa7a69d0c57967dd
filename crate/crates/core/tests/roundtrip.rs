use std::path::PathBuf;

use lockopt::key::LockingKey;
use lockopt::locker::apply_locking;
use lockopt::lockpoints::{find_points, full_budget, Constraints, SolutionVector};
use lockopt::minic::{emit_source, parse};
use lockopt::sim::{random_inputs, run, DEFAULT_STEP_BUDGET};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

#[test]
fn corpus_is_large_enough() {
    assert!(corpus().len() >= 20);
}

#[test]
fn emit_then_parse_is_isomorphic() {
    for (name, src) in corpus() {
        let p = parse(&src, None).unwrap_or_else(|e| panic!("{name}: {e}"));
        let text = emit_source(&p);
        let q = parse(&text, Some(&p.top_name)).unwrap_or_else(|e| panic!("{name} re-parse: {e}\n{text}"));
        assert!(p.isomorphic(&q), "{name}\n{text}");
        assert_eq!(emit_source(&q), text, "{name}: emit not idempotent");
    }
}

#[test]
fn emitted_source_behaves_identically() {
    for (name, src) in corpus() {
        let p = parse(&src, None).unwrap();
        let q = parse(&emit_source(&p), Some(&p.top_name)).unwrap();
        for input in random_inputs(&p, 20, 3) {
            let a = run(&p, &input, None, DEFAULT_STEP_BUDGET).unwrap();
            let b = run(&q, &input, None, DEFAULT_STEP_BUDGET).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }
}

#[test]
fn locked_programs_round_trip() {
    for (name, src) in corpus() {
        let p = parse(&src, None).unwrap();
        let pts = find_points(&p, &Constraints::default()).unwrap();
        if pts.is_empty() {
            continue;
        }
        let key = LockingKey::random(full_budget(&pts), 11);
        let locked = apply_locking(&p, &pts, &SolutionVector::full(&pts), &key).unwrap();
        let text = emit_source(&locked.ast);
        let q = parse(&text, Some(&p.top_name)).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert!(q.is_locked());
        assert!(locked.ast.isomorphic(&q), "{name}\n{text}");
        let wrong = LockingKey::random(key.len(), 12);
        for input in random_inputs(&p, 10, 4) {
            let golden = run(&p, &input, None, DEFAULT_STEP_BUDGET).unwrap();
            assert_eq!(run(&q, &input, Some(&key), 10_000).unwrap().bits, golden.bits, "{name}");
            let a = run(&locked.ast, &input, Some(&wrong), 10_000).unwrap();
            let b = run(&q, &input, Some(&wrong), 10_000).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }
}
