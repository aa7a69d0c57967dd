//! Static resource-cost model and final selection among near-best solutions.

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locker::{AppliedLock, LockedProgram};
use crate::lockpoints::{PointKind, SolutionVector};
use crate::minic::{visit_stmt, BinOp, ExprKind, Program, StmtKind, UnOp};

pub const CATEGORIES: [&str; 10] =
    ["add", "mul", "div", "bitwise", "shift", "compare", "logic", "select", "xor_key_bit", "key_bit"];

pub const DEFAULT_EPSILON: f64 = 0.02;

/// Area units per operation category.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostModel {
    pub units: BTreeMap<String, u64>,
}

impl Default for CostModel {
    fn default() -> Self {
        let units = [
            ("add", 32),
            ("mul", 300),
            ("div", 1000),
            ("bitwise", 8),
            ("shift", 16),
            ("compare", 16),
            ("logic", 2),
            ("select", 16),
            ("xor_key_bit", 1),
            ("key_bit", 1),
        ];
        CostModel { units: units.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }
}

impl CostModel {
    /// Parses a JSON object of `category: units`. Unknown categories are
    /// rejected; missing ones only fail when an estimate needs them.
    pub fn from_json(text: &str) -> Result<Self> {
        let units: BTreeMap<String, u64> =
            serde_json::from_str(text).map_err(|e| Error::CostModel(e.to_string()))?;
        if let Some(k) = units.keys().find(|k| !CATEGORIES.contains(&k.as_str())) {
            return Err(Error::CostModel(format!("unknown category `{k}`")));
        }
        Ok(CostModel { units })
    }

    pub fn unit(&self, category: &str) -> Result<u64> {
        self.units.get(category).copied().ok_or_else(|| Error::CostMissing(category.to_string()))
    }
}

pub fn bin_category(op: BinOp) -> &'static str {
    use BinOp::*;
    match op {
        Add | Sub => "add",
        Mul => "mul",
        Div | Rem => "div",
        BitAnd | BitOr | BitXor => "bitwise",
        Shl | Shr => "shift",
        Lt | Le | Gt | Ge | Eq | Ne => "compare",
        LogAnd | LogOr => "logic",
    }
}

fn un_category(op: UnOp) -> &'static str {
    match op {
        UnOp::Neg => "add",
        UnOp::BitNot => "bitwise",
        UnOp::LogNot => "logic",
    }
}

/// Operation counts per category in an unlocked program.
pub fn census(program: &Program) -> BTreeMap<&'static str, u64> {
    let counts = RefCell::new(BTreeMap::new());
    let bump = |c: &'static str| *counts.borrow_mut().entry(c).or_insert(0) += 1;
    for f in &program.functions {
        for s in &f.body {
            visit_stmt(
                s,
                &mut |st| match &st.kind {
                    StmtKind::Assign { op: Some(op), .. } => bump(bin_category(*op)),
                    StmtKind::Step { .. } => bump("add"),
                    _ => {}
                },
                &mut |e| match &e.kind {
                    ExprKind::Binary(op, ..) => bump(bin_category(*op)),
                    ExprKind::Unary(op, _) => bump(un_category(*op)),
                    ExprKind::Ternary(..) => bump("select"),
                    _ => {}
                },
            );
        }
    }
    counts.into_inner()
}

/// Categories and multiplicities added by one transform.
pub fn lock_overhead(lock: &AppliedLock) -> Vec<(&'static str, u64)> {
    match lock.kind {
        PointKind::Operation => {
            let fake = lock.fake.expect("operation lock records its fake op");
            vec![(bin_category(fake), 1), ("select", 1), ("key_bit", 1)]
        }
        PointKind::Constant => {
            let n = lock.slice.len as u64;
            vec![("xor_key_bit", n), ("key_bit", n)]
        }
        PointKind::Branch => vec![("xor_key_bit", 1), ("key_bit", 1)],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostEstimate {
    pub total: u64,
    pub baseline: u64,
    pub overhead: u64,
    pub breakdown: BTreeMap<String, u64>,
    pub key_bits: usize,
}

pub fn estimate_cost(locked: &LockedProgram, model: &CostModel) -> Result<CostEstimate> {
    let mut breakdown = BTreeMap::new();
    let mut baseline = 0;
    for (cat, n) in census(&locked.original) {
        let u = model.unit(cat)? * n;
        baseline += u;
        *breakdown.entry(cat.to_string()).or_insert(0) += u;
    }
    let mut overhead = 0;
    for lock in &locked.locks {
        for (cat, n) in lock_overhead(lock) {
            let u = model.unit(cat)? * n;
            overhead += u;
            *breakdown.entry(cat.to_string()).or_insert(0) += u;
        }
    }
    Ok(CostEstimate {
        total: baseline + overhead,
        baseline,
        overhead,
        breakdown,
        key_bits: locked.alloc.values().map(|s| s.len).sum(),
    })
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub solution: SolutionVector,
    pub h: f64,
    pub locked: LockedProgram,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Selection {
    /// Index into the candidate list.
    pub index: usize,
    pub solution: SolutionVector,
    pub h: f64,
    pub cost: CostEstimate,
    /// Candidates inside the band.
    pub band: usize,
}

/// Keeps candidates with H ≥ (1 − ε)·H_best and returns the cheapest one.
/// Ties: fewer key bits, then fewer active points, then the smaller vector.
pub fn select(candidates: &[Candidate], epsilon: f64, model: &CostModel) -> Result<Selection> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let best = candidates
        .iter()
        .map(|c| c.h)
        .max_by(f64::total_cmp)
        .ok_or_else(|| Error::Config("no candidates to select from".into()))?;
    let floor = (1.0 - epsilon) * best;
    let mut chosen: Option<(usize, CostEstimate)> = None;
    let mut band = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.h < floor {
            continue;
        }
        band += 1;
        let cost = estimate_cost(&c.locked, model)?;
        let key = |c: &Candidate, e: &CostEstimate| (e.total, e.key_bits, c.solution.active(), c.solution.clone());
        let better = match &chosen {
            None => true,
            Some((j, e)) => key(c, &cost) < key(&candidates[*j], e),
        };
        if better {
            chosen = Some((i, cost));
        }
    }
    let (index, cost) = chosen.expect("the best candidate is always in the band");
    let c = &candidates[index];
    Ok(Selection { index, solution: c.solution.clone(), h: c.h, cost, band })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::LockingKey;
    use crate::locker::apply_locking;
    use crate::lockpoints::{find_points, full_budget, Constraints};
    use crate::minic::parse;

    fn lock(src: &str, s: &[u32]) -> LockedProgram {
        let p = parse(src, None).unwrap();
        let pts = find_points(&p, &Constraints::default()).unwrap();
        let key = LockingKey::random(full_budget(&pts), 1);
        apply_locking(&p, &pts, &SolutionVector(s.to_vec()), &key).unwrap()
    }

    #[test]
    fn unlocked_is_baseline() {
        let l = lock("int top(int a, int b){ int c = a * b; c += a; c++; return -c < b ? c : ~b; }", &[0, 0]);
        let e = estimate_cost(&l, &CostModel::default()).unwrap();
        assert_eq!(e.overhead, 0);
        // mul, +=, ++, neg, <, ?:, ~
        assert_eq!(e.baseline, 300 + 32 + 32 + 32 + 16 + 16 + 8);
        assert_eq!(e.total, e.breakdown.values().sum::<u64>());
    }

    #[test]
    fn add_with_fake_mul() {
        let l = lock("int top(int a, int b){ return a + b; }", &[2]);
        assert_eq!(l.locks[0].fake, Some(BinOp::Mul));
        let e = estimate_cost(&l, &CostModel::default()).unwrap();
        assert_eq!(e.overhead, 300 + 16 + 1);
        assert_eq!(e.key_bits, 1);
    }

    #[test]
    fn constant_and_branch_overhead() {
        let l = lock("int top(int a){ if (a) { a = 9; } return a; }", &[1, 1]);
        let e = estimate_cost(&l, &CostModel::default()).unwrap();
        assert_eq!(e.overhead, 2 + 64);
    }

    #[test]
    fn missing_and_unknown_categories() {
        let m = CostModel::from_json(r#"{"add": 1}"#).unwrap();
        let l = lock("int top(int a){ return a * 3; }", &[0, 0]);
        assert!(matches!(estimate_cost(&l, &m), Err(Error::CostMissing(c)) if c == "mul"));
        assert!(CostModel::from_json(r#"{"lut": 1}"#).is_err());
        assert!(CostModel::from_json(r#"{"add": -1}"#).is_err());
        let round = serde_json::to_string(&CostModel::default()).unwrap();
        assert_eq!(CostModel::from_json(&round).unwrap(), CostModel::default());
    }

    fn cand(src: &str, s: &[u32], h: f64) -> Candidate {
        Candidate { solution: SolutionVector(s.to_vec()), h, locked: lock(src, s) }
    }

    #[test]
    fn selection_picks_cheapest_in_band() {
        let src = "int top(int a, int b){ return (a + b) ^ (a - b); }";
        let cs = vec![
            cand(src, &[1, 1, 1], 0.50),
            cand(src, &[1, 0, 0], 0.495),
            cand(src, &[0, 2, 0], 0.499),
            cand(src, &[0, 0, 1], 0.40),
        ];
        let s = select(&cs, 0.02, &CostModel::default()).unwrap();
        assert_eq!(s.band, 3);
        // [1,0,0] fakes ^ with & (8); [0,2,0] fakes + with * (300)
        assert_eq!(s.solution.0, vec![1, 0, 0]);
        let one = select(&cs[..1], 0.02, &CostModel::default()).unwrap();
        assert_eq!(one.index, 0);
        assert_eq!(select(&cs, 0.0, &CostModel::default()).unwrap().index, 0);
    }

    #[test]
    fn selection_ties_use_key_bits_then_vector() {
        let src = "int top(int a, int b){ return (a | b) + (a & b); }";
        let cs = vec![cand(src, &[0, 0, 2], 0.3), cand(src, &[0, 2, 0], 0.3)];
        let s = select(&cs, 0.0, &CostModel::default()).unwrap();
        assert_eq!(s.solution.0, vec![0, 0, 2]);
    }
}
