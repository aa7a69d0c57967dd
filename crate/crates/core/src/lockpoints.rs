//! Obfuscation points, the integer solution encoding, and key budgets.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minic::{visit_stmt, BinOp, ExprKind, NodeId, Program, StmtKind};

/// Default key bits per locked constant.
pub const CONST_BITS: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Constant,
    Operation,
    Branch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObfuscationPoint {
    pub point_id: usize,
    pub kind: PointKind,
    pub node_id: NodeId,
    pub function: String,
    pub line: u32,
    /// O_i: number of locking variants.
    pub alternatives: u32,
    pub key_cost: u32,
    pub forced: bool,
    /// Real operator of an operation point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<BinOp>,
}

impl ObfuscationPoint {
    /// Smallest entry allowed for this point.
    pub fn min_value(&self) -> u32 {
        u32::from(self.forced)
    }

    /// Fake operator for variant `v` (1-based).
    pub fn fake_op(&self, v: u32) -> Option<BinOp> {
        let op = self.op?;
        fake_ops(op).get((v as usize).checked_sub(1)?).copied()
    }
}

/// Replacement operators offered for an operation. Division and remainder
/// are neither sources nor targets so that fakes never trap.
pub fn fake_ops(op: BinOp) -> &'static [BinOp] {
    use BinOp::*;
    match op {
        Add => &[Sub, Mul],
        Sub => &[Add, Mul],
        Mul => &[Add, Sub],
        BitXor => &[BitAnd, BitOr],
        BitAnd => &[BitOr, BitXor],
        BitOr => &[BitAnd, BitXor],
        Shl => &[Shr],
        Shr => &[Shl],
        Lt => &[Ge],
        Ge => &[Lt],
        Le => &[Gt],
        Gt => &[Le],
        Eq => &[Ne],
        Ne => &[Eq],
        Div | Rem | LogAnd | LogOr => &[],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constraints {
    pub excluded_functions: Vec<String>,
    pub forced_points: Vec<usize>,
    /// Key bits charged per locked constant (B_c).
    pub const_bits: u32,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints { excluded_functions: vec![], forced_points: vec![], const_bits: CONST_BITS }
    }
}

/// Walks every non-excluded function depth-first and returns the lockable
/// sites in preorder.
///
/// Literals used directly as array subscripts are addressing, not data, and
/// are skipped. Conditions of `if` and `?:` become branch points even when
/// they are comparisons; loop conditions are never branch points.
pub fn find_points(program: &Program, constraints: &Constraints) -> Result<Vec<ObfuscationPoint>> {
    let mut points = Vec::new();
    for f in &program.functions {
        if constraints.excluded_functions.iter().any(|n| n == &f.name) {
            continue;
        }
        let mut if_conds = BTreeSet::new();
        let mut branch_conds = BTreeSet::new();
        let mut subscripts = BTreeSet::new();
        for s in &f.body {
            visit_stmt(
                s,
                &mut |s| {
                    if let StmtKind::If { cond, .. } = &s.kind {
                        if_conds.insert(cond.id);
                    }
                },
                &mut |e| match &e.kind {
                    ExprKind::Ternary(c, _, _) => {
                        branch_conds.insert(c.id);
                    }
                    ExprKind::Index(_, i) if matches!(i.kind, ExprKind::IntLit(_)) => {
                        subscripts.insert(i.id);
                    }
                    _ => {}
                },
            );
        }
        branch_conds.extend(if_conds);
        for s in &f.body {
            visit_stmt(s, &mut |_| {}, &mut |e| {
                let found = if branch_conds.contains(&e.id) {
                    Some((PointKind::Branch, 1, 1, None))
                } else {
                    match &e.kind {
                        ExprKind::IntLit(_) if !subscripts.contains(&e.id) => {
                            Some((PointKind::Constant, 1, constraints.const_bits, None))
                        }
                        ExprKind::Binary(op, _, _) if !fake_ops(*op).is_empty() => {
                            Some((PointKind::Operation, fake_ops(*op).len() as u32, 1, Some(*op)))
                        }
                        _ => None,
                    }
                };
                if let Some((kind, alternatives, key_cost, op)) = found {
                    points.push(ObfuscationPoint {
                        point_id: points.len(),
                        kind,
                        node_id: e.id,
                        function: f.name.clone(),
                        line: e.span.line,
                        alternatives,
                        key_cost,
                        forced: false,
                        op,
                    });
                }
            });
        }
    }
    for &id in &constraints.forced_points {
        let count = points.len();
        points
            .get_mut(id)
            .ok_or(Error::ForcedOutOfRange { id, count })?
            .forced = true;
    }
    Ok(points)
}

/// One entry per point: 0 leaves the point unlocked, v ≥ 1 applies variant v.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SolutionVector(pub Vec<u32>);

impl SolutionVector {
    pub fn zeros(points: &[ObfuscationPoint]) -> Self {
        SolutionVector(points.iter().map(|p| p.min_value()).collect())
    }

    /// Every point locked with its first variant ("Full").
    pub fn full(points: &[ObfuscationPoint]) -> Self {
        SolutionVector(vec![1; points.len()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn active(&self) -> usize {
        self.0.iter().filter(|&&v| v != 0).count()
    }

    /// Checks length, entry ranges and forced points.
    pub fn validate(&self, points: &[ObfuscationPoint]) -> Result<()> {
        if self.0.len() != points.len() {
            return Err(Error::LengthMismatch { got: self.0.len(), expected: points.len() });
        }
        for (i, (&v, p)) in self.0.iter().zip(points).enumerate() {
            if v < p.min_value() || v > p.alternatives {
                return Err(Error::EntryOutOfRange {
                    index: i,
                    value: v,
                    min: p.min_value(),
                    max: p.alternatives,
                });
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for SolutionVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", items.join(","))
    }
}

/// Total key bits a solution consumes.
pub fn key_bits(solution: &SolutionVector, points: &[ObfuscationPoint]) -> Result<usize> {
    if solution.len() != points.len() {
        return Err(Error::LengthMismatch { got: solution.len(), expected: points.len() });
    }
    Ok(solution
        .0
        .iter()
        .zip(points)
        .filter(|(&v, _)| v != 0)
        .map(|(_, p)| p.key_cost as usize)
        .sum())
}

/// Key bits of the all-ones solution.
pub fn full_budget(points: &[ObfuscationPoint]) -> usize {
    points.iter().map(|p| p.key_cost as usize).sum()
}

/// Key bits that forced points consume regardless of the solution.
pub fn forced_budget(points: &[ObfuscationPoint]) -> usize {
    points.iter().filter(|p| p.forced).map(|p| p.key_cost as usize).sum()
}

/// Number of distinct solution vectors.
pub fn space_size(points: &[ObfuscationPoint]) -> BigUint {
    points.iter().fold(BigUint::from(1u32), |acc, p| {
        let choices = if p.forced { p.alternatives } else { p.alternatives + 1 };
        acc * BigUint::from(choices)
    })
}

pub fn is_feasible(solution: &SolutionVector, points: &[ObfuscationPoint], key_len: usize) -> bool {
    matches!(key_bits(solution, points), Ok(b) if b <= key_len)
}

/// Per-kind point counts and the full key budget.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointsSummary {
    pub ctrl: usize,
    pub op: usize,
    #[serde(rename = "const")]
    pub consts: usize,
    pub bits: usize,
}

impl PointsSummary {
    pub fn of(points: &[ObfuscationPoint]) -> Self {
        let count = |k| points.iter().filter(|p| p.kind == k).count();
        PointsSummary {
            ctrl: count(PointKind::Branch),
            op: count(PointKind::Operation),
            consts: count(PointKind::Constant),
            bits: full_budget(points),
        }
    }
}

impl std::fmt::Display for PointsSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ctrl, {} op, {} const, {} bits", self.ctrl, self.op, self.consts, self.bits)
    }
}

/// Point list with the given kind counts and no program behind it, used to
/// reason about budgets of benchmarks known only by their characterization.
pub fn descriptor_points(ctrl: usize, op: usize, consts: usize, const_bits: u32) -> Vec<ObfuscationPoint> {
    let kinds = std::iter::repeat_n(PointKind::Branch, ctrl)
        .chain(std::iter::repeat_n(PointKind::Operation, op))
        .chain(std::iter::repeat_n(PointKind::Constant, consts));
    kinds
        .enumerate()
        .map(|(i, kind)| ObfuscationPoint {
            point_id: i,
            kind,
            node_id: i as NodeId,
            function: String::new(),
            line: 0,
            alternatives: if kind == PointKind::Operation { 2 } else { 1 },
            key_cost: if kind == PointKind::Constant { const_bits } else { 1 },
            forced: false,
            op: (kind == PointKind::Operation).then_some(BinOp::Add),
        })
        .collect()
}
