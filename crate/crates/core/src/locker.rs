//! Source-level locking transforms and key-bit allocation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::key::LockingKey;
use crate::lockpoints::{key_bits, ObfuscationPoint, PointKind, SolutionVector};
use crate::minic::{
    visit_stmt, visit_stmt_mut, BinOp, Expr, ExprKind, Init, IntType, Literal, NodeId,
    Param, ParamShape, Program, Stmt, StmtKind, UnOp, KEY_PARAM,
};

/// Bit slice of the key bound to one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KeySlice {
    pub offset: usize,
    pub len: usize,
}

pub type Allocation = BTreeMap<usize, KeySlice>;

/// Record of one transform applied to the program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AppliedLock {
    pub point_id: usize,
    pub kind: PointKind,
    pub variant: u32,
    pub slice: KeySlice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<BinOp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fake: Option<BinOp>,
}

#[derive(Clone, Debug)]
pub struct LockedProgram {
    pub ast: Program,
    pub original: Program,
    pub alloc: Allocation,
    pub correct_key: LockingKey,
    pub solution: SolutionVector,
    pub locks: Vec<AppliedLock>,
}

/// Packs the active points' key slices in ascending point order from bit 0.
pub fn allocate_bits(points: &[ObfuscationPoint], solution: &SolutionVector) -> Allocation {
    let mut offset = 0;
    let mut alloc = Allocation::new();
    for (p, &v) in points.iter().zip(&solution.0) {
        if v != 0 {
            let len = p.key_cost as usize;
            alloc.insert(p.point_id, KeySlice { offset, len });
            offset += len;
        }
    }
    alloc
}

#[derive(Clone, Copy)]
enum Plan {
    Constant { slice: KeySlice },
    Operation { real: BinOp, fake: BinOp, offset: usize, bit: u8 },
    Branch { offset: usize, bit: u8 },
}

/// Rewrites the active points of `program` and adds the `KEY` parameter.
///
/// Constants become `(T)(stored ^ KEYSEG)` with `stored = c ^ seg`. Operations
/// become `KEY[k] ? arm1 : arm0`, with the real operator at the arm whose index
/// equals the correct bit. Branch conditions become `c' ^ KEY[k]`, where `c'`
/// is the condition negated when the correct bit is 1.
pub fn apply_locking(
    program: &Program,
    points: &[ObfuscationPoint],
    solution: &SolutionVector,
    key: &LockingKey,
) -> Result<LockedProgram> {
    solution.validate(points)?;
    let needed = key_bits(solution, points)?;
    if needed > key.len() {
        return Err(Error::Infeasible { needed, available: key.len() });
    }
    if uses_key_name(program) {
        return Err(Error::ReservedKeyName);
    }
    let alloc = allocate_bits(points, solution);
    let mut plan = HashMap::new();
    let mut locks = Vec::new();
    for (&pid, &slice) in &alloc {
        let p = &points[pid];
        let variant = solution.0[pid];
        let bit = key.bit(slice.offset);
        let step = match p.kind {
            PointKind::Constant => {
                if slice.len > 32 {
                    return Err(Error::Config("constant key slices are at most 32 bits".into()));
                }
                Plan::Constant { slice }
            }
            PointKind::Operation => {
                let real = p.op.expect("operation point has an operator");
                let fake = p.fake_op(variant).expect("variant validated against alternatives");
                Plan::Operation { real, fake, offset: slice.offset, bit }
            }
            PointKind::Branch => Plan::Branch { offset: slice.offset, bit },
        };
        plan.insert(p.node_id, step);
        locks.push(AppliedLock {
            point_id: pid,
            kind: p.kind,
            variant,
            slice,
            op: p.op,
            fake: p.fake_op(variant),
        });
    }

    let mut ast = program.clone();
    for f in &mut ast.functions {
        for s in &mut f.body {
            visit_stmt_mut(
                s,
                &mut |s| {
                    for e in direct_exprs_mut(s) {
                        rewrite(e, &plan, key);
                    }
                },
                &mut |_| {},
            );
        }
    }
    plumb_key(&mut ast);
    ast.renumber();
    Ok(LockedProgram {
        ast,
        original: program.clone(),
        alloc,
        correct_key: key.clone(),
        solution: solution.clone(),
        locks,
    })
}

fn uses_key_name(p: &Program) -> bool {
    if p.globals.iter().any(|g| g.name == KEY_PARAM) {
        return true;
    }
    p.functions.iter().any(|f| {
        let mut found = f.params.iter().any(|p| p.name == KEY_PARAM);
        for s in &f.body {
            visit_stmt(
                s,
                &mut |s| {
                    if let StmtKind::Decl(d) = &s.kind {
                        found |= d.name == KEY_PARAM;
                    }
                },
                &mut |_| {},
            );
        }
        found
    })
}

fn direct_exprs_mut(s: &mut Stmt) -> Vec<&mut Expr> {
    match &mut s.kind {
        StmtKind::Decl(d) => match &mut d.init {
            Some(Init::Scalar(e)) => vec![e],
            _ => vec![],
        },
        StmtKind::Assign { target, value, .. } => vec![target, value],
        StmtKind::Step { target, .. } => vec![target],
        StmtKind::Expr(e) => vec![e],
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
        StmtKind::For { cond, .. } => cond.iter_mut().collect(),
        StmtKind::Return(e) => e.iter_mut().collect(),
        StmtKind::Break | StmtKind::Continue | StmtKind::Block(_) | StmtKind::Empty => vec![],
    }
}

fn key_bit(i: usize) -> Expr {
    Expr::index(KEY_PARAM, Expr::lit(i as u32))
}

/// `(unsigned int)KEY[o] | (unsigned int)KEY[o+1] << 1 | ...`
fn key_segment(slice: KeySlice) -> Expr {
    (0..slice.len)
        .map(|j| {
            let bit = Expr::cast(IntType::U32, key_bit(slice.offset + j));
            if j == 0 {
                bit
            } else {
                Expr::binary(BinOp::Shl, bit, Expr::lit(j as u32))
            }
        })
        .reduce(|acc, e| Expr::binary(BinOp::BitOr, acc, e))
        .unwrap_or_else(|| Expr::lit(0))
}

fn rewrite(e: &mut Expr, plan: &HashMap<NodeId, Plan>, key: &LockingKey) {
    for c in e.children_mut() {
        rewrite(c, plan, key);
    }
    let Some(&step) = plan.get(&e.id) else { return };
    let span = e.span;
    let old = std::mem::replace(e, Expr::lit(0));
    let mut new = match step {
        Plan::Constant { slice } => {
            let ExprKind::IntLit(lit) = old.kind else { unreachable!("constant point on a literal") };
            let stored = lit.value ^ key.segment(slice.offset, slice.len);
            let stored = Expr::new(ExprKind::IntLit(Literal { value: stored, hex: true, unsigned_suffix: true }));
            Expr::cast(lit.ty(), Expr::binary(BinOp::BitXor, stored, key_segment(slice)))
        }
        Plan::Operation { real, fake, offset, bit } => {
            let ExprKind::Binary(_, a, b) = old.kind else { unreachable!("operation point on a binary op") };
            let real_arm = Expr::binary(real, (*a).clone(), (*b).clone());
            let fake_arm = Expr::binary(fake, *a, *b);
            if bit == 1 {
                Expr::ternary(key_bit(offset), real_arm, fake_arm)
            } else {
                Expr::ternary(key_bit(offset), fake_arm, real_arm)
            }
        }
        Plan::Branch { offset, bit } => {
            let stored = if bit == 1 {
                Expr::unary(UnOp::LogNot, old)
            } else if old.is_boolean() {
                old
            } else {
                Expr::unary(UnOp::LogNot, Expr::unary(UnOp::LogNot, old))
            };
            Expr::binary(BinOp::BitXor, stored, key_bit(offset))
        }
    };
    new.span = span;
    *e = new;
}

/// Adds `const unsigned char KEY[]` to the top function and to every function
/// that reads the key directly or through a call, and passes it at call sites.
fn plumb_key(p: &mut Program) {
    let mut needs: BTreeSet<String> = BTreeSet::new();
    needs.insert(p.top_name.clone());
    let mut calls: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in &p.functions {
        let mut direct = false;
        let callees = calls.entry(f.name.clone()).or_default();
        for s in &f.body {
            visit_stmt(s, &mut |_| {}, &mut |e| match &e.kind {
                ExprKind::Index(n, _) | ExprKind::Var(n) if n == KEY_PARAM => direct = true,
                ExprKind::Call(n, _) => {
                    callees.insert(n.clone());
                }
                _ => {}
            });
        }
        if direct {
            needs.insert(f.name.clone());
        }
    }
    loop {
        let before = needs.len();
        for (f, cs) in &calls {
            if cs.iter().any(|c| needs.contains(c)) {
                needs.insert(f.clone());
            }
        }
        if needs.len() == before {
            break;
        }
    }
    for f in &mut p.functions {
        if needs.contains(&f.name) {
            f.params.push(Param {
                name: KEY_PARAM.to_string(),
                ty: IntType::U8,
                is_const: true,
                shape: ParamShape::Array(None),
            });
        }
        for s in &mut f.body {
            visit_stmt_mut(s, &mut |_| {}, &mut |e| {
                if let ExprKind::Call(n, args) = &mut e.kind {
                    if needs.contains(n) {
                        args.push(Expr::var(KEY_PARAM));
                    }
                }
            });
        }
    }
}
