//! Lowering from the syntax tree to a slot-resolved form the interpreter can
//! run without name lookups. Signedness after integer promotion is decided
//! here, statically.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::minic::{
    BinOp, Expr, ExprKind, FunctionDef, Init, IntType, ParamShape, Program, Stmt, StmtKind, UnOp, KEY_PARAM,
};

#[derive(Clone, Copy, Debug)]
pub(crate) enum ArrSrc {
    /// Index into the frame's array table.
    Local(u32),
    Global(u32),
}

#[derive(Debug)]
pub(crate) enum LExpr {
    Const(u32),
    Local(u32),
    Global(u32),
    Load { arr: ArrSrc, idx: Box<LExpr>, idx_unsigned: bool },
    Neg(Box<LExpr>),
    BitNot(Box<LExpr>),
    LogNot(Box<LExpr>),
    /// `unsigned` is the operation's signedness after the usual conversions,
    /// or the left operand's for shifts.
    Bin { op: BinOp, unsigned: bool, a: Box<LExpr>, b: Box<LExpr> },
    And(Box<LExpr>, Box<LExpr>),
    Or(Box<LExpr>, Box<LExpr>),
    Cond(Box<LExpr>, Box<LExpr>, Box<LExpr>),
    Call { func: u32, args: Vec<LArg> },
    Narrow(IntType, Box<LExpr>),
    /// A subtree that reads only constants and the key; evaluated once per run.
    Memo(u32, Box<LExpr>),
}

#[derive(Debug)]
pub(crate) enum LArg {
    Val(LExpr),
    Arr(ArrSrc),
}

#[derive(Debug)]
pub(crate) enum LTarget {
    Local(u32, IntType),
    Global(u32, IntType),
    Elem { arr: ArrSrc, idx: LExpr, idx_unsigned: bool, ty: IntType },
}

#[derive(Debug)]
pub(crate) enum LStmt {
    Assign { target: LTarget, op: Option<(BinOp, bool)>, value: LExpr },
    /// Re-initializes a local array on each execution of its declaration.
    ArrInit { slot: u32, vals: Vec<u32> },
    Expr(LExpr),
    If(LExpr, Vec<LStmt>, Vec<LStmt>),
    Loop { cond: Option<LExpr>, body: Vec<LStmt>, step: Vec<LStmt> },
    Return(Option<LExpr>),
    Break,
    Continue,
    Block(Vec<LStmt>),
}

#[derive(Debug)]
pub(crate) enum LParam {
    Scalar(u32, IntType),
    Array(u32),
}

#[derive(Debug)]
pub(crate) struct LFunc {
    pub params: Vec<LParam>,
    pub scalars: u32,
    /// Lengths of local arrays, by array slot. Parameter slots come first and
    /// have length 0 here.
    pub local_arrays: Vec<u32>,
    pub ret: Option<IntType>,
    pub body: Vec<LStmt>,
}

#[derive(Debug)]
pub(crate) struct GlobalArray {
    pub init: Vec<u32>,
}

#[derive(Debug)]
pub(crate) struct Lowered {
    pub funcs: Vec<LFunc>,
    pub top: u32,
    pub global_scalars: Vec<u32>,
    pub global_arrays: Vec<GlobalArray>,
    pub memo_slots: u32,
}

#[derive(Clone, Copy)]
enum Sym {
    Scalar(u32, IntType),
    GScalar(u32, IntType),
    Array(ArrSrc, IntType),
}

fn norm(ty: IntType, v: i64) -> u32 {
    ty.normalize(v as u32)
}

pub(crate) fn lower(p: &Program) -> Result<Lowered> {
    let mut globals = HashMap::new();
    let mut global_scalars = Vec::new();
    let mut global_arrays = Vec::new();
    for g in &p.globals {
        let vals: Vec<u32> = g.init.iter().flatten().map(|&v| norm(g.ty, v)).collect();
        match g.array_len {
            Some(n) => {
                let mut init = vals;
                init.resize(n, 0);
                globals.insert(g.name.clone(), Sym::Array(ArrSrc::Global(global_arrays.len() as u32), g.ty));
                global_arrays.push(GlobalArray { init });
            }
            None => {
                globals.insert(g.name.clone(), Sym::GScalar(global_scalars.len() as u32, g.ty));
                global_scalars.push(vals.first().copied().unwrap_or(0));
            }
        }
    }
    let index: HashMap<&str, u32> = p
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i as u32))
        .collect();
    let mut funcs = Vec::new();
    let mut memo_slots = 0;
    for f in &p.functions {
        let mut l = FnLower {
            program: p,
            index: &index,
            scopes: vec![globals.clone()],
            scalars: 0,
            arrays: vec![],
            memo_slots,
            in_memo: false,
        };
        funcs.push(l.func(f)?);
        memo_slots = l.memo_slots;
    }
    Ok(Lowered { funcs, top: index[p.top_name.as_str()], global_scalars, global_arrays, memo_slots })
}

/// True when `e` depends on nothing but literals and `KEY` elements.
fn key_only(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::IntLit(_) => true,
        ExprKind::Index(n, i) => n == KEY_PARAM && key_only(i),
        ExprKind::Unary(..) | ExprKind::Binary(..) | ExprKind::Ternary(..) | ExprKind::Cast(..) => {
            e.children().into_iter().all(key_only)
        }
        _ => false,
    }
}

fn reads_key(e: &Expr) -> bool {
    matches!(&e.kind, ExprKind::Index(n, _) if n == KEY_PARAM) || e.children().into_iter().any(reads_key)
}

struct FnLower<'a> {
    program: &'a Program,
    index: &'a HashMap<&'a str, u32>,
    scopes: Vec<HashMap<String, Sym>>,
    scalars: u32,
    arrays: Vec<u32>,
    memo_slots: u32,
    in_memo: bool,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Input(format!("cannot lower program: {}", msg.into()))
}

impl FnLower<'_> {
    fn declare(&mut self, name: &str, sym: Sym) {
        self.scopes.last_mut().unwrap().insert(name.to_string(), sym);
    }

    fn lookup(&self, name: &str) -> Result<Sym> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name).copied())
            .ok_or_else(|| bad(format!("unknown name '{name}'")))
    }

    fn new_scalar(&mut self, name: &str, ty: IntType) -> u32 {
        let slot = self.scalars;
        self.scalars += 1;
        self.declare(name, Sym::Scalar(slot, ty));
        slot
    }

    fn new_array(&mut self, name: &str, ty: IntType, len: u32) -> u32 {
        let slot = self.arrays.len() as u32;
        self.arrays.push(len);
        self.declare(name, Sym::Array(ArrSrc::Local(slot), ty));
        slot
    }

    fn func(&mut self, f: &FunctionDef) -> Result<LFunc> {
        self.scopes.push(HashMap::new());
        let mut params = Vec::new();
        for p in &f.params {
            params.push(match p.shape {
                ParamShape::Scalar => LParam::Scalar(self.new_scalar(&p.name, p.ty), p.ty),
                ParamShape::Array(_) | ParamShape::Pointer => LParam::Array(self.new_array(&p.name, p.ty, 0)),
            });
        }
        let body = self.block(&f.body)?;
        Ok(LFunc {
            params,
            scalars: self.scalars,
            local_arrays: std::mem::take(&mut self.arrays),
            ret: f.ret,
            body,
        })
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Vec<LStmt>> {
        self.scopes.push(HashMap::new());
        let mut out = Vec::new();
        for s in stmts {
            out.push(self.stmt(s)?);
        }
        self.scopes.pop();
        Ok(out)
    }

    /// Lowers a loop or branch body, which gets its own scope.
    fn body(&mut self, s: &Stmt) -> Result<Vec<LStmt>> {
        match &s.kind {
            StmtKind::Block(b) => self.block(b),
            _ => self.block(std::slice::from_ref(s)),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Result<LStmt> {
        Ok(match &s.kind {
            StmtKind::Decl(d) => match d.array_len {
                Some(n) => {
                    let vals = match &d.init {
                        Some(Init::List(v)) => v.iter().map(|&x| norm(d.ty, x)).collect(),
                        None => vec![],
                        Some(Init::Scalar(_)) => return Err(bad("scalar initializer for an array")),
                    };
                    let slot = self.new_array(&d.name, d.ty, n as u32);
                    LStmt::ArrInit { slot, vals }
                }
                None => {
                    let value = match &d.init {
                        Some(Init::Scalar(e)) => self.expr(e)?.0,
                        Some(Init::List(v)) => LExpr::Const(norm(d.ty, v.first().copied().unwrap_or(0))),
                        None => LExpr::Const(0),
                    };
                    let slot = self.new_scalar(&d.name, d.ty);
                    LStmt::Assign { target: LTarget::Local(slot, d.ty), op: None, value }
                }
            },
            StmtKind::Assign { target, op, value } => {
                let (target, tu) = self.target(target)?;
                let (value, vu) = self.expr(value)?;
                let op = op.map(|op| (op, if op.is_shift() { tu } else { tu || vu }));
                LStmt::Assign { target, op, value }
            }
            StmtKind::Step { target, increment } => {
                let (target, tu) = self.target(target)?;
                let op = if *increment { BinOp::Add } else { BinOp::Sub };
                LStmt::Assign { target, op: Some((op, tu)), value: LExpr::Const(1) }
            }
            StmtKind::Expr(e) => LStmt::Expr(self.expr(e)?.0),
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.expr(cond)?.0;
                let t = self.body(then_branch)?;
                let e = match else_branch {
                    Some(e) => self.body(e)?,
                    None => vec![],
                };
                LStmt::If(c, t, e)
            }
            StmtKind::While { cond, body } => {
                let cond = Some(self.expr(cond)?.0);
                LStmt::Loop { cond, body: self.body(body)?, step: vec![] }
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                let mut out = Vec::new();
                if let Some(i) = init {
                    out.push(self.stmt(i)?);
                }
                let cond = cond.as_ref().map(|c| self.expr(c)).transpose()?.map(|c| c.0);
                let step = match step {
                    Some(st) => vec![self.stmt(st)?],
                    None => vec![],
                };
                let body = self.body(body)?;
                self.scopes.pop();
                out.push(LStmt::Loop { cond, body, step });
                LStmt::Block(out)
            }
            StmtKind::Return(e) => LStmt::Return(e.as_ref().map(|e| self.expr(e)).transpose()?.map(|e| e.0)),
            StmtKind::Break => LStmt::Break,
            StmtKind::Continue => LStmt::Continue,
            StmtKind::Block(b) => LStmt::Block(self.block(b)?),
            StmtKind::Empty => LStmt::Block(vec![]),
        })
    }

    /// Returns the target and its signedness after promotion.
    fn target(&mut self, e: &Expr) -> Result<(LTarget, bool)> {
        match &e.kind {
            ExprKind::Var(n) => match self.lookup(n)? {
                Sym::Scalar(s, ty) => Ok((LTarget::Local(s, ty), ty.promoted_unsigned())),
                Sym::GScalar(s, ty) => Ok((LTarget::Global(s, ty), ty.promoted_unsigned())),
                Sym::Array(..) => Err(bad(format!("assignment to array '{n}'"))),
            },
            ExprKind::Index(n, _) | ExprKind::Deref(n) => {
                let Sym::Array(arr, ty) = self.lookup(n)? else {
                    return Err(bad(format!("'{n}' is not an array")));
                };
                let (idx, idx_unsigned) = match &e.kind {
                    ExprKind::Index(_, i) => self.expr(i)?,
                    _ => (LExpr::Const(0), false),
                };
                Ok((LTarget::Elem { arr, idx, idx_unsigned, ty }, ty.promoted_unsigned()))
            }
            _ => Err(bad("invalid assignment target")),
        }
    }

    /// Returns the lowered expression and whether its promoted type is unsigned.
    fn expr(&mut self, e: &Expr) -> Result<(LExpr, bool)> {
        if !self.in_memo && !matches!(e.kind, ExprKind::Index(..)) && reads_key(e) && key_only(e) {
            self.in_memo = true;
            let lowered = self.expr(e);
            self.in_memo = false;
            let (x, u) = lowered?;
            let slot = self.memo_slots;
            self.memo_slots += 1;
            return Ok((LExpr::Memo(slot, Box::new(x)), u));
        }
        Ok(match &e.kind {
            ExprKind::IntLit(l) => (LExpr::Const(l.value), l.ty() == IntType::U32),
            ExprKind::Var(n) => match self.lookup(n)? {
                Sym::Scalar(s, ty) => (LExpr::Local(s), ty.promoted_unsigned()),
                Sym::GScalar(s, ty) => (LExpr::Global(s), ty.promoted_unsigned()),
                Sym::Array(..) => return Err(bad(format!("array '{n}' used as a value"))),
            },
            ExprKind::Index(n, _) | ExprKind::Deref(n) => {
                let Sym::Array(arr, ty) = self.lookup(n)? else {
                    return Err(bad(format!("'{n}' is not an array")));
                };
                let (idx, idx_unsigned) = match &e.kind {
                    ExprKind::Index(_, i) => self.expr(i)?,
                    _ => (LExpr::Const(0), false),
                };
                (LExpr::Load { arr, idx: Box::new(idx), idx_unsigned }, ty.promoted_unsigned())
            }
            ExprKind::Unary(op, x) => {
                let (x, u) = self.expr(x)?;
                match op {
                    UnOp::Neg => (LExpr::Neg(Box::new(x)), u),
                    UnOp::BitNot => (LExpr::BitNot(Box::new(x)), u),
                    UnOp::LogNot => (LExpr::LogNot(Box::new(x)), false),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let (a, au) = self.expr(a)?;
                let (b, bu) = self.expr(b)?;
                let (a, b) = (Box::new(a), Box::new(b));
                match op {
                    BinOp::LogAnd => (LExpr::And(a, b), false),
                    BinOp::LogOr => (LExpr::Or(a, b), false),
                    _ if op.is_shift() => (LExpr::Bin { op: *op, unsigned: au, a, b }, au),
                    _ if op.is_comparison() => (LExpr::Bin { op: *op, unsigned: au || bu, a, b }, false),
                    _ => (LExpr::Bin { op: *op, unsigned: au || bu, a, b }, au || bu),
                }
            }
            ExprKind::Ternary(c, a, b) => {
                let (c, _) = self.expr(c)?;
                let (a, au) = self.expr(a)?;
                let (b, bu) = self.expr(b)?;
                (LExpr::Cond(Box::new(c), Box::new(a), Box::new(b)), au || bu)
            }
            ExprKind::Cast(ty, x) => (LExpr::Narrow(*ty, Box::new(self.expr(x)?.0)), ty.promoted_unsigned()),
            ExprKind::Call(n, args) => {
                let func = *self.index.get(n.as_str()).ok_or_else(|| bad(format!("unknown function '{n}'")))?;
                let callee = &self.program.functions[func as usize];
                if callee.params.len() != args.len() {
                    return Err(bad(format!("wrong argument count for '{n}'")));
                }
                let mut largs = Vec::new();
                for (p, a) in callee.params.iter().zip(args) {
                    largs.push(match p.shape {
                        ParamShape::Scalar => LArg::Val(self.expr(a)?.0),
                        _ => match &a.kind {
                            ExprKind::Var(v) => match self.lookup(v)? {
                                Sym::Array(src, _) => LArg::Arr(src),
                                _ => return Err(bad(format!("'{v}' is not an array"))),
                            },
                            _ => return Err(bad("array argument must be an array name")),
                        },
                    });
                }
                let unsigned = callee.ret.is_some_and(|t| t.promoted_unsigned());
                (LExpr::Call { func, args: largs }, unsigned)
            }
        })
    }
}
