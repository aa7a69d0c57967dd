use super::lower::{ArrSrc, LArg, LExpr, LParam, LStmt, LTarget, Lowered};
use crate::minic::BinOp;

#[derive(Clone, Copy, Default)]
struct ArrRef {
    base: u32,
    len: u32,
}

/// Raised when the step budget runs out; unwinds the whole run.
pub(crate) struct Abort;

enum Flow {
    Next,
    Break,
    Continue,
    Return(u32),
}

/// Value an argument or top-level parameter is bound to.
pub(crate) enum Binding<'a> {
    Scalar(u32),
    Array(&'a [u32]),
}

/// Reusable interpreter state.
#[derive(Default)]
pub struct Machine {
    scalars: Vec<u32>,
    arrays: Vec<ArrRef>,
    mem: Vec<u32>,
    globals: Vec<u32>,
    global_arrays: Vec<ArrRef>,
    memo: Vec<Option<u32>>,
    pub(crate) steps: u64,
    budget: u64,
    pub(crate) div_zero: bool,
    pub(crate) out_of_range: bool,
}

#[inline]
fn bin(op: BinOp, unsigned: bool, a: u32, b: u32, div_zero: &mut bool) -> u32 {
    use BinOp::*;
    match op {
        Add => a.wrapping_add(b),
        Sub => a.wrapping_sub(b),
        Mul => a.wrapping_mul(b),
        Div | Rem if b == 0 => {
            *div_zero = true;
            0
        }
        Div if unsigned => a / b,
        Div => (a as i32).wrapping_div(b as i32) as u32,
        Rem if unsigned => a % b,
        Rem => (a as i32).wrapping_rem(b as i32) as u32,
        BitAnd => a & b,
        BitOr => a | b,
        BitXor => a ^ b,
        Shl => a.wrapping_shl(b & 31),
        Shr if unsigned => a >> (b & 31),
        Shr => ((a as i32) >> (b & 31)) as u32,
        Lt if unsigned => (a < b) as u32,
        Lt => ((a as i32) < (b as i32)) as u32,
        Le if unsigned => (a <= b) as u32,
        Le => ((a as i32) <= (b as i32)) as u32,
        Gt if unsigned => (a > b) as u32,
        Gt => ((a as i32) > (b as i32)) as u32,
        Ge if unsigned => (a >= b) as u32,
        Ge => ((a as i32) >= (b as i32)) as u32,
        Eq => (a == b) as u32,
        Ne => (a != b) as u32,
        LogAnd => (a != 0 && b != 0) as u32,
        LogOr => (a != 0 || b != 0) as u32,
    }
}

impl Machine {
    /// Runs the top function. Returns the raw return value and the memory
    /// ranges of the top's array parameters, or `Abort` on budget exhaustion.
    pub(crate) fn run(
        &mut self,
        prog: &Lowered,
        bindings: &[Binding<'_>],
        budget: u64,
    ) -> Result<(u32, Vec<(u32, u32)>), Abort> {
        self.scalars.clear();
        self.arrays.clear();
        self.mem.clear();
        self.globals.clear();
        self.global_arrays.clear();
        self.memo.clear();
        self.memo.resize(prog.memo_slots as usize, None);
        self.steps = 0;
        self.budget = budget;
        self.div_zero = false;
        self.out_of_range = false;
        for &v in &prog.global_scalars {
            self.globals.push(v);
        }
        for g in &prog.global_arrays {
            let base = self.mem.len() as u32;
            self.mem.extend_from_slice(&g.init);
            self.global_arrays.push(ArrRef { base, len: g.init.len() as u32 });
        }
        let mut ranges = Vec::new();
        let mut args = Vec::with_capacity(bindings.len());
        for b in bindings {
            match b {
                Binding::Scalar(v) => args.push(ArgVal::Scalar(*v)),
                Binding::Array(vals) => {
                    let base = self.mem.len() as u32;
                    self.mem.extend_from_slice(vals);
                    let r = ArrRef { base, len: vals.len() as u32 };
                    ranges.push((r.base, r.len));
                    args.push(ArgVal::Array(r));
                }
            }
        }
        let ret = self.call(prog, prog.top, args)?;
        Ok((ret, ranges))
    }

    pub(crate) fn mem(&self) -> &[u32] {
        &self.mem
    }

    fn call(&mut self, prog: &Lowered, func: u32, args: Vec<ArgVal>) -> Result<u32, Abort> {
        let f = &prog.funcs[func as usize];
        let sbase = self.scalars.len();
        let abase = self.arrays.len();
        let mbase = self.mem.len();
        self.scalars.resize(sbase + f.scalars as usize, 0);
        self.arrays.resize(abase + f.local_arrays.len(), ArrRef::default());
        for (i, &len) in f.local_arrays.iter().enumerate() {
            if len > 0 {
                let base = self.mem.len() as u32;
                self.mem.resize(self.mem.len() + len as usize, 0);
                self.arrays[abase + i] = ArrRef { base, len };
            }
        }
        for (p, a) in f.params.iter().zip(args) {
            match (p, a) {
                (LParam::Scalar(slot, ty), ArgVal::Scalar(v)) => {
                    self.scalars[sbase + *slot as usize] = ty.normalize(v)
                }
                (LParam::Array(slot), ArgVal::Array(r)) => self.arrays[abase + *slot as usize] = r,
                _ => unreachable!("argument shapes checked during lowering"),
            }
        }
        let frame = Frame { s: sbase, a: abase };
        let flow = self.block(prog, &f.body, frame);
        self.scalars.truncate(sbase);
        self.arrays.truncate(abase);
        self.mem.truncate(mbase);
        let ret = match flow? {
            Flow::Return(v) => v,
            _ => 0,
        };
        Ok(f.ret.map_or(0, |t| t.normalize(ret)))
    }

    #[inline]
    fn tick(&mut self) -> Result<(), Abort> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(Abort)
        } else {
            Ok(())
        }
    }

    fn block(&mut self, prog: &Lowered, stmts: &[LStmt], fr: Frame) -> Result<Flow, Abort> {
        for s in stmts {
            match self.stmt(prog, s, fr)? {
                Flow::Next => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Next)
    }

    fn arr(&self, src: ArrSrc, fr: Frame) -> ArrRef {
        match src {
            ArrSrc::Local(i) => self.arrays[fr.a + i as usize],
            ArrSrc::Global(i) => self.global_arrays[i as usize],
        }
    }

    /// Resolves an element address; `None` when out of range.
    fn elem(&mut self, r: ArrRef, idx: u32, unsigned: bool) -> Option<usize> {
        let i = if unsigned { i64::from(idx) } else { i64::from(idx as i32) };
        if i < 0 || i >= i64::from(r.len) {
            self.out_of_range = true;
            None
        } else {
            Some(r.base as usize + i as usize)
        }
    }

    fn stmt(&mut self, prog: &Lowered, s: &LStmt, fr: Frame) -> Result<Flow, Abort> {
        self.tick()?;
        match s {
            LStmt::Assign { target, op, value } => {
                match target {
                    LTarget::Local(slot, ty) => {
                        let v = self.expr(prog, value, fr)?;
                        let at = fr.s + *slot as usize;
                        let v = match op {
                            Some((op, u)) => bin(*op, *u, self.scalars[at], v, &mut self.div_zero),
                            None => v,
                        };
                        self.scalars[at] = ty.normalize(v);
                    }
                    LTarget::Global(slot, ty) => {
                        let v = self.expr(prog, value, fr)?;
                        let at = *slot as usize;
                        let v = match op {
                            Some((op, u)) => bin(*op, *u, self.globals[at], v, &mut self.div_zero),
                            None => v,
                        };
                        self.globals[at] = ty.normalize(v);
                    }
                    LTarget::Elem { arr, idx, idx_unsigned, ty } => {
                        let i = self.expr(prog, idx, fr)?;
                        let v = self.expr(prog, value, fr)?;
                        let r = self.arr(*arr, fr);
                        if let Some(at) = self.elem(r, i, *idx_unsigned) {
                            let v = match op {
                                Some((op, u)) => bin(*op, *u, self.mem[at], v, &mut self.div_zero),
                                None => v,
                            };
                            self.mem[at] = ty.normalize(v);
                        }
                    }
                }
                Ok(Flow::Next)
            }
            LStmt::ArrInit { slot, vals } => {
                let r = self.arrays[fr.a + *slot as usize];
                let dst = &mut self.mem[r.base as usize..(r.base + r.len) as usize];
                dst.fill(0);
                let n = vals.len().min(dst.len());
                dst[..n].copy_from_slice(&vals[..n]);
                Ok(Flow::Next)
            }
            LStmt::Expr(e) => {
                self.expr(prog, e, fr)?;
                Ok(Flow::Next)
            }
            LStmt::If(c, t, e) => {
                if self.expr(prog, c, fr)? != 0 {
                    self.block(prog, t, fr)
                } else {
                    self.block(prog, e, fr)
                }
            }
            LStmt::Loop { cond, body, step } => loop {
                if let Some(c) = cond {
                    self.tick()?;
                    if self.expr(prog, c, fr)? == 0 {
                        return Ok(Flow::Next);
                    }
                }
                match self.block(prog, body, fr)? {
                    Flow::Break => return Ok(Flow::Next),
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Next | Flow::Continue => {}
                }
                self.block(prog, step, fr)?;
            },
            LStmt::Return(e) => {
                let v = match e {
                    Some(e) => self.expr(prog, e, fr)?,
                    None => 0,
                };
                Ok(Flow::Return(v))
            }
            LStmt::Break => Ok(Flow::Break),
            LStmt::Continue => Ok(Flow::Continue),
            LStmt::Block(b) => self.block(prog, b, fr),
        }
    }

    fn expr(&mut self, prog: &Lowered, e: &LExpr, fr: Frame) -> Result<u32, Abort> {
        Ok(match e {
            LExpr::Const(v) => *v,
            LExpr::Local(s) => self.scalars[fr.s + *s as usize],
            LExpr::Global(s) => self.globals[*s as usize],
            LExpr::Load { arr, idx, idx_unsigned } => {
                let i = self.expr(prog, idx, fr)?;
                let r = self.arr(*arr, fr);
                match self.elem(r, i, *idx_unsigned) {
                    Some(at) => self.mem[at],
                    None => 0,
                }
            }
            LExpr::Neg(x) => self.expr(prog, x, fr)?.wrapping_neg(),
            LExpr::BitNot(x) => !self.expr(prog, x, fr)?,
            LExpr::LogNot(x) => (self.expr(prog, x, fr)? == 0) as u32,
            LExpr::Bin { op, unsigned, a, b } => {
                let a = self.expr(prog, a, fr)?;
                let b = self.expr(prog, b, fr)?;
                bin(*op, *unsigned, a, b, &mut self.div_zero)
            }
            LExpr::And(a, b) => (self.expr(prog, a, fr)? != 0 && self.expr(prog, b, fr)? != 0) as u32,
            LExpr::Or(a, b) => (self.expr(prog, a, fr)? != 0 || self.expr(prog, b, fr)? != 0) as u32,
            LExpr::Cond(c, a, b) => {
                if self.expr(prog, c, fr)? != 0 {
                    self.expr(prog, a, fr)?
                } else {
                    self.expr(prog, b, fr)?
                }
            }
            LExpr::Narrow(ty, x) => ty.normalize(self.expr(prog, x, fr)?),
            LExpr::Memo(slot, x) => match self.memo[*slot as usize] {
                Some(v) => v,
                None => {
                    let v = self.expr(prog, x, fr)?;
                    self.memo[*slot as usize] = Some(v);
                    v
                }
            },
            LExpr::Call { func, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(match a {
                        LArg::Val(e) => ArgVal::Scalar(self.expr(prog, e, fr)?),
                        LArg::Arr(src) => ArgVal::Array(self.arr(*src, fr)),
                    });
                }
                self.call(prog, *func, vals)?
            }
        })
    }
}

enum ArgVal {
    Scalar(u32),
    Array(ArrRef),
}

#[derive(Clone, Copy)]
struct Frame {
    s: usize,
    a: usize,
}
