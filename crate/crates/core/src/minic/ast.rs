//! Typed syntax tree for MiniC.

use std::fmt;

/// Preorder index of a statement or expression node.
pub type NodeId = u32;

/// Source position (1-based line and column).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

/// A fixed-width integer type. Every C integer spelling accepted by the
/// parser is normalized to one of six variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntType {
    pub signed: bool,
    pub bits: u8,
}

impl IntType {
    pub const I8: IntType = IntType { signed: true, bits: 8 };
    pub const U8: IntType = IntType { signed: false, bits: 8 };
    pub const I16: IntType = IntType { signed: true, bits: 16 };
    pub const U16: IntType = IntType { signed: false, bits: 16 };
    pub const I32: IntType = IntType { signed: true, bits: 32 };
    pub const U32: IntType = IntType { signed: false, bits: 32 };

    pub fn mask(self) -> u32 {
        if self.bits >= 32 {
            u32::MAX
        } else {
            (1u32 << self.bits) - 1
        }
    }

    /// Truncates `raw` to this width and re-extends it to 32 bits.
    #[inline]
    pub fn normalize(self, raw: u32) -> u32 {
        match (self.bits, self.signed) {
            (8, true) => raw as u8 as i8 as i32 as u32,
            (8, false) => raw & 0xff,
            (16, true) => raw as u16 as i16 as i32 as u32,
            (16, false) => raw & 0xffff,
            _ => raw,
        }
    }

    /// Whether `v` is representable in this type.
    pub fn fits(self, v: i64) -> bool {
        let (lo, hi) = if self.signed {
            (-(1i64 << (self.bits - 1)), (1i64 << (self.bits - 1)) - 1)
        } else {
            (0, (1i64 << self.bits) - 1)
        };
        v >= lo && v <= hi
    }

    /// Signedness after integer promotion: everything narrower than 32 bits
    /// promotes to `int`.
    pub fn promoted_unsigned(self) -> bool {
        self.bits == 32 && !self.signed
    }

    pub fn c_name(self) -> &'static str {
        match (self.signed, self.bits) {
            (true, 8) => "signed char",
            (false, 8) => "unsigned char",
            (true, 16) => "short",
            (false, 16) => "unsigned short",
            (true, _) => "int",
            (false, _) => "unsigned int",
        }
    }
}

impl fmt::Display for IntType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.c_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    LogAnd,
    LogOr,
}

impl BinOp {
    pub const ALL: [BinOp; 18] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::BitXor,
        BinOp::Shl,
        BinOp::Shr,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::LogAnd,
        BinOp::LogOr,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::LogAnd => "&&",
            BinOp::LogOr => "||",
        }
    }

    /// C binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Mul | BinOp::Div | BinOp::Rem => 10,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Shl | BinOp::Shr => 8,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::BitAnd => 5,
            BinOp::BitXor => 4,
            BinOp::BitOr => 3,
            BinOp::LogAnd => 2,
            BinOp::LogOr => 1,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::LogAnd | BinOp::LogOr)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, BinOp::Shl | BinOp::Shr)
    }
}

impl serde::Serialize for BinOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    BitNot,
    LogNot,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::BitNot => "~",
            UnOp::LogNot => "!",
        }
    }
}

/// An integer literal as written. Literals are never negative; `-5` is a
/// negation applied to `5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub value: u32,
    pub hex: bool,
    pub unsigned_suffix: bool,
}

impl Literal {
    pub fn decimal(value: u32) -> Self {
        Literal { value, hex: false, unsigned_suffix: false }
    }

    /// C typing: `int` when the value fits and there is no `u` suffix,
    /// otherwise `unsigned int`.
    pub fn ty(&self) -> IntType {
        if self.unsigned_suffix || self.value > i32::MAX as u32 {
            IntType::U32
        } else {
            IntType::I32
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    IntLit(Literal),
    Var(String),
    /// `*p` on a pointer out-parameter of the top function.
    Deref(String),
    Index(String, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Cast(IntType, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { id: 0, span: Span::default(), kind }
    }

    pub fn lit(value: u32) -> Self {
        Expr::new(ExprKind::IntLit(Literal::decimal(value)))
    }

    pub fn var(name: &str) -> Self {
        Expr::new(ExprKind::Var(name.to_string()))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    pub fn unary(op: UnOp, e: Expr) -> Self {
        Expr::new(ExprKind::Unary(op, Box::new(e)))
    }

    pub fn ternary(c: Expr, a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Ternary(Box::new(c), Box::new(a), Box::new(b)))
    }

    pub fn index(name: &str, idx: Expr) -> Self {
        Expr::new(ExprKind::Index(name.to_string(), Box::new(idx)))
    }

    pub fn cast(ty: IntType, e: Expr) -> Self {
        Expr::new(ExprKind::Cast(ty, Box::new(e)))
    }

    /// Whether the expression always evaluates to 0 or 1.
    pub fn is_boolean(&self) -> bool {
        match &self.kind {
            ExprKind::Binary(op, _, _) => op.is_comparison() || op.is_logical(),
            ExprKind::Unary(UnOp::LogNot, _) => true,
            _ => false,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::Deref(_) => vec![],
            ExprKind::Index(_, i) => vec![i],
            ExprKind::Unary(_, e) | ExprKind::Cast(_, e) => vec![e],
            ExprKind::Binary(_, a, b) => vec![a, b],
            ExprKind::Ternary(c, a, b) => vec![c, a, b],
            ExprKind::Call(_, args) => args.iter().collect(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::Deref(_) => vec![],
            ExprKind::Index(_, i) => vec![i],
            ExprKind::Unary(_, e) | ExprKind::Cast(_, e) => vec![e],
            ExprKind::Binary(_, a, b) => vec![a, b],
            ExprKind::Ternary(c, a, b) => vec![c, a, b],
            ExprKind::Call(_, args) => args.iter_mut().collect(),
        }
    }
}

/// A local variable declaration.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalDecl {
    pub name: String,
    pub ty: IntType,
    pub is_const: bool,
    pub array_len: Option<usize>,
    pub init: Option<Init>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Scalar(Expr),
    /// Brace list for arrays. Entries are data, not expression nodes.
    List(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub id: NodeId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl(LocalDecl),
    /// `target = value` or `target op= value`; target is a variable, an
    /// array element, or a dereferenced out-pointer.
    Assign { target: Expr, op: Option<BinOp>, value: Expr },
    /// `target++` / `target--`.
    Step { target: Expr, increment: bool },
    Expr(Expr),
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Box<Stmt>,
    },
    While { cond: Expr, body: Box<Stmt> },
    Return(Option<Expr>),
    Break,
    Continue,
    Block(Vec<Stmt>),
    Empty,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { id: 0, span: Span::default(), kind }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamShape {
    Scalar,
    /// `T name[N]`, or `T name[]` when the length is `None`.
    Array(Option<usize>),
    /// `T *name`; top-level output only.
    Pointer,
}

/// Data direction of a top-function parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    /// Seeded from the input vector (zero when absent) and reported as output.
    Out,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: IntType,
    pub is_const: bool,
    pub shape: ParamShape,
}

impl Param {
    /// Scalars and `const` arrays are inputs; writable arrays and pointers
    /// are outputs.
    pub fn direction(&self) -> Direction {
        match self.shape {
            ParamShape::Scalar => Direction::In,
            ParamShape::Array(_) if self.is_const => Direction::In,
            ParamShape::Array(_) | ParamShape::Pointer => Direction::Out,
        }
    }

    /// Number of elements a test vector supplies for this parameter.
    pub fn arity(&self) -> usize {
        match self.shape {
            ParamShape::Scalar | ParamShape::Pointer => 1,
            ParamShape::Array(n) => n.unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub ret: Option<IntType>,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: IntType,
    pub is_const: bool,
    pub array_len: Option<usize>,
    pub init: Option<Vec<i64>>,
}

/// Name of the key parameter added to locked programs.
pub const KEY_PARAM: &str = "KEY";

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<FunctionDef>,
    pub top_name: String,
}

impl Program {
    pub fn top(&self) -> &FunctionDef {
        self.function(&self.top_name)
            .expect("validated program has its top function")
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// True when the top function carries the `KEY` parameter.
    pub fn is_locked(&self) -> bool {
        self.top().params.iter().any(|p| p.name == KEY_PARAM)
    }

    /// Output parameters of the top function in declaration order.
    pub fn outputs(&self) -> impl Iterator<Item = &Param> {
        self.top()
            .params
            .iter()
            .filter(|p| p.direction() == Direction::Out && p.name != KEY_PARAM)
    }

    /// N: out-parameter bits followed by the return value bits.
    pub fn output_bits(&self) -> usize {
        let params: usize = self
            .outputs()
            .map(|p| p.arity() * p.ty.bits as usize)
            .sum();
        params + self.top().ret.map_or(0, |t| t.bits as usize)
    }

    /// Assigns preorder node ids to every statement and expression.
    pub fn renumber(&mut self) {
        let mut next = 0;
        for f in &mut self.functions {
            for s in &mut f.body {
                renumber_stmt(s, &mut next);
            }
        }
    }

    /// Copy with all spans cleared, for shape comparison.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        for f in &mut p.functions {
            f.span = Span::default();
            for s in &mut f.body {
                visit_stmt_mut(s, &mut |s| s.span = Span::default(), &mut |e| {
                    e.span = Span::default()
                });
            }
        }
        p
    }

    /// Node-kind and shape equality, ignoring spans.
    pub fn isomorphic(&self, other: &Program) -> bool {
        self.without_spans() == other.without_spans()
    }

    pub fn node_count(&self) -> usize {
        let (mut stmts, mut exprs) = (0, 0);
        for f in &self.functions {
            for s in &f.body {
                visit_stmt(s, &mut |_| stmts += 1, &mut |_| exprs += 1);
            }
        }
        stmts + exprs
    }
}

fn renumber_stmt(s: &mut Stmt, next: &mut NodeId) {
    s.id = *next;
    *next += 1;
    match &mut s.kind {
        StmtKind::Decl(d) => {
            if let Some(Init::Scalar(e)) = &mut d.init {
                renumber_expr(e, next);
            }
        }
        StmtKind::Assign { target, value, .. } => {
            renumber_expr(target, next);
            renumber_expr(value, next);
        }
        StmtKind::Step { target, .. } => renumber_expr(target, next),
        StmtKind::Expr(e) => renumber_expr(e, next),
        StmtKind::If { cond, then_branch, else_branch } => {
            renumber_expr(cond, next);
            renumber_stmt(then_branch, next);
            if let Some(e) = else_branch {
                renumber_stmt(e, next);
            }
        }
        StmtKind::For { init, cond, step, body } => {
            if let Some(i) = init {
                renumber_stmt(i, next);
            }
            if let Some(c) = cond {
                renumber_expr(c, next);
            }
            if let Some(st) = step {
                renumber_stmt(st, next);
            }
            renumber_stmt(body, next);
        }
        StmtKind::While { cond, body } => {
            renumber_expr(cond, next);
            renumber_stmt(body, next);
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                renumber_expr(e, next);
            }
        }
        StmtKind::Block(b) => {
            for s in b {
                renumber_stmt(s, next);
            }
        }
        StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
    }
}

fn renumber_expr(e: &mut Expr, next: &mut NodeId) {
    e.id = *next;
    *next += 1;
    for c in e.children_mut() {
        renumber_expr(c, next);
    }
}

/// Preorder walk over a statement and every nested statement/expression.
pub fn visit_stmt(s: &Stmt, on_stmt: &mut dyn FnMut(&Stmt), on_expr: &mut dyn FnMut(&Expr)) {
    on_stmt(s);
    for_each_child(s, &mut |child| match child {
        Child::Stmt(st) => visit_stmt(st, on_stmt, on_expr),
        Child::Expr(e) => visit_expr(e, on_expr),
    });
}

pub fn visit_expr(e: &Expr, on_expr: &mut dyn FnMut(&Expr)) {
    on_expr(e);
    for c in e.children() {
        visit_expr(c, on_expr);
    }
}

pub enum Child<'a> {
    Stmt(&'a Stmt),
    Expr(&'a Expr),
}

/// Direct children of a statement in source (preorder) order.
pub fn for_each_child<'a>(s: &'a Stmt, f: &mut dyn FnMut(Child<'a>)) {
    match &s.kind {
        StmtKind::Decl(d) => {
            if let Some(Init::Scalar(e)) = &d.init {
                f(Child::Expr(e));
            }
        }
        StmtKind::Assign { target, value, .. } => {
            f(Child::Expr(target));
            f(Child::Expr(value));
        }
        StmtKind::Step { target, .. } => f(Child::Expr(target)),
        StmtKind::Expr(e) => f(Child::Expr(e)),
        StmtKind::If { cond, then_branch, else_branch } => {
            f(Child::Expr(cond));
            f(Child::Stmt(then_branch));
            if let Some(e) = else_branch {
                f(Child::Stmt(e));
            }
        }
        StmtKind::For { init, cond, step, body } => {
            if let Some(i) = init {
                f(Child::Stmt(i));
            }
            if let Some(c) = cond {
                f(Child::Expr(c));
            }
            if let Some(st) = step {
                f(Child::Stmt(st));
            }
            f(Child::Stmt(body));
        }
        StmtKind::While { cond, body } => {
            f(Child::Expr(cond));
            f(Child::Stmt(body));
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                f(Child::Expr(e));
            }
        }
        StmtKind::Block(b) => {
            for st in b {
                f(Child::Stmt(st));
            }
        }
        StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
    }
}

/// Mutable preorder walk.
pub fn visit_stmt_mut(
    s: &mut Stmt,
    on_stmt: &mut dyn FnMut(&mut Stmt),
    on_expr: &mut dyn FnMut(&mut Expr),
) {
    on_stmt(s);
    match &mut s.kind {
        StmtKind::Decl(d) => {
            if let Some(Init::Scalar(e)) = &mut d.init {
                visit_expr_mut(e, on_expr);
            }
        }
        StmtKind::Assign { target, value, .. } => {
            visit_expr_mut(target, on_expr);
            visit_expr_mut(value, on_expr);
        }
        StmtKind::Step { target, .. } => visit_expr_mut(target, on_expr),
        StmtKind::Expr(e) => visit_expr_mut(e, on_expr),
        StmtKind::If { cond, then_branch, else_branch } => {
            visit_expr_mut(cond, on_expr);
            visit_stmt_mut(then_branch, on_stmt, on_expr);
            if let Some(e) = else_branch {
                visit_stmt_mut(e, on_stmt, on_expr);
            }
        }
        StmtKind::For { init, cond, step, body } => {
            if let Some(i) = init {
                visit_stmt_mut(i, on_stmt, on_expr);
            }
            if let Some(c) = cond {
                visit_expr_mut(c, on_expr);
            }
            if let Some(st) = step {
                visit_stmt_mut(st, on_stmt, on_expr);
            }
            visit_stmt_mut(body, on_stmt, on_expr);
        }
        StmtKind::While { cond, body } => {
            visit_expr_mut(cond, on_expr);
            visit_stmt_mut(body, on_stmt, on_expr);
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                visit_expr_mut(e, on_expr);
            }
        }
        StmtKind::Block(b) => {
            for st in b {
                visit_stmt_mut(st, on_stmt, on_expr);
            }
        }
        StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
    }
}

pub fn visit_expr_mut(e: &mut Expr, on_expr: &mut dyn FnMut(&mut Expr)) {
    on_expr(e);
    for c in e.children_mut() {
        visit_expr_mut(c, on_expr);
    }
}
