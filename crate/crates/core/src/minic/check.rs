//! Name resolution, shape checking and call-graph validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::{Diagnostic, DiagnosticKind, ParseError};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Sym {
    Scalar { is_const: bool },
    Array { ty: IntType, is_const: bool },
    Pointer,
}

fn semantic(span: Span, msg: impl Into<String>) -> ParseError {
    ParseError { diagnostics: vec![Diagnostic::new(DiagnosticKind::Semantic, span, msg)] }
}

fn unsupported(span: Span, msg: impl Into<String>) -> ParseError {
    ParseError { diagnostics: vec![Diagnostic::new(DiagnosticKind::Unsupported, span, msg)] }
}

fn callees(f: &FunctionDef) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in &f.body {
        visit_stmt(s, &mut |_| {}, &mut |e| {
            if let ExprKind::Call(name, _) = &e.kind {
                out.insert(name.clone());
            }
        });
    }
    out
}

pub fn select_top(p: &Program, requested: Option<&str>) -> Result<String, ParseError> {
    if let Some(name) = requested {
        return match p.function(name) {
            Some(_) => Ok(name.to_string()),
            None => Err(semantic(Span::default(), format!("top function '{name}' not found"))),
        };
    }
    let called: BTreeSet<String> = p.functions.iter().flat_map(callees).collect();
    let roots: Vec<&str> = p
        .functions
        .iter()
        .filter(|f| !called.contains(&f.name))
        .map(|f| f.name.as_str())
        .collect();
    match roots.as_slice() {
        [one] => Ok(one.to_string()),
        [] => Err(semantic(Span::default(), "no top function found")),
        many => Err(semantic(
            Span::default(),
            format!("ambiguous top function: candidates are {}", many.join(", ")),
        )),
    }
}

pub fn check(p: &Program) -> Result<(), ParseError> {
    let top = p
        .function(&p.top_name)
        .ok_or_else(|| semantic(Span::default(), format!("top function '{}' not found", p.top_name)))?;

    check_recursion(p)?;

    let mut globals: HashMap<&str, Sym> = HashMap::new();
    for g in &p.globals {
        if globals.contains_key(g.name.as_str()) || p.function(&g.name).is_some() {
            return Err(semantic(Span::default(), format!("'{}' declared twice", g.name)));
        }
        if let Some(init) = &g.init {
            for v in init {
                if !g.ty.fits(*v) && !IntType::U32.fits(*v) && !IntType::I32.fits(*v) {
                    return Err(semantic(Span::default(), format!("initializer {v} out of range for '{}'", g.name)));
                }
            }
        }
        let sym = match g.array_len {
            Some(_) => Sym::Array { ty: g.ty, is_const: g.is_const },
            None => Sym::Scalar { is_const: g.is_const },
        };
        globals.insert(&g.name, sym);
    }

    for f in &p.functions {
        let is_top = f.name == p.top_name;
        let mut scope = Scope { frames: vec![HashMap::new()], globals: &globals };
        for param in &f.params {
            if param.shape == ParamShape::Pointer && !is_top {
                return Err(unsupported(f.span, format!(
                    "pointer parameter '{}' outside the top function",
                    param.name
                )));
            }
            if is_top && param.shape == ParamShape::Array(None) && param.name != KEY_PARAM {
                return Err(semantic(f.span, format!(
                    "top-function array '{}' needs a fixed length",
                    param.name
                )));
            }
            let sym = match param.shape {
                ParamShape::Scalar => Sym::Scalar { is_const: param.is_const },
                ParamShape::Array(_) => Sym::Array { ty: param.ty, is_const: param.is_const },
                ParamShape::Pointer => Sym::Pointer,
            };
            if scope.frames[0].insert(param.name.clone(), sym).is_some() {
                return Err(semantic(f.span, format!("duplicate parameter '{}'", param.name)));
            }
        }
        let mut ctx = FnCtx { program: p, func: f, loop_depth: 0 };
        for s in &f.body {
            ctx.stmt(s, &mut scope)?;
        }
    }

    if top.params.iter().any(|p| p.name == KEY_PARAM) {
        let key = top.params.iter().find(|p| p.name == KEY_PARAM).unwrap();
        if key.ty != IntType::U8 || !key.is_const || !matches!(key.shape, ParamShape::Array(_)) {
            return Err(semantic(top.span, "KEY must be declared 'const unsigned char KEY[]'"));
        }
    }
    if p.output_bits() == 0 {
        return Err(semantic(top.span, format!(
            "top function '{}' has no outputs (needs a return value or an output array/pointer)",
            p.top_name
        )));
    }
    Ok(())
}

fn check_recursion(p: &Program) -> Result<(), ParseError> {
    let graph: BTreeMap<&str, BTreeSet<String>> =
        p.functions.iter().map(|f| (f.name.as_str(), callees(f))).collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    fn dfs<'a>(
        n: &'a str,
        g: &'a BTreeMap<&'a str, BTreeSet<String>>,
        st: &mut BTreeMap<&'a str, u8>,
    ) -> Option<String> {
        st.insert(n, 1);
        if let Some(cs) = g.get(n) {
            for c in cs {
                let Some((key, _)) = g.get_key_value(c.as_str()) else { continue };
                match st.get(key).copied().unwrap_or(0) {
                    1 => return Some(c.clone()),
                    0 => {
                        if let Some(r) = dfs(key, g, st) {
                            return Some(r);
                        }
                    }
                    _ => {}
                }
            }
        }
        st.insert(n, 2);
        None
    }
    for f in &p.functions {
        if state.get(f.name.as_str()).copied().unwrap_or(0) == 0 {
            if let Some(name) = dfs(&f.name, &graph, &mut state) {
                let span = p.function(&name).map(|f| f.span).unwrap_or_default();
                return Err(unsupported(span, format!("recursion through '{name}' is not supported")));
            }
        }
    }
    Ok(())
}

struct Scope<'a> {
    frames: Vec<HashMap<String, Sym>>,
    globals: &'a HashMap<&'a str, Sym>,
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<Sym> {
        self.frames
            .iter()
            .rev()
            .find_map(|f| f.get(name).copied())
            .or_else(|| self.globals.get(name).copied())
    }
}

struct FnCtx<'a> {
    program: &'a Program,
    func: &'a FunctionDef,
    loop_depth: u32,
}

impl FnCtx<'_> {
    fn stmt(&mut self, s: &Stmt, scope: &mut Scope) -> Result<(), ParseError> {
        match &s.kind {
            StmtKind::Decl(d) => {
                if let Some(Init::Scalar(e)) = &d.init {
                    if d.array_len.is_some() {
                        return Err(semantic(s.span, "array initializers need braces"));
                    }
                    self.value(e, scope)?;
                }
                if let Some(Init::List(v)) = &d.init {
                    if d.array_len.is_none() {
                        return Err(semantic(s.span, "scalar initialized with a brace list"));
                    }
                    if v.len() > d.array_len.unwrap() {
                        return Err(semantic(s.span, "too many initializers"));
                    }
                }
                let frame = scope.frames.last_mut().unwrap();
                if frame.contains_key(&d.name) {
                    return Err(semantic(s.span, format!("'{}' declared twice in the same scope", d.name)));
                }
                let sym = match d.array_len {
                    Some(_) => Sym::Array { ty: d.ty, is_const: d.is_const },
                    None => Sym::Scalar { is_const: d.is_const },
                };
                frame.insert(d.name.clone(), sym);
            }
            StmtKind::Assign { target, value, .. } => {
                self.lvalue(target, scope)?;
                self.value(value, scope)?;
            }
            StmtKind::Step { target, .. } => self.lvalue(target, scope)?,
            StmtKind::Expr(e) => self.expr(e, scope, true)?,
            StmtKind::If { cond, then_branch, else_branch } => {
                self.value(cond, scope)?;
                self.scoped(then_branch, scope)?;
                if let Some(e) = else_branch {
                    self.scoped(e, scope)?;
                }
            }
            StmtKind::For { init, cond, step, body } => {
                scope.frames.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i, scope)?;
                }
                if let Some(c) = cond {
                    self.value(c, scope)?;
                }
                if let Some(st) = step {
                    if matches!(st.kind, StmtKind::Decl(_)) {
                        return Err(semantic(st.span, "declaration in for-step"));
                    }
                    self.stmt(st, scope)?;
                }
                self.loop_depth += 1;
                self.scoped(body, scope)?;
                self.loop_depth -= 1;
                scope.frames.pop();
            }
            StmtKind::While { cond, body } => {
                self.value(cond, scope)?;
                self.loop_depth += 1;
                self.scoped(body, scope)?;
                self.loop_depth -= 1;
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    if self.func.ret.is_none() {
                        return Err(semantic(s.span, "void function returns a value"));
                    }
                    self.value(e, scope)?;
                }
            }
            StmtKind::Break | StmtKind::Continue => {
                if self.loop_depth == 0 {
                    return Err(semantic(s.span, "break/continue outside of a loop"));
                }
            }
            StmtKind::Block(b) => {
                scope.frames.push(HashMap::new());
                for st in b {
                    self.stmt(st, scope)?;
                }
                scope.frames.pop();
            }
            StmtKind::Empty => {}
        }
        Ok(())
    }

    fn scoped(&mut self, s: &Stmt, scope: &mut Scope) -> Result<(), ParseError> {
        scope.frames.push(HashMap::new());
        let r = self.stmt(s, scope);
        scope.frames.pop();
        r
    }

    fn lvalue(&mut self, e: &Expr, scope: &Scope) -> Result<(), ParseError> {
        match &e.kind {
            ExprKind::Var(name) => match scope.lookup(name) {
                Some(Sym::Scalar { is_const: false }) => Ok(()),
                Some(Sym::Scalar { is_const: true }) => Err(semantic(e.span, format!("assignment to const '{name}'"))),
                Some(_) => Err(semantic(e.span, format!("'{name}' is not a scalar"))),
                None => Err(semantic(e.span, format!("'{name}' used before declaration"))),
            },
            ExprKind::Index(name, idx) => {
                match scope.lookup(name) {
                    Some(Sym::Array { is_const: false, .. }) => {}
                    Some(Sym::Array { is_const: true, .. }) => {
                        return Err(semantic(e.span, format!("assignment to const array '{name}'")))
                    }
                    Some(_) => return Err(semantic(e.span, format!("'{name}' is not an array"))),
                    None => return Err(semantic(e.span, format!("'{name}' used before declaration"))),
                }
                self.value(idx, scope)
            }
            ExprKind::Deref(name) => match scope.lookup(name) {
                Some(Sym::Pointer) => Ok(()),
                _ => Err(unsupported(e.span, format!("'*{name}': only output pointers can be dereferenced"))),
            },
            _ => Err(semantic(e.span, "expression is not assignable")),
        }
    }

    fn value(&mut self, e: &Expr, scope: &Scope) -> Result<(), ParseError> {
        self.expr(e, scope, false)
    }

    fn expr(&mut self, e: &Expr, scope: &Scope, void_ok: bool) -> Result<(), ParseError> {
        match &e.kind {
            ExprKind::IntLit(_) => Ok(()),
            ExprKind::Var(name) => match scope.lookup(name) {
                Some(Sym::Scalar { .. }) => Ok(()),
                Some(_) => Err(semantic(e.span, format!("'{name}' is not a scalar"))),
                None => Err(semantic(e.span, format!("'{name}' used before declaration"))),
            },
            ExprKind::Deref(name) => match scope.lookup(name) {
                Some(Sym::Pointer) => Ok(()),
                _ => Err(unsupported(e.span, format!("'*{name}': only output pointers can be dereferenced"))),
            },
            ExprKind::Index(name, idx) => {
                match scope.lookup(name) {
                    Some(Sym::Array { .. }) => {}
                    Some(_) => return Err(semantic(e.span, format!("'{name}' is not an array"))),
                    None => return Err(semantic(e.span, format!("'{name}' used before declaration"))),
                }
                self.value(idx, scope)
            }
            ExprKind::Unary(_, x) | ExprKind::Cast(_, x) => self.value(x, scope),
            ExprKind::Binary(_, a, b) => {
                self.value(a, scope)?;
                self.value(b, scope)
            }
            ExprKind::Ternary(c, a, b) => {
                self.value(c, scope)?;
                self.value(a, scope)?;
                self.value(b, scope)
            }
            ExprKind::Call(name, args) => {
                let callee = self
                    .program
                    .function(name)
                    .ok_or_else(|| semantic(e.span, format!("call to undefined function '{name}'")))?;
                if callee.name == self.program.top_name {
                    return Err(unsupported(e.span, "calls to the top function are not supported"));
                }
                if callee.ret.is_none() && !void_ok {
                    return Err(semantic(e.span, format!("void function '{name}' used as a value")));
                }
                if callee.params.len() != args.len() {
                    return Err(semantic(e.span, format!(
                        "'{name}' expects {} arguments, got {}",
                        callee.params.len(),
                        args.len()
                    )));
                }
                for (param, arg) in callee.params.iter().zip(args) {
                    match param.shape {
                        ParamShape::Array(_) => {
                            let ExprKind::Var(aname) = &arg.kind else {
                                return Err(semantic(arg.span, format!("parameter '{}' expects an array name", param.name)));
                            };
                            match scope.lookup(aname) {
                                Some(Sym::Array { ty, is_const }) => {
                                    if ty != param.ty {
                                        return Err(semantic(arg.span, format!(
                                            "array '{aname}' has element type {ty}, parameter '{}' expects {}",
                                            param.name, param.ty
                                        )));
                                    }
                                    if is_const && !param.is_const {
                                        return Err(semantic(arg.span, format!("const array '{aname}' passed as writable")));
                                    }
                                }
                                _ => return Err(semantic(arg.span, format!("'{aname}' is not an array"))),
                            }
                        }
                        _ => self.value(arg, scope)?,
                    }
                }
                Ok(())
            }
        }
    }
}
