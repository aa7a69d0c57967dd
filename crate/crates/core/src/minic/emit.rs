use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";
const PREC_TERNARY: u8 = 0;
const PREC_UNARY: u8 = 12;
const PREC_PRIMARY: u8 = 13;

/// Pretty-prints a program as compilable MiniC. Output is deterministic and
/// re-parses to an isomorphic tree.
pub fn emit_source(p: &Program) -> String {
    let mut out = String::new();
    for g in &p.globals {
        if g.is_const {
            out.push_str("const ");
        }
        let _ = write!(out, "{} {}", g.ty, g.name);
        if let Some(n) = g.array_len {
            let _ = write!(out, "[{n}]");
        }
        match (&g.init, g.array_len) {
            (Some(vals), Some(_)) => {
                let _ = write!(out, " = {}", init_list(vals));
            }
            (Some(vals), None) => {
                let _ = write!(out, " = {}", vals[0]);
            }
            (None, _) => {}
        }
        out.push_str(";\n");
    }
    if !p.globals.is_empty() {
        out.push('\n');
    }
    if p.functions.len() > 1 {
        for f in &p.functions {
            let _ = writeln!(out, "{};", signature(f));
        }
        out.push('\n');
    }
    for (i, f) in p.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{} {{", signature(f));
        for s in &f.body {
            stmt(&mut out, s, 1);
        }
        out.push_str("}\n");
    }
    out
}

fn init_list(vals: &[i64]) -> String {
    let items: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn signature(f: &FunctionDef) -> String {
    let ret = f.ret.map_or("void", |t| t.c_name());
    let params: Vec<String> = f.params.iter().map(param).collect();
    let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
    format!("{ret} {}({params})", f.name)
}

fn param(p: &Param) -> String {
    let c = if p.is_const { "const " } else { "" };
    match p.shape {
        ParamShape::Scalar => format!("{c}{} {}", p.ty, p.name),
        ParamShape::Pointer => format!("{c}{} *{}", p.ty, p.name),
        ParamShape::Array(Some(n)) => format!("{c}{} {}[{n}]", p.ty, p.name),
        ParamShape::Array(None) => format!("{c}{} {}[]", p.ty, p.name),
    }
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn decl(d: &LocalDecl) -> String {
    let mut s = String::new();
    if d.is_const {
        s.push_str("const ");
    }
    let _ = write!(s, "{} {}", d.ty, d.name);
    if let Some(n) = d.array_len {
        let _ = write!(s, "[{n}]");
    }
    match &d.init {
        Some(Init::Scalar(e)) => {
            let _ = write!(s, " = {}", expr(e));
        }
        Some(Init::List(v)) => {
            let _ = write!(s, " = {}", init_list(v));
        }
        None => {}
    }
    s
}

/// A statement that fits in a `for` header, without the trailing `;`.
fn simple(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Decl(d) => decl(d),
        StmtKind::Assign { target, op: None, value } => format!("{} = {}", expr(target), expr(value)),
        StmtKind::Assign { target, op: Some(op), value } => {
            format!("{} {}= {}", expr(target), op.symbol(), expr(value))
        }
        StmtKind::Step { target, increment } => {
            format!("{}{}", expr(target), if *increment { "++" } else { "--" })
        }
        StmtKind::Expr(e) => expr(e),
        _ => unreachable!("not a simple statement"),
    }
}

fn body(out: &mut String, s: &Stmt, depth: usize) {
    if let StmtKind::Block(b) = &s.kind {
        out.push_str(" {\n");
        for st in b {
            stmt(out, st, depth + 1);
        }
        pad(out, depth);
        out.push('}');
    } else {
        out.push('\n');
        stmt(out, s, depth + 1);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    pad(out, depth);
    match &s.kind {
        StmtKind::Decl(_) | StmtKind::Assign { .. } | StmtKind::Step { .. } | StmtKind::Expr(_) => {
            out.push_str(&simple(s));
            out.push_str(";\n");
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            let _ = write!(out, "if ({})", expr(cond));
            body(out, then_branch, depth);
            if let Some(e) = else_branch {
                if out.ends_with('}') {
                    out.push_str(" else");
                } else {
                    pad(out, depth);
                    out.push_str("else");
                }
                if matches!(e.kind, StmtKind::If { .. }) {
                    out.push(' ');
                    let start = out.len();
                    stmt(out, e, depth);
                    // the nested if was padded as its own line; pull it up
                    let nested: String = out[start..].trim_start().to_string();
                    out.truncate(start);
                    out.push_str(&nested);
                    return;
                }
                body(out, e, depth);
            }
            if out.ends_with('}') {
                out.push('\n');
            }
        }
        StmtKind::For { init, cond, step, body: b } => {
            let init = init.as_ref().map(|s| simple(s)).unwrap_or_default();
            let cond = cond.as_ref().map(expr).unwrap_or_default();
            let step = step.as_ref().map(|s| simple(s)).unwrap_or_default();
            let _ = write!(out, "for ({init};{}{cond};{}{step})", sp(&cond), sp(&step));
            body(out, b, depth);
            if out.ends_with('}') {
                out.push('\n');
            }
        }
        StmtKind::While { cond, body: b } => {
            let _ = write!(out, "while ({})", expr(cond));
            body(out, b, depth);
            if out.ends_with('}') {
                out.push('\n');
            }
        }
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", expr(e));
        }
        StmtKind::Break => out.push_str("break;\n"),
        StmtKind::Continue => out.push_str("continue;\n"),
        StmtKind::Block(b) => {
            out.push_str("{\n");
            for st in b {
                stmt(out, st, depth + 1);
            }
            pad(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Empty => out.push_str(";\n"),
    }
}

fn sp(s: &str) -> &'static str {
    if s.is_empty() {
        ""
    } else {
        " "
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::Index(..) | ExprKind::Call(..) => PREC_PRIMARY,
        ExprKind::Deref(_) | ExprKind::Unary(..) | ExprKind::Cast(..) => PREC_UNARY,
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Ternary(..) => PREC_TERNARY,
    }
}

pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, PREC_TERNARY);
    s
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let paren = prec(e) < min;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::IntLit(l) => {
            if l.hex {
                let _ = write!(out, "0x{:X}", l.value);
            } else {
                let _ = write!(out, "{}", l.value);
            }
            if l.unsigned_suffix {
                out.push('u');
            }
        }
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Deref(n) => {
            out.push('*');
            out.push_str(n);
        }
        ExprKind::Index(n, i) => {
            out.push_str(n);
            out.push('[');
            write_expr(out, i, PREC_TERNARY);
            out.push(']');
        }
        ExprKind::Call(n, args) => {
            out.push_str(n);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, PREC_TERNARY);
            }
            out.push(')');
        }
        ExprKind::Unary(op, x) => {
            out.push_str(op.symbol());
            // keep "- -x" from lexing as a decrement
            let nested_minus = *op == UnOp::Neg
                && matches!(x.kind, ExprKind::Unary(UnOp::Neg, _));
            if nested_minus {
                out.push('(');
                write_expr(out, x, PREC_TERNARY);
                out.push(')');
            } else {
                write_expr(out, x, PREC_UNARY);
            }
        }
        ExprKind::Cast(ty, x) => {
            let _ = write!(out, "({ty})");
            write_expr(out, x, PREC_UNARY);
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, p + 1);
        }
        ExprKind::Ternary(c, a, b) => {
            write_expr(out, c, 1);
            out.push_str(" ? ");
            write_expr(out, a, PREC_TERNARY);
            out.push_str(" : ");
            write_expr(out, b, PREC_TERNARY);
        }
    }
    if paren {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn roundtrip(src: &str) {
        let p = parse(src, None).unwrap();
        let text = emit_source(&p);
        let q = parse(&text, Some(&p.top_name)).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert!(p.isomorphic(&q), "not isomorphic:\n{text}");
        assert_eq!(text, emit_source(&q));
    }

    #[test]
    fn precedence_survives() {
        roundtrip("int top(int a, int b, int c){ return a - (b - c) * (a + b) << 2 ^ ~-c; }");
        roundtrip("int top(int a, int b){ return (a < b ? a : b) + (a ? b ? 1 : 2 : 3); }");
        roundtrip("int top(int a){ return - -a + -(-a); }");
        roundtrip("unsigned int top(int a){ return (unsigned int)(unsigned char)a + 0xFFu; }");
    }

    #[test]
    fn statements_survive() {
        roundtrip(
            "const int T[3] = {1, -2, 3}; int g = -4;\n\
             int h(const int t[], int x){ return t[x] + g; }\n\
             int top(int a, int out[2]){\n\
               int i; int s = 0; int buf[4] = {9};\n\
               for (i = 0; i < 4; i++) { buf[i] += a; if (buf[i] > 3) continue; else s--; }\n\
               for (;;) break;\n\
               while (s < 0) s = s + 1;\n\
               if (a) s = 1; else if (a > 2) { s = 2; } else s = 3;\n\
               out[0] = h(T, 1); out[1] = s; ;\n\
               return 0; }",
        );
    }

    #[test]
    fn key_indexing_format() {
        let p = parse("int top(int c, const unsigned char KEY[]){ return c ^ KEY[3]; }", None).unwrap();
        let text = emit_source(&p);
        assert!(text.contains("int top(int c, const unsigned char KEY[])"), "{text}");
        assert!(text.contains("return c ^ KEY[3];"), "{text}");
    }
}
