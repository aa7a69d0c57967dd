//! Recursive-descent parser with precedence climbing for binary operators.

use super::ast::*;
use super::lexer::{Tok, Token};
use super::{Diagnostic, DiagnosticKind, ParseError};

type PResult<T> = Result<T, ParseError>;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// Parsed declaration specifiers.
struct TypeSpec {
    ty: Option<IntType>,
    is_const: bool,
}

const TYPE_WORDS: &[&str] = &[
    "const", "signed", "unsigned", "char", "short", "int", "long", "void", "static", "int8_t",
    "uint8_t", "int16_t", "uint16_t", "int32_t", "uint32_t",
];

const UNSUPPORTED_WORDS: &[&str] = &[
    "float", "double", "struct", "union", "enum", "typedef", "goto", "switch", "case", "do",
    "sizeof", "volatile", "int64_t", "uint64_t", "extern",
];

fn err<T>(kind: DiagnosticKind, span: Span, msg: impl Into<String>) -> PResult<T> {
    Err(ParseError::single(Diagnostic::new(kind, span, msg)))
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            err(DiagnosticKind::Syntax, self.span(), format!("expected '{p}', found {}", self.describe()))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int { value, .. } => format!("'{value}'"),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        self.reject_unsupported_word()?;
        match self.peek().clone() {
            Tok::Ident(s) if !TYPE_WORDS.contains(&s.as_str()) && !is_keyword(&s) => {
                self.advance();
                Ok(s)
            }
            _ => err(DiagnosticKind::Syntax, self.span(), format!("expected identifier, found {}", self.describe())),
        }
    }

    fn reject_unsupported_word(&self) -> PResult<()> {
        if let Tok::Ident(s) = self.peek() {
            if UNSUPPORTED_WORDS.contains(&s.as_str()) {
                return err(DiagnosticKind::Unsupported, self.span(), format!("'{s}' is not supported"));
            }
        }
        Ok(())
    }

    fn at_type(&self) -> bool {
        if let Tok::Ident(s) = self.peek() {
            TYPE_WORDS.contains(&s.as_str()) || UNSUPPORTED_WORDS.contains(&s.as_str()) && is_type_like(s)
        } else {
            false
        }
    }

    fn type_spec(&mut self) -> PResult<TypeSpec> {
        let start = self.span();
        let (mut signed, mut unsigned, mut is_const) = (false, false, false);
        let (mut chars, mut shorts, mut ints, mut longs, mut void) = (0, 0, 0, 0, false);
        let mut fixed: Option<IntType> = None;
        loop {
            self.reject_unsupported_word()?;
            let word = match self.peek() {
                Tok::Ident(s) if TYPE_WORDS.contains(&s.as_str()) => s.clone(),
                _ => break,
            };
            self.advance();
            match word.as_str() {
                "const" => is_const = true,
                "static" => {}
                "signed" => signed = true,
                "unsigned" => unsigned = true,
                "char" => chars += 1,
                "short" => shorts += 1,
                "int" => ints += 1,
                "long" => longs += 1,
                "void" => void = true,
                "int8_t" => fixed = Some(IntType::I8),
                "uint8_t" => fixed = Some(IntType::U8),
                "int16_t" => fixed = Some(IntType::I16),
                "uint16_t" => fixed = Some(IntType::U16),
                "int32_t" => fixed = Some(IntType::I32),
                "uint32_t" => fixed = Some(IntType::U32),
                _ => unreachable!(),
            }
        }
        if longs > 1 {
            return err(DiagnosticKind::Unsupported, start, "64-bit integers are not supported");
        }
        if signed && unsigned {
            return err(DiagnosticKind::Syntax, start, "both 'signed' and 'unsigned' given");
        }
        let words = chars + shorts + ints + longs + void as u32 + fixed.is_some() as u32;
        if void {
            if words > 1 || signed || unsigned {
                return err(DiagnosticKind::Syntax, start, "invalid use of 'void'");
            }
            return Ok(TypeSpec { ty: None, is_const });
        }
        let ty = if let Some(t) = fixed {
            if chars + shorts + ints + longs > 0 || signed || unsigned {
                return err(DiagnosticKind::Syntax, start, "invalid type specifier combination");
            }
            t
        } else {
            if words == 0 && !signed && !unsigned {
                return err(DiagnosticKind::Syntax, start, format!("expected type, found {}", self.describe()));
            }
            if chars > 1 || shorts > 1 || (chars + shorts + longs > 1) {
                return err(DiagnosticKind::Syntax, start, "invalid type specifier combination");
            }
            let bits = if chars == 1 {
                8
            } else if shorts == 1 {
                16
            } else {
                32
            };
            IntType { signed: !unsigned, bits }
        };
        Ok(TypeSpec { ty: Some(ty), is_const })
    }

    pub fn program(&mut self) -> PResult<(Vec<GlobalDecl>, Vec<FunctionDef>)> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            let span = self.span();
            if !self.at_type() {
                self.reject_unsupported_word()?;
                return err(DiagnosticKind::Syntax, span, format!("expected declaration, found {}", self.describe()));
            }
            let spec = self.type_spec()?;
            if self.is_punct("*") {
                return err(DiagnosticKind::Unsupported, self.span(), "pointers are only supported as top-function output parameters");
            }
            let name = self.ident()?;
            if self.is_punct("(") {
                if let Some(f) = self.function_rest(spec, name, span)? {
                    if functions.iter().any(|g: &FunctionDef| g.name == f.name) {
                        return err(DiagnosticKind::Semantic, span, format!("function '{}' defined twice", f.name));
                    }
                    functions.push(f);
                }
            } else {
                let Some(ty) = spec.ty else {
                    return err(DiagnosticKind::Semantic, span, "variables cannot have type void");
                };
                let mut name = name;
                loop {
                    let (array_len, init) = self.declarator_rest(true)?;
                    let init = match init {
                        None => None,
                        Some(DeclInit::List(v)) => Some(v),
                        Some(DeclInit::Expr(e)) => Some(vec![const_value(&e).ok_or_else(|| {
                            ParseError::single(Diagnostic::new(
                                DiagnosticKind::Unsupported,
                                e.span,
                                "global initializers must be integer constants",
                            ))
                        })?]),
                    };
                    globals.push(GlobalDecl { name, ty, is_const: spec.is_const, array_len, init });
                    if !self.eat(",") {
                        break;
                    }
                    name = self.ident()?;
                }
                self.expect(";")?;
            }
        }
        Ok((globals, functions))
    }

    /// Parses the parameter list and body. Prototypes yield `None`.
    fn function_rest(&mut self, spec: TypeSpec, name: String, span: Span) -> PResult<Option<FunctionDef>> {
        self.expect("(")?;
        let mut params = Vec::new();
        let void_only = matches!(self.peek(), Tok::Ident(s) if s == "void") && matches!(self.peek_at(1), Tok::Punct(")"));
        if void_only {
            self.advance();
        }
        if !self.is_punct(")") {
            loop {
                params.push(self.param()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        if self.eat(";") {
            return Ok(None);
        }
        self.expect("{")?;
        let mut body = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return err(DiagnosticKind::Syntax, self.span(), "unexpected end of input in function body");
            }
            self.statement_into(&mut body)?;
        }
        self.expect("}")?;
        Ok(Some(FunctionDef { name, ret: spec.ty, params, body, span }))
    }

    fn param(&mut self) -> PResult<Param> {
        let span = self.span();
        let spec = self.type_spec()?;
        let Some(ty) = spec.ty else {
            return err(DiagnosticKind::Semantic, span, "parameters cannot have type void");
        };
        let pointer = self.eat("*");
        if pointer && self.is_punct("*") {
            return err(DiagnosticKind::Unsupported, self.span(), "pointers to pointers are not supported");
        }
        let name = self.ident()?;
        let mut shape = if pointer { ParamShape::Pointer } else { ParamShape::Scalar };
        if self.eat("[") {
            if pointer {
                return err(DiagnosticKind::Unsupported, span, "arrays of pointers are not supported");
            }
            let len = if self.is_punct("]") { None } else { Some(self.array_len()?) };
            self.expect("]")?;
            if self.is_punct("[") {
                return err(DiagnosticKind::Unsupported, self.span(), "multi-dimensional arrays are not supported");
            }
            shape = ParamShape::Array(len);
        }
        Ok(Param { name, ty, is_const: spec.is_const, shape })
    }

    fn array_len(&mut self) -> PResult<usize> {
        let span = self.span();
        match self.advance().tok {
            Tok::Int { value, .. } if value > 0 && value <= 1 << 24 => Ok(value as usize),
            Tok::Int { .. } => err(DiagnosticKind::Semantic, span, "array length out of range"),
            _ => err(DiagnosticKind::Unsupported, span, "array lengths must be integer literals"),
        }
    }

    /// `[N]` and `= init` after a declarator name.
    fn declarator_rest(&mut self, global: bool) -> PResult<(Option<usize>, Option<DeclInit>)> {
        let mut array_len = None;
        let mut open_len = false;
        if self.eat("[") {
            if self.is_punct("]") {
                open_len = true;
            } else {
                array_len = Some(self.array_len()?);
            }
            self.expect("]")?;
            if self.is_punct("[") {
                return err(DiagnosticKind::Unsupported, self.span(), "multi-dimensional arrays are not supported");
            }
        }
        let is_array = array_len.is_some() || open_len;
        let mut init = None;
        if self.eat("=") {
            if is_array {
                let list = self.init_list()?;
                if open_len {
                    array_len = Some(list.len());
                } else if list.len() > array_len.unwrap() {
                    return err(DiagnosticKind::Semantic, self.span(), "too many initializers");
                }
                init = Some(DeclInit::List(list));
            } else {
                let e = if global { self.unary()? } else { self.expr()? };
                init = Some(DeclInit::Expr(e));
            }
        }
        if open_len && array_len.is_none() {
            return err(DiagnosticKind::Semantic, self.span(), "array length required");
        }
        Ok((array_len, init))
    }

    fn init_list(&mut self) -> PResult<Vec<i64>> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            let span = self.span();
            let neg = self.eat("-");
            match self.advance().tok {
                Tok::Int { value, .. } if value <= u32::MAX as u64 => {
                    out.push(if neg { -(value as i64) } else { value as i64 })
                }
                _ => return err(DiagnosticKind::Unsupported, span, "array initializers must be integer literals"),
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(out)
    }

    fn statement_into(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        if self.at_type() {
            let decls = self.local_decls()?;
            self.expect(";")?;
            out.extend(decls);
            Ok(())
        } else {
            out.push(self.statement()?);
            Ok(())
        }
    }

    fn local_decls(&mut self) -> PResult<Vec<Stmt>> {
        let span = self.span();
        let spec = self.type_spec()?;
        let Some(ty) = spec.ty else {
            return err(DiagnosticKind::Semantic, span, "variables cannot have type void");
        };
        let mut out = Vec::new();
        loop {
            let dspan = self.span();
            if self.is_punct("*") {
                return err(DiagnosticKind::Unsupported, dspan, "pointers are only supported as top-function output parameters");
            }
            let name = self.ident()?;
            let (array_len, init) = self.declarator_rest(false)?;
            let init = init.map(|i| match i {
                DeclInit::Expr(e) => Init::Scalar(e),
                DeclInit::List(v) => Init::List(v),
            });
            out.push(Stmt {
                id: 0,
                span: dspan,
                kind: StmtKind::Decl(LocalDecl { name, ty, is_const: spec.is_const, array_len, init }),
            });
            if !self.eat(",") {
                break;
            }
        }
        Ok(out)
    }

    fn statement(&mut self) -> PResult<Stmt> {
        self.reject_unsupported_word()?;
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Punct("{") => {
                self.advance();
                let mut body = Vec::new();
                while !self.is_punct("}") {
                    if *self.peek() == Tok::Eof {
                        return err(DiagnosticKind::Syntax, self.span(), "unexpected end of input in block");
                    }
                    self.statement_into(&mut body)?;
                }
                self.advance();
                StmtKind::Block(body)
            }
            Tok::Punct(";") => {
                self.advance();
                StmtKind::Empty
            }
            Tok::Ident(w) if w == "if" => {
                self.advance();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let then_branch = Box::new(self.statement()?);
                let else_branch = if matches!(self.peek(), Tok::Ident(s) if s == "else") {
                    self.advance();
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                StmtKind::If { cond, then_branch, else_branch }
            }
            Tok::Ident(w) if w == "while" => {
                self.advance();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                StmtKind::While { cond, body: Box::new(self.statement()?) }
            }
            Tok::Ident(w) if w == "for" => {
                self.advance();
                self.expect("(")?;
                let init = if self.is_punct(";") {
                    None
                } else if self.at_type() {
                    let mut d = self.local_decls()?;
                    if d.len() != 1 {
                        return err(DiagnosticKind::Unsupported, span, "one declaration per for-initializer");
                    }
                    Some(Box::new(d.remove(0)))
                } else {
                    Some(Box::new(self.simple_statement()?))
                };
                self.expect(";")?;
                let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                let step = if self.is_punct(")") { None } else { Some(Box::new(self.simple_statement()?)) };
                self.expect(")")?;
                StmtKind::For { init, cond, step, body: Box::new(self.statement()?) }
            }
            Tok::Ident(w) if w == "return" => {
                self.advance();
                let e = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                StmtKind::Return(e)
            }
            Tok::Ident(w) if w == "break" => {
                self.advance();
                self.expect(";")?;
                StmtKind::Break
            }
            Tok::Ident(w) if w == "continue" => {
                self.advance();
                self.expect(";")?;
                StmtKind::Continue
            }
            Tok::Ident(w) if w == "else" => {
                return err(DiagnosticKind::Syntax, span, "'else' without 'if'");
            }
            _ => {
                let s = self.simple_statement()?;
                self.expect(";")?;
                return Ok(s);
            }
        };
        Ok(Stmt { id: 0, span, kind })
    }

    /// Assignment, increment/decrement, or expression statement (no `;`).
    fn simple_statement(&mut self) -> PResult<Stmt> {
        let span = self.span();
        for (p, increment) in [("++", true), ("--", false)] {
            if self.eat(p) {
                let target = self.unary()?;
                check_lvalue(&target)?;
                return Ok(Stmt { id: 0, span, kind: StmtKind::Step { target, increment } });
            }
        }
        let lhs = self.expr()?;
        let kind = match self.peek().clone() {
            Tok::Punct("=") => {
                self.advance();
                check_lvalue(&lhs)?;
                StmtKind::Assign { target: lhs, op: None, value: self.expr()? }
            }
            Tok::Punct(p) if compound_op(p).is_some() => {
                self.advance();
                check_lvalue(&lhs)?;
                StmtKind::Assign { target: lhs, op: compound_op(p), value: self.expr()? }
            }
            Tok::Punct(p @ ("++" | "--")) => {
                self.advance();
                check_lvalue(&lhs)?;
                StmtKind::Step { target: lhs, increment: p == "++" }
            }
            Tok::Punct(",") => {
                return err(DiagnosticKind::Unsupported, self.span(), "the comma operator is not supported");
            }
            _ => StmtKind::Expr(lhs),
        };
        Ok(Stmt { id: 0, span, kind })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let cond = self.binary(1)?;
        if self.eat("?") {
            let a = self.expr()?;
            self.expect(":")?;
            let b = self.expr()?;
            return Ok(Expr { id: 0, span, kind: ExprKind::Ternary(Box::new(cond), Box::new(a), Box::new(b)) });
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Punct(p) = self.peek() {
            let Some(op) = binop_of(p).filter(|op| op.precedence() >= min_prec) else {
                break;
            };
            let span = self.span();
            self.advance();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr { id: 0, span, kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("~") => Some(UnOp::BitNot),
            Tok::Punct("!") => Some(UnOp::LogNot),
            Tok::Punct("&") => {
                return err(DiagnosticKind::Unsupported, span, "the address-of operator is not supported");
            }
            Tok::Punct("++" | "--") => {
                return err(DiagnosticKind::Unsupported, span, "increment/decrement is only supported as a statement");
            }
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let e = self.unary()?;
            return Ok(Expr { id: 0, span, kind: ExprKind::Unary(op, Box::new(e)) });
        }
        if self.is_punct("+") {
            return err(DiagnosticKind::Unsupported, span, "unary '+' is not supported");
        }
        if self.is_punct("*") {
            self.advance();
            let name = self.ident()?;
            return Ok(Expr { id: 0, span, kind: ExprKind::Deref(name) });
        }
        if self.is_punct("(") && self.cast_ahead() {
            self.advance();
            let spec = self.type_spec()?;
            if self.is_punct("*") {
                return err(DiagnosticKind::Unsupported, self.span(), "pointer casts are not supported");
            }
            self.expect(")")?;
            let Some(ty) = spec.ty else {
                return err(DiagnosticKind::Unsupported, span, "casts to void are not supported");
            };
            let e = self.unary()?;
            return Ok(Expr { id: 0, span, kind: ExprKind::Cast(ty, Box::new(e)) });
        }
        self.primary()
    }

    fn cast_ahead(&self) -> bool {
        match self.peek_at(1) {
            Tok::Ident(s) => TYPE_WORDS.contains(&s.as_str()) || UNSUPPORTED_WORDS.contains(&s.as_str()) && is_type_like(s),
            _ => false,
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        self.reject_unsupported_word()?;
        let span = self.span();
        match self.peek().clone() {
            Tok::Int { value, hex, unsigned_suffix } => {
                self.advance();
                if value > u32::MAX as u64 {
                    return err(DiagnosticKind::Unsupported, span, "integer literal exceeds 32 bits");
                }
                Ok(Expr { id: 0, span, kind: ExprKind::IntLit(Literal { value: value as u32, hex, unsigned_suffix }) })
            }
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    return Ok(Expr { id: 0, span, kind: ExprKind::Call(name, args) });
                }
                if self.eat("[") {
                    let idx = self.expr()?;
                    self.expect("]")?;
                    if self.is_punct("[") {
                        return err(DiagnosticKind::Unsupported, self.span(), "multi-dimensional arrays are not supported");
                    }
                    return Ok(Expr { id: 0, span, kind: ExprKind::Index(name, Box::new(idx)) });
                }
                if self.is_punct(".") || self.is_punct("->") {
                    return err(DiagnosticKind::Unsupported, self.span(), "member access is not supported");
                }
                Ok(Expr { id: 0, span, kind: ExprKind::Var(name) })
            }
            _ => err(DiagnosticKind::Syntax, span, format!("expected expression, found {}", self.describe())),
        }
    }
}

enum DeclInit {
    Expr(Expr),
    List(Vec<i64>),
}

fn const_value(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::IntLit(l) => Some(l.value as i64),
        ExprKind::Unary(UnOp::Neg, inner) => const_value(inner).map(|v| -v),
        _ => None,
    }
}

fn check_lvalue(e: &Expr) -> PResult<()> {
    match e.kind {
        ExprKind::Var(_) | ExprKind::Index(..) | ExprKind::Deref(_) => Ok(()),
        _ => err(DiagnosticKind::Syntax, e.span, "expression is not assignable"),
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "if" | "else" | "for" | "while" | "return" | "break" | "continue")
}

fn is_type_like(s: &str) -> bool {
    matches!(s, "float" | "double" | "struct" | "union" | "enum" | "volatile" | "int64_t" | "uint64_t" | "extern" | "typedef")
}

fn binop_of(p: &str) -> Option<BinOp> {
    BinOp::ALL.iter().copied().find(|op| op.symbol() == p)
}

fn compound_op(p: &str) -> Option<BinOp> {
    let base = p.strip_suffix('=')?;
    match binop_of(base)? {
        op @ (BinOp::Add
        | BinOp::Sub
        | BinOp::Mul
        | BinOp::Div
        | BinOp::Rem
        | BinOp::BitAnd
        | BinOp::BitOr
        | BinOp::BitXor
        | BinOp::Shl
        | BinOp::Shr) => Some(op),
        _ => None,
    }
}
