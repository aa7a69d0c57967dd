use super::ast::Span;
use super::{Diagnostic, DiagnosticKind};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int { value: u64, hex: bool, unsigned_suffix: bool },
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: [&str; 45] = [
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "&", "|", "^", "<", ">",
    "=", "!", "~", "?", ":", ";", ",", "(", ")", "{", "}", "[", "]",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut at_line_start = true;

    macro_rules! bump {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };
        if c == b'\n' {
            at_line_start = true;
            bump!(1);
            continue;
        }
        if c.is_ascii_whitespace() {
            bump!(1);
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!(1);
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            bump!(2);
            loop {
                if i + 1 >= bytes.len() {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        span,
                        "unterminated block comment",
                    ));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    bump!(2);
                    break;
                }
                bump!(1);
            }
            continue;
        }
        if c == b'#' && at_line_start {
            let start = i;
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!(1);
            }
            let directive = src[start..i].trim_start_matches('#').trim_start();
            if directive.starts_with("include") {
                continue;
            }
            return Err(Diagnostic::new(
                DiagnosticKind::Unsupported,
                span,
                "preprocessor directives other than #include are not supported",
            ));
        }
        at_line_start = false;

        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                bump!(1);
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.') {
                bump!(1);
            }
            out.push(Token { tok: lex_number(&src[start..i], span)?, span });
            continue;
        }
        if c == b'\'' || c == b'"' {
            return Err(Diagnostic::new(
                DiagnosticKind::Unsupported,
                span,
                "character and string literals are not supported",
            ));
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                out.push(Token { tok: Tok::Punct(p), span });
                bump!(p.len());
            }
            None => {
                return Err(Diagnostic::new(
                    DiagnosticKind::Syntax,
                    span,
                    format!("unexpected character '{}'", src[i..].chars().next().unwrap()),
                ))
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

fn lex_number(text: &str, span: Span) -> Result<Tok, Diagnostic> {
    let lower = text.to_ascii_lowercase();
    let is_hex = lower.starts_with("0x");
    if lower.contains('.') || (!is_hex && (lower.contains('e') || lower.ends_with('f'))) {
        return Err(Diagnostic::new(
            DiagnosticKind::Unsupported,
            span,
            "floating-point literals are not supported",
        ));
    }
    let mut body = lower.as_str();
    let mut unsigned_suffix = false;
    while let Some(last) = body.chars().last() {
        match last {
            'u' => unsigned_suffix = true,
            'l' => {}
            _ => break,
        }
        body = &body[..body.len() - 1];
    }
    let (digits, radix, hex) = if let Some(h) = body.strip_prefix("0x") {
        (h, 16, true)
    } else if body.len() > 1 && body.starts_with('0') {
        return Err(Diagnostic::new(
            DiagnosticKind::Unsupported,
            span,
            "octal literals are not supported",
        ));
    } else {
        (body, 10, false)
    };
    let value = u64::from_str_radix(digits, radix).map_err(|_| {
        Diagnostic::new(DiagnosticKind::Syntax, span, format!("malformed integer literal '{text}'"))
    })?;
    Ok(Tok::Int { value, hex, unsigned_suffix })
}
