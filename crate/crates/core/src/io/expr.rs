//! Linear-combination expressions over estimate labels, e.g.
//! `tauN - tauNE` or `0.5*a + 0.5*b`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::Selector;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Label(String),
    Plus,
    Minus,
    Star,
}

fn syntax(expr: &str, reason: impl Into<String>) -> Error {
    Error::SelectorSyntax {
        expr: expr.to_string(),
        reason: reason.into(),
    }
}

fn tokenize(expr: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = expr.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| syntax(expr, format!("bad number `{text}`")))?;
                out.push(Token::Number(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                out.push(Token::Label(chars[start..i].iter().collect()));
            }
            other => return Err(syntax(expr, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

/// Parse `expr` into weights over `labels`.
///
/// Grammar: `[sign] term (sign term)*` with `term = [number '*'] label`.
/// Repeated labels accumulate.
pub fn parse_selector(expr: &str, labels: &[String]) -> Result<Selector> {
    let tokens = tokenize(expr)?;
    if tokens.is_empty() {
        return Err(syntax(expr, "empty expression"));
    }
    let mut w = DVector::zeros(labels.len());
    let mut i = 0;
    let mut first = true;
    while i < tokens.len() {
        let mut sign = 1.0;
        match tokens[i] {
            Token::Plus if !first => i += 1,
            Token::Minus => {
                sign = -1.0;
                i += 1;
            }
            _ if first => {}
            _ => return Err(syntax(expr, "expected `+` or `-` between terms")),
        }
        first = false;
        let mut coef = 1.0;
        if let Some(Token::Number(v)) = tokens.get(i) {
            coef = *v;
            i += 1;
            match tokens.get(i) {
                Some(Token::Star) => i += 1,
                _ => return Err(syntax(expr, "expected `*` after a coefficient")),
            }
        }
        match tokens.get(i) {
            Some(Token::Label(name)) => {
                let idx = labels
                    .iter()
                    .position(|l| l == name)
                    .ok_or_else(|| Error::UnknownLabel(name.clone()))?;
                w[idx] += sign * coef;
                i += 1;
            }
            _ => return Err(syntax(expr, "expected a label")),
        }
    }
    Selector::new(w).map_err(|e| match e {
        Error::ZeroSelector => syntax(expr, "terms cancel to the zero vector"),
        other => other,
    })
}
