//! Small helpers shared by the line-oriented data file formats
//! (grammar, layout, joint rules, asset metadata).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Text before the first `#`.
pub fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Splits on `sep` at bracket depth zero; `[]` and `()` nest.
pub fn split_top_level(s: &str, sep: impl Fn(char) -> bool) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '[' | '(' => {
                depth += 1;
                cur.push(c);
            }
            ']' | ')' => {
                depth -= 1;
                cur.push(c);
            }
            c if depth == 0 && sep(c) => {
                if !cur.trim().is_empty() {
                    out.push(cur.trim().to_string());
                }
                cur.clear();
            }
            c => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Whitespace-separated tokens, keeping bracket groups intact.
pub fn tokens(s: &str) -> Vec<String> {
    split_top_level(s, char::is_whitespace)
}

/// Items of a `[a, b, c]` list. An empty `[]` yields no items.
pub fn list_items(s: &str, line: usize) -> Result<Vec<String>, SyntaxError> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| SyntaxError::new(line, format!("expected a [..] list, got `{s}`")))?;
    Ok(split_top_level(inner, |c| c == ','))
}

pub fn parse_f64(s: &str, line: usize) -> Result<f64, SyntaxError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| SyntaxError::new(line, format!("invalid number `{s}`")))?;
    if !v.is_finite() {
        return Err(SyntaxError::new(line, format!("non-finite number `{s}`")));
    }
    Ok(v)
}

pub fn parse_u32(s: &str, line: usize) -> Result<u32, SyntaxError> {
    s.trim()
        .parse()
        .map_err(|_| SyntaxError::new(line, format!("invalid integer `{s}`")))
}

/// `[lo..hi]` or a bare scalar `v` (meaning `[v..v]`).
pub fn parse_range(s: &str, line: usize) -> Result<(f64, f64), SyntaxError> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let (a, b) = inner
            .split_once("..")
            .ok_or_else(|| SyntaxError::new(line, format!("expected [lo..hi], got `{s}`")))?;
        let lo = parse_f64(a, line)?;
        let hi = parse_f64(b, line)?;
        if lo > hi {
            return Err(SyntaxError::new(line, format!("empty range `{s}`")));
        }
        Ok((lo, hi))
    } else {
        let v = parse_f64(s, line)?;
        Ok((v, v))
    }
}

/// `[lo..hi]` over integers.
pub fn parse_int_range(s: &str, line: usize) -> Result<(u32, u32), SyntaxError> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| SyntaxError::new(line, format!("expected [lo..hi], got `{s}`")))?;
    let (a, b) = inner
        .split_once("..")
        .ok_or_else(|| SyntaxError::new(line, format!("expected [lo..hi], got `{s}`")))?;
    let lo = parse_u32(a, line)?;
    let hi = parse_u32(b, line)?;
    if lo > hi {
        return Err(SyntaxError::new(line, format!("empty range `{s}`")));
    }
    Ok((lo, hi))
}

/// Comma- or space-separated list of exactly `N` numbers, optionally bracketed.
pub fn parse_floats<const N: usize>(s: &str, line: usize) -> Result<[f64; N], SyntaxError> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .unwrap_or(s);
    let parts: Vec<&str> = inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != N {
        return Err(SyntaxError::new(
            line,
            format!("expected {N} numbers, got `{s}`"),
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_f64(p, line)?;
    }
    Ok(out)
}

/// `key=value` split; `None` when there is no `=`.
pub fn key_value(token: &str) -> Option<(&str, &str)> {
    token.split_once('=').map(|(k, v)| (k.trim(), v.trim()))
}

/// Identifier check for labels and names: ASCII alphanumerics, `_` and `-`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_split_keeps_brackets() {
        assert_eq!(
            tokens("a p=0.5 x[1..4]  region=[0, 0.1, 1]"),
            vec!["a", "p=0.5", "x[1..4]", "region=[0, 0.1, 1]"]
        );
    }

    #[test]
    fn list_parsing() {
        assert_eq!(
            list_items("[leg x4, drawer x[1..2]]", 1).unwrap(),
            vec!["leg x4", "drawer x[1..2]"]
        );
        assert!(list_items("[]", 1).unwrap().is_empty());
        assert!(list_items("leg x4", 3).is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("[0.2..0.4]", 1).unwrap(), (0.2, 0.4));
        assert_eq!(parse_range("3", 1).unwrap(), (3.0, 3.0));
        assert!(parse_range("[0.5..0.1]", 1).is_err());
        assert_eq!(parse_int_range("[1..4]", 1).unwrap(), (1, 4));
        assert_eq!(parse_floats::<3>("[1, 2, 3]", 1).unwrap(), [1.0, 2.0, 3.0]);
        assert_eq!(parse_floats::<3>("1 2 3", 1).unwrap(), [1.0, 2.0, 3.0]);
    }
}
