//! Line-oriented sectioned text format shared by grid files and run configs.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! token token token   # trailing comment
//! ```

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

/// A whitespace-separated token with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct Record<'a> {
    pub line: usize,
    pub tokens: Vec<Token<'a>>,
}

impl<'a> Record<'a> {
    pub fn error(&self, idx: usize, message: impl Into<String>) -> SyntaxError {
        let column = self
            .tokens
            .get(idx)
            .map(|t| t.column)
            .or_else(|| self.tokens.last().map(|t| t.column + t.text.len()))
            .unwrap_or(1);
        SyntaxError::new(self.line, column, message)
    }

    pub fn expect_len(&self, allowed: &[usize]) -> Result<(), SyntaxError> {
        if allowed.contains(&self.tokens.len()) {
            Ok(())
        } else {
            let idx = allowed
                .iter()
                .copied()
                .filter(|&n| n <= self.tokens.len())
                .max()
                .unwrap_or(self.tokens.len());
            Err(self.error(
                idx,
                format!(
                    "expected {} fields, found {}",
                    allowed
                        .iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>()
                        .join(" or "),
                    self.tokens.len()
                ),
            ))
        }
    }

    pub fn f64_at(&self, idx: usize, what: &str) -> Result<f64, SyntaxError> {
        let tok = self.token(idx, what)?;
        let v: f64 = tok
            .text
            .parse()
            .map_err(|_| self.error(idx, format!("{what}: '{}' is not a number", tok.text)))?;
        if !v.is_finite() {
            return Err(self.error(idx, format!("{what}: value must be finite")));
        }
        Ok(v)
    }

    pub fn u64_at(&self, idx: usize, what: &str) -> Result<u64, SyntaxError> {
        let tok = self.token(idx, what)?;
        tok.text.parse().map_err(|_| {
            self.error(
                idx,
                format!("{what}: '{}' is not a non-negative integer", tok.text),
            )
        })
    }

    pub fn token(&self, idx: usize, what: &str) -> Result<Token<'a>, SyntaxError> {
        self.tokens
            .get(idx)
            .copied()
            .ok_or_else(|| self.error(idx, format!("missing {what}")))
    }

    /// Splits `key = value` (or `key value`) records.
    pub fn key_value(&self) -> Result<(Token<'a>, Token<'a>), SyntaxError> {
        match self.tokens.as_slice() {
            [k, eq, v] if eq.text == "=" => Ok((*k, *v)),
            [k, v] if v.text != "=" => Ok((*k, *v)),
            _ => Err(self.error(0, "expected 'key = value'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Section<'a> {
    pub name: &'a str,
    pub line: usize,
    pub records: Vec<Record<'a>>,
}

/// Splits text into sections of tokenized records.
pub fn parse_sections(text: &str) -> Result<Vec<Section<'_>>, SyntaxError> {
    let mut sections: Vec<Section<'_>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let col = body.find('[').unwrap_or(0) + 1;
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| SyntaxError::new(line_no, col, "unterminated section header"))?
                .trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(SyntaxError::new(line_no, col, "invalid section name"));
            }
            if let Some(prev) = sections.iter().find(|s| s.name == name) {
                return Err(SyntaxError::new(
                    line_no,
                    col,
                    format!("section [{name}] already declared on line {}", prev.line),
                ));
            }
            sections.push(Section {
                name,
                line: line_no,
                records: Vec::new(),
            });
            continue;
        }
        let tokens = tokenize(body);
        match sections.last_mut() {
            Some(section) => section.records.push(Record {
                line: line_no,
                tokens,
            }),
            None => {
                return Err(SyntaxError::new(
                    line_no,
                    tokens[0].column,
                    "record outside of any section",
                ))
            }
        }
    }
    Ok(sections)
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}
