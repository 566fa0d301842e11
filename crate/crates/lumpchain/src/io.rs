//! Text and JSON interchange for matrices and partitions.
//!
//! Matrix text holds one row per line, entries separated by whitespace or
//! commas, with `#` starting a comment; the JSON form is an array of row
//! arrays. A partition is written either as blocks over 1-based states,
//! `{1,2}{3,4}`, or as a bare assignment of lump labels per state,
//! `0 0 1 1`; the JSON form is an object with an `assignment` or `blocks`
//! field (or a bare assignment array). State indices are 1-based in every
//! textual form and 0-based in memory.

use crate::chain::StochasticMatrix;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;

fn parse_error(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        message: message.into(),
    }
}

/// JSON inputs start with `[`, or with `{` followed by a quoted key; the
/// block notation `{1,2}...` starts with `{` followed by a digit.
fn looks_like_json(text: &str) -> bool {
    let t = text.trim_start();
    t.starts_with('[') || (t.starts_with('{') && t[1..].trim_start().starts_with('"'))
}

/// Splits one line into `(byte_start, token)` pieces at whitespace and
/// commas, honoring a trailing `#` comment.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let body = match line.find('#') {
        Some(cut) => &line[..cut],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in body.char_indices() {
        if c.is_whitespace() || c == ',' {
            if let Some(s) = start.take() {
                out.push((s, &body[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &body[s..]));
    }
    out
}

/// Parses a transition matrix from text rows or a JSON array of arrays,
/// then validates it at `tol`. Parse failures cite 1-based line and
/// column.
pub fn parse_matrix<S: Scalar>(text: &str, tol: S) -> Result<StochasticMatrix<S>> {
    let rows: Vec<Vec<S>> = if looks_like_json(text) {
        let raw: Vec<Vec<f64>> = serde_json::from_str(text)
            .map_err(|e| parse_error(e.line(), e.column(), e.to_string()))?;
        raw.into_iter()
            .map(|r| r.into_iter().map(S::from_f64_lossy).collect())
            .collect()
    } else {
        let mut rows = Vec::new();
        for (li, line) in text.lines().enumerate() {
            let toks = tokens(line);
            if toks.is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(toks.len());
            for (col, tok) in toks {
                let x: f64 = tok.parse().map_err(|_| {
                    parse_error(li + 1, col + 1, format!("invalid number `{tok}`"))
                })?;
                row.push(S::from_f64_lossy(x));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(parse_error(1, 1, "no matrix rows found"));
        }
        rows
    };
    StochasticMatrix::from_rows(&rows, tol)
}

/// Parses a partition of `n` states from block notation, a bare
/// assignment, or the JSON mirror.
pub fn parse_partition(text: &str, n: usize) -> Result<Partition> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(parse_error(1, 1, "empty partition"));
    }
    if looks_like_json(trimmed) {
        return parse_partition_json(trimmed, n);
    }
    if trimmed.starts_with('{') {
        return parse_blocks(trimmed, n);
    }
    parse_assignment(trimmed, n)
}

fn parse_blocks(text: &str, n: usize) -> Result<Partition> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut current: Option<Vec<usize>> = None;
    let mut token_start: Option<usize> = None;
    let flush =
        |start: usize, end: usize, text: &str, current: &mut Option<Vec<usize>>| -> Result<()> {
            let tok = &text[start..end];
            let state: usize = tok
                .parse()
                .map_err(|_| parse_error(1, start + 1, format!("invalid state index `{tok}`")))?;
            if state == 0 {
                return Err(parse_error(1, start + 1, "state indices are 1-based"));
            }
            match current {
                Some(block) => block.push(state - 1),
                None => return Err(parse_error(1, start + 1, "state index outside any block")),
            }
            Ok(())
        };
    for (i, c) in text.char_indices() {
        match c {
            '{' => {
                if current.is_some() {
                    return Err(parse_error(1, i + 1, "nested `{`"));
                }
                current = Some(Vec::new());
            }
            '}' => {
                if let Some(s) = token_start.take() {
                    flush(s, i, text, &mut current)?;
                }
                match current.take() {
                    Some(block) if block.is_empty() => {
                        return Err(parse_error(1, i + 1, "empty block"));
                    }
                    Some(block) => blocks.push(block),
                    None => return Err(parse_error(1, i + 1, "unmatched `}`")),
                }
            }
            c if c.is_ascii_digit() => {
                if token_start.is_none() {
                    token_start = Some(i);
                }
            }
            ',' | ' ' | '\t' | '\n' | '\r' => {
                if let Some(s) = token_start.take() {
                    flush(s, i, text, &mut current)?;
                }
            }
            other => {
                return Err(parse_error(1, i + 1, format!("unexpected character `{other}`")));
            }
        }
    }
    if current.is_some() {
        return Err(parse_error(1, text.len(), "unterminated block"));
    }
    Partition::from_blocks(n, &blocks)
}

fn parse_assignment(text: &str, n: usize) -> Result<Partition> {
    let mut labels = Vec::new();
    for line in text.lines() {
        for (col, tok) in tokens(line) {
            let label: usize = tok
                .parse()
                .map_err(|_| parse_error(1, col + 1, format!("invalid lump label `{tok}`")))?;
            labels.push(label);
        }
    }
    if labels.len() != n {
        return Err(parse_error(
            1,
            1,
            format!("expected {n} lump labels, found {}", labels.len()),
        ));
    }
    Ok(Partition::from_assignment(&labels))
}

fn parse_partition_json(text: &str, n: usize) -> Result<Partition> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| parse_error(e.line(), e.column(), e.to_string()))?;
    let from_labels = |labels: &[serde_json::Value]| -> Result<Partition> {
        let mut assignment = Vec::with_capacity(labels.len());
        for v in labels {
            let label = v
                .as_u64()
                .ok_or_else(|| parse_error(1, 1, format!("non-integer lump label `{v}`")))?;
            assignment.push(label as usize);
        }
        if assignment.len() != n {
            return Err(parse_error(
                1,
                1,
                format!("expected {n} lump labels, found {}", assignment.len()),
            ));
        }
        Ok(Partition::from_assignment(&assignment))
    };
    match &value {
        serde_json::Value::Array(labels) => from_labels(labels),
        serde_json::Value::Object(map) => {
            if let Some(serde_json::Value::Array(labels)) = map.get("assignment") {
                return from_labels(labels);
            }
            if let Some(serde_json::Value::Array(raw)) = map.get("blocks") {
                let mut blocks = Vec::with_capacity(raw.len());
                for b in raw {
                    let states = b
                        .as_array()
                        .ok_or_else(|| parse_error(1, 1, "block is not an array"))?;
                    let mut block = Vec::with_capacity(states.len());
                    for s in states {
                        let idx = s.as_u64().filter(|&x| x >= 1).ok_or_else(|| {
                            parse_error(1, 1, format!("invalid 1-based state `{s}`"))
                        })? as usize;
                        block.push(idx - 1);
                    }
                    blocks.push(block);
                }
                return Partition::from_blocks(n, &blocks);
            }
            Err(parse_error(1, 1, "expected `assignment` or `blocks` field"))
        }
        _ => Err(parse_error(1, 1, "expected a partition array or object")),
    }
}

/// Renders a partition as blocks over 1-based states, `{1,2}{3,4}`.
pub fn blocks_string(q: &Partition) -> String {
    let mut out = String::new();
    for lump in q.lumps() {
        out.push('{');
        for (k, &i) in lump.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&(i + 1).to_string());
        }
        out.push('}');
    }
    out
}
