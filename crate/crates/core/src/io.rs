//! Plain-text tensor and filter files.
//!
//! ```text
//! # optional comment lines
//! tensor H W C
//! v v v ...          (H*W*C values in (y, x, c) order)
//!
//! filter KH KW IC OC
//! v v v ...          (KH*KW*IC*OC values, kh outermost, oc innermost)
//! ```
//!
//! Values are whitespace separated and may be spread over any number of
//! lines. The writer emits one line per row (tensors) or per kernel tap
//! (filters) using the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{FilterBank, Tensor3};

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Tensor3> {
    parse_tensor(&fs::read_to_string(path)?)
}

pub fn write_tensor_file(path: impl AsRef<Path>, tensor: &Tensor3) -> Result<()> {
    fs::write(path, format_tensor(tensor))?;
    Ok(())
}

pub fn read_filter_file(path: impl AsRef<Path>) -> Result<FilterBank> {
    parse_filter(&fs::read_to_string(path)?)
}

pub fn write_filter_file(path: impl AsRef<Path>, filters: &FilterBank) -> Result<()> {
    fs::write(path, format_filter(filters))?;
    Ok(())
}

pub fn parse_tensor(text: &str) -> Result<Tensor3> {
    let body = parse_body(text, "tensor", 3)?;
    let [h, w, c] = [body.dims[0], body.dims[1], body.dims[2]];
    body.check_count(h * w * c)?;
    Tensor3::new(h, w, c, body.values).map_err(|e| Error::parse(body.header_line, e.to_string()))
}

pub fn parse_filter(text: &str) -> Result<FilterBank> {
    let body = parse_body(text, "filter", 4)?;
    let [kh, kw, ic, oc] = [body.dims[0], body.dims[1], body.dims[2], body.dims[3]];
    body.check_count(kh * kw * ic * oc)?;
    FilterBank::new(kh, kw, ic, oc, body.values).map_err(|e| Error::parse(body.header_line, e.to_string()))
}

pub fn format_tensor(t: &Tensor3) -> String {
    let (h, w, c) = t.dims();
    let mut out = format!("tensor {h} {w} {c}\n");
    for row in t.data().chunks(w * c) {
        push_line(&mut out, row);
    }
    out
}

pub fn format_filter(f: &FilterBank) -> String {
    let (kh, kw, ic, oc) = f.dims();
    let mut out = format!("filter {kh} {kw} {ic} {oc}\n");
    for tap in f.data().chunks(ic * oc) {
        push_line(&mut out, tap);
    }
    out
}

fn push_line(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

struct Body {
    header_line: usize,
    last_line: usize,
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl Body {
    fn check_count(&self, expected: usize) -> Result<()> {
        if self.values.len() != expected {
            return Err(Error::parse(
                self.last_line,
                format!("expected {expected} values, found {}", self.values.len()),
            ));
        }
        Ok(())
    }
}

fn parse_body(text: &str, kind: &str, rank: usize) -> Result<Body> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let mut tokens = header.split_whitespace();
    let found = tokens.next().unwrap_or_default();
    if found != kind {
        return Err(Error::parse(header_line, format!("expected a `{kind}` header, found `{found}`")));
    }
    let dims = tokens
        .map(|t| {
            t.parse::<usize>()
                .ok()
                .filter(|d| *d > 0)
                .ok_or_else(|| Error::parse(header_line, format!("invalid dimension `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.len() != rank {
        return Err(Error::parse(
            header_line,
            format!("`{kind}` header needs {rank} dimensions, found {}", dims.len()),
        ));
    }

    let mut values = Vec::new();
    let mut last_line = header_line;
    for (n, line) in lines {
        last_line = n;
        for tok in line.split_whitespace() {
            let v = tok.parse::<f64>().map_err(|_| Error::parse(n, format!("non-numeric value `{tok}`")))?;
            values.push(v);
        }
    }
    Ok(Body { header_line, last_line, dims, values })
}
