//! Plain-text instance files.
//!
//! ```text
//! advertisers=2 queries=3
//! target 0 1
//! target 1 1.5
//! 0.5 0.25 1
//! 0.75 0 0.5
//! ```
//!
//! Advertiser indices are 0-based. Numbers are written with 17 significant
//! digits so that reading a written file reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use arena_core::Instance;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Instance(#[from] arena_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        msg: msg.into(),
    }
}

/// `{:.16e}` prints 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_instance(instance: &Instance) -> String {
    let n = instance.num_advertisers();
    let m = instance.num_queries();
    let mut out = format!("advertisers={n} queries={m}\n");
    for i in 0..n {
        let _ = writeln!(out, "target {i} {}", fmt_f64(instance.target(i)));
    }
    for i in 0..n {
        let row: Vec<String> = instance.values_of(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, FormatError> {
    tok.parse::<f64>()
        .map_err(|e| parse_err(line, format!("bad number {tok:?}: {e}")))
}

pub fn read_instance(text: &str) -> Result<Instance, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut n = None;
    let mut m = None;
    for tok in header.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(ln, format!("expected key=value, got {tok:?}")))?;
        let val: usize = val
            .parse()
            .map_err(|_| parse_err(ln, format!("bad count {val:?}")))?;
        match key {
            "advertisers" => n = Some(val),
            "queries" => m = Some(val),
            _ => return Err(parse_err(ln, format!("unknown header key {key:?}"))),
        }
    }
    let (n, m) = match (n, m) {
        (Some(n), Some(m)) => (n, m),
        _ => return Err(parse_err(ln, "header needs advertisers=<n> queries=<m>")),
    };

    let mut targets = vec![None; n];
    for _ in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(ln, "missing target line"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "target" {
            return Err(parse_err(ln, "expected `target <i> <T_i>`"));
        }
        let i: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad advertiser index {:?}", toks[1])))?;
        if i >= n {
            return Err(parse_err(ln, format!("advertiser index {i} out of range")));
        }
        if targets[i].is_some() {
            return Err(parse_err(
                ln,
                format!("duplicate target for advertiser {i}"),
            ));
        }
        targets[i] = Some(parse_f64(toks[2], ln)?);
    }
    let targets: Vec<f64> = targets
        .into_iter()
        .map(|t| t.expect("all n targets seen"))
        .collect();

    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(ln, "missing value line"))?;
        let row = line
            .split_whitespace()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != m {
            return Err(parse_err(
                ln,
                format!("expected {m} values, got {}", row.len()),
            ));
        }
        values.push(row);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content"));
    }
    Ok(Instance::new(values, targets)?)
}

pub fn load_instance(path: &Path) -> Result<Instance, FormatError> {
    read_instance(&fs::read_to_string(path)?)
}

pub fn save_instance(instance: &Instance, path: &Path) -> Result<(), FormatError> {
    fs::write(path, write_instance(instance))?;
    Ok(())
}
