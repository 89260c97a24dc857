//! Text formats for curves, maps and tensor fixtures.
//!
//! * Curve CSV: one `x,y` pair per line, optionally preceded by `# base=<index>`.
//!   Curve JSON: `{"points": [[x, y], ...], "base_index": k}`.
//! * Map CSV: header `# L_m=<f>,L_n=<f>,mode=preserve|reverse`, then `t,u` lines.
//! * Tensor fixture JSON: `{"dim": n, "g": [[...]], "b": [[...]]}`.
//!
//! Numbers are written in shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{Mode, Reparametrization};
use crate::geometry::{Curve, Point};
use crate::tensor::{Metric, SymTensor};

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("line {line}: {:?} is not a number ({e})", s.trim())))
}

fn parse_pair(line: &str, no: usize) -> Result<(f64, f64)> {
    let mut it = line.split(',');
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((parse_f64(a, no)?, parse_f64(b, no)?)),
        _ => Err(Error::Parse(format!("line {no}: expected two comma-separated values"))),
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveJson {
    pub points: Vec<Point>,
    #[serde(default)]
    pub base_index: usize,
}

pub fn parse_curve_csv(text: &str) -> Result<Curve> {
    let mut base = 0;
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("base=") {
                base = v
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: bad base index ({e})", i + 1)))?;
            }
            continue;
        }
        let (x, y) = parse_pair(line, i + 1)?;
        points.push([x, y]);
    }
    Curve::new(points, base)
}

pub fn parse_curve_json(text: &str) -> Result<Curve> {
    let c: CurveJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Curve::new(c.points, c.base_index)
}

/// Reads a curve, choosing JSON for a `.json` extension and CSV otherwise.
/// With `strict`, the polyline must also be simple.
pub fn read_curve(path: &Path, strict: bool) -> Result<Curve> {
    let text = read_to_string(path)?;
    let c = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_curve_json(&text)?
    } else {
        parse_curve_csv(&text)?
    };
    if strict {
        c.check_simple()?;
    }
    Ok(c)
}

pub fn curve_to_csv(c: &Curve) -> String {
    let mut out = format!("# base={}\n", c.base_index());
    for p in c.points() {
        let _ = writeln!(out, "{},{}", p[0], p[1]);
    }
    out
}

pub fn parse_map_csv(text: &str) -> Result<Reparametrization> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty map file".into()))?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("line 1: missing '# L_m=...,L_n=...,mode=...' header".into()))?;
    let (mut l_m, mut l_n, mut mode) = (None, None, None);
    for field in header.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line 1: bad header field {:?}", field.trim())))?;
        match key.trim() {
            "L_m" => l_m = Some(parse_f64(value, 1)?),
            "L_n" => l_n = Some(parse_f64(value, 1)?),
            "mode" => mode = Some(value.trim().parse::<Mode>()?),
            other => return Err(Error::Parse(format!("line 1: unknown header key {other:?}"))),
        }
    }
    let (Some(l_m), Some(l_n), Some(mode)) = (l_m, l_n, mode) else {
        return Err(Error::Parse("line 1: header needs L_m, L_n and mode".into()));
    };
    let mut ts = Vec::new();
    let mut us = Vec::new();
    for (i, line) in lines {
        if line.trim_start().starts_with('#') {
            continue;
        }
        let (t, u) = parse_pair(line, i + 1)?;
        ts.push(t);
        us.push(u);
    }
    if us.len() < 2 {
        return Err(Error::Parse("map needs at least two rows".into()));
    }
    let m = us.len() - 1;
    let h = l_m / m as f64;
    for (k, t) in ts.iter().enumerate() {
        if (t - k as f64 * h).abs() > 1e-9 * l_m {
            return Err(Error::Parse(format!(
                "row {k}: abscissa {t} is off the uniform grid t_k = k·{h}"
            )));
        }
    }
    Reparametrization::new(l_m, l_n, mode, us)
}

pub fn map_to_csv(u: &Reparametrization) -> String {
    let mut out = format!(
        "# L_m={},L_n={},mode={}\n",
        u.source_length(),
        u.target_length(),
        u.mode()
    );
    for (t, v) in u.abscissae().iter().zip(u.values()) {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

pub fn read_map(path: &Path) -> Result<Reparametrization> {
    parse_map_csv(&read_to_string(path)?)
}

pub fn write_map(path: &Path, u: &Reparametrization) -> Result<()> {
    write_string(path, &map_to_csv(u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFixture {
    pub dim: usize,
    pub g: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl TensorFixture {
    /// Validated metric and tensor.
    pub fn parts(&self) -> Result<(Metric, SymTensor)> {
        let g = Metric::from_rows(&self.g)?;
        let b = SymTensor::from_rows(&self.b)?;
        for d in [g.dim(), b.dim()] {
            if d != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: d,
                });
            }
        }
        Ok((g, b))
    }
}

pub fn parse_tensor_fixture(text: &str) -> Result<TensorFixture> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
