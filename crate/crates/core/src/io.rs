//! Text formats: ε grids, curve CSV, sequence CSV, JSON.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulus::{CurveSpace, Method, ModulusCurve, ModulusPoint};
use crate::spaces::Vector;

pub const CURVE_HEADER: &str = "eps,delta,method,witness_x,witness_y";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// 17 significant digits in scientific notation.
pub fn fmt_sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// `start:stop:count`, inclusive at both ends; `count = 1` gives `[start]`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(Error::Config(format!("grid `{spec}` is not start:stop:count")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("grid `{spec}`: `{s}` is not a number")))
    };
    let (start, stop) = (num(start)?, num(stop)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("grid `{spec}`: count must be a positive integer")))?;
    if count == 0 {
        return Err(Error::Config(format!("grid `{spec}`: count must be at least 1")));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(Error::Config(format!("grid `{spec}` has non-finite ends")));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    if stop <= start {
        return Err(Error::Config(format!("grid `{spec}`: stop must exceed start when count > 1")));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i == count - 1 { stop } else { start + step * i as f64 })
        .collect())
}

fn join_vec(v: &[f64]) -> String {
    v.iter().map(|&c| fmt_sci(c)).collect::<Vec<_>>().join(";")
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
        _ => Error::Config(format!("malformed CSV: {e}")),
    }
}

fn parse_num(s: &str, line: u64) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Config(format!("line {line}: `{s}` is not a number")))
}

fn parse_vec(field: &str, line: u64) -> Result<Vector> {
    field
        .split(';')
        .map(|s| parse_num(s.trim(), line))
        .collect::<Result<Vec<_>>>()
        .map(Vector::new)
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("CSV output is ASCII")
}

/// One row per point. Witness vectors are `;`-separated coordinates and are
/// left empty for closed-form points.
pub fn curve_to_csv(curve: &ModulusCurve) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CURVE_HEADER.split(',')).expect("in-memory write");
    for pt in curve.points() {
        let (wx, wy) = match &pt.witness {
            Some((x, y)) => (join_vec(x), join_vec(y)),
            None => (String::new(), String::new()),
        };
        w.write_record([fmt_sci(pt.eps), fmt_sci(pt.delta), pt.method.as_str().to_string(), wx, wy])
            .expect("in-memory write");
    }
    finish(w)
}

/// Reads a curve written by [`curve_to_csv`]. The file carries no exponent,
/// so the caller supplies the space.
pub fn curve_from_csv(text: &str, space: CurveSpace) -> Result<ModulusCurve> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.join(",") != CURVE_HEADER {
        return Err(Error::Config(format!("curve CSV must start with `{CURVE_HEADER}`")));
    }
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let n = rec.position().map_or(0, |p| p.line());
        let method: Method = rec[2].parse()?;
        let witness = match (rec[3].is_empty(), rec[4].is_empty()) {
            (true, true) => None,
            (false, false) => Some((parse_vec(&rec[3], n)?, parse_vec(&rec[4], n)?)),
            _ => return Err(Error::Config(format!("line {n}: witness needs both vectors"))),
        };
        points.push(ModulusPoint { eps: parse_num(&rec[0], n)?, delta: parse_num(&rec[1], n)?, method, witness });
    }
    ModulusCurve::new(space, points)
}

/// Reads a curve from JSON and re-validates the ε ordering.
pub fn curve_from_json(text: &str) -> Result<ModulusCurve> {
    let raw: ModulusCurve = serde_json::from_str(text)?;
    ModulusCurve::new(raw.space, raw.points().to_vec())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One vector per row, comma-separated coordinates.
pub fn sequence_to_csv(seq: &[Vector]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for v in seq {
        w.write_record(v.iter().map(|&c| fmt_sci(c))).expect("in-memory write");
    }
    finish(w)
}

/// Inverse of [`sequence_to_csv`]; `#` comments are skipped and every row
/// must have the same length.
pub fn sequence_from_csv(text: &str) -> Result<Vec<Vector>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out: Vec<Vector> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let n = rec.position().map_or(0, |p| p.line());
        let v = rec.iter().map(|s| parse_num(s, n)).collect::<Result<Vec<_>>>()?;
        if let Some(first) = out.first() {
            if first.len() != v.len() {
                return Err(Error::Dimension { expected: first.len(), got: v.len() });
            }
        }
        out.push(Vector::new(v));
    }
    if out.is_empty() {
        return Err(Error::Config("sequence file has no rows".into()));
    }
    Ok(out)
}
