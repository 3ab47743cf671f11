//! Input loading and output formatting.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use rieszcare::care::CareProblem;
use rieszcare::linalg::{c, CMat};
use rieszcare::mrpa::{parse_integrals, IntegralSet, RpaMatrices};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::CliError;

/// What an input file turned out to hold.
pub enum Input {
    Care(CareProblem),
    Rpa(RpaMatrices),
    Integrals(IntegralSet),
}

pub fn load(path: &Path) -> Result<Input, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io("read_input", format!("{}: {e}", path.display())))?;
    parse_input(&text)
}

pub fn parse_input(text: &str) -> Result<Input, CliError> {
    if !text.trim_start().starts_with('{') {
        return parse_integrals(text).map(Input::Integrals).map_err(|e| CliError::lib(e.at("parse_integrals")));
    }
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::io("parse_json", e.to_string()))?;
    let field = |k: &str| v.get(k).map(|m| matrix(m, k)).transpose();
    if let (Some(p), Some(q), Some(r)) = (field("p")?, field("q")?, field("r")?) {
        return CareProblem::new(p, q, r).map(Input::Care).map_err(|e| CliError::lib(e.at("care_problem")));
    }
    if let (Some(a), Some(b)) = (field("a")?, field("b")?) {
        return rpa_from(&a, &b).map(Input::Rpa);
    }
    Err(CliError::io("parse_json", "expected keys p, q, r (CARE) or a, b (RPA matrices)".into()))
}

fn rpa_from(a: &CMat, b: &CMat) -> Result<RpaMatrices, CliError> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(CliError::io("parse_json", "A and B must be square and of equal size".into()));
    }
    if a.iter().chain(b.iter()).any(|z| z.im != 0.0) {
        return Err(CliError::io("parse_json", "RPA matrices must be real".into()));
    }
    let re = |m: &CMat| rieszcare::linalg::real_part(m);
    Ok(RpaMatrices { a: re(a), b: re(b), m: 1, block_index: vec![0, n], metric_defect: None })
}

fn entry(v: &Value, what: &str) -> Result<rieszcare::linalg::C64, CliError> {
    let bad = || CliError::io("parse_json", format!("{what}: entries must be numbers, [re, im] or {{\"re\", \"im\"}}"));
    match v {
        Value::Number(n) => Ok(c(n.as_f64().ok_or_else(bad)?, 0.0)),
        Value::Array(p) if p.len() == 2 => Ok(c(p[0].as_f64().ok_or_else(bad)?, p[1].as_f64().ok_or_else(bad)?)),
        Value::Object(o) => {
            let get = |k: &str| o.get(k).map_or(Some(0.0), Value::as_f64).ok_or_else(bad);
            Ok(c(get("re")?, get("im")?))
        }
        _ => Err(bad()),
    }
}

/// Row-major nested arrays, or `{"re": rows, "im": rows}` as written by
/// [`matrix_json`].
pub fn matrix(v: &Value, what: &str) -> Result<CMat, CliError> {
    if let Some(o) = v.as_object() {
        let re = matrix(o.get("re").ok_or_else(|| CliError::io("parse_json", format!("{what}: object form needs \"re\"")))?, what)?;
        return match o.get("im") {
            None => Ok(re),
            Some(im) => {
                let im = matrix(im, what)?;
                if im.shape() != re.shape() {
                    return Err(CliError::io("parse_json", format!("{what}: re and im differ in shape")));
                }
                Ok(re + im * c(0.0, 1.0))
            }
        };
    }
    let rows = v.as_array().ok_or_else(|| CliError::io("parse_json", format!("{what} must be an array of rows")))?;
    let nr = rows.len();
    let nc = rows.first().and_then(Value::as_array).map_or(0, Vec::len);
    if nr == 0 || nc == 0 {
        return Err(CliError::io("parse_json", format!("{what} is empty")));
    }
    let mut m = CMat::zeros(nr, nc);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == nc).ok_or_else(|| CliError::io("parse_json", format!("{what}: ragged row {i}")))?;
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = entry(x, what)?;
        }
    }
    Ok(m)
}

/// `{"re": [[..]], "im": [[..]]}`.
pub fn matrix_json(m: &CMat) -> Value {
    let part = |f: fn(&rieszcare::linalg::C64) -> f64| -> Value {
        Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| json!(f(&m[(i, j)]))).collect())).collect())
    };
    json!({ "re": part(|z| z.re), "im": part(|z| z.im) })
}

pub fn care_json(p: &CareProblem) -> Value {
    json!({ "p": matrix_json(&p.p), "q": matrix_json(&p.q), "r": matrix_json(&p.r) })
}

/// Pretty JSON with every float written to 17 significant digits.
struct Sci(PrettyFormatter<'static>);

impl Formatter for Sci {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Compact single-line JSON, for error records.
pub fn to_json_line(value: &Value) -> String {
    serde_json::to_string(value).expect("serializing to memory")
}

pub fn sci(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:.16e}").expect("writing to a String");
    s
}

pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv writes UTF-8")
}

pub fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io("write_output", format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("write_output", e.to_string())),
    }
}
