//! Report assembly and rendering.  Every float goes through [`fmt_sig`], so
//! output depends only on the values and the digit count.

use std::io::{self, Write};

use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};
use serde_json::ser::Formatter;
use serde_json::Value;

pub const TSV_DIGITS: usize = 12;
pub const JSON_DIGITS: usize = 17;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Null,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Float)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Float(_) | Cell::Null => s.serialize_none(),
            Cell::Text(v) => s.serialize_str(v),
            Cell::Bool(v) => s.serialize_bool(*v),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }
}

struct Rows<'a>(&'a [Vec<Cell>]);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for row in self.0 {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("name", &self.name)?;
        map.serialize_entry("columns", &self.columns)?;
        map.serialize_entry("rows", &Rows(&self.rows))?;
        map.end()
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub version: &'static str,
    /// Canonical spec JSON and its SHA-256, when the command reads a spec.
    pub spec: Option<(Value, String)>,
    pub params: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl Serialize for Report {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        map.serialize_entry("command", &self.command)?;
        map.serialize_entry("version", self.version)?;
        if let Some((spec, hash)) = &self.spec {
            map.serialize_entry("spec", spec)?;
            map.serialize_entry("spec_sha256", hash)?;
        }
        let params: serde_json::Map<String, Value> =
            self.params.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect();
        map.serialize_entry("params", &params)?;
        map.serialize_entry("tables", &self.tables)?;
        map.end()
    }
}

/// `v` with `digits` significant digits, `%g` style: fixed notation for
/// decimal exponents in `[-5, digits)`, scientific otherwise, trailing zeros
/// dropped.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let mut ds: String = mantissa.chars().filter(|c| *c != '.').collect();
    while ds.len() > 1 && ds.ends_with('0') {
        ds.pop();
    }
    if exp < -5 || exp >= digits as i32 {
        let tail = if ds.len() > 1 { format!(".{}", &ds[1..]) } else { String::new() };
        return format!("{sign}{}{tail}e{exp}", &ds[..1]);
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{ds}");
    }
    let point = exp as usize + 1;
    if ds.len() <= point {
        format!("{sign}{ds}{}", "0".repeat(point - ds.len()))
    } else {
        format!("{sign}{}.{}", &ds[..point], &ds[point..])
    }
}

struct SigFormatter {
    digits: usize,
}

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_sig(v, self.digits).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

fn tsv_field(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

fn tsv_cell(cell: &Cell, digits: usize) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => fmt_sig(*v, digits),
        Cell::Text(v) => tsv_field(v),
        Cell::Bool(v) => v.to_string(),
        Cell::Null => "NA".into(),
    }
}

pub fn render_tsv(report: &Report, digits: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!("# combstruct {}\n", report.version));
    out.push_str(&format!("# command: {}\n", report.command));
    if let Some((spec, hash)) = &report.spec {
        out.push_str(&format!("# spec: {spec}\n"));
        out.push_str(&format!("# spec_sha256: {hash}\n"));
    }
    let params: Vec<String> = report.params.iter().map(|(k, v)| format!("{k}={}", tsv_field(v))).collect();
    out.push_str(&format!("# params: {}\n", params.join(" ")));
    for table in &report.tables {
        out.push_str(&format!("# table: {}\n", table.name));
        out.push_str(&table.columns.join("\t"));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(|c| tsv_cell(c, digits)).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
    }
    out
}

pub fn render_json(report: &Report, digits: usize) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter { digits });
    report.serialize(&mut ser).expect("report serialises");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8 json")
}
