//! Result tables and their csv / json / text renderings.
//!
//! Every float goes through [`fmt_num`] (12 significant digits), so identical
//! runs produce identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Map, Value as Json};

pub const SCHEMA_VERSION: u32 = 1;
const SIG_DIGITS: i32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" | "txt" => Ok(Format::Text),
            other => Err(format!("unknown output format '{other}' (csv, json, text)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Str(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Str(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Null, Into::into)
    }
}

/// `%.12g`-style formatting.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..SIG_DIGITS).contains(&exp) {
        let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            // round-trip through the fixed-precision text so JSON carries the same digits
            Cell::Num(x) if x.is_finite() => {
                let v: f64 = fmt_num(*x).parse().expect("formatted number parses");
                json!(v)
            }
            Cell::Num(x) => Json::String(fmt_num(*x)),
            Cell::Int(i) => json!(i),
            Cell::Str(s) => Json::String(s.clone()),
            Cell::Bool(b) => Json::Bool(*b),
            Cell::Null => Json::Null,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Replaces the aligned table in text mode.
    pub plain_text: Option<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            plain_text: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }
}

/// The resolved configuration as ordered `key = value` pairs.
pub type Provenance = Vec<(String, Json)>;

fn provenance_value(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        Json::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => fmt_num(x),
            _ => n.to_string(),
        },
        Json::Array(items) => items.iter().map(provenance_value).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

pub fn render(command: &str, config: &Provenance, table: &Table, format: Format) -> Result<String, String> {
    match format {
        Format::Json => {
            let cfg: Map<String, Json> = config.iter().cloned().collect();
            let rows: Vec<Json> = table
                .rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Json> = table
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Json::Object(obj)
                })
                .collect();
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command,
                "config": Json::Object(cfg),
                "rows": rows,
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut out = String::new();
            writeln!(out, "# schema_version = {SCHEMA_VERSION}").unwrap();
            writeln!(out, "# command = {command}").unwrap();
            for (k, v) in config {
                writeln!(out, "# {k} = {}", provenance_value(v)).unwrap();
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).map_err(|e| e.to_string())?;
            for r in &table.rows {
                w.write_record(r.iter().map(Cell::text)).map_err(|e| e.to_string())?;
            }
            let bytes = w.into_inner().map_err(|e| e.to_string())?;
            out.push_str(&String::from_utf8(bytes).map_err(|e| e.to_string())?);
            Ok(out)
        }
        Format::Text => {
            let mut out = String::new();
            writeln!(out, "# {command}").unwrap();
            for (k, v) in config {
                writeln!(out, "# {k} = {}", provenance_value(v)).unwrap();
            }
            if let Some(lines) = &table.plain_text {
                for l in lines {
                    writeln!(out, "{l}").unwrap();
                }
                return Ok(out);
            }
            let cells: Vec<Vec<String>> = table.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
            let widths: Vec<usize> = table
                .columns
                .iter()
                .enumerate()
                .map(|(i, c)| cells.iter().map(|r| r[i].len()).chain([c.len()]).max().unwrap_or(0))
                .collect();
            let line = |items: Vec<&str>| {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            writeln!(out, "{}", line(table.columns.clone())).unwrap();
            for r in &cells {
                writeln!(out, "{}", line(r.iter().map(String::as_str).collect())).unwrap();
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(2.2552519304127614), "2.25525193041");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.5e-7), "1.5e-7");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_num(0.000123), "0.000123");
        assert_eq!(fmt_num(99999999999.99999), "100000000000");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn csv_has_provenance_and_header() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![Cell::Num(0.5), Cell::Str("x,y".into())]);
        let cfg = vec![("beta".to_string(), json!(1.0))];
        let s = render("demo", &cfg, &t, Format::Csv).unwrap();
        assert!(s.contains("# beta = 1\n"));
        assert!(s.ends_with("a,b\n0.5,\"x,y\"\n"));
    }

    #[test]
    fn json_document_shape() {
        let mut t = Table::new(vec!["v", "n"]);
        t.push(vec![Cell::Num(1.0 / 3.0), Cell::Null]);
        let s = render("demo", &vec![], &t, Format::Json).unwrap();
        let v: Json = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rows"][0]["v"], json!(0.333333333333));
        assert!(v["rows"][0]["n"].is_null());
    }
}
