//! Tabular output: CSV with `#` header lines, or one JSON object with
//! `meta` and `rows`.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// `x` with 12 significant digits, positional for moderate magnitudes.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        format!("{:.*}", (11 - e) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(x) => sig12(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

fn json_value(c: &Cell) -> Value {
    match c {
        // rounded exactly as in the CSV
        Cell::Num(x) if x.is_finite() => json!(sig12(*x).parse::<f64>().unwrap_or(*x)),
        Cell::Num(_) | Cell::Empty => Value::Null,
        Cell::Int(n) => json!(n),
        Cell::Bool(b) => json!(b),
        Cell::Text(s) => json!(s),
    }
}

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    notes: Vec<(&'static str, Value)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Extra run facts recorded in the header.
    pub fn note(&mut self, key: &'static str, value: Value) {
        self.notes.push((key, value));
    }

    pub fn write<W: Write>(&self, w: &mut W, format: Format, command: &str, config: &Value, seed: Option<u64>) -> io::Result<()> {
        let version = env!("CARGO_PKG_VERSION");
        match format {
            Format::Csv => {
                writeln!(w, "# fracpoisson {version}")?;
                writeln!(w, "# command: {command}")?;
                writeln!(w, "# config: {config}")?;
                match seed {
                    Some(s) => writeln!(w, "# seed: {s}")?,
                    None => writeln!(w, "# seed: none")?,
                }
                for (k, v) in &self.notes {
                    writeln!(w, "# {k}: {v}")?;
                }
                writeln!(w, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let fields: Vec<String> = row.iter().map(csv_field).collect();
                    writeln!(w, "{}", fields.join(","))?;
                }
            }
            Format::Json => {
                let mut meta = Map::new();
                meta.insert("version".into(), json!(version));
                meta.insert("command".into(), json!(command));
                meta.insert("config".into(), config.clone());
                meta.insert("seed".into(), json!(seed));
                for (k, v) in &self.notes {
                    meta.insert((*k).into(), v.clone());
                }
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| ((*c).to_string(), json_value(v)))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let doc = json!({ "meta": meta, "rows": rows });
                serde_json::to_writer_pretty(&mut *w, &doc)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(std::f64::consts::E.recip()), "0.367879441171");
        assert_eq!(sig12(1234.5), "1234.50000000");
        assert_eq!(sig12(-2.5e-9), "-2.50000000000e-9");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["n", "p", "note"]);
        t.push(vec![0usize.into(), 0.5.into(), "a,b".into()]);
        t.push(vec![1usize.into(), Cell::Empty, Cell::Empty]);
        let mut out = Vec::new();
        t.write(&mut out, Format::Csv, "pmf", &json!({"beta": 0.5}), Some(3)).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# fracpoisson "));
        assert_eq!(lines[3], "# seed: 3");
        assert_eq!(lines[4], "n,p,note");
        assert_eq!(lines[5], "0,0.500000000000,\"a,b\"");
        assert_eq!(lines[6], "1,,");
    }
}
