//! Tabular results and their CSV / JSON serialization.

use std::fmt;

use serde_json::{Map, Number, Value};

/// Significant digits written for every floating-point value.
pub const SIG_DIGITS: usize = 12;

/// `%g`-style rendering with [`SIG_DIGITS`] significant digits.
///
/// Independent of locale; negative zero prints as `0`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to what [`format_number`] prints.
pub fn round_number(x: f64) -> f64 {
    if x.is_finite() {
        format_number(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Null,
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => Number::from_f64(round_number(*x)).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Null => Value::Null,
        }
    }

    /// Inverse of the CSV rendering.
    fn parse_csv(field: &str) -> Cell {
        match field {
            "" => Cell::Null,
            "true" => Cell::Bool(true),
            "false" => Cell::Bool(false),
            _ => field
                .parse::<i64>()
                .map(Cell::Int)
                .or_else(|_| field.parse::<f64>().map(Cell::Num))
                .unwrap_or_else(|_| Cell::Text(field.to_string())),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(x) => f.write_str(&format_number(*x)),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Null => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 output")
    }

    pub fn from_csv(text: &str) -> Result<Self, csv::Error> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            rows.push(record?.iter().map(Cell::parse_csv).collect());
        }
        Ok(Self { columns, rows })
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Structured failure reported alongside (or instead of) results.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

/// Everything one invocation emits.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: Vec<(String, Cell)>,
    pub table: Table,
    pub summary: Vec<(String, Cell)>,
    pub error: Option<ErrorRecord>,
}

fn json_object(fields: &[(String, Cell)]) -> Value {
    Value::Object(fields.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => match &self.error {
                Some(e) => {
                    let mut t = Table::new(["error", "message"]);
                    t.push(vec![e.kind.as_str().into(), e.message.as_str().into()]);
                    t.to_csv()
                }
                None => self.table.to_csv(),
            },
            Format::Json => {
                let mut doc = Map::new();
                doc.insert("command".into(), Value::String(self.command.clone()));
                doc.insert("config".into(), json_object(&self.config));
                doc.insert("results".into(), self.table.to_json());
                if !self.summary.is_empty() {
                    doc.insert("summary".into(), json_object(&self.summary));
                }
                if let Some(e) = &self.error {
                    let mut err = Map::new();
                    err.insert("kind".into(), Value::String(e.kind.clone()));
                    err.insert("message".into(), Value::String(e.message.clone()));
                    doc.insert("error".into(), Value::Object(err));
                }
                render_json(&Value::Object(doc))
            }
        }
    }
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

/// Parses emitted output and serializes it again.
pub fn reemit(text: &str, format: Format) -> Result<String, String> {
    match format {
        Format::Csv => Table::from_csv(text)
            .map(|t| t.to_csv())
            .map_err(|e| e.to_string()),
        Format::Json => serde_json::from_str::<Value>(text)
            .map(|v| render_json(&v))
            .map_err(|e| e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (-2.25, "-2.25"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (1.234e-7, "1.234e-07"),
            (0.0001, "0.0001"),
            (1e12, "1e+12"),
            (999999999999.0, "999999999999"),
            (9.9999999999996, "10"),
            (1e300, "1e+300"),
            (f64::INFINITY, "inf"),
        ];
        for (x, s) in cases {
            assert_eq!(format_number(x), s, "{x}");
        }
    }

    #[test]
    fn formatted_numbers_are_fixed_points() {
        let mut x = 1.234_567_890_123_456e-9;
        while x < 1e15 {
            let s = format_number(x);
            assert_eq!(format_number(s.parse().unwrap()), s);
            assert_eq!(format_number(round_number(x)), s);
            x *= 3.7;
        }
    }

    #[test]
    fn csv_quoting_and_terminator() {
        let mut t = Table::new(["a", "b", "c"]);
        t.push(vec![1.5.into(), "x,y".into(), Cell::Null]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b,c\n1.5,\"x,y\",\n");
        assert_eq!(reemit(&csv, Format::Csv).unwrap(), csv);
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new(["k"]);
        t.push(vec![(1.0 / 3.0).into()]);
        let r = Report {
            command: "demo".into(),
            config: vec![("vm".into(), 10.0.into())],
            table: t,
            summary: Vec::new(),
            error: None,
        };
        let s = r.render(Format::Json);
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["results"][0]["k"].as_f64(), Some(0.333333333333));
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["command", "config", "results"]);
        assert_eq!(reemit(&s, Format::Json).unwrap(), s);
    }
}
