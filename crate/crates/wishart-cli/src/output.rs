use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use wishart::wick::WickCaps;
use wishart::{Matrix, RLaurent, Rational, TracePolynomial};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Pretty,
    Json,
    Csv,
}

/// Header attached to every result.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    pub caps: WickCaps,
    pub seed: u64,
}

impl Provenance {
    fn line(&self) -> String {
        let route = self.route.as_deref().unwrap_or("-");
        let c = &self.caps;
        format!(
            "# formula: {}; route: {route}; caps: centered={} uncentered={} h_power={}; seed: {}",
            self.formula, c.centered, c.uncentered, c.h_power, self.seed
        )
    }
}

/// A rendered result in all three formats.
#[derive(Clone, Debug)]
pub struct Rendered {
    pub json: Value,
    pub pretty: String,
    pub csv: String,
}

impl Rendered {
    pub fn emit(&self, provenance: &Provenance, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Pretty => {
                writeln!(out, "{}", provenance.line())?;
                write_block(out, &self.pretty)
            }
            Format::Csv => {
                writeln!(out, "{}", provenance.line())?;
                write_block(out, &self.csv)
            }
            Format::Json => {
                let doc = json!({ "provenance": provenance, "result": self.json });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"))
            }
        }
    }
}

fn write_block(out: &mut dyn Write, s: &str) -> std::io::Result<()> {
    if s.ends_with('\n') {
        write!(out, "{s}")
    } else {
        writeln!(out, "{s}")
    }
}

pub fn rational_string(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn scalar(name: &str, value: String) -> Rendered {
    Rendered { json: json!({ name: value }), pretty: value.clone(), csv: format!("{name}\n{value}") }
}

pub fn rational(x: &Rational) -> Rendered {
    scalar("value", rational_string(x))
}

pub fn float(x: f64) -> Rendered {
    Rendered { json: json!({ "value": x }), pretty: format!("{x}"), csv: format!("value\n{x}") }
}

pub fn laurent(l: &RLaurent) -> Rendered {
    let mut csv = String::from("power,coefficient\n");
    for (p, c) in l.terms() {
        csv.push_str(&format!("{p},{}\n", rational_string(c)));
    }
    Rendered { json: serde_json::to_value(l).expect("serializable"), pretty: l.to_string(), csv }
}

pub fn poly(t: &TracePolynomial) -> Rendered {
    let json = serde_json::to_value(t).expect("serializable");
    let mut csv = String::from("coefficient,traces,power\n");
    if let Some(terms) = json["terms"].as_array() {
        for term in terms {
            let traces: Vec<String> =
                term["v"].as_object().map(|v| v.iter().map(|(i, k)| format!("{i}^{k}")).collect()).unwrap_or_default();
            csv.push_str(&format!("{},{},{}\n", term["c"].as_str().unwrap_or(""), traces.join(" "), term["w"]));
        }
    }
    Rendered { json, pretty: t.to_string(), csv }
}

pub fn matrix(m: &Matrix<f64>) -> Rendered {
    let rows = m.rows();
    let pretty = rows.iter().map(|r| r.iter().map(|x| format!("{x:>14.8}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("\n");
    let csv = rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")).collect::<Vec<_>>().join("\n");
    Rendered { json: serde_json::to_value(m).expect("serializable"), pretty, csv }
}

/// Rows of string cells under a header, rendered as an aligned table, CSV, and JSON records.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> Rendered {
    let records: Vec<Value> = rows
        .iter()
        .map(|r| Value::Object(header.iter().zip(r).map(|(h, c)| (h.to_string(), Value::String(c.clone()))).collect()))
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let fmt_row =
        |cells: Vec<&str>| cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string();
    let mut pretty = vec![fmt_row(header.to_vec())];
    pretty.extend(rows.iter().map(|r| fmt_row(r.iter().map(String::as_str).collect())));
    let quote = |c: &str| if c.contains(',') || c.contains('"') { format!("\"{}\"", c.replace('"', "\"\"")) } else { c.to_string() };
    let mut csv = header.join(",");
    for r in rows {
        csv.push('\n');
        csv.push_str(&r.iter().map(|c| quote(c)).collect::<Vec<_>>().join(","));
    }
    Rendered { json: Value::Array(records), pretty: pretty.join("\n"), csv }
}
