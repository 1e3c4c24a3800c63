//! Deterministic artifact writers.  JSON reports carry numbers rounded to
//! 15 significant digits and sorted object keys; CSV rows carry 12
//! significant digits.  No timestamps anywhere, so identical runs produce
//! identical bytes.

use std::io::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::errors::CliError;

/// Round every float in place to 15 significant digits.  Integers are
/// left alone; non-finite values have already become `null` upstream.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap();
                let rounded: f64 = format!("{x:.14e}").parse().unwrap();
                *v = serde_json::Number::from_f64(rounded)
                    .map(Value::Number)
                    .unwrap_or(Value::Null);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn render_report(mut v: Value) -> String {
    round_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("report serialization cannot fail");
    text.push('\n');
    text
}

pub fn write_report(v: Value, path: Option<&Path>) -> Result<(), CliError> {
    let text = render_report(v);
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::Internal(format!("cannot write report: {e}")))
        }
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Internal(format!("cannot write `{}`: {e}", p.display()))),
    }
}

/// A CSV artifact: a fixed header plus float rows.
pub struct CsvData {
    pub header: &'static str,
    pub rows: Vec<Vec<f64>>,
}

pub fn write_csv(data: &CsvData, path: &Path) -> Result<(), CliError> {
    let mut text = String::from(data.header);
    text.push('\n');
    for row in &data.rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.11e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Internal(format!("cannot write `{}`: {e}", path.display())))
}
