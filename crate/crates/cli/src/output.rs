//! CSV and JSON result files.
//!
//! CSV layout: `#`-prefixed header lines (`# key: value`), one column header
//! row, then data rows. Floats carry 12 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use spinbus::protocols::{Cell, ExperimentKind, ExperimentResult, Provenance};

use crate::config::Format;
use crate::error::CliError;

pub fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Int(k) => k.to_string(),
        Cell::Num(x) => format!("{x:.11e}"),
        Cell::Text(s) => quote(s),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.trim() != s {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn parse_cell(s: &str) -> Cell {
    let numeric = s.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.');
    if numeric {
        if let Ok(k) = s.parse::<i64>() {
            return Cell::Int(k);
        }
        if let Ok(x) = s.parse::<f64>() {
            return Cell::Num(x);
        }
    }
    Cell::Text(s.to_string())
}

/// Splits one CSV record, honoring double-quoted fields.
pub fn split_record(line: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        match (quoted, c) {
            (true, '"') if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            (true, '"') => quoted = false,
            (true, c) => cur.push(c),
            (false, '"') if cur.is_empty() => quoted = true,
            (false, ',') => out.push(std::mem::take(&mut cur)),
            (false, c) => cur.push(c),
        }
    }
    if quoted {
        return Err(CliError::validation(format!(
            "unterminated quote in `{line}`"
        )));
    }
    out.push(cur);
    Ok(out)
}

pub fn row_line(row: &[Cell]) -> String {
    row.iter().map(format_cell).collect::<Vec<_>>().join(",")
}

/// The `#` block describing a result.
pub fn header_lines(r: &ExperimentResult) -> Vec<String> {
    let p = &r.provenance;
    let mut out = vec![
        format!("# spinbus {}", p.version),
        format!("# experiment: {}", r.kind.name()),
        format!(
            "# config_sha256: {}",
            p.parameters
                .get("config_sha256")
                .map(String::as_str)
                .unwrap_or("none")
        ),
        format!(
            "# seed: {}",
            p.seed
                .map(|s| s.to_string())
                .unwrap_or_else(|| "none".into())
        ),
        format!("# unit_convention: {}", p.unit_convention),
        format!(
            "# provenance: {}",
            serde_json::to_string(p).expect("provenance serializes")
        ),
        format!(
            "# summary: {}",
            serde_json::to_string(&r.summary).expect("summary serializes")
        ),
    ];
    for w in &r.warnings {
        out.push(format!("# warning: {}", w.replace('\n', " ")));
    }
    out
}

pub fn to_csv(r: &ExperimentResult) -> String {
    let mut s = String::new();
    for line in header_lines(r) {
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(
        s,
        "{}",
        r.columns
            .iter()
            .map(|c| quote(c))
            .collect::<Vec<_>>()
            .join(",")
    );
    for row in &r.rows {
        let _ = writeln!(s, "{}", row_line(row));
    }
    s
}

pub fn to_json(r: &ExperimentResult) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("result serializes");
    s.push('\n');
    s
}

pub fn render(r: &ExperimentResult, format: Format) -> String {
    match format {
        Format::Csv => to_csv(r),
        Format::Json => to_json(r),
    }
}

/// Header key/value pairs of a CSV file plus its body lines.
pub struct CsvParts<'a> {
    pub header: Vec<(String, String)>,
    pub body: Vec<&'a str>,
}

pub fn split_csv(text: &str) -> CsvParts<'_> {
    let mut header = Vec::new();
    let mut body = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            match h.split_once(": ") {
                Some((k, v)) => header.push((k.to_string(), v.to_string())),
                None => header.push((h.to_string(), String::new())),
            }
        } else if !line.is_empty() {
            body.push(line);
        }
    }
    CsvParts { header, body }
}

pub fn from_csv(text: &str) -> Result<ExperimentResult, CliError> {
    let parts = split_csv(text);
    let field = |k: &str| {
        parts
            .header
            .iter()
            .find(|(key, _)| key == k)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| CliError::validation(format!("result file lacks `# {k}:`")))
    };
    let kind = ExperimentKind::parse(field("experiment")?)
        .ok_or_else(|| CliError::validation("unknown experiment kind in result file"))?;
    let provenance: Provenance = serde_json::from_str(field("provenance")?)
        .map_err(|e| CliError::validation(format!("bad provenance line: {e}")))?;
    let summary: BTreeMap<String, Cell> = serde_json::from_str(field("summary")?)
        .map_err(|e| CliError::validation(format!("bad summary line: {e}")))?;
    let warnings = parts
        .header
        .iter()
        .filter(|(k, _)| k == "warning")
        .map(|(_, v)| v.clone())
        .collect();
    let mut body = parts.body.into_iter();
    let columns = split_record(
        body.next()
            .ok_or_else(|| CliError::validation("result file has no column row"))?,
    )?;
    let mut rows = Vec::new();
    for line in body {
        let fields = split_record(line)?;
        if fields.len() != columns.len() {
            return Err(CliError::validation(format!(
                "row has {} fields, expected {}",
                fields.len(),
                columns.len()
            )));
        }
        rows.push(fields.iter().map(|f| parse_cell(f)).collect());
    }
    Ok(ExperimentResult {
        kind,
        columns,
        rows,
        summary,
        warnings,
        provenance,
    })
}

pub fn from_json(text: &str) -> Result<ExperimentResult, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::validation(format!("bad result JSON: {e}")))
}

/// Parses either format, judged by the first non-blank character.
pub fn read_result(text: &str) -> Result<ExperimentResult, CliError> {
    if text.trim_start().starts_with('{') {
        from_json(text)
    } else {
        from_csv(text)
    }
}

pub fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::io(format!("writing {}", p.display()), e))
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io("writing stdout", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentResult {
        let mut r = ExperimentResult::new(
            ExperimentKind::FtThreshold,
            &["n", "coherence_s", "status"],
            Provenance::new(Some(&spinbus::hamiltonian::ChainSpec::weak(3)), None, None),
        );
        r.push_row(vec![3usize.into(), 0.0541234.into(), "reached".into()]);
        r.push_row(vec![
            5usize.into(),
            "never".into(),
            "a, \"quoted\" note".into(),
        ]);
        r.set("best", 1.5e-3);
        r.warnings.push("something odd".into());
        r
    }

    #[test]
    fn csv_round_trip_keeps_twelve_digits() {
        let r = sample();
        let text = to_csv(&r);
        assert!(text.contains("5.41234000000e-2"));
        let back = from_csv(&text).unwrap();
        assert_eq!(back, r);
        back.provenance.validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(read_result(&to_json(&r)).unwrap(), r);
    }

    #[test]
    fn records_split_on_unquoted_commas() {
        assert_eq!(
            split_record("a,\"b,c\",\"d\"\"e\"").unwrap(),
            vec!["a", "b,c", "d\"e"]
        );
        assert!(split_record("\"open").is_err());
        assert_eq!(parse_cell("never"), Cell::Text("never".into()));
        assert_eq!(parse_cell("-2"), Cell::Int(-2));
        assert_eq!(parse_cell("nan"), Cell::Text("nan".into()));
    }
}
