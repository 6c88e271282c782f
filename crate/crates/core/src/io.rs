//! Reading count series from text files.

use std::fs;
use std::path::Path;

use crate::error::{CmemError, Result};
use crate::series::CountSeries;

/// Read a count series from `path`. See [`parse_count_series`].
pub fn read_count_series(path: impl AsRef<Path>) -> Result<CountSeries> {
    let text = fs::read_to_string(path)?;
    parse_count_series(&text)
}

/// Parse one non-negative integer per line, or a CSV with a header row.
///
/// With a header the column named `count` is used, or the only column when
/// there is just one. Blank lines are ignored. Errors carry 1-based line numbers.
pub fn parse_count_series(text: &str) -> Result<CountSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let mut column = 0usize;
    let mut width = 1usize;
    if let Some(&(line_no, first)) = lines.peek() {
        let fields: Vec<&str> = first.split(',').map(str::trim).collect();
        let is_header = fields.iter().any(|f| f.parse::<i128>().is_err() && f.parse::<f64>().is_err());
        if is_header {
            width = fields.len();
            column = if fields.len() == 1 {
                0
            } else {
                fields
                    .iter()
                    .position(|f| f.eq_ignore_ascii_case("count"))
                    .ok_or_else(|| CmemError::Parse {
                        line: line_no,
                        msg: "header has no column named 'count'".into(),
                    })?
            };
            lines.next();
        } else {
            width = fields.len();
            if width > 1 {
                return Err(CmemError::Parse {
                    line: line_no,
                    msg: "multi-column input needs a header naming the 'count' column".into(),
                });
            }
        }
    }

    let mut out = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(CmemError::Parse {
                line: line_no,
                msg: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        out.push(parse_count(fields[column], line_no)?);
    }
    if out.is_empty() {
        return Err(CmemError::InsufficientData("no observations in input".into()));
    }
    Ok(CountSeries::new(out))
}

fn parse_count(token: &str, line: usize) -> Result<u64> {
    token.parse::<u64>().map_err(|e| {
        let msg = if token.starts_with('-') {
            format!("negative count '{token}'")
        } else {
            format!("invalid count '{token}': {e}")
        };
        CmemError::Parse { line, msg }
    })
}

/// Render a series as a CSV with a `count` column and an optional latent-mean column.
pub fn write_count_csv(series: &CountSeries, means: Option<&[f64]>) -> String {
    let mut s = String::new();
    match means {
        Some(m) => {
            s.push_str("t,count,mean\n");
            for (t, (x, mt)) in series.values().iter().zip(m).enumerate() {
                s.push_str(&format!("{},{},{}\n", t + 1, x, mt));
            }
        }
        None => {
            s.push_str("t,count\n");
            for (t, x) in series.values().iter().enumerate() {
                s.push_str(&format!("{},{}\n", t + 1, x));
            }
        }
    }
    s
}
