//! Matrix files and CSV output.
//!
//! A matrix file is UTF-8 CSV with one line per matrix row. A known value is
//! a decimal (`0.5`, `3`, `1e-2`) or a rational literal `p/q`; a missing value
//! is `?`. Blank lines and lines starting with `#` are ignored. When both
//! `c_ij` and `c_ji` are given, the lower one may be a decimal-rounded
//! reciprocal such as `0.333` for `1/3`; the upper-triangle value is kept and
//! its partner recomputed.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::indices::IndexReport;
use crate::matrix::{MatrixError, PcMatrix, RECIPROCITY_TOLERANCE};
use crate::montecarlo::{DistributionPoint, ExperimentRecord, SensitivityCell};

#[derive(Debug, Error)]
pub enum MatrixFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: {source}")]
    Invalid {
        line: u64,
        column: usize,
        #[source]
        source: MatrixError,
    },
}

#[derive(Debug, Clone, Copy)]
struct Literal {
    value: f64,
    /// Half a unit in the last written decimal place; 0 for exact literals.
    slack: f64,
}

fn parse_number(text: &str) -> Option<f64> {
    let v: f64 = text.parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_literal(text: &str) -> Result<Option<Literal>, String> {
    if text == "?" {
        return Ok(None);
    }
    if text.is_empty() {
        return Err("empty cell (use ? for a missing comparison)".into());
    }
    if let Some((p, q)) = text.split_once('/') {
        let (p, q) = (p.trim(), q.trim());
        let (Some(p), Some(q)) = (parse_number(p), parse_number(q)) else {
            return Err(format!("malformed rational literal '{text}'"));
        };
        if q == 0.0 {
            return Err(format!("zero denominator in '{text}'"));
        }
        return Ok(Some(Literal { value: p / q, slack: 0.0 }));
    }
    let value = parse_number(text).ok_or_else(|| format!("malformed number '{text}'"))?;
    let slack = match text.split_once('.') {
        Some((_, frac)) if frac.chars().all(|c| c.is_ascii_digit()) => {
            0.5 * 10f64.powi(-(frac.len() as i32))
        }
        _ => 0.0,
    };
    Ok(Some(Literal { value, slack }))
}

fn within_rounding(exact: f64, written: Literal) -> bool {
    (written.value - exact).abs() <= written.slack + RECIPROCITY_TOLERANCE * exact.abs()
}

/// Parses matrix text in the CSV matrix format.
pub fn parse_matrix(text: &str) -> Result<PcMatrix, MatrixFileError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut lines = Vec::new();
    let mut cells: Vec<Vec<Option<Literal>>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MatrixFileError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            column: 0,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                parse_literal(field).map_err(|message| MatrixFileError::Parse {
                    line,
                    column: col + 1,
                    message,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        lines.push(line);
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(MatrixFileError::Parse {
            line: 1,
            column: 1,
            message: "no matrix rows".into(),
        });
    }

    let grid: Vec<Vec<Option<f64>>> = cells
        .iter()
        .map(|r| r.iter().map(|c| c.map(|l| l.value)).collect())
        .collect();
    let accept = |i: usize, j: usize, upper: f64, lower: f64| {
        let (u, l) = (cells[i][j].expect("known"), cells[j][i].expect("known"));
        within_rounding(1.0 / upper, l) || within_rounding(1.0 / lower, u)
    };
    PcMatrix::from_grid_with(&grid, accept).map_err(|source| {
        let (row, col) = match &source {
            MatrixError::NonSquare { row, len, .. } => (*row, len + 1),
            MatrixError::TooSmall { .. } => (0, 1),
            MatrixError::DiagonalNotOne { index, .. } => (*index, *index),
            MatrixError::NonPositiveEntry { row, col, .. } => (*row, *col),
            MatrixError::ReciprocityViolation { row, col, .. } => (*col, *row),
            MatrixError::IndexOutOfRange { .. } => (0, 0),
        };
        let line = lines.get(row).copied().unwrap_or(1);
        let column = if matches!(source, MatrixError::NonSquare { .. } | MatrixError::TooSmall { .. }) {
            col
        } else {
            col + 1
        };
        MatrixFileError::Invalid { line, column, source }
    })
}

pub fn parse_matrix_file(path: impl AsRef<Path>) -> Result<PcMatrix, MatrixFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MatrixFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix(&text)
}

/// Matrix in the file format, cells separated by `", "`.
pub fn matrix_to_csv(c: &PcMatrix) -> String {
    let n = c.order();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| c.get(i, j).map_or_else(|| "?".to_string(), |v| v.to_string()))
            .collect();
        out.push_str(&row.join(", "));
        out.push('\n');
    }
    out
}

/// Fixed six decimal places.
pub fn fmt_fixed(v: f64) -> String {
    format!("{v:.6}")
}

/// At most six decimal places with trailing zeros dropped: `0.15`, `0.225`,
/// `0.496032`.
pub fn fmt_short(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub const INDEX_CSV_HEADER: [&str; 10] = [
    "n", "missing", "ci", "alpha", "beta", "iid_alpha", "ii_beta", "spanning_trees", "tree_index", "compound",
];

/// One-row CSV (with header) of an index report. Unavailable values are empty.
pub fn write_index_csv<W: Write>(w: W, r: &IndexReport) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(INDEX_CSV_HEADER)?;
    out.write_record([
        r.n.to_string(),
        r.missing.to_string(),
        r.ci.map(fmt_short).unwrap_or_default(),
        r.alpha.to_string(),
        r.beta.to_string(),
        fmt_short(r.iid_alpha),
        fmt_short(r.ii_beta),
        r.spanning_trees.to_string(),
        r.tree_index.map(fmt_short).unwrap_or_default(),
        fmt_short(r.compound),
    ])?;
    out.flush()?;
    Ok(())
}

pub const RECORD_CSV_HEADER: [&str; 13] = [
    "seed",
    "base_id",
    "ci_group",
    "ci_actual",
    "k",
    "scheme",
    "iid_alpha",
    "ii_beta",
    "tree_index",
    "compound",
    "manhattan",
    "kendall_rescaled",
    "converged",
];

pub fn write_records_csv<W: Write>(w: W, records: &[ExperimentRecord]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RECORD_CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.seed.to_string(),
            r.base_id.to_string(),
            r.ci_group.to_string(),
            r.ci_actual.to_string(),
            r.k.to_string(),
            r.scheme.to_string(),
            r.iid_alpha.to_string(),
            r.ii_beta.to_string(),
            r.tree_index.to_string(),
            r.compound.to_string(),
            r.manhattan.to_string(),
            r.kendall_rescaled.to_string(),
            r.converged.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub const SENSITIVITY_SUMMARY_HEADER: [&str; 13] = [
    "ci_group",
    "ci_target",
    "ci_avg",
    "index",
    "bucket_lo",
    "bucket_hi",
    "count",
    "excluded",
    "mean_manhattan",
    "se_manhattan",
    "mean_kendall_rescaled",
    "se_kendall_rescaled",
    "bucket",
];

pub fn write_sensitivity_summary<W: Write>(w: W, cells: &[SensitivityCell]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SENSITIVITY_SUMMARY_HEADER)?;
    for c in cells {
        out.write_record([
            c.ci_group.to_string(),
            c.ci_target.to_string(),
            c.ci_avg.to_string(),
            c.axis.as_str().to_string(),
            c.bucket_lo.to_string(),
            c.bucket_hi.to_string(),
            c.manhattan.count.to_string(),
            c.excluded.to_string(),
            c.manhattan.mean().to_string(),
            c.manhattan.se().to_string(),
            c.kendall.mean().to_string(),
            c.kendall.se().to_string(),
            c.bucket.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub const DISTRIBUTION_SUMMARY_HEADER: [&str; 14] = [
    "scheme",
    "k",
    "count",
    "excluded",
    "ci_avg",
    "mean_manhattan",
    "se_manhattan",
    "mean_kendall_rescaled",
    "se_kendall_rescaled",
    "mean_iid_alpha",
    "mean_ii_beta",
    "mean_tree_index",
    "mean_compound",
    "se_compound",
];

pub fn write_distribution_summary<W: Write>(w: W, points: &[DistributionPoint]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DISTRIBUTION_SUMMARY_HEADER)?;
    for p in points {
        out.write_record([
            p.scheme.to_string(),
            p.k.to_string(),
            p.manhattan.count.to_string(),
            p.excluded.to_string(),
            p.ci_avg.mean().to_string(),
            p.manhattan.mean().to_string(),
            p.manhattan.se().to_string(),
            p.kendall.mean().to_string(),
            p.kendall.se().to_string(),
            p.iid_alpha.mean().to_string(),
            p.ii_beta.mean().to_string(),
            p.tree_index.mean().to_string(),
            p.compound.mean().to_string(),
            p.compound.se().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::fixtures::*;

    #[test]
    fn example2_file() {
        let c = parse_matrix("1, 3, ?\n1/3, 1, 3\n?, 1/3, 1\n").unwrap();
        assert_eq!(c, example2());
    }

    #[test]
    fn rounded_reciprocals_are_accepted() {
        let c = parse_matrix("1,3,7\n0.333,1,0.5\n0.14,2,1\n").unwrap();
        assert_eq!(c.get(1, 0), Some(1.0 / 3.0));
        assert_eq!(c.get(2, 0), Some(1.0 / 7.0));
        // 0.3 is 1/3 to one decimal, 0.2 is not
        assert!(parse_matrix("1,3\n0.3,1\n").is_ok());
        let err = parse_matrix("1,3\n0.2,1\n").unwrap_err();
        assert!(matches!(
            err,
            MatrixFileError::Invalid {
                line: 2,
                column: 1,
                source: MatrixError::ReciprocityViolation { .. }
            }
        ));
    }

    #[test]
    fn errors_carry_locations() {
        assert!(matches!(
            parse_matrix("1\n"),
            Err(MatrixFileError::Invalid { source: MatrixError::TooSmall { n: 1 }, .. })
        ));
        assert!(matches!(
            parse_matrix("1,2,?\n0.5,?,1\n?,1,1\n"),
            Err(MatrixFileError::Invalid {
                line: 2,
                column: 2,
                source: MatrixError::DiagonalNotOne { .. }
            })
        ));
        assert!(matches!(
            parse_matrix("1,abc\n?,1\n"),
            Err(MatrixFileError::Parse { line: 1, column: 2, .. })
        ));
        assert!(matches!(
            parse_matrix("1,-2\n?,1\n"),
            Err(MatrixFileError::Invalid { line: 1, column: 2, .. })
        ));
        assert!(matches!(
            parse_matrix("1,2\n0.5\n"),
            Err(MatrixFileError::Invalid { source: MatrixError::NonSquare { row: 1, .. }, .. })
        ));
        assert!(matches!(parse_matrix("1,1/0\n?,1\n"), Err(MatrixFileError::Parse { .. })));
        assert!(matches!(parse_matrix(""), Err(MatrixFileError::Parse { .. })));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_matrix("# example 2\n1,3,?\n\n1/3,1,3\n?,1/3,1\n\n").unwrap();
        assert_eq!(c, example2());
    }

    #[test]
    fn serialization_round_trips() {
        for c in [example1(), example2(), c1(), c2()] {
            assert_eq!(parse_matrix(&matrix_to_csv(&c)).unwrap(), c);
        }
        assert_eq!(matrix_to_csv(&example2()).lines().next(), Some("1, 3, ?"));
    }

    #[test]
    fn short_format() {
        assert_eq!(fmt_short(0.15), "0.15");
        assert_eq!(fmt_short(0.225), "0.225");
        assert_eq!(fmt_short(0.15 * 0.225), "0.03375");
        assert_eq!(fmt_short(0.4960315800420507), "0.496032");
        assert_eq!(fmt_short(0.0), "0");
        assert_eq!(fmt_short(1.0), "1");
        assert_eq!(fmt_fixed(0.0769230769), "0.076923");
    }
}
