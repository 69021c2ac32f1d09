//! CSV ingestion and export, and atomic file writes.
//!
//! Wide layout: one row per curve, an optional header row holding the grid
//! points and an optional leading id column. A header is recognized when the
//! first row contains a non-numeric cell (or when forced); an id column when
//! the data rows start with a non-numeric cell, or when the header's first
//! cell is non-numeric or empty while the rest of the header is numeric.
//! Without a numeric header the grid is uniform on [0, 1].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fdout_core::sample::{CurveSample, Grid, MultiCurveSample, SampleData};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum HeaderMode {
    #[default]
    Auto,
    Present,
    Absent,
}

fn is_number(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

struct RawTable {
    /// (1-based line number, cells).
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path) -> CliResult<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(RawTable { rows })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Reads one wide CSV file.
pub fn read_wide(path: &Path, header: HeaderMode) -> CliResult<CurveSample> {
    let table = read_table(path)?;
    let mut rows = table.rows.into_iter().peekable();
    let first = rows.peek().ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        line: 1,
        column: 0,
        message: "no rows".into(),
    })?;
    let has_header = match header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => first.1.iter().any(|c| !is_number(c)),
    };
    let header_row = if has_header { rows.next() } else { None };
    let data: Vec<(u64, Vec<String>)> = rows.collect();
    if data.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: header_row.as_ref().map_or(1, |h| h.0 + 1),
            column: 0,
            message: "no data rows".into(),
        });
    }
    let id_from_header = header_row.as_ref().is_some_and(|(_, h)| {
        h.len() > 1 && !is_number(&h[0]) && h[1..].iter().all(|c| is_number(c))
    });
    let id_from_rows = data.iter().any(|(_, r)| r.first().is_some_and(|c| !is_number(c)));
    let has_ids = id_from_header || id_from_rows;
    let skip = usize::from(has_ids);

    let width = data[0].1.len();
    let mut ids = Vec::with_capacity(data.len());
    let mut values = Vec::with_capacity(data.len());
    for (line, cells) in &data {
        if cells.len() != width {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: *line,
                column: cells.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", cells.len()),
            });
        }
        if has_ids {
            ids.push(cells[0].clone());
        }
        let row = cells[skip..]
            .iter()
            .enumerate()
            .map(|(k, c)| {
                c.parse::<f64>().map_err(|_| CliError::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    column: k + skip + 1,
                    message: format!("not a number: {c:?}"),
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        values.push(row);
    }
    let p = width - skip;
    let grid = match &header_row {
        Some((line, h)) if h.len() == width && h[skip..].iter().all(|c| is_number(c)) => {
            let pts = h[skip..].iter().map(|c| c.parse::<f64>().expect("checked")).collect();
            Grid::new(pts).map_err(|e| CliError::Parse {
                path: path.to_path_buf(),
                line: *line,
                column: 0,
                message: e.to_string(),
            })?
        }
        Some((line, h)) if h.len() != width => {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: *line,
                column: 0,
                message: format!("header has {} fields, rows have {width}", h.len()),
            })
        }
        _ => Grid::uniform(p, 0.0, 1.0)?,
    };
    let sample = CurveSample::from_rows(&values, grid)?;
    if has_ids {
        Ok(sample.with_ids(ids)?)
    } else {
        Ok(sample)
    }
}

/// One file gives univariate data; several files of identical shape give
/// the components of a multivariate sample.
pub fn read_curves(paths: &[PathBuf], header: HeaderMode) -> CliResult<SampleData> {
    match paths {
        [] => Err(CliError::Usage("no input files".into())),
        [single] => Ok(SampleData::Univariate(read_wide(single, header)?)),
        many => {
            let parts = many
                .iter()
                .map(|p| read_wide(p, header))
                .collect::<CliResult<Vec<_>>>()?;
            let (n, p) = (parts[0].n(), parts[0].p());
            for (path, part) in many.iter().zip(&parts).skip(1) {
                if part.n() != n || part.p() != p {
                    return Err(CliError::ShapeMismatch(format!(
                        "{} is {}x{}, {} is {n}x{p}",
                        path.display(),
                        part.n(),
                        part.p(),
                        many[0].display()
                    )));
                }
                if part.grid() != parts[0].grid() {
                    return Err(CliError::ShapeMismatch(format!(
                        "{} has a different grid from {}",
                        path.display(),
                        many[0].display()
                    )));
                }
            }
            Ok(SampleData::Multivariate(MultiCurveSample::from_components(&parts)?))
        }
    }
}

/// Formats with 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Wide CSV text: header "id,<grid>", then one row per curve.
pub fn curves_to_csv(sample: &CurveSample) -> String {
    let mut out = String::from("id");
    for t in sample.grid().points() {
        out.push(',');
        out.push_str(&format_value(*t));
    }
    out.push('\n');
    for (i, row) in sample.values().rows().into_iter().enumerate() {
        match sample.ids() {
            Some(ids) => out.push_str(&ids[i]),
            None => out.push_str(&(i + 1).to_string()),
        }
        for v in row {
            out.push(',');
            out.push_str(&format_value(*v));
        }
        out.push('\n');
    }
    out
}

/// Truth file: header "outlier" and one 1-based row index per line.
pub fn truth_to_csv(outliers: &[usize]) -> String {
    let mut out = String::from("outlier\n");
    for i in outliers {
        out.push_str(&(i + 1).to_string());
        out.push('\n');
    }
    out
}

/// Reads a truth file back as 0-based indices.
pub fn read_truth(path: &Path) -> CliResult<Vec<usize>> {
    let table = read_table(path)?;
    let mut out = Vec::new();
    for (line, cells) in table.rows.into_iter().skip(1) {
        let cell = &cells[0];
        match cell.parse::<usize>() {
            Ok(k) if k >= 1 => out.push(k - 1),
            _ => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: 1,
                    message: format!("not a 1-based index: {cell:?}"),
                })
            }
        }
    }
    Ok(out)
}

/// Writes `contents` to a temporary file beside `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
