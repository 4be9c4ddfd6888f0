//! Plain-text exchange formats: conformal states, target curvatures, flow
//! traces and events (CSV), reports (JSON).
//!
//! Floats in CSV files are written with 17 significant digits so every value
//! reads back bit-identically.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::curvature::CurvatureReport;
use crate::error::{Error, Result};
use crate::flows::{FlowEvent, FlowTrace};
use crate::mesh::{BackgroundGeometry, WeightedSurface};
use crate::metric::ConformalState;

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            line: 0,
            message: format!("{}: {other:?}", path.display()),
        },
    }
}

fn write_rows(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// State file with columns `vertex,f,u`.
pub fn write_state(path: impl AsRef<Path>, state: &ConformalState) -> Result<()> {
    let header = ["vertex", "f", "u"].map(String::from);
    let rows =
        (0..state.len()).map(|i| vec![i.to_string(), fmt_f64(state.f()[i]), fmt_f64(state.u()[i])]);
    write_rows(path.as_ref(), &header, rows)
}

/// Parsed numeric table keyed by lower-case column name.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn parse(text: &str) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .iter()
            .map(|h| h.to_ascii_lowercase())
            .collect();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 2,
                        message: format!("'{field}' is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of `name`, ordered by the `vertex` column when present.
    fn per_vertex(&self, name: &str, n: usize) -> Result<Option<Vec<f64>>> {
        let Some(col) = self.column(name) else {
            return Ok(None);
        };
        if self.rows.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.rows.len(),
            });
        }
        let vcol = self.column("vertex");
        let mut out = vec![f64::NAN; n];
        for (r, row) in self.rows.iter().enumerate() {
            let v = match vcol {
                Some(c) => {
                    let x = row[c];
                    if x < 0.0 || x.fract() != 0.0 || x as usize >= n {
                        return Err(Error::Parse {
                            line: r + 2,
                            message: format!("bad vertex index {x}"),
                        });
                    }
                    x as usize
                }
                None => r,
            };
            if !out[v].is_nan() {
                return Err(Error::Parse {
                    line: r + 2,
                    message: format!("vertex {v} listed twice"),
                });
            }
            out[v] = row[col];
        }
        Ok(Some(out))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a state table. The `u` column is used when present, otherwise `f`.
pub fn parse_state(
    text: &str,
    surface: &WeightedSurface,
    geometry: BackgroundGeometry,
    alpha: f64,
) -> Result<ConformalState> {
    let table = Table::parse(text)?;
    let n = surface.num_vertices();
    if let Some(u) = table.per_vertex("u", n)? {
        return ConformalState::from_u(surface, u, geometry, alpha);
    }
    if let Some(f) = table.per_vertex("f", n)? {
        return ConformalState::from_f(surface, f, geometry, alpha);
    }
    Err(Error::Parse {
        line: 1,
        message: "state file needs a 'u' or 'f' column".into(),
    })
}

pub fn read_state(
    path: impl AsRef<Path>,
    surface: &WeightedSurface,
    geometry: BackgroundGeometry,
    alpha: f64,
) -> Result<ConformalState> {
    parse_state(&read_text(path.as_ref())?, surface, geometry, alpha)
}

/// Target curvature table with columns `vertex,target`.
pub fn write_target(path: impl AsRef<Path>, target: &[f64]) -> Result<()> {
    let header = ["vertex", "target"].map(String::from);
    let rows = target
        .iter()
        .enumerate()
        .map(|(i, &r)| vec![i.to_string(), fmt_f64(r)]);
    write_rows(path.as_ref(), &header, rows)
}

pub fn parse_target(text: &str, n: usize) -> Result<Vec<f64>> {
    Table::parse(text)?
        .per_vertex("target", n)?
        .ok_or(Error::Parse {
            line: 1,
            message: "target file needs a 'target' column".into(),
        })
}

pub fn read_target(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    parse_target(&read_text(path.as_ref())?, n)
}

/// Columns `vertex,k,r_alpha,gauss_bonnet_residual`; the residual is global
/// and repeated on every row.
pub fn write_curvature(path: impl AsRef<Path>, report: &CurvatureReport) -> Result<()> {
    let header = ["vertex", "k", "r_alpha", "gauss_bonnet_residual"].map(String::from);
    let gb = fmt_f64(report.gauss_bonnet_residual);
    let rows = report
        .k
        .iter()
        .zip(&report.r_alpha)
        .enumerate()
        .map(|(i, (&k, &r))| vec![i.to_string(), fmt_f64(k), fmt_f64(r), gb.clone()]);
    write_rows(path.as_ref(), &header, rows)
}

/// Columns `t,residual,conserved,num_degenerate_faces,u_1..u_N`.
pub fn write_trace(path: impl AsRef<Path>, trace: &FlowTrace) -> Result<()> {
    let n = trace.samples.first().map_or(0, |s| s.u.len());
    let mut header: Vec<String> = ["t", "residual", "conserved", "num_degenerate_faces"]
        .map(String::from)
        .to_vec();
    header.extend((1..=n).map(|i| format!("u_{i}")));
    let rows = trace.samples.iter().map(|s| {
        let mut row = vec![
            fmt_f64(s.t),
            fmt_f64(s.residual),
            fmt_f64(s.conserved),
            s.degenerate_faces.len().to_string(),
        ];
        row.extend(s.u.iter().map(|&x| fmt_f64(x)));
        row
    });
    write_rows(path.as_ref(), &header, rows)
}

/// Columns `time,kind,face,vertex`; missing indices are left empty.
pub fn write_events(path: impl AsRef<Path>, events: &[FlowEvent]) -> Result<()> {
    let header = ["time", "kind", "face", "vertex"].map(String::from);
    let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    let rows = events.iter().map(|e| {
        vec![
            fmt_f64(e.time),
            e.kind.name().to_string(),
            opt(e.face),
            opt(e.vertex),
        ]
    });
    write_rows(path.as_ref(), &header, rows)
}
