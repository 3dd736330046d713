//! Report files: canonical JSON, CSV tables and a plot-data bundle.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Plot,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Plot];
}

/// Sorted-key, pretty-printed JSON of any serializable value. Non-finite
/// floats become `null`.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's map is ordered by key, so a round-trip through Value sorts
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::InvalidInput(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

fn write_csv<R: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<usize> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    let mut n = 0;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Write the requested formats under `dir` and return the files written.
pub fn emit(report: &RunReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    if formats.contains(&Format::Json) {
        let p = dir.join("report.json");
        fs::write(&p, canonical_json(report)?)?;
        out.push(p);
        let p = dir.join("timings.json");
        fs::write(&p, canonical_json(&report.wall_clock)?)?;
        out.push(p);
    }
    if formats.contains(&Format::Csv) {
        if let Some(tr) = report.stages.trace.ok() {
            let p = dir.join("trace_atoms.csv");
            let rows = tr.entries.iter().flat_map(|e| {
                e.report.iter().flat_map(move |r| {
                    r.atoms
                        .iter()
                        .map(move |&(v, tu, w)| (e.function.clone(), v, tu, w))
                })
            });
            write_csv(&p, &["function", "atom", "trace", "weight"], rows)?;
            out.push(p);
            let p = dir.join("trace_ratios.csv");
            let rows = tr.entries.iter().filter_map(|e| {
                e.report.as_ref().map(|r| {
                    (
                        e.function.clone(),
                        r.besov_q,
                        r.energy_d,
                        r.ratio_energy,
                        r.lq_norm_q,
                        r.lq_rhs,
                        r.ratio_lq,
                        r.max_gap,
                    )
                })
            });
            write_csv(
                &p,
                &[
                    "function",
                    "besov_q",
                    "energy_d",
                    "ratio_energy",
                    "lq_norm_q",
                    "lq_rhs",
                    "ratio_lq",
                    "max_gap",
                ],
                rows,
            )?;
            out.push(p);
        }
        if let Some(a) = report.stages.lower_content.ok() {
            let p = dir.join("lower_content_samples.csv");
            let rows = a
                .samples
                .iter()
                .map(|s| (s.w, s.rho, s.targets, s.content_lower, s.ball_mass, s.ratio));
            write_csv(
                &p,
                &["w", "rho", "targets", "content_lower", "ball_mass", "ratio"],
                rows,
            )?;
            out.push(p);
        }
        if let Some(j) = report.stages.john.ok() {
            let p = dir.join("john_curves.csv");
            let rows = j.curves.iter().map(|c| {
                (
                    c.level,
                    c.index,
                    c.vertex,
                    c.length,
                    c.worst_ratio,
                    c.john_ok,
                    c.cone_size,
                    c.cone_ok,
                )
            });
            write_csv(
                &p,
                &[
                    "level",
                    "index",
                    "vertex",
                    "length",
                    "worst_ratio",
                    "john_ok",
                    "cone_size",
                    "cone_ok",
                ],
                rows,
            )?;
            out.push(p);
        }
    }
    if formats.contains(&Format::Plot) {
        let pd = dir.join("plot");
        fs::create_dir_all(&pd)?;
        let p = pd.join("points.csv");
        write_csv(
            &p,
            &["level", "vertex", "x", "y", "weight"],
            report.plot.points.iter(),
        )?;
        out.push(p);
        let p = pd.join("curves.csv");
        write_csv(
            &p,
            &["curve", "vertex", "x", "y"],
            report.plot.curves.iter(),
        )?;
        out.push(p);
        let p = pd.join("potentials.csv");
        write_csv(
            &p,
            &["function", "vertex", "x", "y", "value"],
            report.plot.potentials.iter(),
        )?;
        out.push(p);
    }
    Ok(out)
}
