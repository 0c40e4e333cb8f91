//! CSV and JSON persistence. Every file is written to a temporary sibling
//! and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::Diagnostics;
use crate::spatial::FilmState;

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "energy", "dissipation", "mass", "min_u", "max_u", "h1_dist"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Config(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv encoding failed: {e}")))
}

pub fn trajectory_csv(samples: &[Diagnostics]) -> Result<Vec<u8>> {
    csv_bytes(
        &TRAJECTORY_HEADER,
        samples.iter().map(|d| {
            [d.t, d.energy, d.dissipation, d.mass, d.min_height, d.max_height, d.h1_dist]
                .into_iter()
                .map(fmt)
                .collect()
        }),
    )
}

pub fn write_trajectory_csv(path: &Path, samples: &[Diagnostics]) -> Result<()> {
    write_atomic(path, &trajectory_csv(samples)?)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Diagnostics>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::Config(format!(
            "{}: expected header {}",
            path.display(),
            TRAJECTORY_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let v: Vec<f64> = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}: row {}: {e}", path.display(), line + 1)))?;
        if v.len() != TRAJECTORY_HEADER.len() {
            return Err(Error::Config(format!("{}: row {} is short", path.display(), line + 1)));
        }
        out.push(Diagnostics {
            t: v[0],
            energy: v[1],
            dissipation: v[2],
            mass: v[3],
            min_height: v[4],
            max_height: v[5],
            h1_dist: v[6],
        });
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_snapshot_csv(path: &Path, state: &FilmState) -> Result<()> {
    let grid = *state.grid();
    let bytes = csv_bytes(
        &["x", "u"],
        grid.cell_centres()
            .zip(state.values())
            .map(|(x, &u)| vec![fmt(x), fmt(u)]),
    )?;
    write_atomic(path, &bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Config(format!("json encoding failed: {e}")))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
