//! CSV profiles: `x, rho, u1, T, Q`, one row per cell, preceded by `#` comment
//! lines echoing the run configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Result, SolverError};
use crate::grid::PhaseField;
use crate::moments::compute_moments_at;
use crate::nse::{FluidState, TransportCoefficients};
use crate::time_integration::ConservationLedger;

pub const PROFILE_COLUMNS: [&str; 5] = ["x", "rho", "u1", "T", "Q"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub x: f64,
    pub rho: f64,
    pub u1: f64,
    pub temperature: f64,
    pub heat_flux: f64,
}

/// Macroscopic profiles of a kinetic field.
pub fn kinetic_profiles(field: &PhaseField) -> Result<Vec<ProfileRow>> {
    (0..field.n_cells())
        .map(|i| {
            let m = compute_moments_at(&field.cell_slice(i), &field.velocity, i)?;
            Ok(ProfileRow {
                x: field.spatial.x(i),
                rho: m.rho,
                u1: m.u[0],
                temperature: m.temperature,
                heat_flux: m.heat_flux,
            })
        })
        .collect()
}

pub fn fluid_profiles(state: &FluidState, coeffs: &TransportCoefficients) -> Vec<ProfileRow> {
    let q = state.heat_flux(coeffs);
    (0..state.rho.len())
        .map(|i| {
            let p = state.primitive(i);
            ProfileRow {
                x: state.grid.x(i),
                rho: p.rho,
                u1: p.u,
                temperature: p.temperature,
                heat_flux: q[i],
            }
        })
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_comments(out: &mut impl Write, comments: &str) -> Result<()> {
    for line in comments.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Writes profiles with every value at 17 significant digits.
pub fn write_profiles(path: &Path, rows: &[ProfileRow], comments: &str) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_comments(&mut out, comments)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_COLUMNS)?;
    for r in rows {
        w.write_record([fmt(r.x), fmt(r.rho), fmt(r.u1), fmt(r.temperature), fmt(r.heat_flux)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profiles(path: &Path) -> Result<Vec<ProfileRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(PROFILE_COLUMNS) {
        return Err(SolverError::Io(format!("unexpected profile columns {headers:?}")));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| SolverError::Io(format!("bad number '{s}': {e}"))))
                .collect::<Result<_>>()?;
            Ok(ProfileRow {
                x: v[0],
                rho: v[1],
                u1: v[2],
                temperature: v[3],
                heat_flux: v[4],
            })
        })
        .collect()
}

/// Per-step totals and defects: `step, m0, m1, m2, d0, d1, d2`.
pub fn write_ledger(path: &Path, ledger: &ConservationLedger, comments: &str) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_comments(&mut out, comments)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "m0", "m1", "m2", "defect0", "defect1", "defect2"])?;
    for (n, m) in ledger.totals.iter().enumerate() {
        let d = if n == 0 { [0.0; 3] } else { ledger.defects[n - 1] };
        let mut rec = vec![n.to_string()];
        rec.extend(m.iter().chain(&d).map(|v| fmt(*v)));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}
