//! File formats: flat CSV for fields and envelopes, binary PGM (P5) for 2-D
//! snapshots. Floats print with Rust's shortest round-trip formatting and a
//! '.' decimal separator, so identical runs produce byte-identical files.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::trajectory::Trajectory;
use std::io::Write;
use std::path::Path;

/// `index,value` rows with a header.
pub fn write_field_csv(f: &Field, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(f.len() * 24);
    out.push_str("index,value\r\n");
    for (i, v) in f.values().iter().enumerate() {
        out.push_str(&format!("{i},{v}\r\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Envelope rows `(t, min u, max u, min v, max v, grad u, grad v)`.
pub fn write_envelope_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("time,min_u,max_u,min_v,max_v,grad_sup_u,grad_sup_v\r\n");
    for row in traj.envelope() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\r\n",
            row.time, row.min_u, row.max_u, row.min_v, row.max_v, row.grad_u, row.grad_v
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Binary PGM (P5, maxval 255) of a 2-D field, min-max scaled; the scale is
/// recorded in the comment line.
pub fn write_field_pgm(f: &Field, path: &Path) -> Result<()> {
    let grid = f.grid();
    if grid.dim != 2 {
        return Err(Error::InvalidParameter(format!(
            "PGM export needs a 2-D field, got dim = {}",
            grid.dim
        )));
    }
    let (lo, hi) = (f.min_value(), f.max_value());
    let span = hi - lo;
    let n = grid.points;
    let mut data = Vec::with_capacity(n * n + 64);
    write!(
        data,
        "P5\n# min={lo} max={hi}\n{n} {n}\n255\n"
    )?;
    for &v in f.values() {
        let scaled = if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0u8
        };
        data.push(scaled);
    }
    std::fs::write(path, data)?;
    Ok(())
}

/// Zero-padded frame path `frame_000042.pgm` inside `dir`.
pub fn frame_path(dir: &Path, index: usize) -> std::path::PathBuf {
    dir.join(format!("frame_{index:06}.pgm"))
}
