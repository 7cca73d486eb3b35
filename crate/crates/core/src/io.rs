//! Plain-text snapshot formats and the trajectory CSV.
//!
//! * Field snapshots: header `SPHFIELD v1 L_max n_theta n_phi`, then
//!   n_theta lines of n_phi whitespace-separated decimal values, colatitude
//!   rows ascending, longitude columns ascending.
//! * Spectral snapshots: header `SPHSPEC v1 L_max`, then one `l m a_lm`
//!   line per coefficient, l-major with m ascending.
//! * Trajectory CSV columns (exact order): step, t, dt, alpha, E, E_f,
//!   volume, u_min, u_max, residual_sup, residual_L2, max_cap_mass,
//!   symmetry_defect.
//!
//! Floats are written with Rust's shortest-roundtrip formatting, so every
//! file parses back bit-identically.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::flow::{Trajectory, TrajectoryRow};
use crate::spharm::{GridField, GridSpec, SpectralField};

pub const TRAJECTORY_HEADER: &str =
    "step,t,dt,alpha,E,E_f,volume,u_min,u_max,residual_sup,residual_L2,max_cap_mass,symmetry_defect";

/// Renders a field snapshot in the SPHFIELD v1 format.
pub fn field_to_string(g: &GridField) -> String {
    let spec = g.spec();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "SPHFIELD v1 {} {} {}",
        spec.l_max(),
        spec.n_theta(),
        spec.n_phi()
    );
    for row in g.values().rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Parses a SPHFIELD v1 snapshot, rebuilding the grid from the header.
pub fn field_from_str(text: &str) -> Result<GridField> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "SPHFIELD" || tokens[1] != "v1" {
        return Err(Error::Parse(format!(
            "bad SPHFIELD header: `{header}`"
        )));
    }
    let l_max: usize = tokens[2]
        .parse()
        .map_err(|e| Error::Parse(format!("bad L_max: {e}")))?;
    let n_theta: usize = tokens[3]
        .parse()
        .map_err(|e| Error::Parse(format!("bad n_theta: {e}")))?;
    let n_phi: usize = tokens[4]
        .parse()
        .map_err(|e| Error::Parse(format!("bad n_phi: {e}")))?;
    let spec = GridSpec::from_counts(l_max, n_theta, n_phi)?;

    let mut values = Array2::zeros((n_theta, n_phi));
    for i in 0..n_theta {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("field file ends at row {i} of {n_theta}")))?;
        let mut count = 0;
        for (j, tok) in line.split_whitespace().enumerate() {
            if j >= n_phi {
                return Err(Error::Parse(format!("row {i} has more than {n_phi} values")));
            }
            values[[i, j]] = tok
                .parse()
                .map_err(|e| Error::Parse(format!("bad value at ({i}, {j}): {e}")))?;
            count += 1;
        }
        if count != n_phi {
            return Err(Error::Parse(format!(
                "row {i} has {count} values, expected {n_phi}"
            )));
        }
    }
    GridField::new(spec, values)
}

pub fn write_field(path: &Path, g: &GridField) -> Result<()> {
    std::fs::write(path, field_to_string(g))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField> {
    field_from_str(&std::fs::read_to_string(path)?)
}

/// Renders spectral coefficients in the SPHSPEC v1 format.
pub fn spectral_to_string(c: &SpectralField) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "SPHSPEC v1 {}", c.l_max());
    for l in 0..=c.l_max() {
        for m in -(l as i64)..=(l as i64) {
            let _ = writeln!(out, "{l} {m} {}", c.get(l, m));
        }
    }
    out
}

/// Parses a SPHSPEC v1 file; every (l, m) pair up to the band limit must
/// appear exactly once.
pub fn spectral_from_str(text: &str) -> Result<SpectralField> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty spectral file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 3 || tokens[0] != "SPHSPEC" || tokens[1] != "v1" {
        return Err(Error::Parse(format!("bad SPHSPEC header: `{header}`")));
    }
    let l_max: usize = tokens[2]
        .parse()
        .map_err(|e| Error::Parse(format!("bad L_max: {e}")))?;
    let mut c = SpectralField::zeros(l_max);
    let mut seen = vec![false; (l_max + 1) * (l_max + 1)];
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (l, m, a) = match (it.next(), it.next(), it.next()) {
            (Some(l), Some(m), Some(a)) => (l, m, a),
            _ => return Err(Error::Parse(format!("bad coefficient line: `{line}`"))),
        };
        let l: usize = l
            .parse()
            .map_err(|e| Error::Parse(format!("bad degree: {e}")))?;
        let m: i64 = m
            .parse()
            .map_err(|e| Error::Parse(format!("bad order: {e}")))?;
        let a: f64 = a
            .parse()
            .map_err(|e| Error::Parse(format!("bad coefficient: {e}")))?;
        if l > l_max || m.unsigned_abs() as usize > l {
            return Err(Error::Parse(format!("(l, m) = ({l}, {m}) out of range")));
        }
        let idx = l * l + (l as i64 + m) as usize;
        if seen[idx] {
            return Err(Error::Parse(format!("duplicate coefficient ({l}, {m})")));
        }
        seen[idx] = true;
        c.set(l, m, a);
    }
    if !seen.iter().all(|s| *s) {
        return Err(Error::Parse("missing coefficients in spectral file".into()));
    }
    Ok(c)
}

pub fn write_spectral(path: &Path, c: &SpectralField) -> Result<()> {
    std::fs::write(path, spectral_to_string(c))?;
    Ok(())
}

pub fn read_spectral(path: &Path) -> Result<SpectralField> {
    spectral_from_str(&std::fs::read_to_string(path)?)
}

/// Renders the trajectory CSV, one row per accepted step.
pub fn trajectory_to_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.dt,
            r.alpha,
            r.e,
            r.e_f,
            r.volume,
            r.u_min,
            r.u_max,
            r.residual_sup,
            r.residual_l2,
            r.max_cap_mass,
            r.symmetry_defect
        );
    }
    out
}

pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory".into()))?;
    if header != TRAJECTORY_HEADER {
        return Err(Error::Parse(format!("bad trajectory header: `{header}`")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(Error::Parse(format!(
                "trajectory row {k} has {} columns, expected 13",
                cols.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            cols[i]
                .parse()
                .map_err(|e| Error::Parse(format!("row {k}, column {i}: {e}")))
        };
        rows.push(TrajectoryRow {
            step: cols[0]
                .parse()
                .map_err(|e| Error::Parse(format!("row {k}, step: {e}")))?,
            t: num(1)?,
            dt: num(2)?,
            alpha: num(3)?,
            e: num(4)?,
            e_f: num(5)?,
            volume: num(6)?,
            u_min: num(7)?,
            u_max: num(8)?,
            residual_sup: num(9)?,
            residual_l2: num(10)?,
            max_cap_mass: num(11)?,
            symmetry_defect: num(12)?,
        });
    }
    Ok(rows)
}

pub fn write_trajectory(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    std::fs::write(path, trajectory_to_csv(rows))?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    trajectory_from_csv(&std::fs::read_to_string(path)?)
}

/// Convenience: a field built from explicit counts, for tests and tools.
pub fn field_with_counts(
    l_max: usize,
    n_theta: usize,
    n_phi: usize,
    values: Array2<f64>,
) -> Result<GridField> {
    let spec: Arc<GridSpec> = GridSpec::from_counts(l_max, n_theta, n_phi)?;
    GridField::new(spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spharm::{analyze, GridField};

    #[test]
    fn field_roundtrip_is_bit_exact() {
        let spec = GridSpec::build(6, 2.0).unwrap();
        let g = GridField::from_fn(&spec, |p| {
            1.0 + 0.25 * p[0] - 0.125 * p[1] * p[2] + 1e-17 * p[2]
        });
        let text = field_to_string(&g);
        let back = field_from_str(&text).unwrap();
        assert_eq!(back.spec().l_max(), 6);
        assert_eq!(g.values(), back.values());
    }

    #[test]
    fn field_parse_errors() {
        assert!(field_from_str("").is_err());
        assert!(field_from_str("SPHFIELD v2 1 2 4\n").is_err());
        assert!(field_from_str("SPHFIELD v1 1 2 4\n1 2 3 4\n").is_err()); // missing row
        let bad_width = "SPHFIELD v1 0 1 2\n1 2 3\n";
        assert!(field_from_str(bad_width).is_err());
    }

    #[test]
    fn spectral_roundtrip_is_bit_exact() {
        let spec = GridSpec::build(5, 2.0).unwrap();
        let g = GridField::from_fn(&spec, |p| 0.3 + p[0] * p[1] + 0.01 * p[2]);
        let c = analyze(&g);
        let text = spectral_to_string(&c);
        let back = spectral_from_str(&text).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn spectral_parse_rejects_duplicates_and_gaps() {
        assert!(spectral_from_str("SPHSPEC v1 0\n0 0 1\n0 0 2\n").is_err());
        assert!(spectral_from_str("SPHSPEC v1 1\n0 0 1\n").is_err());
        assert!(spectral_from_str("SPHSPEC v1 0\n1 0 1\n").is_err());
    }

    #[test]
    fn trajectory_roundtrip() {
        let rows = vec![
            TrajectoryRow {
                step: 0,
                t: 0.0,
                dt: 0.0,
                alpha: 1.0,
                e: 1.0,
                e_f: 0.866_025_403_784_438_6,
                volume: 1.0,
                u_min: 1.0,
                u_max: 1.0,
                residual_sup: 0.125,
                residual_l2: 0.03,
                max_cap_mass: 0.099,
                symmetry_defect: 0.0,
            },
            TrajectoryRow {
                step: 1,
                t: 1e-3,
                dt: 1e-3,
                alpha: 0.999_999_999_2,
                e: 0.97,
                e_f: 0.86,
                volume: 1.0 + 1e-12,
                u_min: 0.98,
                u_max: 1.01,
                residual_sup: 0.1,
                residual_l2: 0.02,
                max_cap_mass: 0.1,
                symmetry_defect: 1e-16,
            },
        ];
        let text = trajectory_to_csv(&rows);
        assert!(text.starts_with(TRAJECTORY_HEADER));
        let back = trajectory_from_csv(&text).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn trajectory_rejects_malformed_rows() {
        let text = format!("{TRAJECTORY_HEADER}\n1,2,3\n");
        assert!(trajectory_from_csv(&text).is_err());
        assert!(trajectory_from_csv("nope\n").is_err());
    }
}
