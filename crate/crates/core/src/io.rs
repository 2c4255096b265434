//! On-disk formats.
//!
//! * Grid CSV: header `x_signal_m,x_idler_m,counts`, one row per grid point
//!   (idler-major), positions with 9 significant digits, integer counts.
//! * Config sidecar: the [`OpticsConfig`] as JSON next to the grid, named
//!   `<stem>.config.json`.
//! * Results: [`OmegaResult`](crate::estimator::OmegaResult) and report rows
//!   as JSON; report tables as CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optics::{CoincidenceGrid, GridCounts, OpticsConfig};

pub const GRID_CSV_HEADER: &str = "x_signal_m,x_idler_m,counts";

/// Scientific notation with 9 significant digits.
pub fn fmt_position(x: f64) -> String {
    format!("{x:.8e}")
}

/// Scientific notation with 11 significant digits, for report tables.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.10e}")
}

pub fn grid_to_csv(grid: &CoincidenceGrid) -> String {
    let mut out = String::with_capacity(32 * grid.counts().len() + 32);
    out.push_str(GRID_CSV_HEADER);
    out.push('\n');
    for (i, &xi) in grid.x_idler().iter().enumerate() {
        for (s, &xs) in grid.x_signal().iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt_position(xs), fmt_position(xi), grid.get(s, i));
        }
    }
    out
}

/// Sidecar path holding the config snapshot of a grid file.
pub fn config_path_for(grid_path: &Path) -> PathBuf {
    let stem = grid_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "grid".into());
    grid_path.with_file_name(format!("{stem}.config.json"))
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("JSON serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Writes `<path>` and its config sidecar; returns the sidecar path.
pub fn write_grid(path: &Path, grid: &CoincidenceGrid) -> Result<PathBuf> {
    write_text(path, &grid_to_csv(grid))?;
    let cfg = config_path_for(path);
    write_json(&cfg, grid.config())?;
    Ok(cfg)
}

/// Reads a grid CSV, taking κ and the axis geometry from `config`.
///
/// Positions are reconstructed from the config (the CSV text carries only 9
/// digits) after checking that every row lies on the configured grid.
pub fn read_grid_csv(path: &Path, config: &OpticsConfig) -> Result<CoincidenceGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid_csv(&text, path, config)
}

pub fn read_grid(path: &Path, config_path: Option<&Path>) -> Result<CoincidenceGrid> {
    let cfg_path = config_path.map(Path::to_path_buf).unwrap_or_else(|| config_path_for(path));
    let config: OpticsConfig = read_json(&cfg_path)?;
    config.validate()?;
    read_grid_csv(path, &config)
}

pub fn parse_grid_csv(text: &str, path: &Path, config: &OpticsConfig) -> Result<CoincidenceGrid> {
    config.validate()?;
    let err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let axis = config.axis_positions();
    let points = axis.len();
    let locate = |x: f64| -> Option<usize> {
        let k = ((x - axis[0]) / config.grid_step).round();
        if k < 0.0 || k >= points as f64 {
            return None;
        }
        let k = k as usize;
        ((x - axis[k]).abs() <= 1e-6 * config.grid_step).then_some(k)
    };

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == GRID_CSV_HEADER => {}
        Some((_, h)) => {
            return Err(err(1, 1, format!("expected header `{GRID_CSV_HEADER}`, found `{}`", h.trim())))
        }
        None => return Err(err(1, 1, "empty grid file".into())),
    }
    let mut counts: Vec<Option<u64>> = vec![None; points * points];
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(line_no, 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let mut pos = [0usize; 2];
        for (col, field) in fields[..2].iter().enumerate() {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|e| err(line_no, col + 1, format!("bad position `{field}`: {e}")))?;
            pos[col] = locate(x).ok_or_else(|| {
                err(line_no, col + 1, format!("position {x} m is not on the configured grid"))
            })?;
        }
        let c: u64 = fields[2]
            .trim()
            .parse()
            .map_err(|e| err(line_no, 3, format!("bad count `{}`: {e}", fields[2])))?;
        let slot = &mut counts[pos[1] * points + pos[0]];
        if slot.is_some() {
            return Err(err(line_no, 1, "duplicate grid point".into()));
        }
        *slot = Some(c);
    }
    let filled = counts.iter().filter(|c| c.is_some()).count();
    if filled != counts.len() {
        return Err(err(
            text.lines().count(),
            1,
            format!("grid has {filled} of {} points", counts.len()),
        ));
    }
    CoincidenceGrid::new(
        axis.clone(),
        axis,
        counts.into_iter().map(Option::unwrap).collect(),
        config.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::simulate_scan;
    use crate::quantum::TwoQubitState;

    #[test]
    fn position_format_has_nine_digits() {
        assert_eq!(fmt_position(-1.2e-3), "-1.20000000e-3");
        assert_eq!(fmt_position(0.0), "0.00000000e0");
    }

    #[test]
    fn csv_round_trip() {
        let c = OpticsConfig { grid_points_per_axis: 3, ..OpticsConfig::default() };
        let g = simulate_scan(&TwoQubitState::bell_phi_plus(), &c).unwrap();
        let text = grid_to_csv(&g);
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("x_signal_m,x_idler_m,counts\n"));
        let back = parse_grid_csv(&text, Path::new("mem.csv"), &c).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn parse_errors_carry_location() {
        let c = OpticsConfig { grid_points_per_axis: 2, ..OpticsConfig::default() };
        let text = "x_signal_m,x_idler_m,counts\n-5.0e-5,-5.0e-5,3\n5.0e-5,-5.0e-5,x\n";
        match parse_grid_csv(text, Path::new("g.csv"), &c) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
        let text = "x_signal_m,x_idler_m,counts\n-5.0e-5,7.0e-5,3\n";
        match parse_grid_csv(text, Path::new("g.csv"), &c) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let text = "a,b\n";
        assert!(matches!(parse_grid_csv(text, Path::new("g.csv"), &c), Err(Error::Parse { line: 1, .. })));
        let text = "x_signal_m,x_idler_m,counts\n-5.0e-5,-5.0e-5,3\n";
        assert!(matches!(parse_grid_csv(text, Path::new("g.csv"), &c), Err(Error::Parse { .. })));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(config_path_for(Path::new("out/scan.csv")), PathBuf::from("out/scan.config.json"));
    }
}
