//! Run configuration and the report-producing commands behind the CLI.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cycle::{nchv_bound_bruteforce, quantum_omega, tsirelson_value, validate_n, CycleScenario};
use crate::error::{Error, Result};
use crate::estimator::{game_probability, omega_from_grid, OmegaResult};
use crate::io::{fmt_value, grid_to_csv, read_grid, to_json_string, write_grid, write_json, write_text};
use crate::optics::{simulate_scan, CoincidenceGrid, OpticsConfig};
use crate::quantum::TwoQubitState;

/// Significance (in σ_Ω) required to call a violation.
pub const VIOLATION_SIGMAS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bounds,
    Simulate,
    Analyze,
    Table1,
    Figure3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    PhiPlus,
    /// `p·φ⁺ + (1 − p)·I₄/4`
    Mixed { p: f64 },
}

impl StateSpec {
    pub fn build(&self) -> Result<TwoQubitState<f64>> {
        match *self {
            StateSpec::PhiPlus => Ok(TwoQubitState::bell_phi_plus()),
            StateSpec::Mixed { p } => TwoQubitState::werner(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub n_list: Vec<usize>,
    pub optics: OpticsConfig,
    pub state: StateSpec,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Table1,
            n_list: vec![4, 6, 8, 10, 12, 14],
            optics: OpticsConfig::default(),
            state: StateSpec::PhiPlus,
            output_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("n_list must not be empty"));
        }
        for &n in &self.n_list {
            validate_n(n)?;
        }
        if let StateSpec::Mixed { p } = self.state {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("mixing weight p = {p} outside [0, 1]")));
            }
        }
        self.optics.validate()
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: usize,
    pub nchv_bound: i64,
    pub nchv_maximizer: Vec<i8>,
    pub tsirelson_value: f64,
    pub quantum_omega: f64,
    /// Quantum minus noncontextual bound; grows towards 2 with n.
    pub gap: f64,
    /// The same gap in game-probability units, `gap/(2n)`; shrinks with n.
    pub probability_gap: f64,
}

/// NCHV bound by enumeration and the quantum bound, cross-checked against an
/// explicit operator evaluation.
pub fn cmd_bounds(n_list: &[usize]) -> Result<Vec<BoundsRow>> {
    let phi = TwoQubitState::bell_phi_plus();
    n_list
        .iter()
        .map(|&n| {
            let (nchv, arg) = nchv_bound_bruteforce(n)?;
            let t: f64 = tsirelson_value(n)?;
            let q: f64 = quantum_omega(&phi, &CycleScenario::make_ideal(n)?)?;
            if (t - q).abs() > 1e-9 {
                return Err(Error::Internal(format!(
                    "n = {n}: closed-form bound {t} disagrees with operator evaluation {q}"
                )));
            }
            if nchv != n as i64 - 2 {
                return Err(Error::Internal(format!("n = {n}: enumeration found {nchv}, expected {}", n - 2)));
            }
            Ok(BoundsRow {
                n,
                nchv_bound: nchv,
                nchv_maximizer: arg.values().to_vec(),
                tsirelson_value: t,
                quantum_omega: q,
                gap: t - nchv as f64,
                probability_gap: (t - nchv as f64) / (2.0 * n as f64),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub omega_exp: f64,
    pub sigma_omega: f64,
    pub omega_exp_bd: f64,
    pub omega_max_bd: f64,
    pub nchv_bound: f64,
    pub violation_sigmas: f64,
    pub violated: bool,
}

impl From<&OmegaResult> for Table1Row {
    fn from(r: &OmegaResult) -> Self {
        Self {
            n: r.n,
            omega_exp: r.omega,
            sigma_omega: r.sigma_omega,
            omega_exp_bd: r.omega_bd_angles,
            omega_max_bd: r.quantum_bound,
            nchv_bound: r.nchv_bound,
            violation_sigmas: r.violation_sigmas(),
            violated: r.violates(VIOLATION_SIGMAS),
        }
    }
}

/// Simulated scan for `config`'s state and optics.
pub fn simulate(config: &RunConfig) -> Result<CoincidenceGrid> {
    config.validate()?;
    simulate_scan(&config.state.build()?, &config.optics)
}

/// One scan, analysed for every requested n.
pub fn analyze_grid(grid: &CoincidenceGrid, n_list: &[usize]) -> Result<Vec<OmegaResult>> {
    n_list.iter().map(|&n| omega_from_grid(grid, n)).collect()
}

pub fn cmd_table1(config: &RunConfig) -> Result<Vec<Table1Row>> {
    let grid = simulate(config)?;
    Ok(analyze_grid(&grid, &config.n_list)?.iter().map(Table1Row::from).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    pub n: usize,
    pub experimental: f64,
    pub nchv: f64,
    pub quantum: f64,
}

/// Game probabilities `(Ω + n)/(2n)` for given experimental Ω values.
pub fn figure3_from_omegas(points: &[(usize, f64)]) -> Result<Vec<Figure3Row>> {
    points
        .iter()
        .map(|&(n, omega)| {
            validate_n(n)?;
            Ok(Figure3Row {
                n,
                experimental: game_probability(omega, n),
                nchv: game_probability((n - 2) as f64, n),
                quantum: game_probability(tsirelson_value(n)?, n),
            })
        })
        .collect()
}

pub fn cmd_figure3(config: &RunConfig) -> Result<Vec<Figure3Row>> {
    let rows = cmd_table1(config)?;
    figure3_from_omegas(&rows.iter().map(|r| (r.n, r.omega_exp)).collect::<Vec<_>>())
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("n,nchv_bound,tsirelson_value,quantum_omega,gap,probability_gap\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            r.nchv_bound,
            fmt_value(r.tsirelson_value),
            fmt_value(r.quantum_omega),
            fmt_value(r.gap),
            fmt_value(r.probability_gap)
        );
    }
    out
}

pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from(
        "n,omega_exp,sigma_omega,omega_exp_bd,omega_max_bd,nchv_bound,violation_sigmas,violated\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            fmt_value(r.omega_exp),
            fmt_value(r.sigma_omega),
            fmt_value(r.omega_exp_bd),
            fmt_value(r.omega_max_bd),
            fmt_value(r.nchv_bound),
            fmt_value(r.violation_sigmas),
            r.violated
        );
    }
    out
}

pub fn figure3_csv(rows: &[Figure3Row]) -> String {
    let mut out = String::from("n,experimental,nchv,quantum\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.n,
            fmt_value(r.experimental),
            fmt_value(r.nchv),
            fmt_value(r.quantum)
        );
    }
    out
}

pub fn omega_results_csv(results: &[OmegaResult]) -> String {
    let mut out = String::from(
        "n,omega,sigma_omega,nchv_bound,quantum_bound,omega_bd_angles,game_probability\n",
    );
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            fmt_value(r.omega),
            fmt_value(r.sigma_omega),
            fmt_value(r.nchv_bound),
            fmt_value(r.quantum_bound),
            fmt_value(r.omega_bd_angles),
            fmt_value(r.game_probability)
        );
    }
    out
}

/// Human-readable Table 1 layout.
pub fn table1_text(rows: &[Table1Row]) -> String {
    let mut out = String::from(" n   Ω_exp ± σ          Ω_exp^bd   Ω_max^bd   NCHV   violation\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>2}   {:>7.3} ± {:<7.3}  {:>8.3}   {:>8.3}   {:>4}   {:>6.1}σ{}",
            r.n,
            r.omega_exp,
            r.sigma_omega,
            r.omega_exp_bd,
            r.omega_max_bd,
            r.nchv_bound,
            r.violation_sigmas,
            if r.violated { "" } else { "  (not significant)" }
        );
    }
    out
}

pub fn bounds_text(rows: &[BoundsRow]) -> String {
    let mut out = String::from(" n   NCHV   quantum     gap\n");
    for r in rows {
        let _ = writeln!(out, "{:>2}   {:>4}   {:>7.4}   {:>7.4}", r.n, r.nchv_bound, r.tsirelson_value, r.gap);
    }
    out
}

/// Writes `<dir>/<stem>.csv` and/or `<dir>/<stem>.json`.
pub fn write_report<T: Serialize>(
    config: &RunConfig,
    stem: &str,
    rows: &T,
    csv: &str,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if config.wants(Format::Csv) {
        let p = config.output_dir.join(format!("{stem}.csv"));
        write_text(&p, csv)?;
        written.push(p);
    }
    if config.wants(Format::Json) {
        let p = config.output_dir.join(format!("{stem}.json"));
        write_json(&p, rows)?;
        written.push(p);
    }
    Ok(written)
}

/// Simulates a scan and writes `scan.csv` plus its config sidecar.
pub fn cmd_simulate(config: &RunConfig) -> Result<(CoincidenceGrid, PathBuf)> {
    let grid = simulate(config)?;
    let path = config.output_dir.join("scan.csv");
    write_grid(&path, &grid)?;
    Ok((grid, path))
}

/// Analyses a grid file; writes one `omega_n<N>.json` per n (and a CSV
/// summary when requested).
pub fn cmd_analyze(
    grid_path: &Path,
    config_path: Option<&Path>,
    config: &RunConfig,
) -> Result<Vec<OmegaResult>> {
    if config.n_list.is_empty() {
        return Err(Error::invalid("n_list must not be empty"));
    }
    let grid = read_grid(grid_path, config_path)?;
    let results = analyze_grid(&grid, &config.n_list)?;
    if config.wants(Format::Json) {
        for r in &results {
            write_json(&config.output_dir.join(format!("omega_n{}.json", r.n)), r)?;
        }
    }
    if config.wants(Format::Csv) {
        write_text(&config.output_dir.join("omega_summary.csv"), &omega_results_csv(&results))?;
    }
    Ok(results)
}

/// In-process equivalent of simulate followed by analyze, serialized the way
/// the files are.
pub fn pipeline_artifacts(config: &RunConfig) -> Result<(String, Vec<String>)> {
    let grid = simulate(config)?;
    let results = analyze_grid(&grid, &config.n_list)?;
    let json = results.iter().map(to_json_string).collect::<Result<Vec<_>>>()?;
    Ok((grid_to_csv(&grid), json))
}
