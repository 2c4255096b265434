//! Far-field double-slit coincidence model.
//!
//! A detector at transverse position `x` in the focal plane of the Fourier
//! lens implements, on the which-slit qubit of its photon,
//!
//! ```text
//! Π(x) = A(x) · { I + V·[cos(κx) σ_x + sin(κx) σ_y] },   κ = k_p d / (2 f),  V = sinc(κ b)
//! ```
//!
//! and the coincidence rate at `(x_s, x_i)` is proportional to
//! `Tr[ρ Π_s(x_s) ⊗ Π_i(x_i)]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{pauli_plane_observable, ComplexMatrix, TwoQubitState};
use crate::scalar::sinc;

/// Physical and acquisition parameters of the scan. Field names in JSON carry
/// their SI unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsConfig {
    #[serde(rename = "lambda_pump_m")]
    pub lambda_pump: f64,
    #[serde(rename = "slit_half_width_m")]
    pub slit_half_width: f64,
    #[serde(rename = "slit_separation_m")]
    pub slit_separation: f64,
    #[serde(rename = "detector_half_width_m")]
    pub detector_half_width: f64,
    #[serde(rename = "focal_length_m")]
    pub focal_length: f64,
    pub grid_points_per_axis: usize,
    #[serde(rename = "grid_step_m")]
    pub grid_step: f64,
    #[serde(rename = "grid_center_m")]
    pub grid_center: f64,
    #[serde(rename = "acquisition_time_s")]
    pub acquisition_time: f64,
    /// Counts per second when the operator expectation (envelopes included)
    /// equals one.
    #[serde(rename = "rate_scale_per_s")]
    pub rate_scale: f64,
    pub flat_envelope: bool,
    pub seed: u64,
}

/// Rate scale giving σ_Ω ≈ 0.02 at n = 4 with the default optics and a 30 s
/// acquisition per grid point (≈ 6×10³ counts per correlation term).
pub const DEFAULT_RATE_SCALE: f64 = 5.0e-4;

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            lambda_pump: 405e-9,
            slit_half_width: 40e-6,
            slit_separation: 160e-6,
            detector_half_width: 100e-6,
            focal_length: 0.30,
            grid_points_per_axis: 25,
            grid_step: 100e-6,
            grid_center: 0.0,
            acquisition_time: 30.0,
            rate_scale: DEFAULT_RATE_SCALE,
            flat_envelope: false,
            seed: 1,
        }
    }
}

impl OpticsConfig {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("lambda_pump_m", self.lambda_pump),
            ("slit_half_width_m", self.slit_half_width),
            ("slit_separation_m", self.slit_separation),
            ("detector_half_width_m", self.detector_half_width),
            ("focal_length_m", self.focal_length),
            ("grid_step_m", self.grid_step),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be a positive length, got {v}")));
            }
        }
        if self.grid_points_per_axis < 2 {
            return Err(Error::invalid("grid_points_per_axis must be at least 2"));
        }
        if !self.grid_center.is_finite() {
            return Err(Error::invalid("grid_center_m must be finite"));
        }
        if !(self.acquisition_time.is_finite() && self.acquisition_time >= 0.0) {
            return Err(Error::invalid("acquisition_time_s must be finite and non-negative"));
        }
        if !(self.rate_scale.is_finite() && self.rate_scale >= 0.0) {
            return Err(Error::invalid("rate_scale_per_s must be finite and non-negative"));
        }
        Ok(())
    }

    /// Pump wavenumber `2π/λ_p`.
    pub fn pump_wavenumber(&self) -> f64 {
        std::f64::consts::TAU / self.lambda_pump
    }

    /// Angle per unit detector displacement, `k_p d / (2 f)`.
    pub fn kappa(&self) -> f64 {
        self.pump_wavenumber() * self.slit_separation / (2.0 * self.focal_length)
    }

    /// Single-photon fringe visibility `sinc(κ b)`.
    pub fn visibility(&self) -> f64 {
        sinc(self.kappa() * self.detector_half_width)
    }

    /// Measurement-angle increment between neighbouring grid points.
    pub fn grid_angle_step(&self) -> f64 {
        self.kappa() * self.grid_step
    }

    /// Detector positions along one scan axis, strictly increasing.
    pub fn axis_positions(&self) -> Vec<f64> {
        let mid = (self.grid_points_per_axis as f64 - 1.0) / 2.0;
        (0..self.grid_points_per_axis)
            .map(|k| self.grid_center + (k as f64 - mid) * self.grid_step)
            .collect()
    }
}

/// Diffraction envelope `A(x) = (k_p a / 2π f) · sinc²(κ a x / d)`, or 1 when
/// the envelope is switched off.
pub fn diffraction_envelope(x: f64, config: &OpticsConfig) -> f64 {
    if config.flat_envelope {
        return 1.0;
    }
    let a = config.slit_half_width;
    let prefactor = config.pump_wavenumber() * a / (std::f64::consts::TAU * config.focal_length);
    let s = sinc(config.kappa() * a * x / config.slit_separation);
    prefactor * s * s
}

/// Envelope and qubit part `I + V·O(κx)` of the detection operator at `x`.
pub fn detection_operator(x: f64, config: &OpticsConfig) -> (f64, ComplexMatrix<f64>) {
    let o = pauli_plane_observable(config.kappa() * x)
        .unwrap_or_else(|_| ComplexMatrix::zeros(2));
    let op = &ComplexMatrix::identity(2) + &o.scale(config.visibility());
    (diffraction_envelope(x, config), op)
}

/// Expected coincidence rate (counts per second) at `(x_s, x_i)`.
pub fn coincidence_rate(
    state: &TwoQubitState<f64>,
    x_signal: f64,
    x_idler: f64,
    config: &OpticsConfig,
) -> Result<f64> {
    let (env_s, op_s) = detection_operator(x_signal, config);
    let (env_i, op_i) = detection_operator(x_idler, config);
    let value = state.expectation(&op_s, &op_i)?;
    // Tr[ρ(PSD ⊗ PSD)] ≥ 0; clip round-off at the fringe minima.
    Ok(config.rate_scale * env_s * env_i * value.max(0.0))
}

/// Count data indexed by grid position, either sampled counts or noiseless
/// expected values.
pub trait GridCounts {
    fn x_signal(&self) -> &[f64];
    fn x_idler(&self) -> &[f64];
    fn config(&self) -> &OpticsConfig;
    fn count(&self, signal_index: usize, idler_index: usize) -> f64;
}

/// Sampled coincidence counts of a detector scan.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceGrid {
    x_signal: Vec<f64>,
    x_idler: Vec<f64>,
    /// idler-major: `counts[i * x_signal.len() + s]`
    counts: Vec<u64>,
    config: OpticsConfig,
}

impl CoincidenceGrid {
    pub fn new(
        x_signal: Vec<f64>,
        x_idler: Vec<f64>,
        counts: Vec<u64>,
        config: OpticsConfig,
    ) -> Result<Self> {
        config.validate()?;
        if counts.len() != x_signal.len() * x_idler.len() {
            return Err(Error::invalid(format!(
                "count array has {} entries for a {}x{} grid",
                counts.len(),
                x_idler.len(),
                x_signal.len()
            )));
        }
        for (name, axis) in [("x_signal", &x_signal), ("x_idler", &x_idler)] {
            check_axis(name, axis, config.grid_step)?;
        }
        Ok(Self { x_signal, x_idler, counts, config })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, signal_index: usize, idler_index: usize) -> u64 {
        self.counts[idler_index * self.x_signal.len() + signal_index]
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn check_axis(name: &str, axis: &[f64], step: f64) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::invalid(format!("{name} needs at least two positions")));
    }
    for w in axis.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > 1e-6 * step {
            return Err(Error::invalid(format!(
                "{name} positions must increase uniformly by {step} m (found step {d})"
            )));
        }
    }
    Ok(())
}

impl GridCounts for CoincidenceGrid {
    fn x_signal(&self) -> &[f64] {
        &self.x_signal
    }
    fn x_idler(&self) -> &[f64] {
        &self.x_idler
    }
    fn config(&self) -> &OpticsConfig {
        &self.config
    }
    fn count(&self, s: usize, i: usize) -> f64 {
        self.get(s, i) as f64
    }
}

/// Noiseless expected counts `μ = rate · T`; real-valued, for oracle checks.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedGrid {
    x_signal: Vec<f64>,
    x_idler: Vec<f64>,
    means: Vec<f64>,
    config: OpticsConfig,
}

impl ExpectedGrid {
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn get(&self, signal_index: usize, idler_index: usize) -> f64 {
        self.means[idler_index * self.x_signal.len() + signal_index]
    }
}

impl GridCounts for ExpectedGrid {
    fn x_signal(&self) -> &[f64] {
        &self.x_signal
    }
    fn x_idler(&self) -> &[f64] {
        &self.x_idler
    }
    fn config(&self) -> &OpticsConfig {
        &self.config
    }
    fn count(&self, s: usize, i: usize) -> f64 {
        self.get(s, i)
    }
}

/// Mean counts per grid point for `state`.
pub fn expected_grid(state: &TwoQubitState<f64>, config: &OpticsConfig) -> Result<ExpectedGrid> {
    config.validate()?;
    let xs = config.axis_positions();
    let xi = xs.clone();
    let mut means = Vec::with_capacity(xs.len() * xi.len());
    for &x_i in &xi {
        for &x_s in &xs {
            let mu = coincidence_rate(state, x_s, x_i, config)? * config.acquisition_time;
            if !mu.is_finite() {
                return Err(Error::Internal(format!(
                    "configuration produced a non-finite mean count at ({x_s}, {x_i})"
                )));
            }
            means.push(mu);
        }
    }
    Ok(ExpectedGrid { x_signal: xs, x_idler: xi, means, config: config.clone() })
}

/// RNG stream for grid point (idler row `i`, signal column `j`).
pub fn point_rng(seed: u64, i: usize, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((i as u64) << 32) | j as u64);
    rng
}

/// Draws one Poisson count with mean `mu`.
pub fn sample_poisson(mu: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if mu == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mu)
        .map_err(|e| Error::Internal(format!("cannot sample Poisson({mu}): {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Poisson-sampled scan. Each point draws from its own `(seed, i, j)`
/// stream, so the result does not depend on thread scheduling.
pub fn simulate_scan(state: &TwoQubitState<f64>, config: &OpticsConfig) -> Result<CoincidenceGrid> {
    let expected = expected_grid(state, config)?;
    let cols = expected.x_signal.len();
    let counts = expected
        .means
        .par_iter()
        .enumerate()
        .map(|(k, &mu)| {
            let mut rng = point_rng(config.seed, k / cols, k % cols);
            sample_poisson(mu, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    CoincidenceGrid::new(expected.x_signal, expected.x_idler, counts, expected.config)
}
