//! From a coincidence grid to Ω with an error bar.
//!
//! Each observable is mapped to the grid position whose measurement angle
//! `κx` is nearest to the ideal setting, together with a partner position
//! roughly π away that implements the orthogonal projector. A context
//! correlation is then the four-count ratio
//!
//! ```text
//! E = [C(θ_i, θ_s) + C(θ_i−π, θ_s−π) − C(θ_i−π, θ_s) − C(θ_i, θ_s−π)] / (sum of the four)
//! ```

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::cycle::{
    omega_bd_from_angles, omega_from_correlations, signal_idler_of_context, tsirelson_value,
    validate_n, CycleScenario, Party,
};
use crate::error::{Error, Result};
use crate::optics::{GridCounts, OpticsConfig};
use crate::scalar::wrap_angle;

/// Slack for comparing angles that should coincide on commensurate grids.
const ANGLE_SLACK: f64 = 1e-9;

/// Measurement angle implemented by a detector at `x`.
pub fn angle_of_position(x: f64, config: &OpticsConfig) -> f64 {
    config.kappa() * x
}

/// Grid position chosen for one observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedSetting {
    pub index: usize,
    pub party: Party,
    /// Target angle on this party, wrapped into (−π, π].
    pub ideal_angle: f64,
    pub position_index: usize,
    pub position_m: f64,
    pub realized_angle: f64,
    /// Grid index implementing the orthogonal outcome (angle ± π).
    pub partner_index: usize,
    pub partner_angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SettingsSelection {
    pub n: usize,
    pub settings: Vec<SelectedSetting>,
}

impl SettingsSelection {
    pub fn realized_angles(&self) -> Vec<f64> {
        self.settings.iter().map(|s| s.realized_angle).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.settings.iter().map(|s| s.position_m).collect()
    }
}

/// The partner of position `k`. The signal photon uses `κx − π` and the
/// idler `κx + π` (the idler angle enters with opposite sign), so that the
/// rounding offsets of the two partners cancel in `θ_s + θ_i`. With
/// `allow_other_side` the opposite offset is tried when the preferred one is
/// off the grid.
fn partner_of(
    axis: &[f64],
    kappa: f64,
    step_angle: f64,
    k: usize,
    party: Party,
    allow_other_side: bool,
) -> Option<usize> {
    let theta = kappa * axis[k];
    let sides = match party {
        Party::Signal => [theta - PI, theta + PI],
        Party::Idler => [theta + PI, theta - PI],
    };
    let tried = if allow_other_side { 2 } else { 1 };
    sides[..tried].iter().find_map(|&target| {
        let (best, dist) = axis
            .iter()
            .enumerate()
            .map(|(m, &x)| (m, (kappa * x - target).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        (dist <= 0.5 * step_angle + ANGLE_SLACK).then_some(best)
    })
}

/// Position nearest (in wrapped angle) to `target` among those with a
/// partner; ties go to smaller `|x|`. Returns (index, partner, distance).
fn nearest_with_partner(
    axis: &[f64],
    kappa: f64,
    step_angle: f64,
    target: f64,
    party: Party,
    allow_other_side: bool,
) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (k, &x) in axis.iter().enumerate() {
        let Some(partner) = partner_of(axis, kappa, step_angle, k, party, allow_other_side) else {
            continue;
        };
        let dist = wrap_angle(kappa * x - target).abs();
        let better = match best {
            None => true,
            Some((bk, _, bd)) => {
                dist < bd - ANGLE_SLACK || ((dist - bd).abs() <= ANGLE_SLACK && x.abs() < axis[bk].abs())
            }
        };
        if better {
            best = Some((k, partner, dist));
        }
    }
    best
}

/// Nearest-available grid positions for the ideal `n`-cycle settings.
pub fn select_settings<G: GridCounts + ?Sized>(n: usize, grid: &G) -> Result<SettingsSelection> {
    validate_n(n)?;
    let config = grid.config();
    let kappa = config.kappa();
    let step_angle = config.grid_angle_step();
    let spacing = TAU / n as f64;
    if spacing < step_angle * (1.0 - ANGLE_SLACK) {
        return Err(Error::Resolution(format!(
            "n = {n}: same-party angular separation {spacing:.4} rad is below the grid resolution {step_angle:.4} rad"
        )));
    }
    let ideal = CycleScenario::<f64>::make_ideal(n)?;
    let mut settings = Vec::with_capacity(n);
    for s in ideal.settings() {
        let axis = match s.party {
            Party::Signal => grid.x_signal(),
            Party::Idler => grid.x_idler(),
        };
        let target = wrap_angle(s.angle);
        let within = |c: &(usize, usize, f64)| c.2 <= 0.5 * step_angle + ANGLE_SLACK;
        let best = nearest_with_partner(axis, kappa, step_angle, target, s.party, false)
            .filter(within)
            .or_else(|| nearest_with_partner(axis, kappa, step_angle, target, s.party, true));
        let Some((k, partner, dist)) = best else {
            return Err(Error::InsufficientCoverage(format!(
                "no {:?} position has an on-grid partner π away",
                s.party
            )));
        };
        if dist > 0.5 * step_angle + ANGLE_SLACK {
            return Err(Error::InsufficientCoverage(format!(
                "setting {} ({:?}, angle {target:.4} rad) is {dist:.4} rad from the nearest usable position",
                s.index, s.party
            )));
        }
        settings.push(SelectedSetting {
            index: s.index,
            party: s.party,
            ideal_angle: target,
            position_index: k,
            position_m: axis[k],
            realized_angle: angle_of_position(axis[k], config),
            partner_index: partner,
            partner_angle: angle_of_position(axis[partner], config),
        });
    }
    for party in [Party::Signal, Party::Idler] {
        let mut used: Vec<(usize, usize)> = settings
            .iter()
            .filter(|s| s.party == party)
            .map(|s| (s.position_index, s.index))
            .collect();
        used.sort_unstable();
        if let Some(w) = used.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Resolution(format!(
                "n = {n}: settings {} and {} of the {party:?} photon map to the same grid point",
                w[0].1, w[1].1
            )));
        }
    }
    Ok(SettingsSelection { n, settings })
}

/// The four grid points of one context and their counts.
///
/// Order of `coords`/`counts`: `(θ_s, θ_i)`, `(θ_s−π, θ_i−π)`, `(θ_s, θ_i−π)`,
/// `(θ_s−π, θ_i)`; each coordinate is `(signal index, idler index)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextMeasurement {
    pub context: usize,
    pub coords: [(usize, usize); 4],
    pub counts: [f64; 4],
    /// (θ_s, θ_i)
    pub realized: (f64, f64),
}

impl ContextMeasurement {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Correlation is ±1 exactly (one pair of counts is empty).
    pub fn is_degenerate(&self) -> bool {
        let [pp, mm, pm, mp] = self.counts;
        (pp + mm == 0.0 || pm + mp == 0.0) && self.total() > 0.0
    }
}

pub fn context_measurement<G: GridCounts + ?Sized>(
    grid: &G,
    selection: &SettingsSelection,
    context: usize,
) -> ContextMeasurement {
    let (si, ii) = signal_idler_of_context(selection.n, context);
    let s = &selection.settings[si];
    let i = &selection.settings[ii];
    let coords = [
        (s.position_index, i.position_index),
        (s.partner_index, i.partner_index),
        (s.position_index, i.partner_index),
        (s.partner_index, i.position_index),
    ];
    let counts = coords.map(|(a, b)| grid.count(a, b));
    ContextMeasurement {
        context,
        coords,
        counts,
        realized: (s.realized_angle, i.realized_angle),
    }
}

/// Four-count correlation estimate.
pub fn correlation_from_counts(m: &ContextMeasurement) -> Result<f64> {
    let [pp, mm, pm, mp] = m.counts;
    let total = pp + mm + pm + mp;
    if !(total > 0.0) {
        return Err(Error::UndefinedCorrelation { context: m.context });
    }
    Ok(((pp + mm - pm - mp) / total).clamp(-1.0, 1.0))
}

/// One-sigma error of [`correlation_from_counts`] for independent Poisson
/// counts: `σ² = (1 − E²)/S`. Degenerate contexts (E = ±1) report `1/S`.
pub fn correlation_error(m: &ContextMeasurement) -> Result<f64> {
    let e = correlation_from_counts(m)?;
    let total = m.total();
    if m.is_degenerate() {
        return Ok(1.0 / total);
    }
    Ok(((1.0 - e * e).max(0.0) / total).sqrt())
}

/// `(Ω + n)/(2n)`: success probability in the n-cycle prediction game.
pub fn game_probability(omega: f64, n: usize) -> f64 {
    (omega + n as f64) / (2.0 * n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaResult {
    pub n: usize,
    pub correlations: Vec<f64>,
    pub correlation_errors: Vec<f64>,
    pub omega: f64,
    pub sigma_omega: f64,
    pub nchv_bound: f64,
    pub quantum_bound: f64,
    pub omega_bd_angles: f64,
    pub game_probability: f64,
    pub realized_angles: Vec<f64>,
    pub selected_positions: Vec<f64>,
    pub degenerate_contexts: Vec<usize>,
}

impl OmegaResult {
    /// Distance of Ω above the noncontextual bound in units of σ_Ω.
    pub fn violation_sigmas(&self) -> f64 {
        let excess = self.omega - self.nchv_bound;
        if self.sigma_omega > 0.0 {
            excess / self.sigma_omega
        } else if excess > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn violates(&self, sigmas: f64) -> bool {
        self.violation_sigmas() > sigmas
    }
}

/// Ω with its propagated error from the counts on `grid`.
pub fn omega_from_grid<G: GridCounts + ?Sized>(grid: &G, n: usize) -> Result<OmegaResult> {
    let selection = select_settings(n, grid)?;
    omega_from_selection(grid, &selection)
}

pub fn omega_from_selection<G: GridCounts + ?Sized>(
    grid: &G,
    selection: &SettingsSelection,
) -> Result<OmegaResult> {
    let n = selection.n;
    let measurements: Vec<_> = (0..n).map(|ctx| context_measurement(grid, selection, ctx)).collect();
    let correlations = measurements
        .iter()
        .map(correlation_from_counts)
        .collect::<Result<Vec<_>>>()?;
    let correlation_errors = measurements
        .iter()
        .map(correlation_error)
        .collect::<Result<Vec<_>>>()?;
    let omega = omega_from_correlations(&correlations);
    let sigma_omega = correlation_errors.iter().map(|s| s * s).sum::<f64>().sqrt();
    let realized_angles = selection.realized_angles();
    Ok(OmegaResult {
        n,
        omega,
        sigma_omega,
        nchv_bound: (n - 2) as f64,
        quantum_bound: tsirelson_value(n)?,
        omega_bd_angles: omega_bd_from_angles(&realized_angles)?,
        game_probability: game_probability(omega, n),
        realized_angles,
        selected_positions: selection.positions(),
        degenerate_contexts: measurements
            .iter()
            .filter(|m| m.is_degenerate())
            .map(|m| m.context)
            .collect(),
        correlations,
        correlation_errors,
    })
}

/// Variance of Ω for ideal detectors at the optimal angles,
/// `n·sin²(π/n)/N`, where `N` is the four-count total of each correlation.
pub fn ideal_variance(n: usize, total_counts: i64) -> Result<f64> {
    validate_n(n)?;
    if total_counts <= 0 {
        return Err(Error::invalid(format!("total counts must be positive, got {total_counts}")));
    }
    let nf = n as f64;
    let s = (PI / nf).sin();
    let v = nf * s * s / total_counts as f64;
    debug_assert!(v <= ideal_variance_bound(n, total_counts)?);
    Ok(v)
}

/// `π²/(nN)`, the upper bound of [`ideal_variance`].
pub fn ideal_variance_bound(n: usize, total_counts: i64) -> Result<f64> {
    validate_n(n)?;
    if total_counts <= 0 {
        return Err(Error::invalid(format!("total counts must be positive, got {total_counts}")));
    }
    Ok(PI * PI / (n as f64 * total_counts as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{expected_grid, OpticsConfig};
    use crate::quantum::TwoQubitState;

    fn measurement(counts: [f64; 4]) -> ContextMeasurement {
        ContextMeasurement { context: 0, coords: [(0, 0); 4], counts, realized: (0.0, 0.0) }
    }

    #[test]
    fn angle_mapping() {
        let c = OpticsConfig::default();
        assert_eq!(angle_of_position(0.0, &c), 0.0);
        assert!((angle_of_position(PI / c.kappa(), &c) - PI).abs() < 1e-15);
        assert!((angle_of_position(100e-6, &c) - 0.414).abs() < 1e-3);
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(correlation_from_counts(&measurement([100.0, 100.0, 0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(correlation_from_counts(&measurement([50.0; 4])).unwrap(), 0.0);
        assert!(matches!(
            correlation_from_counts(&measurement([0.0; 4])),
            Err(Error::UndefinedCorrelation { context: 0 })
        ));
    }

    #[test]
    fn correlation_error_examples() {
        let n = 400.0;
        let s = correlation_error(&measurement([n; 4])).unwrap();
        assert!((s - 1.0 / (4.0 * n).sqrt()).abs() < 1e-15);
        let m = measurement([100.0, 100.0, 0.0, 0.0]);
        assert!(m.is_degenerate());
        assert_eq!(correlation_error(&m).unwrap(), 1.0 / 200.0);
        let a = correlation_error(&measurement([120.0, 90.0, 40.0, 31.0])).unwrap();
        let b = correlation_error(&measurement([240.0, 180.0, 80.0, 62.0])).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn game_probability_at_nchv_bound() {
        for n in (4..=14).step_by(2) {
            let p = game_probability((n - 2) as f64, n);
            assert!((p - (n as f64 - 1.0) / n as f64).abs() < 1e-15);
        }
        assert_eq!(game_probability(-4.0, 4), 0.0);
        assert_eq!(game_probability(4.0, 4), 1.0);
    }

    #[test]
    fn ideal_variance_examples() {
        assert!((ideal_variance(4, 1000).unwrap() - 0.002).abs() < 1e-15);
        for n in (4..=40).step_by(2) {
            assert!(ideal_variance(n, 777).unwrap() <= ideal_variance_bound(n, 777).unwrap());
        }
        let n = 10_000;
        let ratio = ideal_variance(n, 50).unwrap() / ideal_variance_bound(n, 50).unwrap();
        assert!((ratio - 1.0).abs() < 1e-6);
        assert!(ideal_variance(4, 0).is_err());
        assert!(ideal_variance(4, -3).is_err());
    }

    #[test]
    fn default_grid_n4_follows_chsh_example() {
        let c = OpticsConfig::default();
        let g = expected_grid(&TwoQubitState::bell_phi_plus(), &c).unwrap();
        let sel = select_settings(4, &g).unwrap();
        let step = c.grid_angle_step();
        let ideal = [0.0, -PI / 4.0, PI / 2.0, -3.0 * PI / 4.0];
        for (s, want) in sel.settings.iter().zip(ideal) {
            assert!((s.realized_angle - want).abs() <= 0.5 * step + 1e-12);
        }
        assert_eq!(
            sel.settings.iter().map(|s| s.position_index).collect::<Vec<_>>(),
            vec![12, 10, 16, 6]
        );
    }

    #[test]
    fn resolution_cutoff_on_default_grid() {
        let c = OpticsConfig::default();
        let g = expected_grid(&TwoQubitState::bell_phi_plus(), &c).unwrap();
        assert!(select_settings(14, &g).is_ok());
        assert!(matches!(select_settings(16, &g), Err(Error::Resolution(_))));
    }

    #[test]
    fn commensurate_grid_has_no_rounding() {
        let base = OpticsConfig::default();
        let c = OpticsConfig {
            grid_step: PI / (base.kappa() * 8.0),
            grid_points_per_axis: 17,
            ..base
        };
        let g = expected_grid(&TwoQubitState::bell_phi_plus(), &c).unwrap();
        let sel = select_settings(4, &g).unwrap();
        for s in &sel.settings {
            assert!((s.realized_angle - s.ideal_angle).abs() < 1e-12);
            let offset = wrap_angle(s.partner_angle - s.realized_angle - PI);
            assert!(offset.abs() < 1e-12);
        }
    }

    #[test]
    fn small_grid_lacks_coverage() {
        let c = OpticsConfig { grid_points_per_axis: 5, ..OpticsConfig::default() };
        let g = expected_grid(&TwoQubitState::bell_phi_plus(), &c).unwrap();
        assert!(matches!(select_settings(4, &g), Err(Error::InsufficientCoverage(_))));
    }

    #[test]
    fn omega_result_invariants() {
        let c = OpticsConfig::default();
        let g = expected_grid(&TwoQubitState::bell_phi_plus(), &c).unwrap();
        for n in (4..=14).step_by(2) {
            let r = omega_from_grid(&g, n).unwrap();
            let sum: f64 = r.correlations[..n - 1].iter().sum::<f64>() - r.correlations[n - 1];
            assert!((r.omega - sum).abs() < 1e-12);
            assert!((r.game_probability - (r.omega + n as f64) / (2.0 * n as f64)).abs() < 1e-15);
            assert_eq!(r.nchv_bound, (n - 2) as f64);
            assert!(r.omega.abs() <= n as f64);
            assert!(r.degenerate_contexts.is_empty());
        }
    }
}
