//! The even n-cycle scenario: observables `O_0 … O_{n−1}` where `O_j` and
//! `O_{j+1 mod n}` are jointly measurable, and the inequality
//!
//! ```text
//! Ω = Σ_{j=0}^{n−2} ⟨O_j O_{j+1}⟩ − ⟨O_{n−1} O_0⟩ ≤ n − 2
//! ```
//!
//! Even `j` is measured on the signal photon, odd `j` on the idler, so every
//! context pairs the two photons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{pauli_plane_observable, TwoQubitState};
use crate::scalar::Real;

/// Largest n accepted by [`nchv_bound_bruteforce`] (2^24 assignments).
pub const MAX_ENUMERATION_N: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Signal,
    Idler,
}

impl Party {
    pub fn of_index(j: usize) -> Self {
        if j.is_multiple_of(2) {
            Party::Signal
        } else {
            Party::Idler
        }
    }
}

/// One observable of the cycle. `angle` is the argument of `O(·)` applied on
/// `party`: `θ_j` for signal settings and `−θ_j` for idler settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableSetting<T> {
    pub index: usize,
    pub party: Party,
    pub angle: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleScenario<T> {
    n: usize,
    settings: Vec<ObservableSetting<T>>,
}

pub fn validate_n(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("n must be even and at least 4, got {n}")));
    }
    Ok(())
}

impl<T: Real> CycleScenario<T> {
    /// Optimal settings for `|φ⁺⟩`: `θ_j = jπ/n`.
    pub fn make_ideal(n: usize) -> Result<Self> {
        validate_n(n)?;
        let angles = (0..n).map(|j| T::lit(j as f64) * T::PI() / T::lit(n as f64)).collect::<Vec<_>>();
        Self::from_cycle_angles(&angles)
    }

    /// Builds a scenario from per-observable angles `θ_j`; idler settings get
    /// the sign flip.
    pub fn from_cycle_angles(thetas: &[T]) -> Result<Self> {
        let n = thetas.len();
        validate_n(n)?;
        let settings = thetas
            .iter()
            .enumerate()
            .map(|(j, &theta)| {
                let party = Party::of_index(j);
                let angle = match party {
                    Party::Signal => theta,
                    Party::Idler => -theta,
                };
                ObservableSetting { index: j, party, angle }
            })
            .collect();
        Ok(Self { n, settings })
    }

    /// Builds a scenario from the angles actually applied on each party.
    pub fn from_implemented_angles(angles: &[T]) -> Result<Self> {
        let n = angles.len();
        validate_n(n)?;
        let settings = angles
            .iter()
            .enumerate()
            .map(|(j, &angle)| ObservableSetting { index: j, party: Party::of_index(j), angle })
            .collect();
        Ok(Self { n, settings })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn settings(&self) -> &[ObservableSetting<T>] {
        &self.settings
    }

    pub fn implemented_angles(&self) -> Vec<T> {
        self.settings.iter().map(|s| s.angle).collect()
    }

    /// The n contexts `(j, j+1 mod n)`.
    pub fn contexts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        contexts(self.n)
    }

    /// For context `(j, j+1)`, the (signal, idler) setting indices.
    pub fn context_parties(&self, context: usize) -> (usize, usize) {
        signal_idler_of_context(self.n, context)
    }
}

pub fn contexts(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).map(move |j| (j, (j + 1) % n))
}

/// (signal setting index, idler setting index) of context `j`.
pub fn signal_idler_of_context(n: usize, context: usize) -> (usize, usize) {
    let (a, b) = (context, (context + 1) % n);
    if a % 2 == 0 {
        (a, b)
    } else {
        (b, a)
    }
}

/// Sign of context `j` in Ω: +1 except for the closing context `(n−1, 0)`.
#[inline]
pub fn context_sign(n: usize, context: usize) -> i32 {
    if context == n - 1 {
        -1
    } else {
        1
    }
}

/// Combines per-context correlations into Ω.
pub fn omega_from_correlations<T: Real>(correlations: &[T]) -> T {
    let n = correlations.len();
    correlations
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (j, &c)| if context_sign(n, j) > 0 { acc + c } else { acc - c })
}

/// Ω for `state` with every observable built explicitly as a matrix.
pub fn quantum_omega<T: Real>(state: &TwoQubitState<T>, scenario: &CycleScenario<T>) -> Result<T> {
    let ops = scenario
        .settings
        .iter()
        .map(|s| pauli_plane_observable(s.angle))
        .collect::<Result<Vec<_>>>()?;
    let correlations = (0..scenario.n)
        .map(|ctx| {
            let (s, i) = scenario.context_parties(ctx);
            state.expectation(&ops[s], &ops[i])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(omega_from_correlations(&correlations))
}

/// `n·cos(π/n)`, the maximal quantum value for the even n-cycle.
pub fn tsirelson_value<T: Real>(n: usize) -> Result<T> {
    validate_n(n)?;
    let nf = T::lit(n as f64);
    Ok(nf * (T::PI() / nf).cos())
}

/// A deterministic ±1 assignment to the n observables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentValue {
    values: Vec<i8>,
}

impl AssignmentValue {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::invalid("assignment entries must be exactly ±1"));
        }
        Ok(Self { values })
    }

    /// Bit `j` set means `O_j = −1`.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        let values = (0..n).map(|j| if bits >> j & 1 == 1 { -1 } else { 1 }).collect();
        Self { values }
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Ω of this deterministic model.
    pub fn omega(&self) -> i64 {
        let n = self.values.len();
        contexts(n)
            .enumerate()
            .map(|(ctx, (a, b))| {
                context_sign(n, ctx) as i64 * (self.values[a] as i64) * (self.values[b] as i64)
            })
            .sum()
    }
}

/// Ω of the assignment encoded in `bits` (bit j set ⇔ `O_j = −1`).
#[inline]
fn omega_of_bits(bits: u64, n: usize) -> i64 {
    let chain_mask = (1u64 << (n - 1)) - 1;
    let flips = ((bits ^ (bits >> 1)) & chain_mask).count_ones() as i64;
    let closing = ((bits ^ (bits >> (n - 1))) & 1) as i64;
    (n as i64 - 1 - 2 * flips) - (1 - 2 * closing)
}

/// Maximum of Ω over all 2^n deterministic assignments, with the maximizer
/// of smallest integer encoding.
pub fn nchv_bound_bruteforce(n: usize) -> Result<(i64, AssignmentValue)> {
    validate_n(n)?;
    if n > MAX_ENUMERATION_N {
        return Err(Error::ResourceLimit(format!(
            "exhaustive enumeration over 2^{n} assignments exceeds the 2^{MAX_ENUMERATION_N} budget"
        )));
    }
    const CHUNK: u64 = 1 << 14;
    let total = 1u64 << n;
    let chunks = total.div_ceil(CHUNK);
    let (best, bits) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let mut best = (i64::MIN, lo);
            for bits in lo..hi {
                let v = omega_of_bits(bits, n);
                if v > best.0 {
                    best = (v, bits);
                }
            }
            best
        })
        .reduce(
            || (i64::MIN, u64::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    Ok((best, AssignmentValue::from_bits(bits, n)))
}

/// Ω predicted for `|φ⁺⟩` with ideal detectors at the given implemented
/// angles, using `⟨O(a) ⊗ O(b)⟩ = cos(a + b)`.
pub fn omega_bd_from_angles<T: Real>(realized: &[T]) -> Result<T> {
    let n = realized.len();
    validate_n(n).map_err(|_| {
        Error::invalid(format!("need an even number ≥ 4 of realized angles, got {n}"))
    })?;
    let correlations = (0..n)
        .map(|ctx| {
            let (s, i) = signal_idler_of_context(n, ctx);
            (realized[s] + realized[i]).cos()
        })
        .collect::<Vec<_>>();
    Ok(omega_from_correlations(&correlations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn ideal_n4_matches_chsh_settings() {
        let sc = CycleScenario::<f64>::make_ideal(4).unwrap();
        let angles = sc.implemented_angles();
        let expected = [0.0, -PI / 4.0, FRAC_PI_2, -3.0 * PI / 4.0];
        for (a, e) in angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert_eq!(sc.settings()[1].party, Party::Idler);
    }

    #[test]
    fn ideal_n6_party_split() {
        let sc = CycleScenario::<f64>::make_ideal(6).unwrap();
        assert_eq!(sc.settings().len(), 6);
        let signal = sc.settings().iter().filter(|s| s.party == Party::Signal).count();
        assert_eq!(signal, 3);
    }

    #[test]
    fn ideal_n14_same_party_spacing() {
        let sc = CycleScenario::<f64>::make_ideal(14).unwrap();
        let a = sc.implemented_angles();
        for j in (0..12).step_by(2) {
            assert!((a[j + 2] - a[j] - 2.0 * PI / 14.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_n() {
        for n in [0, 2, 3, 5, 7] {
            assert!(matches!(
                CycleScenario::<f64>::make_ideal(n),
                Err(Error::InvalidArgument(_))
            ));
            assert!(tsirelson_value::<f64>(n).is_err());
        }
    }

    #[test]
    fn contexts_pair_opposite_parties() {
        for n in (4..=14).step_by(2) {
            for ctx in 0..n {
                let (s, i) = signal_idler_of_context(n, ctx);
                assert_eq!(s % 2, 0);
                assert_eq!(i % 2, 1);
            }
        }
    }

    #[test]
    fn quantum_omega_examples() {
        let phi = TwoQubitState::<f64>::bell_phi_plus();
        let v4 = quantum_omega(&phi, &CycleScenario::make_ideal(4).unwrap()).unwrap();
        assert!((v4 - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((v4 - 2.83).abs() < 0.005);
        let v14 = quantum_omega(&phi, &CycleScenario::make_ideal(14).unwrap()).unwrap();
        assert!((v14 - 13.65).abs() < 0.005);
        let mixed = TwoQubitState::<f64>::maximally_mixed();
        let v0 = quantum_omega(&mixed, &CycleScenario::make_ideal(8).unwrap()).unwrap();
        assert!(v0.abs() < 1e-15);
    }

    #[test]
    fn tsirelson_examples() {
        assert!((tsirelson_value::<f64>(4).unwrap() - 2.8284).abs() < 1e-4);
        assert!((tsirelson_value::<f64>(10).unwrap() - 9.5106).abs() < 1e-4);
        // n cos(π/n) − n ≈ −π²/(2n)
        let n = 1000;
        let gap = tsirelson_value::<f64>(n).unwrap() - n as f64;
        let taylor = -PI * PI / (2.0 * n as f64);
        assert!((gap - taylor).abs() / taylor.abs() < 1e-5);
    }

    #[test]
    fn nchv_small_cases() {
        let (v4, _) = nchv_bound_bruteforce(4).unwrap();
        assert_eq!(v4, 2);
        let (v6, arg) = nchv_bound_bruteforce(6).unwrap();
        assert_eq!(v6, 4);
        assert_eq!(arg.omega(), 4);
        // all +1 (encoding 0) already reaches 5 − 1
        assert_eq!(arg.values(), &[1, 1, 1, 1, 1, 1]);
        assert_eq!(nchv_bound_bruteforce(14).unwrap().0, 12);
    }

    #[test]
    fn nchv_resource_limit() {
        assert!(matches!(nchv_bound_bruteforce(26), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn bit_formula_matches_assignment_product() {
        for n in [4usize, 6, 8] {
            for bits in 0..(1u64 << n) {
                assert_eq!(omega_of_bits(bits, n), AssignmentValue::from_bits(bits, n).omega());
            }
        }
    }

    #[test]
    fn omega_bd_examples() {
        let ideal = CycleScenario::<f64>::make_ideal(4).unwrap().implemented_angles();
        assert!((omega_bd_from_angles(&ideal).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let shifted: Vec<f64> = ideal
            .iter()
            .enumerate()
            .map(|(j, a)| if j % 2 == 0 { a + 0.37 } else { a - 0.37 })
            .collect();
        assert!(
            (omega_bd_from_angles(&shifted).unwrap() - omega_bd_from_angles(&ideal).unwrap()).abs()
                < 1e-12
        );
        assert!((omega_bd_from_angles(&[0.0f64; 4]).unwrap() - 2.0).abs() < 1e-15);
        assert!(omega_bd_from_angles(&[0.0f64; 5]).is_err());
        assert!(omega_bd_from_angles::<f64>(&[]).is_err());
    }
}
