//! Exact two-qubit quantum mechanics.
//!
//! Operators on the two-photon space are always ordered **signal ⊗ idler**:
//! the basis index is `2·s + i` where `s` and `i` are the which-slit labels of
//! the signal and idler photons. Even-indexed cycle observables act on the
//! signal factor, odd-indexed ones on the idler factor.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square complex matrix of dimension 2 or 4, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn from_entries(dim: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::invalid(format!("matrix dimension {dim} not in {{2, 4}}")));
        }
        if entries.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real(dim: usize, entries: &[T]) -> Result<Self> {
        Self::from_entries(dim, entries.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "matrix dimension must be 2 or 4");
        Self {
            dim,
            entries: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.entries[k * dim + k] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn pauli_x() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::from_real(2, &[z, o, o, z]).unwrap()
    }

    pub fn pauli_y() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        Self::from_entries(2, vec![z, -i, i, z]).unwrap()
    }

    pub fn pauli_z() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::from_real(2, &[o, z, z, -o]).unwrap()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                out.entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + self.get(k, k))
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest entrywise modulus of `M − M†`.
    pub fn hermiticity_defect(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for r in 0..d {
            for c in 0..d {
                let diff = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= T::tolerance()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Largest entrywise modulus; a cheap bound used for error messages and
    /// operator-norm estimates.
    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// Uses cyclic Jacobi rotations on the real-symmetric embedding
    /// `[[Re, −Im], [Im, Re]]`, whose spectrum is that of `self` with every
    /// eigenvalue doubled.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<T>> {
        if !self.is_hermitian() {
            return Err(Error::invalid("eigenvalues requested for a non-Hermitian matrix"));
        }
        let d = self.dim;
        let m = 2 * d;
        let mut a = vec![T::zero(); m * m];
        for r in 0..d {
            for c in 0..d {
                let z = self.get(r, c);
                a[r * m + c] = z.re;
                a[(r + d) * m + (c + d)] = z.re;
                a[r * m + (c + d)] = -z.im;
                a[(r + d) * m + c] = z.im;
            }
        }
        let mut evs = jacobi_symmetric(&mut a, m);
        evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Ok(evs.chunks(2).map(|pair| (pair[0] + pair[1]) / T::lit(2.0)).collect())
    }
}

fn jacobi_symmetric<T: Real>(a: &mut [T], m: usize) -> Vec<T> {
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..m {
            for q in (p + 1)..m {
                off = off + a[p * m + q] * a[p * m + q];
            }
        }
        if off.sqrt() <= T::epsilon() * T::lit(1e-2) {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|k| a[k * m + k]).collect()
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = ComplexMatrix::zeros(d);
        for r in 0..d {
            for c in 0..d {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..d {
                    acc = acc + self.get(r, k) * rhs.get(k, c);
                }
                out.entries[r * d + c] = acc;
            }
        }
        out
    }
}

/// `cos θ·σ_x + sin θ·σ_y`, the dichotomic observable in the equatorial plane.
pub fn pauli_plane_observable<T: Real>(theta: T) -> Result<ComplexMatrix<T>> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("observable angle must be finite, got {theta}")));
    }
    let (s, c) = theta.sin_cos();
    let sx = ComplexMatrix::pauli_x().scale(c);
    let sy = ComplexMatrix::pauli_y().scale(s);
    Ok(&sx + &sy)
}

/// Kronecker product `a ⊗ b` of two single-qubit operators (signal first).
pub fn tensor<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    assert!(a.dim == 2 && b.dim == 2, "tensor expects two single-qubit operators");
    let mut out = ComplexMatrix::zeros(4);
    for r1 in 0..2 {
        for c1 in 0..2 {
            for r2 in 0..2 {
                for c2 in 0..2 {
                    out.entries[(2 * r1 + r2) * 4 + (2 * c1 + c2)] = a.get(r1, c1) * b.get(r2, c2);
                }
            }
        }
    }
    out
}

/// A validated two-qubit density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitState<T> {
    rho: ComplexMatrix<T>,
}

impl<T: Real> TwoQubitState<T> {
    /// Validates Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(rho: ComplexMatrix<T>) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::invalid("a two-qubit state needs a 4x4 density matrix"));
        }
        let defect = rho.hermiticity_defect();
        if defect > T::tolerance() {
            return Err(Error::invalid(format!("density matrix not Hermitian (defect {defect})")));
        }
        let tr = rho.trace();
        if (tr.re - T::one()).abs() > T::tolerance() || tr.im.abs() > T::tolerance() {
            return Err(Error::invalid(format!("density matrix trace {tr} != 1")));
        }
        let min_ev = rho.hermitian_eigenvalues()?[0];
        if min_ev < -T::psd_tolerance() {
            return Err(Error::invalid(format!("density matrix has negative eigenvalue {min_ev}")));
        }
        Ok(Self { rho })
    }

    /// `|φ⁺⟩⟨φ⁺|` with `|φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
    pub fn bell_phi_plus() -> Self {
        let h = T::lit(0.5);
        let z = T::zero();
        #[rustfmt::skip]
        let rho = ComplexMatrix::from_real(4, &[
            h, z, z, h,
            z, z, z, z,
            z, z, z, z,
            h, z, z, h,
        ]).unwrap();
        Self { rho }
    }

    /// `I₄/4`.
    pub fn maximally_mixed() -> Self {
        Self {
            rho: ComplexMatrix::identity(4).scale(T::lit(0.25)),
        }
    }

    /// Werner-type mixture `p·φ⁺ + (1 − p)·I₄/4`.
    pub fn werner(p: T) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::invalid(format!("mixing weight p = {p} outside [0, 1]")));
        }
        let a = Self::bell_phi_plus().rho.scale(p);
        let b = Self::maximally_mixed().rho.scale(T::one() - p);
        Ok(Self { rho: &a + &b })
    }

    pub fn density_matrix(&self) -> &ComplexMatrix<T> {
        &self.rho
    }

    pub fn purity(&self) -> T {
        (&self.rho * &self.rho).trace().re
    }

    /// Reduced state of the signal photon (idler traced out).
    pub fn signal_marginal(&self) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(2);
        for r in 0..2 {
            for c in 0..2 {
                out.entries[r * 2 + c] = self.rho.get(2 * r, 2 * c) + self.rho.get(2 * r + 1, 2 * c + 1);
            }
        }
        out
    }

    /// Reduced state of the idler photon (signal traced out).
    pub fn idler_marginal(&self) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(2);
        for r in 0..2 {
            for c in 0..2 {
                out.entries[r * 2 + c] = self.rho.get(r, c) + self.rho.get(2 + r, 2 + c);
            }
        }
        out
    }

    /// `Tr[ρ·(signal ⊗ idler)]` for single-qubit Hermitian operators.
    pub fn expectation(&self, signal: &ComplexMatrix<T>, idler: &ComplexMatrix<T>) -> Result<T> {
        expectation(self, signal, idler)
    }
}

/// `Tr[ρ (a ⊗ b)]` with `a` on the signal photon and `b` on the idler.
pub fn expectation<T: Real>(
    state: &TwoQubitState<T>,
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<T> {
    if a.dim() != 2 || b.dim() != 2 {
        return Err(Error::invalid("expectation expects single-qubit operators"));
    }
    if !a.is_hermitian() || !b.is_hermitian() {
        return Err(Error::invalid("expectation of a non-Hermitian operator"));
    }
    let op = tensor(a, b);
    // Tr[ρ·X] = Σ_rc ρ_rc X_cr, without forming the product.
    let rho = state.density_matrix();
    let mut acc = Complex::new(T::zero(), T::zero());
    for r in 0..4 {
        for c in 0..4 {
            acc = acc + rho.get(r, c) * op.get(c, r);
        }
    }
    let scale = T::one().max(a.max_abs() * b.max_abs());
    if acc.im.abs() > T::tolerance() * scale {
        return Err(Error::Internal(format!(
            "expectation has imaginary part {} for Hermitian inputs",
            acc.im
        )));
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    type M = ComplexMatrix<f64>;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn observable_special_angles() {
        let o0 = pauli_plane_observable(0.0).unwrap();
        assert!(o0.max_abs_diff(&M::pauli_x()) < 1e-15);
        let o90 = pauli_plane_observable(FRAC_PI_2).unwrap();
        assert!(o90.max_abs_diff(&M::pauli_y()) < 1e-15);
    }

    #[test]
    fn observable_quarter_turn_eigenvalues() {
        let o = pauli_plane_observable(FRAC_PI_4).unwrap();
        let expected = (&M::pauli_x() + &M::pauli_y()).scale(FRAC_1_SQRT_2);
        assert!(o.max_abs_diff(&expected) < 1e-15);
        // Closed form for a traceless 2x2 Hermitian: ±sqrt(|a|² + |b|²).
        let radius = (o.get(0, 0).norm_sqr() + o.get(0, 1).norm_sqr()).sqrt();
        assert!(close(radius, 1.0, 1e-15));
        let evs = o.hermitian_eigenvalues().unwrap();
        assert!(close(evs[0], -1.0, 1e-12) && close(evs[1], 1.0, 1e-12));
        assert!(o.trace().norm() < 1e-15);
    }

    #[test]
    fn observable_rejects_non_finite() {
        assert!(matches!(pauli_plane_observable(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(pauli_plane_observable(f64::INFINITY).is_err());
    }

    #[test]
    fn bell_state_pauli_correlations() {
        let phi = TwoQubitState::<f64>::bell_phi_plus();
        let (x, y) = (M::pauli_x(), M::pauli_y());
        assert!(close(phi.expectation(&x, &x).unwrap(), 1.0, 1e-15));
        assert!(close(phi.expectation(&y, &y).unwrap(), -1.0, 1e-15));
        assert!(close(phi.expectation(&x, &y).unwrap(), 0.0, 1e-15));
        assert!(close(phi.purity(), 1.0, 1e-15));
    }

    #[test]
    fn bell_state_marginals_are_maximally_mixed() {
        let phi = TwoQubitState::<f64>::bell_phi_plus();
        let half = M::identity(2).scale(0.5);
        assert!(phi.signal_marginal().max_abs_diff(&half) < 1e-12);
        assert!(phi.idler_marginal().max_abs_diff(&half) < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let phi = TwoQubitState::<f64>::bell_phi_plus();
        let o0 = pauli_plane_observable(0.0).unwrap();
        assert!(close(expectation(&phi, &o0, &o0).unwrap(), 1.0, 1e-15));
        let mixed = TwoQubitState::<f64>::maximally_mixed();
        let a = pauli_plane_observable(0.3).unwrap();
        let b = pauli_plane_observable(-1.1).unwrap();
        assert!(expectation(&mixed, &a, &b).unwrap().abs() < 1e-15);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let phi = TwoQubitState::<f64>::bell_phi_plus();
        let i = Complex::new(0.0, 1.0);
        let z = Complex::new(0.0, 0.0);
        let bad = M::from_entries(2, vec![z, i, i, z]).unwrap();
        assert!(matches!(
            expectation(&phi, &bad, &M::identity(2)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn tensor_examples() {
        let i4 = tensor(&M::identity(2), &M::identity(2));
        assert!(i4.max_abs_diff(&M::identity(4)) < 1e-15);
        assert!(tensor(&M::pauli_x(), &M::identity(2)).trace().norm() < 1e-15);
        let xx = tensor(&M::pauli_x(), &M::pauli_x());
        let yy = tensor(&M::pauli_y(), &M::pauli_y());
        let zz = tensor(&M::pauli_z(), &M::pauli_z());
        assert!((&xx * &yy).max_abs_diff(&zz.scale(-1.0)) < 1e-15);
    }

    #[test]
    fn tensor_ordering_is_signal_first() {
        // σ_z ⊗ I is diag(1, 1, −1, −1): the signal label is the high bit.
        let zi = tensor(&M::pauli_z(), &M::identity(2));
        let diag: Vec<f64> = (0..4).map(|k| zi.get(k, k).re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn state_validation() {
        assert!(TwoQubitState::new(M::identity(4)).is_err());
        let mut e = vec![0.0; 16];
        e[0] = 1.5;
        e[15] = -0.5;
        assert!(TwoQubitState::new(M::from_real(4, &e).unwrap()).is_err());
        let ok = TwoQubitState::new(M::identity(4).scale(0.25)).unwrap();
        assert_eq!(ok, TwoQubitState::maximally_mixed());
        assert!(TwoQubitState::<f64>::werner(1.2).is_err());
        let w = TwoQubitState::<f64>::werner(0.5).unwrap();
        assert!(TwoQubitState::new(w.density_matrix().clone()).is_ok());
    }

    #[test]
    fn eigenvalues_of_bell_projector() {
        let evs = TwoQubitState::<f64>::bell_phi_plus()
            .density_matrix()
            .hermitian_eigenvalues()
            .unwrap();
        for (got, want) in evs.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!(close(*got, want, 1e-12), "{evs:?}");
        }
    }

    #[test]
    fn eigenvalues_complex_hermitian() {
        // σ_y ⊗ σ_y has spectrum {−1, −1, 1, 1}.
        let yy = tensor(&M::pauli_y(), &M::pauli_y());
        let evs = yy.hermitian_eigenvalues().unwrap();
        for (got, want) in evs.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!(close(*got, want, 1e-12), "{evs:?}");
        }
    }

    #[test]
    fn f32_path_agrees() {
        let phi = TwoQubitState::<f32>::bell_phi_plus();
        let a = pauli_plane_observable(0.4f32).unwrap();
        let b = pauli_plane_observable(0.9f32).unwrap();
        let v = phi.expectation(&a, &b).unwrap();
        assert!((v - 1.3f32.cos()).abs() < 1e-6);
    }
}
