use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use super::{g_entropy, CovMatrix};
use crate::error::{Error, Result};

/// Base tolerance for treating a symplectic eigenvalue slightly below one as
/// rounding rather than a genuinely unphysical state.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Tolerance below one accepted for the symplectic eigenvalues of a matrix
/// whose largest entry is `scale`.
///
/// Small symplectic eigenvalues are recovered from products of entries of
/// order `scale`, so their absolute rounding error grows like
/// `ε·scale²`. Below `scale ≈ 2·10³` this is the fixed `1e-9`.
pub fn physicality_tolerance(scale: f64) -> f64 {
    PHYSICALITY_TOL.max(16.0 * f64::EPSILON * scale * scale)
}

/// Symplectic eigenvalues, descending, each clamped to `>= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    /// Validates raw eigenvalues against `tolerance` and clamps the ones in
    /// `[1 - tolerance, 1)` up to one.
    pub fn from_raw(mut raw: Vec<f64>, tolerance: f64) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite symplectic eigenvalue"));
        }
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        if min < 1.0 - tolerance {
            return Err(Error::NonPhysical { min, tolerance });
        }
        raw.sort_by(|a, b| b.total_cmp(a));
        for v in &mut raw {
            *v = v.max(1.0);
        }
        Ok(Self { values: raw })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ G((λ-1)/2)` in bits.
    pub fn entropy(&self) -> f64 {
        self.values.iter().map(|&l| g_entropy((l - 1.0) / 2.0).expect("clamped eigenvalues are >= 1")).sum()
    }
}

impl CovMatrix {
    /// Unclamped symplectic eigenvalues from a full eigendecomposition,
    /// descending.
    ///
    /// These are the moduli of the eigenvalues of `iΩγ`. They are computed as
    /// the singular values of the antisymmetric `γ^{1/2} Ω γ^{1/2}`, which is
    /// similar to `Ωγ`; its Gram matrix is symmetric with every `λ²`
    /// appearing twice, so a symmetric eigensolver suffices.
    pub fn raw_symplectic_eigs_generic(&self) -> Result<Vec<f64>> {
        let dim = self.m.nrows();
        let eig = SymmetricEigen::new(self.m.clone());
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("eigensolver returned non-finite values"));
        }
        let min = eig.eigenvalues.min();
        if min <= 0.0 {
            return Err(Error::domain(format!(
                "covariance matrix is not positive definite (eigenvalue {min:e})"
            )));
        }
        let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let root = &eig.eigenvectors * sqrt_d * eig.eigenvectors.transpose();
        let m = &root * omega(dim / 2) * &root;
        let gram = m.transpose() * &m;
        let gram = (&gram + gram.transpose()) * 0.5;
        let mut sq: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
        sq.sort_by(|a, b| b.total_cmp(a));
        Ok(sq.chunks(2).map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt()).collect())
    }

    /// Symplectic spectrum from the generic eigendecomposition, validated and
    /// clamped.
    pub fn symplectic_eigs_generic(&self) -> Result<SymplecticSpectrum> {
        let raw = self.raw_symplectic_eigs_generic()?;
        SymplecticSpectrum::from_raw(raw, physicality_tolerance(self.scale()))
    }

    /// Symplectic spectrum. One- and two-mode states get their smallest
    /// eigenvalue from `det γ`; larger states use the generic route.
    pub fn symplectic_spectrum(&self) -> Result<SymplecticSpectrum> {
        let tol = physicality_tolerance(self.scale());
        match self.n_modes() {
            1 => {
                let det = det2(&self.block(0, 0));
                if !(self.m[(0, 0)] > 0.0 && det > 0.0) {
                    return Err(Error::domain("covariance matrix is not positive definite"));
                }
                SymplecticSpectrum::from_raw(vec![det.sqrt()], tol)
            }
            2 => SymplecticSpectrum::from_raw(self.two_mode_eigs()?.to_vec(), tol),
            _ => self.symplectic_eigs_generic(),
        }
    }

    /// `ν+` from the generic route, `ν- = √det γ / ν+`.
    ///
    /// The generic route resolves `ν+` to relative precision but loses `ν-`
    /// to cancellation once entries are much larger than one. The determinant
    /// is taken as `det A · det(B - Cᵀ A⁻¹ C)`, which is accurate in that
    /// regime.
    fn two_mode_eigs(&self) -> Result<[f64; 2]> {
        let (a, b, c) = (self.block(0, 0), self.block(1, 1), self.block(0, 1));
        let det_a = det2(&a);
        if !(a[(0, 0)] > 0.0 && det_a > 0.0) {
            return Err(Error::domain("covariance matrix is not positive definite"));
        }
        let a_inv = a.try_inverse().ok_or_else(|| Error::numeric("singular diagonal block"))?;
        let schur = b - c.transpose() * a_inv * c;
        let det = det_a * det2(&schur);
        if !(schur[(0, 0)] > 0.0 && det > 0.0) {
            return Err(Error::domain("covariance matrix is not positive definite"));
        }
        let nu_plus = self.raw_symplectic_eigs_generic()?[0];
        Ok([nu_plus, det.sqrt() / nu_plus])
    }

    pub fn check_physical(&self) -> Result<SymplecticSpectrum> {
        self.symplectic_spectrum()
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> Result<f64> {
        Ok(self.symplectic_spectrum()?.entropy())
    }
}

fn det2(m: &Matrix2<f64>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub(crate) fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_pair_has_unit_spectrum() {
        let g = CovMatrix::diagonal(&[(1.0, 1.0), (1.0, 1.0)]).unwrap();
        let s = g.symplectic_eigs_generic().unwrap();
        for v in s.values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert_eq!(g.entropy().unwrap(), 0.0);
    }

    #[test]
    fn squeezed_product_spectrum() {
        let g = CovMatrix::diagonal(&[(0.25, 4.0), (3.0, 3.0)]).unwrap();
        let s = g.symplectic_eigs_generic().unwrap();
        assert!((s.values()[0] - 3.0).abs() < 1e-12);
        assert!((s.values()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamps_rounding_but_rejects_violations() {
        let s = SymplecticSpectrum::from_raw(vec![1.0 - 5e-10, 2.0], 1e-9).unwrap();
        assert_eq!(s.values(), &[2.0, 1.0]);
        let err = SymplecticSpectrum::from_raw(vec![1.0 - 1e-6], 1e-9).unwrap_err();
        assert!(matches!(err, Error::NonPhysical { .. }));
    }

    #[test]
    fn unphysical_single_mode_is_rejected() {
        let g = CovMatrix::diagonal(&[(0.5, 0.5)]).unwrap();
        assert!(matches!(g.check_physical(), Err(Error::NonPhysical { .. })));
        let g = CovMatrix::diagonal(&[(0.5, 0.5), (1.0, 1.0)]).unwrap();
        assert!(matches!(g.check_physical(), Err(Error::NonPhysical { .. })));
    }

    #[test]
    fn two_mode_invariants_agree_with_generic_route() {
        let g =
            CovMatrix::epr(7.0).unwrap().beamsplitter((0, 1), 0.3).unwrap().phase_rotation(1, 0.4).unwrap();
        let g = CovMatrix::new(g.matrix() + DMatrix::from_diagonal_element(4, 4, 0.2)).unwrap();
        let a = g.symplectic_spectrum().unwrap();
        let b = g.symplectic_eigs_generic().unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-11, "{x} vs {y}");
        }
    }

    #[test]
    fn large_epr_stays_pure() {
        // The rounded entries only fix det γ to about ε·V².
        let g = CovMatrix::epr(1e4).unwrap();
        assert!((g.symplectic_spectrum().unwrap().values()[1] - 1.0).abs() < 1e-7);
        assert!(g.entropy().unwrap() < 1e-5);
    }

    #[test]
    fn tolerance_scales_with_entries() {
        assert_eq!(physicality_tolerance(40.0), PHYSICALITY_TOL);
        assert!(physicality_tolerance(1e5) > 1e-6);
    }
}
