//! Covariance-matrix algebra for Gaussian states.
//!
//! Conventions used throughout the crate:
//!
//! * quadratures are ordered `(x1, p1, x2, p2, ...)`;
//! * variances are in shot-noise units, so the vacuum has covariance `𝕀`;
//! * the symplectic form is `Ω = ⊕ [[0, 1], [-1, 0]]`;
//! * entropies are in bits.
//!
//! Only second moments are tracked. Displacements never enter an entropy or
//! a conditional covariance for Gaussian states, so they are left out.

mod entropy;
mod ops;
mod spectrum;

pub use entropy::{g_entropy, gaussian_mutual_info, gaussian_mutual_info_blocks};
pub use ops::Detection;
pub use spectrum::{physicality_tolerance, SymplecticSpectrum, PHYSICALITY_TOL};

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};

/// Absolute symmetry tolerance, relative to the largest entry when that
/// exceeds one.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// Which quadrature of which mode a homodyne detector looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadratureSelector {
    pub mode: usize,
    pub quadrature: Quadrature,
}

impl QuadratureSelector {
    pub fn new(mode: usize, quadrature: Quadrature) -> Self {
        Self { mode, quadrature }
    }

    pub fn x(mode: usize) -> Self {
        Self::new(mode, Quadrature::X)
    }

    pub fn p(mode: usize) -> Self {
        Self::new(mode, Quadrature::P)
    }

    fn index(&self) -> usize {
        2 * self.mode + self.quadrature.offset()
    }
}

/// Covariance matrix of an `n`-mode Gaussian state.
///
/// Construction only checks shape and symmetry. Physicality is checked by
/// [`CovMatrix::check_physical`] and by every operation documented to
/// require it.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    m: DMatrix<f64>,
}

impl CovMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
            return Err(Error::domain(format!(
                "covariance matrix must be 2n x 2n with n >= 1, got {} x {}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariance matrix has non-finite entries"));
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::domain(format!(
                "covariance matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self::from_symmetrized(m))
    }

    /// Builds from a row-major slice of length `(2n)^2`.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::domain("entry count does not match dimension"));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub(crate) fn from_symmetrized(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        Self { m: sym }
    }

    /// Direct sum of single-mode blocks `diag(vx, vp)`.
    pub fn diagonal(variances: &[(f64, f64)]) -> Result<Self> {
        let n = variances.len();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for (k, &(vx, vp)) in variances.iter().enumerate() {
            m[(2 * k, 2 * k)] = vx;
            m[(2 * k + 1, 2 * k + 1)] = vp;
        }
        Self::new(m)
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[(row, col)]
    }

    /// The 2×2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.m.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    /// Largest absolute entry; sets the scale of rounding errors.
    pub fn scale(&self) -> f64 {
        self.m.amax()
    }

    /// `self ⊕ other`, with `other`'s modes appended after `self`'s.
    pub fn direct_sum(&self, other: &CovMatrix) -> CovMatrix {
        let (a, b) = (self.m.nrows(), other.m.nrows());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.m);
        m.view_mut((a, a), (b, b)).copy_from(&other.m);
        CovMatrix { m }
    }

    /// Partial trace: keeps the listed modes, in the listed order.
    pub fn reduce(&self, modes: &[usize]) -> Result<CovMatrix> {
        if modes.is_empty() {
            return Err(Error::domain("cannot reduce to zero modes"));
        }
        for (k, &mode) in modes.iter().enumerate() {
            self.check_mode(mode)?;
            if modes[..k].contains(&mode) {
                return Err(Error::domain(format!("mode {mode} listed twice")));
            }
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.m[(idx[r], idx[c])]);
        Ok(CovMatrix { m })
    }

    /// Drops one mode.
    pub fn trace_out(&self, mode: usize) -> Result<CovMatrix> {
        self.check_mode(mode)?;
        if self.n_modes() == 1 {
            return Err(Error::domain("cannot trace out the only mode"));
        }
        let keep: Vec<usize> = (0..self.n_modes()).filter(|&k| k != mode).collect();
        self.reduce(&keep)
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::domain(format!(
                "mode index {mode} out of range for a {}-mode state",
                self.n_modes()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(CovMatrix::new(DMatrix::identity(3, 3)).is_err());
        assert!(CovMatrix::new(DMatrix::zeros(2, 4)).is_err());
        assert!(CovMatrix::new(DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.1;
        assert!(matches!(CovMatrix::new(m), Err(Error::Domain(_))));
    }

    #[test]
    fn reduce_and_trace_out() {
        let g = CovMatrix::diagonal(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]).unwrap();
        let r = g.reduce(&[2, 0]).unwrap();
        assert_eq!(r.get(0, 0), 5.0);
        assert_eq!(r.get(3, 3), 2.0);
        let t = g.trace_out(1).unwrap();
        assert_eq!(t.n_modes(), 2);
        assert_eq!(t.get(2, 2), 5.0);
        assert!(g.reduce(&[0, 0]).is_err());
        assert!(g.reduce(&[3]).is_err());
    }

    #[test]
    fn direct_sum_layout() {
        let a = CovMatrix::diagonal(&[(2.0, 3.0)]).unwrap();
        let b = CovMatrix::diagonal(&[(4.0, 5.0)]).unwrap();
        let s = a.direct_sum(&b);
        assert_eq!(s.n_modes(), 2);
        assert_eq!(s.get(2, 2), 4.0);
        assert_eq!(s.get(0, 2), 0.0);
    }
}
