//! State builders, Gaussian unitaries and measurement conditioning.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, Matrix2};

use super::{CovMatrix, Quadrature, QuadratureSelector};
use crate::error::{Error, Result};

/// How a single mode is measured, for outcome statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detection {
    /// One quadrature plus independent classical Gaussian noise of the given
    /// variance.
    Homodyne { quadrature: Quadrature, noise: f64 },
    /// Both quadratures after a balanced split with vacuum. Each outcome is
    /// `(q + q_vac)/√2`.
    Heterodyne,
}

impl CovMatrix {
    /// Two-mode squeezed vacuum: blocks `V𝕀` and `√(V²-1)σ`, `σ = diag(1,-1)`.
    pub fn epr(v: f64) -> Result<CovMatrix> {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(Error::domain(format!("EPR variance must be >= 1, got {v}")));
        }
        let c = (v * v - 1.0).sqrt();
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            v,   0.0, c,   0.0,
            0.0, v,   0.0, -c,
            c,   0.0, v,   0.0,
            0.0, -c,  0.0, v,
        ]);
        Ok(CovMatrix { m })
    }

    /// Single-mode thermal state `N𝕀`.
    pub fn thermal(n: f64) -> Result<CovMatrix> {
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::domain(format!("thermal variance must be >= 1, got {n}")));
        }
        Ok(CovMatrix { m: DMatrix::identity(2, 2) * n })
    }

    pub fn vacuum() -> CovMatrix {
        CovMatrix { m: DMatrix::identity(2, 2) }
    }

    /// Single-mode squeezed vacuum `diag(1/V, V)`.
    pub fn squeezed(v: f64) -> Result<CovMatrix> {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(Error::domain(format!("squeezing variance must be >= 1, got {v}")));
        }
        CovMatrix::diagonal(&[(1.0 / v, v)])
    }

    /// Beamsplitter of transmittivity `t` between modes `i` and `j`.
    ///
    /// Sign convention, identical on `x` and `p`:
    /// `q_i' = √t q_i + √(1-t) q_j`, `q_j' = -√(1-t) q_i + √t q_j`.
    /// At `t = 0` the modes swap with a sign flip on the second, which
    /// changes only the signs of the cross-correlations.
    pub fn beamsplitter(&self, (i, j): (usize, usize), t: f64) -> Result<CovMatrix> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("beamsplitter transmittivity must lie in [0, 1], got {t}")));
        }
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::domain("beamsplitter needs two distinct modes"));
        }
        let (ct, st) = (t.sqrt(), (1.0 - t).sqrt());
        let mut s = DMatrix::identity(self.m.nrows(), self.m.nrows());
        for q in 0..2 {
            let (a, b) = (2 * i + q, 2 * j + q);
            s[(a, a)] = ct;
            s[(a, b)] = st;
            s[(b, a)] = -st;
            s[(b, b)] = ct;
        }
        Ok(self.transformed(&s))
    }

    /// Phase rotation by `theta` on one mode:
    /// `x' = x cos θ - p sin θ`, `p' = x sin θ + p cos θ`.
    pub fn phase_rotation(&self, mode: usize, theta: f64) -> Result<CovMatrix> {
        self.check_mode(mode)?;
        let (s, c) = theta.sin_cos();
        let mut r = DMatrix::identity(self.m.nrows(), self.m.nrows());
        let k = 2 * mode;
        r[(k, k)] = c;
        r[(k, k + 1)] = -s;
        r[(k + 1, k)] = s;
        r[(k + 1, k + 1)] = c;
        Ok(self.transformed(&r))
    }

    fn transformed(&self, s: &DMatrix<f64>) -> CovMatrix {
        CovMatrix::from_symmetrized(s * &self.m * s.transpose())
    }

    /// Conditional covariance of the other modes after homodyning `sel`,
    /// with classical Gaussian noise of variance `added_noise` on the outcome.
    ///
    /// Schur complement `γ_A - σ_AB (Xγ_B X + χX)^+ σ_ABᵀ`, where `X`
    /// projects on the measured quadrature and `^+` is the Moore-Penrose
    /// inverse. The projected block has rank one, so the pseudoinverse is the
    /// reciprocal of its single nonzero entry. The result does not depend on
    /// the outcome.
    pub fn homodyne(&self, sel: QuadratureSelector, added_noise: f64) -> Result<CovMatrix> {
        if !(added_noise >= 0.0) || !added_noise.is_finite() {
            return Err(Error::domain(format!("homodyne added noise must be >= 0, got {added_noise}")));
        }
        self.check_mode(sel.mode)?;
        if self.n_modes() < 2 {
            return Err(Error::domain("conditioning needs at least two modes"));
        }
        self.check_physical()?;
        let q = sel.index();
        let rest = self.rest_indices(sel.mode);
        let measured = self.m[(q, q)] + added_noise;
        let pinv = if measured > 0.0 { 1.0 / measured } else { 0.0 };
        let d = rest.len();
        let m = DMatrix::from_fn(d, d, |r, c| {
            let (ir, ic) = (rest[r], rest[c]);
            self.m[(ir, ic)] - self.m[(ir, q)] * pinv * self.m[(q, ic)]
        });
        Ok(CovMatrix::from_symmetrized(m))
    }

    /// Conditional covariance of the other modes after heterodyning `mode`:
    /// `γ_A - σ_AB (γ_B + 𝕀)^{-1} σ_ABᵀ`.
    pub fn heterodyne(&self, mode: usize) -> Result<CovMatrix> {
        self.check_mode(mode)?;
        if self.n_modes() < 2 {
            return Err(Error::domain("conditioning needs at least two modes"));
        }
        self.check_physical()?;
        let rest = self.rest_indices(mode);
        let k = 2 * mode;
        let gb = self.block(mode, mode) + Matrix2::identity();
        let inv = gb.try_inverse().ok_or_else(|| Error::numeric("heterodyne block is singular"))?;
        let d = rest.len();
        let sab = DMatrix::from_fn(d, 2, |r, c| self.m[(rest[r], k + c)]);
        let ga = DMatrix::from_fn(d, d, |r, c| self.m[(rest[r], rest[c])]);
        let inv = DMatrix::from_row_slice(2, 2, inv.transpose().as_slice());
        let m = ga - &sab * inv * sab.transpose();
        Ok(CovMatrix::from_symmetrized(m))
    }

    /// Joint covariance of the classical outcomes of the listed detections.
    ///
    /// Outcomes are stacked in list order; a heterodyne contributes `(x, p)`.
    pub fn outcome_covariance(&self, detections: &[(usize, Detection)]) -> Result<DMatrix<f64>> {
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut noise: Vec<f64> = Vec::new();
        for (k, &(mode, det)) in detections.iter().enumerate() {
            self.check_mode(mode)?;
            if detections[..k].iter().any(|&(m, _)| m == mode) {
                return Err(Error::domain(format!("mode {mode} measured twice")));
            }
            match det {
                Detection::Homodyne { quadrature, noise: chi } => {
                    if !(chi >= 0.0) {
                        return Err(Error::domain("homodyne noise must be >= 0"));
                    }
                    let sel = QuadratureSelector::new(mode, quadrature);
                    rows.push(vec![(sel.index(), 1.0)]);
                    noise.push(chi);
                }
                Detection::Heterodyne => {
                    rows.push(vec![(2 * mode, FRAC_1_SQRT_2)]);
                    rows.push(vec![(2 * mode + 1, FRAC_1_SQRT_2)]);
                    noise.extend([0.5, 0.5]);
                }
            }
        }
        let dim = rows.len();
        let mut out = DMatrix::from_fn(dim, dim, |r, c| {
            rows[r]
                .iter()
                .flat_map(|&(i, wi)| rows[c].iter().map(move |&(j, wj)| (i, j, wi * wj)))
                .map(|(i, j, w)| w * self.m[(i, j)])
                .sum()
        });
        for (k, v) in noise.into_iter().enumerate() {
            out[(k, k)] += v;
        }
        Ok(out)
    }

    fn rest_indices(&self, mode: usize) -> Vec<usize> {
        (0..self.m.nrows()).filter(|&r| r / 2 != mode).collect()
    }
}
