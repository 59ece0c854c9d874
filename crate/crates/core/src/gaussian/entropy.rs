use std::f64::consts::LN_2;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};

/// Below this argument `G` is returned as exactly zero.
const G_ZERO_CUTOFF: f64 = 1e-12;

/// Entropy in bits of a thermal state with mean photon number `x`:
/// `G(x) = (x+1) log2(x+1) - x log2(x)`.
///
/// Evaluated as `log2(x+1) + x log2(1 + 1/x)`, which avoids the cancellation
/// between the two large terms when `x` is large.
pub fn g_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("G(x) requires x >= 0, got {x}")));
    }
    if x < G_ZERO_CUTOFF {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok((x.ln_1p() + x * (1.0 / x).ln_1p()) / LN_2)
}

/// Mutual information in bits between two jointly Gaussian scalars with
/// covariance `[[var_a, cov], [cov, var_b]]`: `½ log2(var_b / var(b|a))`.
pub fn gaussian_mutual_info(joint: &Matrix2<f64>) -> Result<f64> {
    let (va, vb, c) = (joint[(0, 0)], joint[(1, 1)], joint[(0, 1)]);
    if (joint[(1, 0)] - c).abs() > 1e-12 * va.abs().max(vb.abs()).max(1.0) {
        return Err(Error::domain("joint covariance is not symmetric"));
    }
    let det = va * vb - c * c;
    if !(va > 0.0 && vb > 0.0 && det > 0.0) {
        return Err(Error::domain("joint covariance of (a, b) is not positive definite"));
    }
    let conditional = vb - c * c / va;
    Ok(0.5 * (vb / conditional).log2())
}

/// Mutual information in bits between the first `dim_a` components of a
/// Gaussian vector and the rest: `½ log2(det Σa det Σb / det Σ)`.
pub fn gaussian_mutual_info_blocks(joint: &DMatrix<f64>, dim_a: usize) -> Result<f64> {
    let n = joint.nrows();
    if joint.ncols() != n || dim_a == 0 || dim_a >= n {
        return Err(Error::domain("bad block split for mutual information"));
    }
    let chol = |m: DMatrix<f64>| {
        m.cholesky().ok_or_else(|| Error::domain("classical covariance is not positive definite"))
    };
    let log_det = |c: nalgebra::Cholesky<f64, nalgebra::Dyn>| {
        2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    };
    let full = log_det(chol(joint.clone())?);
    let a = log_det(chol(joint.view((0, 0), (dim_a, dim_a)).into_owned())?);
    let b = log_det(chol(joint.view((dim_a, dim_a), (n - dim_a, n - dim_a)).into_owned())?);
    Ok(0.5 * (a + b - full) / LN_2)
}
