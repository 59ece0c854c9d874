//! Root finding, χ_D optimization and curve sweeps.

mod figures;
mod sweep;

pub use figures::{Column, Figure};
pub use sweep::{loss_grid, sweep_curves, CurvePoint, Modulation, NoiseSpec, SweepKind, SweepSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    holevo_be_closed, keyrate, mutual_info_ab, transmittivity_from_db, ChannelModel, ProtocolConfig,
};

/// Upper end of the χ_D search, in shot-noise units.
pub const CHI_D_CAP: f64 = 50.0;
/// Width of the final golden-section bracket in χ_D.
pub const CHI_D_TOL: f64 = 1e-5;
/// Bisection stops once the ε bracket is this narrow...
pub const EPSILON_TOL: f64 = 1e-6;
/// ...or once |K| at the midpoint is this small.
pub const RATE_ZERO_TOL: f64 = 1e-9;
/// Largest excess noise tried when bracketing the tolerable noise.
pub const EPSILON_CAP: f64 = 10.0;
/// Relative agreement required between successive doublings of V.
pub const LARGE_V_TOL: f64 = 1e-3;
pub const LARGE_V_START: f64 = 1e5;
pub const LARGE_V_CAP: f64 = 1.6e6;

/// Points of the coarse χ_D scan preceding the golden-section refinement.
const CHI_D_SCAN_POINTS: usize = 200;

/// A protocol whose rate can be evaluated on a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Config(ProtocolConfig),
    /// Squeezed states, homodyne, reverse reconciliation, with χ_D chosen
    /// per channel to maximize the rate.
    OptimalChiD {
        v: f64,
    },
}

/// Rate of a scheme on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeRate {
    pub k: f64,
    /// The χ_D used, for the optimal scheme.
    pub chi_d: Option<f64>,
    /// The optimal χ_D sits at [`CHI_D_CAP`].
    pub at_cap: bool,
}

impl Scheme {
    pub fn v(&self) -> f64 {
        match self {
            Scheme::Config(c) => c.v,
            Scheme::OptimalChiD { v } => *v,
        }
    }

    pub fn with_v(&self, v: f64) -> Result<Scheme> {
        match self {
            Scheme::Config(c) => Ok(Scheme::Config(c.with_v(v)?)),
            Scheme::OptimalChiD { .. } => {
                if !(v >= 1.0) || !v.is_finite() {
                    return Err(Error::domain(format!("V must be >= 1, got {v}")));
                }
                Ok(Scheme::OptimalChiD { v })
            }
        }
    }

    pub fn rate(&self, channel: &ChannelModel) -> Result<SchemeRate> {
        match self {
            Scheme::Config(c) => {
                Ok(SchemeRate { k: keyrate(c, channel)?.k, chi_d: Some(c.chi_d), at_cap: false })
            }
            Scheme::OptimalChiD { v } => {
                let opt = optimize_chi_d(*v, channel)?;
                Ok(SchemeRate { k: opt.k, chi_d: Some(opt.chi_d), at_cap: opt.at_cap })
            }
        }
    }
}

/// Result of maximizing the key rate over Bob's added noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiDOptimum {
    pub chi_d: f64,
    pub k: f64,
    /// The maximum sits at the search cap; the true optimum may lie beyond.
    /// Happens when K < 0 for every χ_D, since K tends to 0 from below as
    /// χ_D grows.
    pub at_cap: bool,
}

/// Maximizes `K(χ_D)` for squeezed states with homodyne detection over
/// `[0, CHI_D_CAP]`.
///
/// A coarse scan (denser near zero) picks a bracket, golden-section search
/// narrows it to `CHI_D_TOL`, and the best of the scanned points and the
/// refined point is returned. Ties go to the smaller χ_D.
pub fn optimize_chi_d(v: f64, channel: &ChannelModel) -> Result<ChiDOptimum> {
    let k_of = |chi_d: f64| -> Result<f64> {
        Ok(mutual_info_ab(v, channel, chi_d)? - holevo_be_closed(v, channel, chi_d)?.holevo)
    };

    let grid: Vec<f64> = (0..=CHI_D_SCAN_POINTS)
        .map(|i| {
            let u = i as f64 / CHI_D_SCAN_POINTS as f64;
            CHI_D_CAP * u * u
        })
        .collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &c) in grid.iter().enumerate() {
        let k = k_of(c)?;
        if k > best.1 {
            best = (i, k);
        }
    }
    let (lo, hi) = (grid[best.0.saturating_sub(1)], grid[(best.0 + 1).min(grid.len() - 1)]);
    let (c_ref, k_ref) = golden_section_max(&k_of, lo, hi, CHI_D_TOL)?;

    let (chi_d, k) = if k_ref > best.1 || (k_ref == best.1 && c_ref < grid[best.0]) {
        (c_ref, k_ref)
    } else {
        (grid[best.0], best.1)
    };
    Ok(ChiDOptimum { chi_d, k, at_cap: chi_d >= CHI_D_CAP - CHI_D_TOL })
}

fn golden_section_max(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        // `>=` keeps the left bracket on ties, favouring smaller χ_D.
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Smallest excess noise at which the key rate of `scheme` reaches zero at
/// the given loss.
///
/// Returns 0 when there is no key even at zero excess noise, and
/// [`Error::NoFiniteTolerance`] when the rate is still positive at
/// [`EPSILON_CAP`].
pub fn tolerable_excess_noise(scheme: &Scheme, loss_db: f64) -> Result<f64> {
    let t = transmittivity_from_db(loss_db)?;
    let k_at = |eps: f64| -> Result<f64> { Ok(scheme.rate(&ChannelModel::from_excess_noise(t, eps)?)?.k) };
    if k_at(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 0.5;
    while k_at(hi)? > 0.0 {
        if hi >= EPSILON_CAP {
            return Err(Error::NoFiniteTolerance { searched_to: hi });
        }
        lo = hi;
        hi = (2.0 * hi).min(EPSILON_CAP);
    }
    while hi - lo > EPSILON_TOL {
        let mid = 0.5 * (lo + hi);
        let k = k_at(mid)?;
        if k.abs() <= RATE_ZERO_TOL {
            return Ok(mid);
        }
        if k > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evaluates `f` in the limit of large modulation by doubling V from
/// [`LARGE_V_START`] until two successive values agree to `tolerance`
/// (relative), returning the later one.
pub fn large_v_eval<F>(f: F, tolerance: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut v = LARGE_V_START;
    let mut prev = f(v)?;
    while v < LARGE_V_CAP {
        let next_v = 2.0 * v;
        let next = f(next_v)?;
        if (next - prev).abs() <= tolerance * next.abs().max(prev.abs()) {
            return Ok(next);
        }
        if next_v >= LARGE_V_CAP {
            return Err(Error::NotConverged { prev_v: v, prev, last_v: next_v, last: next });
        }
        v = next_v;
        prev = next;
    }
    unreachable!("loop returns before V exceeds the cap")
}

/// Loss in dB in `(lo, hi)` where `f` changes sign, by bisection to
/// `tol_db`.
pub fn loss_crossing<F>(f: F, lo: f64, hi: f64, tol_db: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::domain(format!("no sign change between {lo} dB ({f_lo}) and {hi} dB ({f_hi})")));
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Loss above which squeezed states with heterodyne detection (χ_D = 1)
/// beat homodyne detection (χ_D = 0), at fixed excess noise and V.
pub fn heterodyne_advantage_threshold(epsilon: f64, v: f64, lo: f64, hi: f64) -> Result<f64> {
    let hom = ProtocolConfig::squeezed_homodyne(v)?;
    let het = ProtocolConfig::squeezed_heterodyne(v)?;
    loss_crossing(
        |db| {
            let c = ChannelModel::from_loss_db(db, epsilon)?;
            Ok(keyrate(&het, &c)?.k - keyrate(&hom, &c)?.k)
        },
        lo,
        hi,
        1e-9,
    )
}

/// Loss at which the key rate of `config` falls to zero.
pub fn range_limit(config: &ProtocolConfig, epsilon: f64, lo: f64, hi: f64) -> Result<f64> {
    loss_crossing(|db| Ok(keyrate(config, &ChannelModel::from_loss_db(db, epsilon)?)?.k), lo, hi, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Preset;

    #[test]
    fn optimizer_leaves_perfect_channel_alone() {
        let c = ChannelModel::new(1.0, 0.0).unwrap();
        let opt = optimize_chi_d(40.0, &c).unwrap();
        assert_eq!(opt.chi_d, 0.0);
        assert!((opt.k - 40f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn optimizer_dominates_fixed_choices() {
        let v = 40.0;
        for db in [1.0, 5.0, 12.0, 25.0] {
            let c = ChannelModel::from_loss_db(db, 0.5).unwrap();
            let opt = optimize_chi_d(v, &c).unwrap();
            for chi_d in [0.0, 0.3, 1.0, 2.0, 7.5] {
                let k = keyrate(&ProtocolConfig::squeezed_general(v, chi_d).unwrap(), &c).unwrap().k;
                assert!(opt.k >= k - 1e-10, "{db} dB chi_D={chi_d}: {} < {k}", opt.k);
            }
            assert_eq!(opt.at_cap, opt.k <= 0.0, "{db} dB");
        }
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let f = |x: f64| Ok(-(x - 1.234).powi(2));
        let (x, _) = golden_section_max(&f, 0.0, 5.0, 1e-8).unwrap();
        assert!((x - 1.234).abs() < 1e-7);
    }

    #[test]
    fn tolerance_zero_without_key() {
        // Coherent + homodyne in direct reconciliation has no key past 3 dB.
        let cfg = ProtocolConfig::coherent_homodyne(1e4)
            .unwrap()
            .with_reconciliation(crate::protocol::Reconciliation::Direct)
            .unwrap();
        assert_eq!(tolerable_excess_noise(&Scheme::Config(cfg), 6.0).unwrap(), 0.0);
    }

    #[test]
    fn tolerance_brackets_the_zero() {
        let scheme = Scheme::Config(Preset::SqueezedHomodyne.config(1e3).unwrap());
        let eps = tolerable_excess_noise(&scheme, 5.0).unwrap();
        let t = transmittivity_from_db(5.0).unwrap();
        let k = |e: f64| scheme.rate(&ChannelModel::from_excess_noise(t, e).unwrap()).unwrap().k;
        assert!(k(eps - 1e-3) > 0.0);
        assert!(k(eps + 1e-3) < 0.0);
    }

    #[test]
    fn large_v_constant_and_divergent() {
        assert_eq!(large_v_eval(|_| Ok(3.5), LARGE_V_TOL).unwrap(), 3.5);
        let c = ChannelModel::new(0.5, 1.5).unwrap();
        let err = large_v_eval(|v| mutual_info_ab(v, &c, 0.0), LARGE_V_TOL).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. }));
    }

    #[test]
    fn crossing_requires_sign_change() {
        assert!(loss_crossing(|_| Ok(1.0), 0.0, 1.0, 1e-6).is_err());
        let x = loss_crossing(|d| Ok(d - 0.3), 0.0, 1.0, 1e-9).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
    }
}
