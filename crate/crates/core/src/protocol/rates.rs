//! Key rates: closed forms for the squeezed-state family with Bob's added
//! noise, and the entanglement-based route that covers every preset.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{BobNoise, ChannelModel, Measurement, Preparation, ProtocolConfig, Reconciliation};
use crate::error::{Error, Result};
use crate::gaussian::{
    gaussian_mutual_info_blocks, physicality_tolerance, CovMatrix, Detection, Quadrature, QuadratureSelector,
    SymplecticSpectrum,
};

/// Negative discriminants down to `-DISCRIMINANT_TOL·scale` are rounding.
const DISCRIMINANT_TOL: f64 = 1e-9;

/// Modes of the two-party state.
const ALICE: usize = 0;
const BOB: usize = 1;

/// Intermediate quantities of the closed-form Holevo bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub delta: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    /// `λ1, λ2` of `γ_AB`, then `λ3, λ4` of the conditional state.
    pub lambda: [f64; 4],
    /// `χ = χ_C + χ_D/T`.
    pub chi: f64,
    /// `S(AB)`.
    pub s_ab: f64,
    /// `S(AFG|b)`.
    pub s_conditional: f64,
    /// `S(b:E) = S(AB) - S(AFG|b)`.
    pub holevo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    ClosedForm,
    EntanglementBased,
}

/// Rates in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub i_ab: f64,
    /// `S(b:E)` in reverse reconciliation, `S(a:E)` in direct.
    pub holevo: f64,
    /// `I_ab - holevo`; negative means no key.
    pub k: f64,
    pub reconciliation: Reconciliation,
    pub route: Route,
    pub terms: Option<ClosedForm>,
}

/// `γ_AB` with blocks `x𝕀`, `y𝕀`, `zσ`: `x = V`, `y = T(V+χ_C)`,
/// `z = √(T(V²-1))`.
pub fn gamma_ab(v: f64, channel: &ChannelModel) -> Result<CovMatrix> {
    check_v(v)?;
    let (x, y, z) = xyz(v, channel);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        x,   0.0, z,   0.0,
        0.0, x,   0.0, -z,
        z,   0.0, y,   0.0,
        0.0, -z,  0.0, y,
    ]);
    let g = CovMatrix::new(m)?;
    g.check_physical().map_err(|e| match e {
        Error::NonPhysical { min, .. } => Error::domain(format!(
            "V = {v}, T = {}, chi_C = {} give a non-physical state (symplectic eigenvalue {min})",
            channel.transmittivity(),
            channel.chi_c()
        )),
        other => other,
    })?;
    Ok(g)
}

/// `I(a:b) = ½ log2((V+χ)/(χ+1/V))` with `χ = χ_C + χ_D/T`.
pub fn mutual_info_ab(v: f64, channel: &ChannelModel, chi_d: f64) -> Result<f64> {
    check_v(v)?;
    check_chi_d(chi_d)?;
    let chi = channel.chi_c() + chi_d / channel.transmittivity();
    Ok(0.5 * ((v + chi) / (chi + 1.0 / v)).log2())
}

/// Closed-form `S(b:E)` for squeezed states with Bob's added noise `chi_d`
/// in reverse reconciliation.
///
/// `D` and `Δ` are evaluated in the expanded forms `D = T(Vχ_C + 1)` and
/// `Δ = (x-y)² + 2D`, algebraically equal to `xy - z²` and
/// `x² + y² - 2z²` but free of the cancellation between terms of order
/// `V²`. The smaller root of each quadratic comes from the product of the
/// roots.
pub fn holevo_be_closed(v: f64, channel: &ChannelModel, chi_d: f64) -> Result<ClosedForm> {
    check_v(v)?;
    check_chi_d(chi_d)?;
    let (t, chi_c) = (channel.transmittivity(), channel.chi_c());
    let (x, y, z) = xyz(v, channel);

    let d = t * (v * chi_c + 1.0);
    let x_minus_y = v * (1.0 - t) - t * chi_c;
    let delta = x_minus_y * x_minus_y + 2.0 * d;
    // Δ² - 4D² = (x-y)²((x-y)² + 4D)
    let disc12 = x_minus_y * x_minus_y * (x_minus_y * x_minus_y + 4.0 * d);
    let (l1, l2) = quadratic_roots(delta, d * d, disc12)?;

    let a = (y + x * d + chi_d * delta) / (y + chi_d);
    let b = d * (x + chi_d * d) / (y + chi_d);
    let disc34 = a * a - 4.0 * b;
    if disc34 < -DISCRIMINANT_TOL * a * a {
        return Err(Error::numeric(format!("A² - 4B = {disc34:e} < 0")));
    }
    let (l3, l4) = quadratic_roots(a, b, disc34.max(0.0))?;

    let tol = physicality_tolerance(x.max(y));
    let ab = SymplecticSpectrum::from_raw(vec![l1, l2], tol)?;
    let cond = SymplecticSpectrum::from_raw(vec![l3, l4], tol)?;
    let (s_ab, s_conditional) = (ab.entropy(), cond.entropy());
    Ok(ClosedForm {
        x,
        y,
        z,
        delta,
        d,
        a,
        b,
        lambda: [ab.values()[0], ab.values()[1], cond.values()[0], cond.values()[1]],
        chi: chi_c + chi_d / t,
        s_ab,
        s_conditional,
        holevo: s_ab - s_conditional,
    })
}

/// `S(b:E)` from the entanglement-based construction with Bob's noise as a
/// physical ancilla.
///
/// Modes `A, B` carry `γ_AB`; `F, G` are an EPR pair of variance `N`. `B`
/// and `F` meet on a beamsplitter of transmittivity `T_B` and `B` is then
/// homodyned. Eve purifies `AB`, and `AEFG` is pure after the measurement, so
/// `S(b:E) = S(AB) - S(AFG|b)`. All spectra come from the generic
/// eigendecomposition.
pub fn holevo_be_oracle(v: f64, channel: &ChannelModel, bob: BobNoise) -> Result<f64> {
    let g = gamma_ab(v, channel)?;
    let s_ab = g.symplectic_eigs_generic()?.entropy();
    let s_cond = bob_conditional_state(&g, bob)?.symplectic_eigs_generic()?.entropy();
    Ok(s_ab - s_cond)
}

/// `AFG` conditioned on Bob's noisy homodyne outcome.
fn bob_conditional_state(g: &CovMatrix, bob: BobNoise) -> Result<CovMatrix> {
    g.direct_sum(&CovMatrix::epr(bob.n)?)
        .beamsplitter((BOB, 2), bob.t_b)?
        .homodyne(QuadratureSelector::x(BOB), 0.0)
}

/// Secret key rate of a protocol over a channel.
///
/// Squeezed-state configs in reverse reconciliation use the closed forms.
/// Everything else goes through [`keyrate_entanglement_based`].
pub fn keyrate(config: &ProtocolConfig, channel: &ChannelModel) -> Result<RateReport> {
    config.validate()?;
    let report = match (config.preparation, config.reconciliation) {
        (Preparation::Squeezed, Reconciliation::Reverse) => {
            let i_ab = mutual_info_ab(config.v, channel, config.chi_d)?;
            let terms = holevo_be_closed(config.v, channel, config.chi_d)?;
            RateReport {
                i_ab,
                holevo: terms.holevo,
                k: i_ab - terms.holevo,
                reconciliation: Reconciliation::Reverse,
                route: Route::ClosedForm,
                terms: Some(terms),
            }
        }
        _ => return keyrate_entanglement_based(config, channel),
    };
    Ok(apply_switching(config, report))
}

/// Key rate computed from covariance matrices alone.
///
/// Alice's preparation is a measurement on her half of an EPR pair of
/// variance `V`: homodyne for squeezed states, heterodyne for coherent
/// states. Bob's trusted noise `χ_D` is a vacuum ancilla on a beamsplitter.
/// Eve holds the purification of `γ_AB`, so her Holevo information is
/// `S(AB)` minus the entropy of everything except Eve after the reference
/// party's measurement.
pub fn keyrate_entanglement_based(config: &ProtocolConfig, channel: &ChannelModel) -> Result<RateReport> {
    config.validate()?;
    let g = gamma_ab(config.v, channel)?;

    let alice = match config.preparation {
        Preparation::Squeezed => Detection::Homodyne { quadrature: Quadrature::X, noise: 0.0 },
        Preparation::Coherent => Detection::Heterodyne,
    };
    let bob = match (config.preparation, config.bob_measurement) {
        // Keeping one heterodyne quadrature is a homodyne with χ_D = 1.
        (Preparation::Squeezed, _) => Detection::Homodyne { quadrature: Quadrature::X, noise: config.chi_d },
        (Preparation::Coherent, Measurement::Homodyne) => {
            Detection::Homodyne { quadrature: Quadrature::X, noise: 0.0 }
        }
        (Preparation::Coherent, Measurement::Heterodyne) => Detection::Heterodyne,
    };
    let outcomes = g.outcome_covariance(&[(ALICE, alice), (BOB, bob)])?;
    let alice_dim = if alice == Detection::Heterodyne { 2 } else { 1 };
    let i_ab = gaussian_mutual_info_blocks(&outcomes, alice_dim)?;

    let s_ab = g.entropy()?;
    let s_conditional = match config.reconciliation {
        Reconciliation::Reverse => match bob {
            Detection::Homodyne { noise, .. } if noise > 0.0 => {
                let model = match config.bob_model {
                    Some(m) => m,
                    None => BobNoise::from_chi_d(noise)?,
                };
                bob_conditional_state(&g, model)?.entropy()?
            }
            Detection::Homodyne { .. } => g.homodyne(QuadratureSelector::x(BOB), 0.0)?.entropy()?,
            Detection::Heterodyne => g.heterodyne(BOB)?.entropy()?,
        },
        Reconciliation::Direct => match (config.preparation, config.bob_measurement) {
            (Preparation::Squeezed, _) => g.homodyne(QuadratureSelector::x(ALICE), 0.0)?.entropy()?,
            (Preparation::Coherent, Measurement::Heterodyne) => g.heterodyne(ALICE)?.entropy()?,
            // Alice's key is one quadrature of her heterodyne: a homodyne
            // after a balanced beamsplitter with a vacuum ancilla, whose other
            // output stays on Alice's side.
            (Preparation::Coherent, Measurement::Homodyne) => g
                .direct_sum(&CovMatrix::vacuum())
                .beamsplitter((ALICE, 2), 0.5)?
                .homodyne(QuadratureSelector::x(ALICE), 0.0)?
                .entropy()?,
        },
    };
    let holevo = s_ab - s_conditional;
    let report = RateReport {
        i_ab,
        holevo,
        k: i_ab - holevo,
        reconciliation: config.reconciliation,
        route: Route::EntanglementBased,
        terms: None,
    };
    Ok(apply_switching(config, report))
}

fn apply_switching(config: &ProtocolConfig, report: RateReport) -> RateReport {
    if !config.switching {
        return report;
    }
    RateReport { i_ab: 0.5 * report.i_ab, holevo: 0.5 * report.holevo, k: 0.5 * report.k, ..report }
}

fn xyz(v: f64, channel: &ChannelModel) -> (f64, f64, f64) {
    let t = channel.transmittivity();
    (v, t * (v + channel.chi_c()), (t * (v * v - 1.0)).sqrt())
}

/// Square roots of the two roots of `u² - s u + p = 0`, larger first.
fn quadratic_roots(s: f64, p: f64, disc: f64) -> Result<(f64, f64)> {
    let big = 0.5 * (s + disc.sqrt());
    if !(big > 0.0) || !big.is_finite() {
        return Err(Error::numeric(format!("degenerate symplectic quadratic (sum {s}, product {p})")));
    }
    Ok((big.sqrt(), (p / big).sqrt()))
}

fn check_v(v: f64) -> Result<()> {
    if !(v >= 1.0) || !v.is_finite() {
        return Err(Error::domain(format!("V must be >= 1, got {v}")));
    }
    Ok(())
}

fn check_chi_d(chi_d: f64) -> Result<()> {
    if !(chi_d >= 0.0) || !chi_d.is_finite() {
        return Err(Error::domain(format!("chi_D must be >= 0, got {chi_d}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(t: f64, chi_c: f64) -> ChannelModel {
        ChannelModel::new(t, chi_c).unwrap()
    }

    #[test]
    fn gamma_ab_cases() {
        let g = gamma_ab(40.0, &ch(1.0, 0.0)).unwrap();
        assert_eq!(g, CovMatrix::epr(40.0).unwrap());

        let g = gamma_ab(1.0, &ch(0.3, 3.0)).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert!((g.get(2, 2) - 1.2).abs() < 1e-15);
        assert_eq!(g.get(0, 2), 0.0);

        let g = gamma_ab(40.0, &ch(0.5, 1.5)).unwrap();
        assert_eq!(g.get(2, 2), 20.75);
        assert_eq!(g.get(0, 2), 799.5f64.sqrt());
    }

    #[test]
    fn gamma_ab_rejects_below_pure_loss_line() {
        // chi_C < (1-T)/T: negative excess noise.
        let err = gamma_ab(40.0, &ch(0.5, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(holevo_be_closed(40.0, &ch(0.5, 0.5), 0.0).is_err());
    }

    #[test]
    fn mutual_info_cases() {
        let i = mutual_info_ab(40.0, &ch(1.0, 0.0), 0.0).unwrap();
        assert!((i - 40f64.log2()).abs() < 1e-13);

        let i = mutual_info_ab(40.0, &ch(0.5, 1.5), 1.0).unwrap();
        assert!((i - 0.5 * (43.5f64 / 3.525).log2()).abs() < 1e-14);
        // 50-digit reference
        assert!((i - 1.812_660_119_168_648_5).abs() < 1e-13);

        let c = ch(1.0, 0.5);
        let growth = mutual_info_ab(2e5, &c, 0.0).unwrap() - mutual_info_ab(1e5, &c, 0.0).unwrap();
        assert!((growth - 0.5).abs() < 1e-4);
    }

    #[test]
    fn pure_lossless_holevo_is_zero() {
        let cf = holevo_be_closed(40.0, &ch(1.0, 0.0), 0.0).unwrap();
        assert_eq!(cf.delta, 2.0);
        assert_eq!(cf.d, 1.0);
        assert!((cf.a - 2.0).abs() < 1e-12);
        assert!((cf.b - 1.0).abs() < 1e-12);
        for l in cf.lambda {
            assert!((l - 1.0).abs() < 1e-10);
        }
        assert!(cf.holevo.abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_reference_values() {
        // 30-digit references from the independent mpmath oracle.
        let c = ch(0.5, 1.5);
        let cf0 = holevo_be_closed(40.0, &c, 0.0).unwrap();
        assert!((cf0.lambda[0] - 20.721_874_559_983_095).abs() < 1e-11);
        assert!((cf0.lambda[1] - 1.471_874_559_983_094_6).abs() < 1e-12);
        assert!((cf0.s_ab - 5.684_507_714_422_345).abs() < 1e-11);
        assert!((cf0.holevo - 2.307_110_317_577_952).abs() < 1e-11);
        let cf1 = holevo_be_closed(40.0, &c, 1.0).unwrap();
        assert!((cf1.holevo - 1.744_799_450_953_535_7).abs() < 1e-11);
    }

    #[test]
    fn closed_form_invariants() {
        for &(v, t, eps, chi_d) in &[(40.0, 0.5, 0.5, 1.0), (2.0, 0.05, 0.0, 3.0), (100.0, 0.9, 2.0, 0.0)] {
            let c = ChannelModel::from_excess_noise(t, eps).unwrap();
            let cf = holevo_be_closed(v, &c, chi_d).unwrap();
            assert!(cf.delta * cf.delta >= 4.0 * cf.d * cf.d);
            assert!(cf.a * cf.a >= 4.0 * cf.b * (1.0 - 1e-12));
            assert!(cf.lambda.iter().all(|&l| l >= 1.0));
            // expanded D and Δ agree with their definitions
            assert!((cf.d - (cf.x * cf.y - cf.z * cf.z)).abs() <= 1e-10 * cf.x * cf.y);
            let delta_def = cf.x * cf.x + cf.y * cf.y - 2.0 * cf.z * cf.z;
            assert!((cf.delta - delta_def).abs() <= 1e-10 * cf.x * cf.x);
        }
    }

    #[test]
    fn oracle_matches_closed_form_at_new_protocol() {
        let c = ch(0.5, 1.5);
        let oracle = holevo_be_oracle(40.0, &c, BobNoise::new(0.5, 1.0).unwrap()).unwrap();
        let closed = holevo_be_closed(40.0, &c, 1.0).unwrap().holevo;
        assert!((oracle - closed).abs() <= 1e-8 * closed.max(1.0));
    }

    #[test]
    fn oracle_depends_only_on_chi_d() {
        let c = ch(0.2, 4.5);
        let a = holevo_be_oracle(30.0, &c, BobNoise::new(0.8, 5.0).unwrap()).unwrap();
        // same chi_D = 1.25 with a vacuum ancilla, and with N = 2.5
        let b = holevo_be_oracle(30.0, &c, BobNoise::from_chi_d(1.25).unwrap()).unwrap();
        let d = holevo_be_oracle(30.0, &c, BobNoise::new(2.0 / 3.0, 2.5).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!((a - d).abs() < 1e-9);
    }

    #[test]
    fn noiseless_keyrate_is_log2_v() {
        let r = keyrate(&ProtocolConfig::squeezed_homodyne(40.0).unwrap(), &ch(1.0, 0.0)).unwrap();
        assert!((r.k - 40f64.log2()).abs() < 1e-9);
        assert_eq!(r.route, Route::ClosedForm);
    }

    #[test]
    fn entanglement_route_reproduces_closed_forms() {
        let c = ChannelModel::from_excess_noise(0.3, 0.2).unwrap();
        for cfg in [
            ProtocolConfig::squeezed_homodyne(25.0).unwrap(),
            ProtocolConfig::squeezed_heterodyne(25.0).unwrap(),
            ProtocolConfig::squeezed_general(25.0, 2.5).unwrap(),
        ] {
            let a = keyrate(&cfg, &c).unwrap();
            let b = keyrate_entanglement_based(&cfg, &c).unwrap();
            assert!((a.i_ab - b.i_ab).abs() < 1e-12, "{cfg:?}");
            assert!((a.holevo - b.holevo).abs() < 1e-9, "{cfg:?}");
        }
    }

    #[test]
    fn coherent_presets_noiseless_limits() {
        // Identity channel: Eve learns nothing, I is the Shannon capacity of
        // the coherent-state modulation.
        let c = ch(1.0, 0.0);
        let v = 41.0;
        let hom = keyrate(&ProtocolConfig::coherent_homodyne(v).unwrap(), &c).unwrap();
        assert!((hom.i_ab - 0.5 * v.log2()).abs() < 1e-12);
        assert!(hom.holevo.abs() < 1e-9);
        let het = keyrate(&ProtocolConfig::coherent_heterodyne(v).unwrap(), &c).unwrap();
        assert!((het.i_ab - ((v + 1.0) / 2.0).log2()).abs() < 1e-12);
        assert!(het.holevo.abs() < 1e-9);
    }

    #[test]
    fn coherent_homodyne_pure_loss_rr_matches_known_form() {
        // RR has no range limit on a pure-loss line.
        let v = 1e4;
        let cfg = ProtocolConfig::coherent_homodyne(v).unwrap();
        let mut prev = f64::INFINITY;
        for db in [0.0, 3.0, 6.0, 10.0, 20.0] {
            let c = ChannelModel::from_loss_db(db, 0.0).unwrap();
            let k = keyrate(&cfg, &c).unwrap().k;
            assert!(k > 0.0 && k < prev, "{db} dB: {k}");
            prev = k;
        }
    }

    #[test]
    fn switching_halves_everything() {
        let c = ChannelModel::from_excess_noise(0.1, 0.1).unwrap();
        let het = ProtocolConfig::squeezed_heterodyne(40.0).unwrap();
        let a = keyrate(&het, &c).unwrap();
        let b = keyrate(&het.with_switching(true).unwrap(), &c).unwrap();
        assert_eq!(b.k, 0.5 * a.k);
        assert_eq!(b.k, b.i_ab - b.holevo);
    }

    #[test]
    fn degenerate_modulation_gives_no_key() {
        let c = ChannelModel::from_excess_noise(0.5, 0.3).unwrap();
        for chi_d in [0.0, 1.0, 4.0] {
            let r = keyrate(&ProtocolConfig::squeezed_general(1.0, chi_d).unwrap(), &c).unwrap();
            assert_eq!(r.i_ab, 0.0);
            assert!(r.k <= 0.0);
        }
    }

    #[test]
    fn negative_rates_are_reported_not_clamped() {
        let c = ChannelModel::from_loss_db(20.0, 1.0).unwrap();
        let r = keyrate(&ProtocolConfig::squeezed_homodyne(40.0).unwrap(), &c).unwrap();
        assert!(r.k < 0.0);
        assert_eq!(r.k, r.i_ab - r.holevo);
    }
}
