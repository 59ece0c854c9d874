//! Monte Carlo simulation of the prepare-and-measure protocol with squeezed
//! states: modulation, channel, Bob's detection, sifting and parameter
//! estimation.
//!
//! The per-round sampling law is read off the entanglement-based covariance
//! matrix. Alice measuring quadrature `q` of her half of the EPR pair
//! prepares a squeezed state displaced by `a` along `q`; Bob's outcomes are
//! jointly Gaussian with `a`, so they are drawn as a linear regression on
//! `a` plus noise with the conditional covariance.
//!
//! Rounds are generated in blocks of [`BLOCK_ROUNDS`]. Each block uses its
//! own ChaCha8 stream of the session seed, so the output does not depend on
//! how blocks are scheduled across threads.

use std::io::Write;

use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{gaussian_mutual_info, Detection, Quadrature};
use crate::output::fmt_sig;
use crate::protocol::{
    gamma_ab, holevo_be_closed, mutual_info_ab, ChannelModel, Measurement, Preparation, ProtocolConfig,
};

pub const BLOCK_ROUNDS: usize = 1 << 16;
/// Fewest revealed rounds accepted by [`estimate_channel`].
pub const MIN_REVEALED: usize = 100;
/// Fewest rounds accepted by [`empirical_rate`].
pub const MIN_RATE_ROUNDS: usize = 1000;

/// One round. `r = 0` means Alice modulated `x`, `r = 1` means `p`; `b` is
/// Bob's outcome for that quadrature. With homodyne detection Bob measures
/// only the matching quadrature and the other field is `NaN`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub r: u8,
    pub a: f64,
    pub b_x: f64,
    pub b_p: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub records: Vec<SimRecord>,
    pub n: usize,
    pub seed: u64,
    pub config: ProtocolConfig,
    pub channel: ChannelModel,
}

/// Channel parameters recovered from revealed `(a, b)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub t_hat: f64,
    pub chi_c_hat: f64,
    pub revealed: usize,
}

/// Regression of Bob's outcomes on `a` for one value of `r`:
/// `(b_x, b_p) = slope·a + L·z` with `z` standard normal.
#[derive(Debug, Clone, Copy)]
struct RoundLaw {
    slope: [f64; 2],
    chol: Matrix2<f64>,
}

/// How Bob's kept outcome scales with the channel:
/// `b = √(gain·T)·a + noise`, `Var(noise) = gain·(T(1/V + χ_C) + floor)`.
#[derive(Debug, Clone, Copy)]
struct DetectorBook {
    gain: f64,
    floor: f64,
}

fn detector_book(config: &ProtocolConfig) -> DetectorBook {
    match config.bob_measurement {
        // One heterodyne arm sees half the signal and one vacuum unit.
        Measurement::Heterodyne => DetectorBook { gain: 0.5, floor: 1.0 },
        Measurement::Homodyne => DetectorBook { gain: 1.0, floor: config.chi_d },
    }
}

fn check_supported(config: &ProtocolConfig) -> Result<()> {
    config.validate()?;
    if config.preparation != Preparation::Squeezed {
        return Err(Error::Unsupported(
            "Monte Carlo sessions support squeezed-state preparation only".into(),
        ));
    }
    if config.switching {
        return Err(Error::Unsupported("switching sessions are not simulated".into()));
    }
    Ok(())
}

fn round_law(config: &ProtocolConfig, channel: &ChannelModel, q: Quadrature) -> Result<RoundLaw> {
    let state = gamma_ab(config.v, channel)?;
    let bob = match config.bob_measurement {
        Measurement::Heterodyne => Detection::Heterodyne,
        Measurement::Homodyne => Detection::Homodyne { quadrature: q, noise: config.chi_d },
    };
    let joint =
        state.outcome_covariance(&[(0, Detection::Homodyne { quadrature: q, noise: 0.0 }), (1, bob)])?;
    // Outcome o of Alice's homodyne has variance V. The prepared
    // displacement is E[q_B | o] before the channel, i.e. a = κ·o with
    // κ = √(V² - 1)/V, so Var(a) = V - 1/V. The sign makes `a` point along
    // +q on Bob's side.
    let v = config.v;
    let var_o = joint[(0, 0)];
    let bob_idx: Vec<usize> = match config.bob_measurement {
        Measurement::Heterodyne => vec![1, 2],
        Measurement::Homodyne => vec![1],
    };
    let matched = match (config.bob_measurement, q) {
        (Measurement::Heterodyne, Quadrature::P) => 2,
        _ => 1,
    };
    let kappa = ((v * v - 1.0).sqrt() / v).copysign(joint[(0, matched)]);
    let var_a = kappa * kappa * var_o;

    let k = bob_idx.len();
    let mut slope = [0.0; 2];
    let mut cond = DMatrix::zeros(k, k);
    for (i, &bi) in bob_idx.iter().enumerate() {
        let cov_ab = kappa * joint[(0, bi)];
        slope[i] = if var_a > 0.0 { cov_ab / var_a } else { 0.0 };
        for (j, &bj) in bob_idx.iter().enumerate() {
            let cov_aj = kappa * joint[(0, bj)];
            cond[(i, j)] = joint[(bi, bj)] - if var_a > 0.0 { cov_ab * cov_aj / var_a } else { 0.0 };
        }
    }
    let l = cond
        .cholesky()
        .ok_or_else(|| Error::numeric("conditional outcome covariance is not positive definite"))?
        .l();
    let mut chol = Matrix2::zeros();
    for i in 0..k {
        for j in 0..=i {
            chol[(i, j)] = l[(i, j)];
        }
    }
    let (slope, chol) = if matches!(config.bob_measurement, Measurement::Homodyne) {
        // Place the single outcome in the slot of the measured quadrature.
        match q {
            Quadrature::X => (slope, chol),
            Quadrature::P => ([0.0, slope[0]], Matrix2::new(0.0, 0.0, 0.0, chol[(0, 0)])),
        }
    } else {
        (slope, chol)
    };
    Ok(RoundLaw { slope, chol })
}

/// Simulates `n` rounds. Deterministic in `seed`.
pub fn run_session(
    n: usize,
    config: &ProtocolConfig,
    channel: &ChannelModel,
    seed: u64,
) -> Result<SessionResult> {
    check_supported(config)?;
    let laws = [round_law(config, channel, Quadrature::X)?, round_law(config, channel, Quadrature::P)?];
    let sd_a = (config.v - 1.0 / config.v).sqrt();
    let homodyne = matches!(config.bob_measurement, Measurement::Homodyne);

    let block = |index: usize| -> Vec<SimRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let start = index * BLOCK_ROUNDS;
        let len = BLOCK_ROUNDS.min(n - start);
        (0..len)
            .map(|_| {
                let r = u8::from(rng.random::<bool>());
                let a = sd_a * rng.sample::<f64, _>(StandardNormal);
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                let law = &laws[r as usize];
                let noise = law.chol * nalgebra::Vector2::new(z0, z1);
                let mut b_x = law.slope[0] * a + noise[0];
                let mut b_p = law.slope[1] * a + noise[1];
                if homodyne {
                    if r == 0 {
                        b_p = f64::NAN;
                    } else {
                        b_x = f64::NAN;
                    }
                }
                let b = if r == 0 { b_x } else { b_p };
                SimRecord { r, a, b_x, b_p, b }
            })
            .collect()
    };

    let blocks = n.div_ceil(BLOCK_ROUNDS);
    #[cfg(feature = "parallel")]
    let chunks: Vec<Vec<SimRecord>> = {
        use rayon::prelude::*;
        (0..blocks).into_par_iter().map(block).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Vec<SimRecord>> = (0..blocks).map(block).collect();

    Ok(SessionResult { records: chunks.concat(), n, seed, config: *config, channel: *channel })
}

/// Sample covariance `[[Var a, Cov(a,b)], [Cov(a,b), Var b]]`.
fn sample_cov(records: &[SimRecord]) -> Matrix2<f64> {
    let n = records.len() as f64;
    let (ma, mb) = records.iter().fold((0.0, 0.0), |(sa, sb), r| (sa + r.a, sb + r.b));
    let (ma, mb) = (ma / n, mb / n);
    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    for r in records {
        let (da, db) = (r.a - ma, r.b - mb);
        saa += da * da;
        sab += da * db;
        sbb += db * db;
    }
    let d = n - 1.0;
    Matrix2::new(saa / d, sab / d, sab / d, sbb / d)
}

/// Moment estimates of `T` and `χ_C` from the first
/// `⌈reveal_fraction·n⌉` rounds.
///
/// The regression slope of `b` on `a` is `√(gain·T)` and the residual
/// variance is `gain·(T(1/V + χ_C) + floor)`, with `gain = ½, floor = 1`
/// for heterodyne and `gain = 1, floor = χ_D` for homodyne. Both relations
/// are inverted.
pub fn estimate_channel(result: &SessionResult, reveal_fraction: f64) -> Result<ChannelEstimate> {
    if !(reveal_fraction > 0.0 && reveal_fraction <= 1.0) {
        return Err(Error::domain(format!("reveal fraction must lie in (0, 1], got {reveal_fraction}")));
    }
    let revealed =
        ((reveal_fraction * result.records.len() as f64).ceil() as usize).min(result.records.len());
    if revealed < MIN_REVEALED {
        return Err(Error::Estimation(format!("{revealed} revealed rounds, need at least {MIN_REVEALED}")));
    }
    let cov = sample_cov(&result.records[..revealed]);
    if !(cov[(0, 0)] > 0.0) {
        return Err(Error::Estimation("Alice's sample variance is zero".into()));
    }
    let slope = cov[(0, 1)] / cov[(0, 0)];
    let residual = cov[(1, 1)] - cov[(0, 1)] * slope;
    let book = detector_book(&result.config);
    let t_hat = slope * slope / book.gain;
    if !(t_hat > 0.0) {
        return Err(Error::Estimation("no correlation between a and b".into()));
    }
    let chi_c_hat = (residual / book.gain - book.floor) / t_hat - 1.0 / result.config.v;
    Ok(ChannelEstimate { t_hat, chi_c_hat, revealed })
}

/// Plug-in mutual information of the whole sample and the key rate with the
/// Holevo term evaluated at the estimated channel.
///
/// Sampling noise can push the estimates just outside the physical domain
/// (T̂ > 1 or χ̂_C below the pure-loss line); the Holevo term is then
/// evaluated at the nearest physical channel.
pub fn empirical_rate(result: &SessionResult) -> Result<(f64, f64)> {
    if result.records.len() < MIN_RATE_ROUNDS {
        return Err(Error::Estimation(format!(
            "{} rounds, need at least {MIN_RATE_ROUNDS}",
            result.records.len()
        )));
    }
    let cov = sample_cov(&result.records);
    let i_hat = gaussian_mutual_info(&cov)
        .map_err(|e| Error::numeric(format!("degenerate sample covariance: {e}")))?;
    let est = estimate_channel(result, 1.0)?;
    let t = est.t_hat.min(1.0);
    let chi_c = est.chi_c_hat.max((1.0 - t) / t);
    let holevo = holevo_be_closed(result.config.v, &ChannelModel::new(t, chi_c)?, result.config.chi_d)?;
    Ok((i_hat, i_hat - holevo.holevo))
}

/// Everything a session reports, with the analytic values for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub n: usize,
    pub seed: u64,
    pub reveal_fraction: f64,
    pub t_hat: f64,
    pub chi_c_hat: f64,
    pub i_hat: f64,
    pub k_hat: f64,
    pub var_b_r0: f64,
    pub var_b_r1: f64,
    pub i_ab: f64,
    pub k: f64,
}

pub fn summarize(result: &SessionResult, reveal_fraction: f64) -> Result<SessionSummary> {
    let est = estimate_channel(result, reveal_fraction)?;
    let (i_hat, k_hat) = empirical_rate(result)?;
    let [var_b_r0, var_b_r1] =
        [0, 1].map(|r| variance(result.records.iter().filter(|x| x.r == r).map(|x| x.b)));
    let v = result.config.v;
    let i_ab = mutual_info_ab(v, &result.channel, result.config.chi_d)?;
    let holevo = holevo_be_closed(v, &result.channel, result.config.chi_d)?.holevo;
    Ok(SessionSummary {
        n: result.n,
        seed: result.seed,
        reveal_fraction,
        t_hat: est.t_hat,
        chi_c_hat: est.chi_c_hat,
        i_hat,
        k_hat,
        var_b_r0,
        var_b_r1,
        i_ab,
        k: i_ab - holevo,
    })
}

/// Unbiased sample variance; `NaN` for fewer than two values.
pub fn variance(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    if n < 2.0 {
        f64::NAN
    } else {
        m2 / (n - 1.0)
    }
}

/// Writes the records as CSV with columns `r,a,b_x,b_p,b`.
pub fn write_records_csv<W: Write>(records: &[SimRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::numeric(format!("csv: {e}"));
    w.write_record(["r", "a", "b_x", "b_p", "b"]).map_err(io)?;
    for rec in records {
        w.write_record([
            rec.r.to_string(),
            fmt_sig(rec.a),
            fmt_sig(rec.b_x),
            fmt_sig(rec.b_p),
            fmt_sig(rec.b),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::numeric(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn new_protocol() -> ProtocolConfig {
        ProtocolConfig::squeezed_heterodyne(40.0).unwrap()
    }

    #[test]
    fn law_matches_variance_budget() {
        let (v, t, chi_c) = (40.0, 0.5, 1.1);
        let ch = ChannelModel::new(t, chi_c).unwrap();
        for q in [Quadrature::X, Quadrature::P] {
            let law = round_law(&new_protocol(), &ch, q).unwrap();
            let (m, u) = match q {
                Quadrature::X => (0, 1),
                Quadrature::P => (1, 0),
            };
            assert!((law.slope[m] - (t / 2.0f64).sqrt()).abs() < 1e-14);
            assert_eq!(law.slope[u], 0.0);
            let cond = law.chol * law.chol.transpose();
            let matched = (t * (1.0 / v + chi_c) + 1.0) / 2.0;
            let unmatched = (t * (v + chi_c) + 1.0) / 2.0;
            assert!((cond[(m, m)] - matched).abs() < 1e-12);
            assert!((cond[(u, u)] - unmatched).abs() < 1e-12);
            assert!(cond[(0, 1)].abs() < 1e-12);
        }
    }

    #[test]
    fn homodyne_law() {
        let cfg = ProtocolConfig::squeezed_general(40.0, 0.3).unwrap();
        let ch = ChannelModel::new(0.5, 1.1).unwrap();
        let law = round_law(&cfg, &ch, Quadrature::P).unwrap();
        assert!((law.slope[1] - 0.5f64.sqrt()).abs() < 1e-14);
        let var = law.chol[(1, 1)].powi(2);
        assert!((var - (0.5 * (1.0 / 40.0 + 1.1) + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn sifting_and_determinism() {
        let ch = ChannelModel::from_excess_noise(0.5, 0.1).unwrap();
        let a = run_session(70_000, &new_protocol(), &ch, 7).unwrap();
        let b = run_session(70_000, &new_protocol(), &ch, 7).unwrap();
        assert_eq!(a.records.len(), 70_000);
        assert_eq!(a, b);
        for r in &a.records {
            assert_eq!(r.b, if r.r == 0 { r.b_x } else { r.b_p });
        }
        let c = run_session(70_000, &new_protocol(), &ch, 8).unwrap();
        assert_ne!(a.records[0], c.records[0]);
    }

    #[test]
    fn prefix_is_stable_across_lengths() {
        let ch = ChannelModel::new(1.0, 0.0).unwrap();
        let short = run_session(10, &new_protocol(), &ch, 3).unwrap();
        let long = run_session(100_000, &new_protocol(), &ch, 3).unwrap();
        assert_eq!(short.records[..], long.records[..10]);
    }

    #[test]
    fn coherent_is_unsupported() {
        let ch = ChannelModel::new(1.0, 0.0).unwrap();
        let cfg = ProtocolConfig::coherent_heterodyne(40.0).unwrap();
        assert!(matches!(run_session(10, &cfg, &ch, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn small_sessions() {
        let ch = ChannelModel::new(1.0, 0.0).unwrap();
        let empty = run_session(0, &new_protocol(), &ch, 1).unwrap();
        assert!(empty.records.is_empty());
        assert!(matches!(estimate_channel(&empty, 1.0), Err(Error::Estimation(_))));
        let two = run_session(2, &new_protocol(), &ch, 1).unwrap();
        assert!(matches!(estimate_channel(&two, 1.0), Err(Error::Estimation(_))));
        let few = run_session(500, &new_protocol(), &ch, 1).unwrap();
        assert!(estimate_channel(&few, 1.0).is_ok());
        assert!(empirical_rate(&few).is_err());
        assert!(estimate_channel(&few, 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let recs = [SimRecord { r: 1, a: 0.5, b_x: -1.25, b_p: 2.0, b: 2.0 }];
        let mut out = Vec::new();
        write_records_csv(&recs, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "r,a,b_x,b_p,b\n1,0.5,-1.25,2,2\n");
    }
}
