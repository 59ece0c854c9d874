use serde::{Deserialize, Serialize};

use super::{large_v_eval, tolerable_excess_noise, Scheme, SchemeRate, LARGE_V_TOL};
use crate::error::{Error, Result};
use crate::output::round_sig;
use crate::protocol::{transmittivity_from_db, ChannelModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    Fixed(f64),
    /// The V→∞ limit via [`large_v_eval`].
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSpec {
    Epsilon(f64),
    ChiC(f64),
}

impl NoiseSpec {
    pub fn channel(&self, t: f64) -> Result<ChannelModel> {
        match *self {
            NoiseSpec::Epsilon(eps) => ChannelModel::from_excess_noise(t, eps),
            NoiseSpec::ChiC(chi_c) => ChannelModel::new(t, chi_c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Key rate of each scheme at the given channel noise.
    KeyRate(NoiseSpec),
    /// Tolerable excess noise of each scheme.
    Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub losses_db: Vec<f64>,
    pub kind: SweepKind,
    pub modulation: Modulation,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.losses_db.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::domain("losses must be finite and >= 0 dB"));
        }
        if self.losses_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("loss grid must be strictly increasing"));
        }
        if let Modulation::Fixed(v) = self.modulation {
            for s in &self.schemes {
                s.with_v(v)?;
            }
        }
        Ok(())
    }
}

/// One loss value of a sweep. `values[i]` belongs to `schemes[i]` and is a
/// key rate or a tolerable excess noise depending on the sweep kind; a
/// failed evaluation leaves `NaN` and a message in `errors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub loss_db: f64,
    pub t: f64,
    pub values: Vec<f64>,
    /// Bob's noise for the last optimal-χ_D scheme of a key-rate sweep.
    pub chi_d_opt: Option<f64>,
    pub errors: Vec<String>,
    /// Some optimal-χ_D evaluation ended at [`CHI_D_CAP`].
    pub chi_d_at_cap: bool,
}

/// Grid `min, min+step, ..., <= max`, each value rounded to 12 significant
/// digits so that printed grid points parse back to the same number.
pub fn loss_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(min >= 0.0) || !(max >= min) || !max.is_finite() {
        return Err(Error::domain(format!("bad loss grid {min}:{step}:{max}")));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| round_sig(min + i as f64 * step)).collect())
}

/// Evaluates every scheme at every loss. Points are independent and run in
/// parallel when the `parallel` feature is on; the output order follows the
/// grid.
pub fn sweep_curves(spec: &SweepSpec) -> Result<Vec<CurvePoint>> {
    spec.validate()?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(spec.losses_db.par_iter().map(|&l| sweep_point(spec, l)).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(spec.losses_db.iter().map(|&l| sweep_point(spec, l)).collect())
    }
}

fn sweep_point(spec: &SweepSpec, loss_db: f64) -> CurvePoint {
    let t = transmittivity_from_db(loss_db).unwrap_or(f64::NAN);
    let mut point = CurvePoint {
        loss_db,
        t,
        values: Vec::with_capacity(spec.schemes.len()),
        chi_d_opt: None,
        errors: Vec::new(),
        chi_d_at_cap: false,
    };
    for scheme in &spec.schemes {
        match evaluate(spec, scheme, loss_db, t) {
            Ok(r) => {
                point.values.push(r.k);
                if matches!(scheme, Scheme::OptimalChiD { .. }) && r.chi_d.is_some() {
                    point.chi_d_opt = r.chi_d;
                }
                point.chi_d_at_cap |= r.at_cap;
            }
            Err(e) => {
                point.values.push(f64::NAN);
                point.errors.push(e.to_string());
            }
        }
    }
    point
}

/// The scheme's value at one loss; `k` holds ε_max for tolerance sweeps.
fn evaluate(spec: &SweepSpec, scheme: &Scheme, loss_db: f64, t: f64) -> Result<SchemeRate> {
    let at = |v: f64| -> Result<SchemeRate> {
        let s = scheme.with_v(v)?;
        match spec.kind {
            SweepKind::KeyRate(noise) => s.rate(&noise.channel(t)?),
            SweepKind::Tolerance => {
                Ok(SchemeRate { k: tolerable_excess_noise(&s, loss_db)?, chi_d: None, at_cap: false })
            }
        }
    };
    match spec.modulation {
        Modulation::Fixed(v) => at(v),
        Modulation::Large => {
            Ok(SchemeRate { k: large_v_eval(|v| Ok(at(v)?.k), LARGE_V_TOL)?, chi_d: None, at_cap: false })
        }
    }
}
