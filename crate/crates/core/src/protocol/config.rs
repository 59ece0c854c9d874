use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the consistency checks between redundant parameters.
const CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preparation {
    /// Squeezed vacuum displaced along its squeezed quadrature.
    Squeezed,
    /// Coherent states modulated in both quadratures.
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measurement {
    Homodyne,
    Heterodyne,
}

/// Whose data is the reference during error correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reconciliation {
    /// Bob's data is the reference.
    #[default]
    Reverse,
    /// Alice's data is the reference.
    Direct,
}

/// Bob's noise realized physically: his mode is mixed with one half of an
/// EPR pair of variance `n` on a beamsplitter of transmittivity `t_b`.
///
/// The same pair also describes a homodyne detector of efficiency `t_b` with
/// electronic noise `(1-t_b)(n-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BobNoise {
    pub t_b: f64,
    pub n: f64,
}

impl BobNoise {
    pub fn new(t_b: f64, n: f64) -> Result<Self> {
        if !(t_b > 0.0 && t_b <= 1.0) {
            return Err(Error::domain(format!("T_B must lie in (0, 1], got {t_b}")));
        }
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::domain(format!("N must be >= 1, got {n}")));
        }
        Ok(Self { t_b, n })
    }

    /// Vacuum ancilla with the transmittivity that yields `chi_d`.
    pub fn from_chi_d(chi_d: f64) -> Result<Self> {
        if !(chi_d >= 0.0) || !chi_d.is_finite() {
            return Err(Error::domain(format!("chi_D must be >= 0, got {chi_d}")));
        }
        Self::new(1.0 / (1.0 + chi_d), 1.0)
    }

    /// `χ_D = (1-T_B) N / T_B`, referred to Bob's input.
    pub fn chi_d(&self) -> f64 {
        (1.0 - self.t_b) * self.n / self.t_b
    }

    /// Electronic noise of the equivalent inefficient detector.
    pub fn electronic_noise(&self) -> f64 {
        (1.0 - self.t_b) * (self.n - 1.0)
    }
}

/// The four named Gaussian protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    SqueezedHomodyne,
    /// Squeezed states with heterodyne detection.
    SqueezedHeterodyne,
    CoherentHomodyne,
    CoherentHeterodyne,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::SqueezedHomodyne,
        Preset::SqueezedHeterodyne,
        Preset::CoherentHomodyne,
        Preset::CoherentHeterodyne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SqueezedHomodyne => "squeezed-homodyne",
            Preset::SqueezedHeterodyne => "squeezed-heterodyne",
            Preset::CoherentHomodyne => "coherent-homodyne",
            Preset::CoherentHeterodyne => "coherent-heterodyne",
        }
    }

    pub fn config(self, v: f64) -> Result<ProtocolConfig> {
        match self {
            Preset::SqueezedHomodyne => ProtocolConfig::squeezed_homodyne(v),
            Preset::SqueezedHeterodyne => ProtocolConfig::squeezed_heterodyne(v),
            Preset::CoherentHomodyne => ProtocolConfig::coherent_homodyne(v),
            Preset::CoherentHeterodyne => ProtocolConfig::coherent_heterodyne(v),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squeezed-homodyne" => Ok(Preset::SqueezedHomodyne),
            "squeezed-heterodyne" | "new" => Ok(Preset::SqueezedHeterodyne),
            "coherent-homodyne" => Ok(Preset::CoherentHomodyne),
            "coherent-heterodyne" => Ok(Preset::CoherentHeterodyne),
            other => Err(Error::domain(format!("unknown preset '{other}'"))),
        }
    }
}

/// One Gaussian protocol.
///
/// `v` is the variance of the EPR source in the entanglement-based picture;
/// Alice's prepare-and-measure modulation variance is `v - 1/v`.
///
/// For squeezed preparation with heterodyne detection `chi_d` is pinned to 1:
/// keeping one heterodyne quadrature is a homodyne behind a balanced
/// beamsplitter with vacuum. Coherent preparation carries no Bob noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub preparation: Preparation,
    pub bob_measurement: Measurement,
    pub v: f64,
    pub chi_d: f64,
    pub reconciliation: Reconciliation,
    pub bob_model: Option<BobNoise>,
    /// Bob homodynes a random quadrature instead of heterodyning and keeps
    /// only matching rounds, halving every rate. Heterodyne configs only.
    pub switching: bool,
}

impl ProtocolConfig {
    /// Squeezed states, Bob homodyne with added noise `chi_d`.
    pub fn squeezed_general(v: f64, chi_d: f64) -> Result<Self> {
        Self {
            preparation: Preparation::Squeezed,
            bob_measurement: Measurement::Homodyne,
            v,
            chi_d,
            reconciliation: Reconciliation::Reverse,
            bob_model: None,
            switching: false,
        }
        .validated()
    }

    pub fn squeezed_homodyne(v: f64) -> Result<Self> {
        Self::squeezed_general(v, 0.0)
    }

    pub fn squeezed_heterodyne(v: f64) -> Result<Self> {
        Self {
            preparation: Preparation::Squeezed,
            bob_measurement: Measurement::Heterodyne,
            v,
            chi_d: 1.0,
            reconciliation: Reconciliation::Reverse,
            bob_model: Some(BobNoise::new(0.5, 1.0)?),
            switching: false,
        }
        .validated()
    }

    /// Squeezed states with Bob's noise given physically as `(T_B, N)`.
    pub fn squeezed_with_bob_model(v: f64, bob: BobNoise) -> Result<Self> {
        Self { bob_model: Some(bob), ..Self::squeezed_general(v, bob.chi_d())? }.validated()
    }

    pub fn coherent_homodyne(v: f64) -> Result<Self> {
        Self {
            preparation: Preparation::Coherent,
            bob_measurement: Measurement::Homodyne,
            v,
            chi_d: 0.0,
            reconciliation: Reconciliation::Reverse,
            bob_model: None,
            switching: false,
        }
        .validated()
    }

    pub fn coherent_heterodyne(v: f64) -> Result<Self> {
        Self { bob_measurement: Measurement::Heterodyne, ..Self::coherent_homodyne(v)? }.validated()
    }

    pub fn with_reconciliation(self, reconciliation: Reconciliation) -> Result<Self> {
        Self { reconciliation, ..self }.validated()
    }

    pub fn with_switching(self, switching: bool) -> Result<Self> {
        Self { switching, ..self }.validated()
    }

    pub fn with_v(self, v: f64) -> Result<Self> {
        Self { v, ..self }.validated()
    }

    /// Prepare-and-measure modulation variance `V_a = V - 1/V`.
    pub fn modulation_variance(&self) -> f64 {
        self.v - 1.0 / self.v
    }

    pub fn preset(&self) -> Option<Preset> {
        match (self.preparation, self.bob_measurement) {
            (Preparation::Squeezed, Measurement::Homodyne) if self.chi_d == 0.0 => {
                Some(Preset::SqueezedHomodyne)
            }
            (Preparation::Squeezed, Measurement::Homodyne) => None,
            (Preparation::Squeezed, Measurement::Heterodyne) => Some(Preset::SqueezedHeterodyne),
            (Preparation::Coherent, Measurement::Homodyne) => Some(Preset::CoherentHomodyne),
            (Preparation::Coherent, Measurement::Heterodyne) => Some(Preset::CoherentHeterodyne),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v >= 1.0) || !self.v.is_finite() {
            return Err(Error::domain(format!("V must be >= 1, got {}", self.v)));
        }
        if !(self.chi_d >= 0.0) || !self.chi_d.is_finite() {
            return Err(Error::domain(format!("chi_D must be >= 0, got {}", self.chi_d)));
        }
        if let Some(bob) = self.bob_model {
            BobNoise::new(bob.t_b, bob.n)?;
            if (bob.chi_d() - self.chi_d).abs() > CONSISTENCY_TOL * self.chi_d.max(1.0) {
                return Err(Error::domain(format!(
                    "Bob model gives chi_D = {} but config has {}",
                    bob.chi_d(),
                    self.chi_d
                )));
            }
        }
        match (self.preparation, self.bob_measurement) {
            (Preparation::Squeezed, Measurement::Heterodyne) if self.chi_d != 1.0 => {
                return Err(Error::domain("squeezed + heterodyne fixes chi_D = 1"));
            }
            (Preparation::Coherent, _) if self.chi_d != 0.0 || self.bob_model.is_some() => {
                return Err(Error::domain("coherent-state presets carry no Bob noise"));
            }
            _ => {}
        }
        if self.switching && self.bob_measurement != Measurement::Heterodyne {
            return Err(Error::domain("the switching variant replaces a heterodyne detection"));
        }
        Ok(())
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}
