use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::{loss_grid, CurvePoint, Modulation, NoiseSpec, SweepKind, SweepSpec};
use super::Scheme;
use crate::error::{Error, Result};
use crate::protocol::{Preset, ProtocolConfig};

/// Excess noise and modulation of the fixed-V key-rate figures.
pub const FIGURE_EPSILON: f64 = 0.5;
pub const FIGURE_V: f64 = 40.0;

/// Canned sweeps with fixed parameters and column layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    /// Tolerable excess noise of every preset and of the optimal scheme
    /// against loss, V→∞.
    Fig2a,
    /// Key rate for χ_D = 0, χ_D = 1 and optimal χ_D at ε = 0.5, V = 40.
    Fig2b,
    /// Optimal key rate with the two fixed choices for reference.
    Fig4a,
    /// Optimal χ_D and the rate it achieves.
    Fig4b,
}

/// What a CSV column reads from a [`CurvePoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Loss,
    Value(usize),
    ChiDOpt,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2a, Figure::Fig2b, Figure::Fig4a, Figure::Fig4b];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2a => "2a",
            Figure::Fig2b => "2b",
            Figure::Fig4a => "4a",
            Figure::Fig4b => "4b",
        }
    }

    pub fn spec(self) -> Result<SweepSpec> {
        let rate_sweep = |schemes: Vec<Scheme>| -> Result<SweepSpec> {
            Ok(SweepSpec {
                losses_db: loss_grid(0.0, 25.0, 0.5)?,
                kind: SweepKind::KeyRate(NoiseSpec::Epsilon(FIGURE_EPSILON)),
                modulation: Modulation::Fixed(FIGURE_V),
                schemes,
            })
        };
        let hom = Scheme::Config(ProtocolConfig::squeezed_homodyne(FIGURE_V)?);
        let het = Scheme::Config(ProtocolConfig::squeezed_heterodyne(FIGURE_V)?);
        let opt = Scheme::OptimalChiD { v: FIGURE_V };
        match self {
            Figure::Fig2a => {
                let mut schemes = Preset::ALL
                    .iter()
                    .map(|p| Ok(Scheme::Config(p.config(FIGURE_V)?)))
                    .collect::<Result<Vec<_>>>()?;
                schemes.push(opt);
                Ok(SweepSpec {
                    losses_db: loss_grid(0.0, 20.0, 1.0)?,
                    kind: SweepKind::Tolerance,
                    modulation: Modulation::Large,
                    schemes,
                })
            }
            Figure::Fig2b => rate_sweep(vec![hom, het, opt]),
            Figure::Fig4a => rate_sweep(vec![opt, hom, het]),
            Figure::Fig4b => rate_sweep(vec![opt]),
        }
    }

    /// Header names paired with their sources, in output order.
    pub fn columns(self) -> Vec<(&'static str, Column)> {
        use Column::*;
        match self {
            Figure::Fig2a => vec![
                ("loss_db", Loss),
                ("eps_sq_hom", Value(0)),
                ("eps_new", Value(1)),
                ("eps_coh_hom", Value(2)),
                ("eps_coh_het", Value(3)),
                ("eps_opt", Value(4)),
            ],
            Figure::Fig2b => {
                vec![("loss_db", Loss), ("K_chiD0", Value(0)), ("K_chiD1", Value(1)), ("K_opt", Value(2))]
            }
            Figure::Fig4a => {
                vec![("loss_db", Loss), ("K_opt", Value(0)), ("K_chiD0", Value(1)), ("K_chiD1", Value(2))]
            }
            Figure::Fig4b => vec![("loss_db", Loss), ("chi_d_opt", ChiDOpt), ("K_opt", Value(0))],
        }
    }
}

impl Column {
    pub fn read(self, p: &CurvePoint) -> f64 {
        match self {
            Column::Loss => p.loss_db,
            Column::Value(i) => p.values.get(i).copied().unwrap_or(f64::NAN),
            Column::ChiDOpt => p.chi_d_opt.unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s.trim_start_matches("fig"))
            .ok_or_else(|| Error::domain(format!("unknown figure '{s}', expected 2a, 2b, 4a or 4b")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_fit_schemes() {
        for fig in Figure::ALL {
            let spec = fig.spec().unwrap();
            spec.validate().unwrap();
            for (_, col) in fig.columns() {
                if let Column::Value(i) = col {
                    assert!(i < spec.schemes.len(), "{fig}");
                }
            }
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("2b".parse::<Figure>().unwrap(), Figure::Fig2b);
        assert_eq!("fig4a".parse::<Figure>().unwrap(), Figure::Fig4a);
        assert!("3".parse::<Figure>().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(Figure::Fig2b.spec().unwrap().losses_db.len(), 51);
        assert_eq!(Figure::Fig2a.spec().unwrap().losses_db.len(), 21);
    }
}
