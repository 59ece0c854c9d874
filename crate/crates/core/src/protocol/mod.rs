//! Protocol descriptions and key-rate evaluation.

mod channel;
mod config;
mod rates;

pub use channel::{chi_line, transmittivity_from_db, ChannelModel};
pub use config::{BobNoise, Measurement, Preparation, Preset, ProtocolConfig, Reconciliation};
pub use rates::{
    gamma_ab, holevo_be_closed, holevo_be_oracle, keyrate, keyrate_entanglement_based, mutual_info_ab,
    ClosedForm, RateReport, Route,
};
