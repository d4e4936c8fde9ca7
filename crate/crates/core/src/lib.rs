//! Event-level simulation and exact enumeration of energy-time Bell-CHSH
//! experiments.
//!
//! Two interferometer layouts are modelled. In the Franson layout each
//! photon's S/L decision may follow its local phase setting, so coincidence
//! postselection lets a local model reach any `β` in `[−4, 4]`
//! ([`lhv::paper_model`]). In the genuine layout a short/long mismatch puts
//! both photons on the same side, rejection is local, and the kept ensemble
//! cannot depend on the settings; the classical bound `|β| ≤ 2` holds again
//! ([`strategy_search::extremal_beta`]).

pub mod cli;
pub mod config;
pub mod config_validator;
pub mod error;
pub mod lhv;
pub mod montecarlo;
pub mod phys_model;
pub mod postselect;
pub mod strategy_search;

pub use error::{Error, Result};
