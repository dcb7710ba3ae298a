//! Monte Carlo simulator for RIS-aided physical-layer mutual authentication
//! in monostatic backscatter (MBC) links.
//!
//! The tag authenticates the reader from the voltage profile its energy
//! detector records while the reader sends an on-off keyed power sequence;
//! the reader authenticates the tag from the RIS-enhanced received signal
//! strength of its backscattered reply. Around that protocol the crate
//! models the adversaries (fake readers, impersonating tags, relays,
//! jammers, a compromised RIS), computes secrecy capacity, and turns trial
//! streams into ROC curves.
//!
//! Module map:
//!
//! * [`config`]: scenario constants and the flat key/value config format
//! * [`channel`]: Rayleigh channel draws and the received-signal models
//! * [`ris`]: phase configurations under trusted and compromised control
//! * [`tag`]: energy detector, voltage profiles, reader authentication
//! * [`reader`]: RSS measurement, ratio statistic, tag database
//! * [`adversary`]: per-trial generators for legitimate and attack trials
//! * [`secrecy`]: secrecy rate and average secrecy capacity
//! * [`roc`]: empirical ROC curves and AUC
//! * [`experiments`]: named experiment pipelines behind the CLI

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod reader;
pub mod ris;
pub mod rng;
pub mod roc;
pub mod secrecy;
pub mod tag;

pub use error::{Error, Result};

use serde::Serialize;

/// Outcome of an authentication check on either side of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        matches!(self, Decision::Accept)
    }
}
