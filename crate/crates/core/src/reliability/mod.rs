//! Channel-specific bit-channel quality.
//!
//! Two evaluators are built in: the exact Bhattacharyya recursion for the
//! binary erasure channel and the Gaussian approximation for BPSK over AWGN.
//! Rankings from any other source (a degrading-merge implementation, say) can
//! be imported through the JSON exchange format.

mod bec;
pub mod ga;
mod ranking;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use bec::{bec_bhattacharyya, bec_log_odds};
pub use ga::{ga_awgn_ln_means, ga_awgn_means};
pub use ranking::{import_ranking, rank_channels, ReliabilityRanking, RANKING_FORMAT_VERSION};

/// Largest block exponent a ranking may have.
pub const MAX_RANKING_LEVELS: u32 = 24;

#[derive(Debug, Error)]
pub enum ReliabilityError {
    #[error("erasure probability {0} outside [0, 1]")]
    Erasure(f64),
    #[error("SNR {0} dB is not finite")]
    Snr(f64),
    #[error("cannot parse channel spec {0:?}; expected bec:<erasure> or awgn:<snr_db>")]
    ChannelSpec(String),
    #[error("ranking levels {0} outside 1..={MAX_RANKING_LEVELS}")]
    Levels(u32),
    #[error("malformed ranking: {0}")]
    Format(String),
    #[error("malformed ranking JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// The underlying binary-input channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// Binary erasure channel with erasure probability `erasure`.
    Bec { erasure: f64 },
    /// Unit-energy BPSK over AWGN at `snr_db` = Es/N0 in dB.
    AwgnBpsk { snr_db: f64 },
}

impl ChannelModel {
    pub fn bec(erasure: f64) -> Result<Self, ReliabilityError> {
        if !(0.0..=1.0).contains(&erasure) {
            return Err(ReliabilityError::Erasure(erasure));
        }
        Ok(Self::Bec { erasure })
    }

    pub fn awgn(snr_db: f64) -> Result<Self, ReliabilityError> {
        if !snr_db.is_finite() {
            return Err(ReliabilityError::Snr(snr_db));
        }
        Ok(Self::AwgnBpsk { snr_db })
    }

    /// Name of the built-in evaluator for this channel.
    pub fn evaluator(&self) -> &'static str {
        match self {
            Self::Bec { .. } => "bec-exact",
            Self::AwgnBpsk { .. } => "ga",
        }
    }

    /// Per-channel quality at `N = 2^n`, larger is better: BEC log-odds of
    /// `Z`, or the log of the GA LLR mean.
    pub fn metric(&self, n: u32) -> Vec<f64> {
        match *self {
            Self::Bec { erasure } => bec_log_odds(n, erasure),
            Self::AwgnBpsk { snr_db } => ga_awgn_ln_means(n, snr_db),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bec { erasure } => write!(f, "bec:{erasure}"),
            Self::AwgnBpsk { snr_db } => write!(f, "awgn:{snr_db}"),
        }
    }
}

impl FromStr for ChannelModel {
    type Err = ReliabilityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReliabilityError::ChannelSpec(s.to_string());
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "bec" => Self::bec(value),
            "awgn" => Self::awgn(value),
            _ => Err(bad()),
        }
    }
}
