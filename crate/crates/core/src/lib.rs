//! Analytical lower bounds on the asymptotic secret key rate of
//! continuous-variable QKD with arbitrary coherent-state modulations.

// `!(x >= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod channel;
pub mod constellation;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod keyrate;
pub mod mixed;
pub mod scan;

pub use bound::{
    analyze, analyze_with, gaussian_analysis, AnalysisOptions, ChannelStats, CovarianceBound,
    ModulationAnalysis, ZInterval,
};
pub use channel::Channel;
pub use constellation::Constellation;
pub use error::{Error, Result};
pub use keyrate::{key_rate, key_rate_from_stats, Detection, KeyRateConfig, KeyRateResult};
pub use mixed::{analyze_mixed, MixedAnalysis, MixedConstellation};
pub use scan::{Model, ModulationSpec};
