//! CRB-versus-rate tradeoff machinery for multi-antenna ISAC multicast links.

pub mod beamforming;
pub mod config;
pub mod covariance_opt;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::{CMat, CVec, Real};

pub type SystemConfigF64 = model::SystemConfig<f64>;
pub type ChannelSetF64 = model::ChannelSet<f64>;
pub type TargetSetF64 = model::TargetSet<f64>;
pub type ScenarioF64 = metrics::Scenario<f64>;
pub type TransmitCovarianceF64 = metrics::TransmitCovariance<f64>;
