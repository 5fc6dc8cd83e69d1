//! Link-budget and link-distance planning for DECT-2020 NR class radio links.
//!
//! - [`propagation`]: free-space, 3GPP InH/InF LOS, two-ray, Okumura-Hata and
//!   COST-231 Hata path loss
//! - [`link_budget`]: empirical path loss, RX power/SNR prediction and the
//!   maximum-distance solver
//! - [`campaign`]: per-location aggregation of request logs
//! - [`fitting`]: log-distance least squares and a Levenberg-Marquardt engine
//! - [`config`], [`fixtures`], [`report`]: configuration, reference data and
//!   the emitters used by the `dectlink` CLI
//!
//! Batch operations take an [`Execution`]; the `parallel` feature (on by
//! default) runs them on the rayon pool.

pub mod campaign;
pub mod config;
pub mod error;
pub mod exec;
pub mod fitting;
pub mod fixtures;
pub mod link_budget;
pub mod propagation;
pub mod report;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
pub use units::{Distance, Frequency};
