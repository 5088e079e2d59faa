//! Weighted log-rank testing for two-arm survival data under non-proportional
//! hazards.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`] reduces raw subject records to a risk table,
//! - [`weights`] evaluates constant, modest and Fleming-Harrington weights,
//! - [`wlrt`] computes a single weighted log-rank statistic,
//! - [`combo`] combines two statistics into a max-combo test with equal or
//!   unequal alpha splits,
//! - [`simulator`] generates piecewise-exponential trials,
//! - [`harness`] estimates operating characteristics and assurance by Monte Carlo.

pub mod combo;
pub mod dataset;
mod error;
pub mod harness;
pub mod normal;
mod roots;
pub mod simulator;
pub mod weights;
pub mod wlrt;

pub use combo::{ComboResult, ComboSpec};
pub use dataset::{RiskTableRow, SurvivalRecord};
pub use error::{Error, Result};
pub use harness::{AssuranceSpec, MethodSpec, OperatingCharacteristics};
pub use simulator::{PiecewiseHazard, Scenario};
pub use weights::WeightSpec;
pub use wlrt::WlrtResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
