//! Hierarchical reinforcement-learning search over categorical feature
//! crosses.
//!
//! Numeric columns are discretised with ChiMerge, every column is hashed into
//! a fixed number of buckets, and two cooperating deep Q-learning agents grow
//! the feature set one Cartesian cross at a time, rewarded by downstream
//! logistic-regression accuracy, relevance and redundancy. The numeric core
//! is generic over [`scalar::Scalar`]; the aliases below fix it to `f64`.

pub mod binning;
pub mod dataset;
pub mod downstream;
pub mod error;
pub mod experiment;
pub mod hashing;
pub mod hrc;
pub mod metrics;
pub mod rl;
pub mod scalar;
pub mod state;
pub mod synthetic;

pub use error::{Error, Result};

pub type StateVector = state::StateVector<f64>;
pub type FeatureRep = state::FeatureRep<f64>;
pub type ClassificationMetrics = metrics::ClassificationMetrics<f64>;
pub type LrModel = downstream::LrModel<f64>;
pub type QNetwork = rl::QNetwork<f64>;
pub type Agent = rl::Agent<f64>;
pub type Adam = rl::Adam<f64>;
pub type Transition = rl::Transition<f64>;
pub type ReplayMemory = rl::ReplayMemory<f64>;
pub type RunOutcome = hrc::RunOutcome<f64>;
pub type BestSetMemory = hrc::BestSetMemory<f64>;
