//! Machine-learning based selection of simulation-based driving tests.
//!
//! The crate generates virtual-road test cases, labels them with a
//! kinematic surrogate driver, extracts road features, trains classifiers
//! and runs test-selection experiments with full cost accounting.

pub mod experiments;
pub mod features;
pub mod learn;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod road;
pub mod scenario;
pub mod sim;
