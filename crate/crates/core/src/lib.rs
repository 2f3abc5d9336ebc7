//! Early identification of snap-joint assembly failures from truncated
//! force/torque profiles, with probing and recovery.
//!
//! Pipeline: [`profile`] recordings are truncated at a horizon, turned into
//! per-channel principal component scores by [`fpca`], and classified by a
//! [`tree`] of binary [`svm`] nodes. [`probe`] adds the low-confidence
//! probing step and maps states to recovery motions; [`sim`] provides the
//! synthetic plant and closed-loop episodes; [`cli`] wires it all together.

pub mod cli;
pub mod error;
pub mod fpca;
pub mod probe;
pub mod profile;
pub mod sim;
pub mod svm;
pub mod tree;

pub use error::{Error, Result};
