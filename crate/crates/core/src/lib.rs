//! Entanglement classification of three-qubit pure states.
//!
//! The pipeline: generate labeled states for the six SLOCC classes
//! ([`stategen`]), check labels against an independent oracle ([`oracle`]),
//! encode density matrices as real feature vectors and rank them with ANOVA
//! ([`features`]), then train feed-forward classifiers ([`nn`]) for the
//! model catalog and noise studies in [`experiments`].

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod features;
pub mod io;
pub mod nn;
pub mod oracle;
pub mod quantum;
pub mod stategen;

pub use error::{Error, Result};
