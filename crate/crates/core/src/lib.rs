//! Simulation and likelihood-based inference for a stochastic SEIR epidemic
//! that co-evolves with a dynamic contact network.
//!
//! The joint process is a continuous-time Markov chain over individual
//! disease statuses (S, E, Ia, Is, R) and pairwise contact links. This crate
//! provides
//!
//! * an exact event-driven simulator ([`simulate`]),
//! * sufficient statistics, the complete-data log-likelihood and its score
//!   ([`stats`], [`likelihood`]),
//! * complete-data maximum likelihood, including the offset Poisson
//!   regression kernel ([`estimate`]),
//! * conditional samplers for missing exposure and recovery times
//!   ([`hazard`], [`impute`]),
//! * the stochastic EM driver with averaging and Louis-identity standard
//!   errors ([`stem`], [`variance`]),
//! * file formats for event logs, covariates, configurations and results ([`io`]).

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collections;
pub mod error;
pub mod estimate;
pub mod hazard;
pub mod impute;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod model;
pub mod num;
pub mod observed;
pub mod simulate;
pub mod stats;
pub mod stem;
pub mod variance;

pub use error::{Error, Result};
pub use model::{
    Covariates, DiseaseStatus, Event, EventKind, EventLog, ExternalParams, LinkRates, Network, Parameters, Phase,
    PhaseSchedule, Subtype, Time,
};
pub use num::Real;

/// Step hazard over `f64`, the precision used throughout inference.
pub type StepHazard = hazard::StepHazard<f64>;
/// Step hazard over `f32`.
pub type StepHazard32 = hazard::StepHazard<f32>;
/// Dense matrix over `f64`.
pub type Matrix = linalg::Matrix<f64>;
