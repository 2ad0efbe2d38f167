//! Gaussian approximate filters (EKF, CKF, UKF, GHF) for bearings-only
//! target tracking, with two adaptive measurement updates for unknown
//! measurement-noise mean and variance: a variational-Bayes update under a
//! normal-inverse-Wishart prior, and a MAP-mean / residual-MLE update.
//!
//! The crate is `no_std` and only needs `alloc`. Randomness is injected as
//! any [`rand::Rng`]; IO, timing, and file formats live in the `vbtrack`
//! companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod filter;
pub mod linear;
pub mod mapmle;
pub mod measurement;
pub mod metrics;
pub mod moments;
pub mod pipeline;
pub mod scenario;
pub mod special;
pub mod vbniw;

pub use error::{Error, Result};
pub use filter::{GaussianBelief, ProcessModel};
pub use moments::{MomentRule, RuleKind};

pub type Vector4 = nalgebra::Vector4<f64>;
pub type Matrix4 = nalgebra::Matrix4<f64>;

/// Dimension of the relative state `(x, y, vx, vy)`.
pub const STATE_DIM: usize = 4;
