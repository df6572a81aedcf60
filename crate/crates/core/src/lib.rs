//! Secure SWIPT resource allocation with a non-linear energy-harvesting model.
//!
//! The crate computes transmit beamforming and artificial-noise covariance
//! that maximize the total power harvested by energy receivers while the
//! information receiver keeps a guaranteed secrecy rate. The optimizer is a
//! two-loop scheme: an outer damped-Newton iteration over the parametric
//! sum-of-ratios multipliers and an inner conditional-gradient loop over
//! linear semidefinite programs, followed by a rank-one reconstruction of the
//! beamformer.
//!
//! Module map:
//!
//! * [`eh`] non-linear and linear harvesting curves
//! * [`channel`] scenario configuration and Rician channel sampling
//! * [`sdp`] a small dense primal-dual interior-point SDP solver
//! * [`inner`] the inner problem, rank-one recovery and KKT checks
//! * [`outer`] the damped-Newton parameter loop
//! * [`baseline`] the linear-model baseline allocation
//! * [`metrics`] rates, secrecy rate and harvested-power reports
//! * [`scheme`] the allocation-scheme registry used by the simulator
//! * [`sim`] Monte-Carlo sweeps and single-instance reports

pub mod baseline;
pub mod channel;
pub mod eh;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod metrics;
pub mod outer;
pub mod scheme;
pub mod sdp;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
