//! Prior-free auto-bidding auctions.
//!
//! Advertisers bid on independent single-slot queries under a return-on-spend
//! (ROS) constraint and maximise their total expected value. This crate holds
//! the pure numerical parts:
//!
//! - [`model`]: instances, bid profiles, liquid welfare and ROS accounting.
//! - [`mechanisms`]: SPA, FPA, the randomized first-price auction `rFPA(α)` and
//!   its truthful counterpart `rTruth(α)`, plus a Myerson-price quadrature oracle.
//! - [`autobidder`]: best responses under the ROS constraint and checkers for
//!   undominated bids.
//! - [`equilibrium`]: iterated best-response dynamics, γ-equilibrium checks and
//!   price-of-anarchy measurement.
//! - [`bounds`]: the dual welfare bound `f(α)` and the lower-bound instances.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autobidder;
pub mod bounds;
pub mod equilibrium;
mod error;
mod math;
pub mod mechanisms;
pub mod model;
pub mod numeric;

pub use error::{Error, Result};
pub use mechanisms::{MechanismKind, MechanismSpec, QueryOutcome, TieBreak};
pub use model::{Allocation, BidProfile, Instance, WelfareSummary};

/// Absolute tolerance for welfare and ROS comparisons on normalized instances.
pub const WELFARE_TOL: f64 = 1e-9;

/// Relative tolerance used for the (large-valued) lower-bound instances.
pub const LB_REL_TOL: f64 = 1e-7;
