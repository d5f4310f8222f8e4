//! Rhythmic control of automated vehicles on one-way grid networks.
//!
//! The crate is `no_std` (with `alloc`). The `std` feature only adds
//! conveniences that need an operating system, such as a wall clock.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bench;
pub mod demand;
pub mod error;
pub mod grid;
pub mod lp;
pub mod polyhedral;
pub mod rhythm;
pub mod rng;
pub mod routing;
pub mod sim;
pub mod speed_curve;

pub use error::Error;
