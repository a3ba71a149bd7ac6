//! Skew Brownian motion numerics without the standard library.
//!
//! The crate covers the whole pipeline around a skew Brownian motion
//! `W_β`: its transition density and exact sampling ([`model`]), path
//! constructions ([`sim`]), local-time estimators ([`localtime`]),
//! Ray-Knight synthesis of local-time profiles ([`rayknight`]), closed-form
//! laws of the supremum of local time ([`analytic`]) and finite-difference
//! solvers for the Feynman-Kac boundary value problems behind them
//! ([`fksolver`]).
//!
//! Only `alloc` is required. Enable the `std` feature to route float math
//! through the platform library instead of `libm`.
#![no_std]

extern crate alloc;

pub mod analytic;
pub mod error;
pub mod fksolver;
pub mod localtime;
pub mod model;
pub mod quad;
pub mod rayknight;
pub mod rng;
pub mod sim;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use model::SkewParam;
pub use rng::RandomStream;
