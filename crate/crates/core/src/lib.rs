//! Design models for continuous-wave squeezed-light sources built around a
//! below-threshold optical parametric oscillator pumped by an
//! external-cavity frequency doubler.
//!
//! * [`nlo`]: focused-Gaussian SHG theory, `d_eff` <-> `E_NL`, cavity waist
//! * [`opo`]: pump-dependent loss, threshold, escape efficiency, gain
//! * [`squeezing`]: detected squeezing/antisqueezing spectra
//! * [`shg`]: enhancement-cavity doubler buildup and conversion
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod nlo;
pub mod numerics;
pub mod opo;
pub mod shg;
pub mod squeezing;

pub use error::{Error, Result};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
