//! Special functions: error function, Gaussian CDF, Bessel functions and
//! zeros of `J0`.

mod bessel;
mod erf;

pub use bessel::{
    bessel, i0, i0e, i1, i1e, j0, j0_zeros, j1, BesselKind, BesselZeroTable, I_OVERFLOW_GUARD,
};
pub use erf::{erf, erfc, normal_cdf, normal_pdf};
