//! Bessel functions of the first kind and their zeros.

mod bessel;
mod cache;
mod dd;
mod zeros;

pub use bessel::{bessel_j, MAX_ORDER};
pub use cache::{cache_dir, cached_bessel_zeros};
pub use zeros::{bessel_zeros, BesselZeroTable};

pub(crate) use bessel::{j_scaled, j_unchecked};
pub(crate) use zeros::mcmahon;
