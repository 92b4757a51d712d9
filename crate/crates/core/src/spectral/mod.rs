//! Radial profiles, radial Fourier transforms, filter banks and space norms.

pub mod filters;
mod hankel;
pub mod norms;
mod profile;

pub use filters::{
    build_filter_bank, default_freq_grid, frame_band, frame_band_support, lp_band, lp_band_support,
    BankVariant, FilterBank, FRAME_ALIGNMENT, PARTITION_TOLERANCE,
};
pub use hankel::{hankel_transform, sphere_area};
pub(crate) use hankel::{forward_constant, order};
pub use norms::{
    besov_norm, l2_norm, lp_piece, tl_norm, weighted_lp_norm, LpDecomposition, NormResult, SpaceKind,
    SpaceParams,
};
pub use profile::{
    sphere_measure_mass, sphere_measure_spectrum, BandFilter, Interpolation, ProfileForm, RadialProfile, Term,
};
