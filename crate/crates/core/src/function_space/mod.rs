//! Periodic grids, vector-valued grid functions, transforms, weights and norms.

mod ap;
mod degenerate;
mod grid;
mod norms;
mod transform;
mod weight;

pub use ap::{ap_average, ap_constant, dyadic_family, require_ap, Cube};
pub use degenerate::{degenerate_substitution, Degeneracy, Substitution, DIVERGENCE_RATIO};
pub use grid::{lq_norm, Anisotropy, Grid, MultiIndex, ValueSpace};
pub use norms::{graph_norm, mixed_norm, sobolev_lions_norm, weighted_lp_norm, TimeSeries};
pub use transform::{
    derivative_factor, differentiate_spectrum, forward_transform, inverse_transform, spectral_derivative,
    GridFunction, Spectrum,
};
pub use weight::{Weight, WeightKind};
