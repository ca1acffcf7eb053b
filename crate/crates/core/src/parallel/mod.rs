//! Parallel families `f_t`, the closed-form transport of principal
//! curvatures along them, and the isoparametric criterion built on it.

mod coefficients;
mod criterion;
mod family;
mod symmetric;
mod transport;

pub use coefficients::{curvature_derivative, derivative_coefficients, CoefficientTable, MAX_ORDER};
pub use criterion::{isoparametric_cpc_test, CpcTolerances, CpcVerdict};
pub use family::{
    clip_t_range, parallel_immersion, parallel_normal, ParallelChart, ParallelFamily, PointSpectrum,
    TClip,
};
pub use symmetric::{charpoly_from_power_sums, power_sums, real_roots};
pub use transport::{
    model_parallel_curvature, regularity_margin, transport_curvature, transport_curvature_t, EPS_REG,
};
