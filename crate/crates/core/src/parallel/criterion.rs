use rayon::prelude::*;
use serde::Serialize;

use super::family::PointSpectrum;
use crate::chart::{Chart, Grid};
use crate::error::{GeomError, Result};
use crate::immersion::{shape_data, EPS_T};
use crate::linalg::spread;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpcTolerances {
    pub tnorm: f64,
    pub curvature: f64,
}

impl Default for CpcTolerances {
    fn default() -> Self {
        Self {
            tnorm: 1e-8,
            curvature: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpcVerdict {
    pub tnorm_spread: f64,
    /// Largest spread over the grid of the `k`-th smallest curvature, per `t`.
    pub curvature_spread_per_t: Vec<f64>,
    /// Spread of the mean curvature of `f_t`, per `t`.
    pub mean_curvature_spread_per_t: Vec<f64>,
    pub t_values: Vec<f64>,
    pub constant_tnorm: bool,
    pub constant_curvatures: bool,
    /// Whether the two sides agree.
    pub implication_check: bool,
}

/// Decides whether `|T|` is constant and whether the principal curvatures of
/// every `f_t` are constant over `grid`, and whether the two answers agree.
pub fn isoparametric_cpc_test(
    chart: &dyn Chart,
    grid: &Grid,
    t_values: &[f64],
    tol: CpcTolerances,
) -> Result<CpcVerdict> {
    if t_values.is_empty() {
        return Err(GeomError::Usage("empty t grid".into()));
    }
    let spectra = grid
        .points()
        .par_iter()
        .map(|u| {
            let sd = shape_data(chart, u)?;
            if sd.tnorm <= EPS_T {
                return Err(GeomError::Inapplicable(format!(
                    "|T| = 0 at {u:?}: slice, trivial branch"
                )));
            }
            PointSpectrum::from_shape(&sd)
        })
        .collect::<Result<Vec<_>>>()?;
    let c = chart.c();
    let tnorm_spread = spread(spectra.iter().map(|s| s.tnorm));

    let mut curvature_spread_per_t = Vec::with_capacity(t_values.len());
    let mut mean_curvature_spread_per_t = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let per_point = spectra
            .par_iter()
            .map(|s| s.transported(c, t))
            .collect::<Result<Vec<_>>>()?;
        let n = per_point[0].len();
        let worst = (0..n)
            .map(|k| spread(per_point.iter().map(|v| v[k])))
            .fold(0.0, f64::max);
        curvature_spread_per_t.push(worst);
        mean_curvature_spread_per_t
            .push(spread(per_point.iter().map(|v| v.iter().sum::<f64>() / n as f64)));
    }
    let constant_tnorm = tnorm_spread <= tol.tnorm;
    let constant_curvatures = curvature_spread_per_t.iter().all(|s| *s <= tol.curvature);
    Ok(CpcVerdict {
        tnorm_spread,
        curvature_spread_per_t,
        mean_curvature_spread_per_t,
        t_values: t_values.to_vec(),
        constant_tnorm,
        constant_curvatures,
        implication_check: constant_tnorm == constant_curvatures,
    })
}
