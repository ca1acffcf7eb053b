use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::transport::{regularity_margin, EPS_REG};
use crate::ambient::{cs_kernels, inner_unchecked, model_normal, AmbientVector, ModelConstant};
use crate::chart::{check_domain, evaluate_jet2, Chart, Domain, Grid};
use crate::error::{GeomError, Result};
use crate::immersion::{
    central_partials, shape_data, shape_data_from_jet, shape_data_oriented, t_principal_angle,
    ShapeData, EPS_T, FD_STEP, T_PRINCIPAL_ANGLE,
};
use crate::jets::Jet2;

/// Principal data of a `T`-principal hypersurface at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSpectrum {
    pub tnorm: f64,
    pub nu: f64,
    /// Curvatures orthogonal to `T`, ascending.
    pub transverse: Vec<f64>,
    /// Curvature of the `T` direction.
    pub lambda_n: f64,
}

impl PointSpectrum {
    pub fn from_shape(sd: &ShapeData) -> Result<Self> {
        if sd.tnorm <= EPS_T {
            return Err(GeomError::Inapplicable(format!(
                "|T| = {:.3e} vanishes, no parallel family along T",
                sd.tnorm
            )));
        }
        let angle = t_principal_angle(sd)?;
        if angle > T_PRINCIPAL_ANGLE {
            return Err(GeomError::Precondition(format!(
                "T is not a principal direction (angle {angle:.3e} rad)"
            )));
        }
        Ok(Self {
            tnorm: sd.tnorm,
            nu: sd.nu,
            transverse: sd.transverse_spectrum().0,
            lambda_n: sd.t_curvature(),
        })
    }

    pub fn at(chart: &dyn Chart, u: &[f64]) -> Result<Self> {
        Self::from_shape(&shape_data(chart, u)?)
    }

    /// Predicted spectrum of `f_t`, ascending.
    pub fn transported(&self, c: ModelConstant, t: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.transverse.len() + 1);
        for (i, &l) in self.transverse.iter().enumerate() {
            out.push(super::transport_curvature(l, self.tnorm, c, t).map_err(|e| reindex(e, i))?);
        }
        out.push(
            super::transport_curvature_t(self.lambda_n, t)
                .map_err(|e| reindex(e, self.transverse.len()))?,
        );
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    pub fn margin(&self, c: ModelConstant, t: f64) -> (f64, usize) {
        regularity_margin(&self.transverse, self.lambda_n, self.tnorm, c, t)
    }

    fn check(&self, c: ModelConstant, t: f64) -> Result<()> {
        let (m, i) = self.margin(c, t);
        if !(m > EPS_REG) {
            let lambda = self.transverse.get(i).copied().unwrap_or(self.lambda_n);
            return Err(GeomError::FocalPoint {
                index: i,
                lambda,
                t,
                margin: m,
            });
        }
        Ok(())
    }
}

fn reindex(e: GeomError, index: usize) -> GeomError {
    match e {
        GeomError::FocalPoint { lambda, t, margin, .. } => GeomError::FocalPoint {
            index,
            lambda,
            t,
            margin,
        },
        other => other,
    }
}

/// Value, first derivatives and normal of `f_t`, computed in closed form from
/// the second jet of `f`.
struct FirstOrder {
    value: AmbientVector,
    d1: DMatrix<f64>,
    normal: AmbientVector,
}

fn first_order(jet: &Jet2, sd: &ShapeData, t: f64) -> FirstOrder {
    let c = sd.c;
    let cv = c.value();
    let n = sd.n();
    let dim = n + 2;
    let last = dim - 1;
    let tn = sd.tnorm;
    let nu = sd.nu;
    let (cc, ss) = cs_kernels(tn * t, c);
    let mut eta_q = sd.eta.clone();
    eta_q[last] -= nu;

    let mut value = &sd.xi * cc + &eta_q * (ss / tn);
    value[last] = jet.value[last] + t * nu;
    let normal = {
        let mut v = &sd.xi * (-cv * tn * ss) + &eta_q * cc;
        v[last] += nu;
        v
    };

    let mut d1 = DMatrix::zeros(dim, n);
    for i in 0..n {
        let df = jet.first(i);
        // Weingarten decomposition of d_i eta in E^{n+2}
        let mut deta = DVector::zeros(dim);
        for j in 0..n {
            deta.axpy(-sd.a[(j, i)], &jet.first(j), 1.0);
        }
        deta.axpy(cv * nu * df[last], &sd.xi, 1.0);
        let dnu = deta[last];
        let dtn = -nu * dnu / tn;
        let dxi = model_normal(&df);
        let mut deta_q = deta;
        deta_q[last] -= dnu;

        let mut col = &sd.xi * (-cv * ss * t * dtn) + dxi * cc;
        col.axpy(cc * t * dtn / tn - ss * dtn / (tn * tn), &eta_q, 1.0);
        col.axpy(ss / tn, &deta_q, 1.0);
        col[last] += df[last] + t * dnu;
        d1.set_column(i, &col);
    }
    FirstOrder { value, d1, normal }
}

/// The parallel hypersurface `f_t = exp_f(t eta)` as a chart over the base
/// chart's parameters.
pub struct ParallelChart {
    base: Arc<dyn Chart>,
    t: f64,
    name: String,
    orientation: OnceLock<f64>,
}

impl ParallelChart {
    pub fn base(&self) -> &Arc<dyn Chart> {
        &self.base
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn base_data(&self, u: &[f64]) -> Result<(Jet2, ShapeData)> {
        let jet = evaluate_jet2(self.base.as_ref(), u)?;
        let sd = shape_data_from_jet(&jet, self.base.c(), u, self.base.orientation())?;
        PointSpectrum::from_shape(&sd)?.check(self.base.c(), self.t)?;
        Ok((jet, sd))
    }

    fn first(&self, u: &[f64]) -> Result<FirstOrder> {
        let (jet, sd) = self.base_data(u)?;
        Ok(first_order(&jet, &sd, self.t))
    }

    /// Unit normal `eta_t` of `f_t` at `u`.
    pub fn normal(&self, u: &[f64]) -> Result<AmbientVector> {
        Ok(self.first(u)?.normal)
    }

    /// `<df_t(X), df_t(X)>` for a coordinate vector `X`.
    pub fn pushed_length_sq(&self, u: &[f64], x: &DVector<f64>) -> Result<f64> {
        let v = self.first(u)?.d1 * x;
        Ok(inner_unchecked(v.as_slice(), v.as_slice(), self.base.c()))
    }
}

impl Chart for ParallelChart {
    fn name(&self) -> &str {
        &self.name
    }

    fn n(&self) -> usize {
        self.base.n()
    }

    fn c(&self) -> ModelConstant {
        self.base.c()
    }

    fn domain(&self) -> &Domain {
        self.base.domain()
    }

    fn base_point(&self) -> Vec<f64> {
        self.base.base_point()
    }

    fn point(&self, u: &[f64]) -> Result<AmbientVector> {
        check_domain(self, u)?;
        Ok(self.first(u)?.value)
    }

    /// Second derivatives are central differences of the exact first ones.
    fn jet2(&self, u: &[f64]) -> Result<Jet2> {
        check_domain(self, u)?;
        let f = self.first(u)?;
        let n = self.n();
        let dim = n + 2;
        let flat = |v: &[f64]| -> Result<DVector<f64>> {
            Ok(DVector::from_column_slice(self.first(v)?.d1.as_slice()))
        };
        let partials = central_partials(self, u, FD_STEP, &flat)?;
        let column = |axis: usize, j: usize| -> DVector<f64> {
            partials[axis].rows(j * dim, dim).into_owned()
        };
        Ok(Jet2::from_parts(f.value, f.d1, |i, j| {
            (column(i, j) + column(j, i)) * 0.5
        }))
    }

    /// Aligned with `eta_t`.
    fn orientation(&self) -> f64 {
        *self.orientation.get_or_init(|| {
            let u = self.base_point();
            match (shape_data_oriented(self, &u, 1.0), self.normal(&u)) {
                (Ok(sd), Ok(eta_t)) => {
                    if inner_unchecked(sd.eta.as_slice(), eta_t.as_slice(), self.c()) >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => 1.0,
            }
        })
    }
}

fn probe_grid(chart: &dyn Chart) -> Result<Grid> {
    chart.domain().analysis_grid(&vec![3; chart.n()])
}

/// `f_t` as a chart, after checking on a probe grid that `T` is principal and
/// that `t` stays clear of focal values.
pub fn parallel_immersion(base: Arc<dyn Chart>, t: f64) -> Result<ParallelChart> {
    let grid = probe_grid(base.as_ref())?;
    let c = base.c();
    grid.points()
        .par_iter()
        .map(|u| PointSpectrum::at(base.as_ref(), u)?.check(c, t))
        .collect::<Result<Vec<()>>>()?;
    let name = format!("{}@t={t}", base.name());
    Ok(ParallelChart {
        base,
        t,
        name,
        orientation: OnceLock::new(),
    })
}

/// `eta_t` at `u`.
pub fn parallel_normal(base: Arc<dyn Chart>, t: f64, u: &[f64]) -> Result<AmbientVector> {
    parallel_immersion(base, t)?.normal(u)
}

/// Regularity margins of a family over a grid, one per `t`.
#[derive(Debug, Clone, Serialize)]
pub struct ParallelFamily {
    pub t_values: Vec<f64>,
    pub margins: Vec<f64>,
    #[serde(skip)]
    pub spectra: Vec<PointSpectrum>,
}

impl ParallelFamily {
    /// Fails with a focal-point error at the first `t` whose margin is not
    /// above the regularity threshold.
    pub fn new(base: &dyn Chart, grid: &Grid, t_values: &[f64]) -> Result<Self> {
        let c = base.c();
        let spectra = grid
            .points()
            .par_iter()
            .map(|u| PointSpectrum::at(base, u))
            .collect::<Result<Vec<_>>>()?;
        let mut margins = Vec::with_capacity(t_values.len());
        for &t in t_values {
            let mut worst = f64::INFINITY;
            for s in &spectra {
                s.check(c, t)?;
                worst = worst.min(s.margin(c, t).0);
            }
            margins.push(worst);
        }
        Ok(Self {
            t_values: t_values.to_vec(),
            margins,
            spectra,
        })
    }
}

/// Outcome of fitting a requested `t` interval inside the regular range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TClip {
    pub requested: (f64, f64),
    pub used: (f64, f64),
    /// Distance from 0 of the first focal value found on either side.
    pub focal_bound: f64,
}

impl TClip {
    pub fn clipped(&self) -> bool {
        self.requested != self.used
    }
}

/// `count` evenly spaced values of `[lo, hi]` intersected with the largest
/// symmetric interval `[-r, r]` on which every margin stays above the
/// regularity threshold.
pub fn clip_t_range(
    base: &dyn Chart,
    grid: &Grid,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<(Vec<f64>, TClip)> {
    if !(lo <= hi) || count < 2 {
        return Err(GeomError::Usage(format!("bad t range {lo}:{hi}:{count}")));
    }
    let c = base.c();
    let spectra = grid
        .points()
        .par_iter()
        .map(|u| PointSpectrum::at(base, u))
        .collect::<Result<Vec<_>>>()?;
    let ok = |t: f64| spectra.iter().all(|s| s.margin(c, t).0 > 2.0 * EPS_REG);
    let reach = lo.abs().max(hi.abs());
    let steps = 400;
    let mut bound = f64::INFINITY;
    for sign in [-1.0, 1.0] {
        let mut prev = 0.0;
        for k in 1..=steps {
            let t = reach * k as f64 / steps as f64;
            if !ok(sign * t) {
                let (mut a, mut b) = (prev, t);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if ok(sign * m) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                bound = bound.min(a);
                break;
            }
            prev = t;
        }
    }
    let r = if bound.is_finite() { 0.99 * bound } else { f64::INFINITY };
    let used = (lo.max(-r), hi.min(r));
    if used.0 > used.1 {
        return Err(GeomError::FocalPoint {
            index: 0,
            lambda: f64::NAN,
            t: lo,
            margin: 0.0,
        });
    }
    let values = (0..count)
        .map(|k| used.0 + (used.1 - used.0) * k as f64 / (count - 1) as f64)
        .collect();
    Ok((
        values,
        TClip {
            requested: (lo, hi),
            used,
            focal_bound: bound,
        },
    ))
}
