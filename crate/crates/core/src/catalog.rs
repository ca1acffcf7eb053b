//! The classified constant-curvature hypersurfaces of `Q^n_c x R`, each with
//! the invariants it is expected to show, plus a few generic graphs.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::ModelConstant;
use crate::chart::{AnalyticChart, Chart, Domain, Grid};
use crate::check::Check;
use crate::eigenframe::{cluster_values, CLUSTER_TOL};
use crate::error::{GeomError, Result};
use crate::immersion::{
    inclusion_weingarten_check, shape_data, structure_residuals, t_direction_residuals,
    t_principal_angle, ResidualReport, ShapeData, EPS_T, T_PRINCIPAL_ANGLE,
};
use crate::jets::Jet;
use crate::linalg::{g_inner, g_norm, sorted_distance, spread};
use crate::profile::ProfileFunction;
use crate::surface2d::surface_identity_at;

/// Half-width of the parameter boxes of catalog charts.
pub const HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Curvatures {
    /// Known values, compared as a multiset up to one global sign.
    Exact(Vec<f64>),
    /// Only constancy and multiplicities are asserted.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NuBehavior {
    Zero,
    Unit,
    ConstantNonzero,
    Varying,
}

/// Hypersurfaces of the model space used as cylinder bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CylinderBase {
    GeodesicSphere { radius: f64 },
    Hypersphere { radius: f64 },
    Horosphere,
    Equidistant { distance: f64 },
    TotallyGeodesic,
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub chart: Arc<dyn Chart>,
    pub c: ModelConstant,
    pub n: usize,
    pub expected_g: usize,
    /// Multiplicities as a multiset.
    pub multiplicities: Vec<usize>,
    pub curvatures: Curvatures,
    pub nu: NuBehavior,
    /// `None` when `T` vanishes.
    pub t_principal: Option<bool>,
    /// The two nonzero curvatures multiply to one.
    pub reciprocal_pair: bool,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("c", &self.c)
            .field("n", &self.n)
            .field("expected_g", &self.expected_g)
            .field("multiplicities", &self.multiplicities)
            .field("curvatures", &self.curvatures)
            .field("nu", &self.nu)
            .finish()
    }
}

impl CatalogEntry {
    fn new(
        name: impl Into<String>,
        chart: AnalyticChart,
        multiplicities: Vec<usize>,
        curvatures: Curvatures,
        nu: NuBehavior,
        t_principal: Option<bool>,
    ) -> Self {
        Self {
            name: name.into(),
            c: chart.c(),
            n: chart.n(),
            expected_g: multiplicities.len(),
            multiplicities,
            curvatures,
            nu,
            t_principal,
            reciprocal_pair: false,
            chart: Arc::new(chart),
        }
    }

    /// Grid used by [`validate`]: finer in low dimension.
    pub fn default_grid(&self) -> Result<Grid> {
        let k = match self.n {
            0..=2 => 7,
            3 => 5,
            _ => 3,
        };
        self.chart.domain().analysis_grid(&vec![k; self.n])
    }
}

fn norm_sq(u: &[Jet]) -> Jet {
    let mut r2 = Jet::constant(u[0].nvars(), 0.0);
    for x in u {
        r2 += *x * *x;
    }
    r2
}

/// Unit sphere `S^k` around `e_0`, through the central projection of `R^k`.
pub fn gnomonic(z: &[Jet]) -> Vec<Jet> {
    let inv = (norm_sq(z) + 1.0).sqrt().recip();
    let mut out = vec![inv];
    out.extend(z.iter().map(|x| *x * inv));
    out
}

/// Upper sheet of the hyperboloid `H^k`, as a graph over `R^k`.
pub fn hyperboloid(z: &[Jet]) -> Vec<Jet> {
    let mut out = vec![(norm_sq(z) + 1.0).sqrt()];
    out.extend_from_slice(z);
    out
}

/// Horospherical coordinates of `H^k`: for fixed `rho` the points with
/// `x_0 - x_1 = e^{-rho}` form a horosphere, and `rho` is arc length along
/// the orthogonal geodesics.
pub fn horospherical(y: &[Jet], rho: Jet) -> Vec<Jet> {
    let e = (-rho).exp();
    let half = norm_sq(y) * 0.5 * e;
    let mut out = vec![rho.cosh() + half, rho.sinh() + half];
    out.extend(y.iter().map(|x| *x * e));
    out
}

fn model(c: ModelConstant) -> fn(&[Jet]) -> Vec<Jet> {
    if c.is_sphere() {
        gnomonic
    } else {
        hyperboloid
    }
}

fn check_dim(n: usize, min: usize) -> Result<()> {
    if n < min || n > crate::jets::MAX_VARS {
        return Err(GeomError::Parameter(format!(
            "dimension {n} outside [{min}, {}]",
            crate::jets::MAX_VARS
        )));
    }
    Ok(())
}

/// `Q^n_c x {t0}`.
pub fn slice(c: ModelConstant, n: usize, t0: f64) -> Result<CatalogEntry> {
    check_dim(n, 1)?;
    let m = model(c);
    let chart = AnalyticChart::new(
        format!("slice(c={},n={n},t0={t0})", c.value()),
        c,
        Domain::cube(n, HALF_WIDTH),
        move |u| {
            let mut v = m(u);
            v.push(Jet::constant(u[0].nvars(), t0));
            v
        },
    );
    Ok(CatalogEntry::new(
        chart.name().to_string(),
        chart,
        vec![n],
        Curvatures::Exact(vec![0.0; n]),
        NuBehavior::Unit,
        None,
    ))
}

/// `M^{n-1} x R` over a hypersurface `M` of `Q^n_c`.
pub fn cylinder(c: ModelConstant, n: usize, base: CylinderBase) -> Result<CatalogEntry> {
    check_dim(n, 2)?;
    let k = n - 1;
    let hyperbolic_only = |what: &str| {
        if c.is_sphere() {
            Err(GeomError::Parameter(format!("{what} bases live in hyperbolic space")))
        } else {
            Ok(())
        }
    };
    type BaseMap = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;
    let (map, mults, curv): (BaseMap, Vec<usize>, Curvatures) = match base {
        CylinderBase::GeodesicSphere { radius } => {
            if !c.is_sphere() {
                return Err(GeomError::Parameter(
                    "use a hypersphere base in hyperbolic space".into(),
                ));
            }
            if !(radius > 0.0 && radius < std::f64::consts::FRAC_PI_2) {
                return Err(GeomError::Parameter(format!(
                    "geodesic sphere radius {radius} outside (0, pi/2)"
                )));
            }
            let (cr, sr) = (radius.cos(), radius.sin());
            (
                Arc::new(move |z: &[Jet]| {
                    let mut v = vec![Jet::constant(z[0].nvars(), cr)];
                    v.extend(gnomonic(z).into_iter().map(|x| x * sr));
                    v
                }),
                vec![k, 1],
                Curvatures::Numeric,
            )
        }
        CylinderBase::Hypersphere { radius } => {
            hyperbolic_only("hypersphere")?;
            if !(radius > 0.0) {
                return Err(GeomError::Parameter(format!("radius {radius} must be positive")));
            }
            let (cr, sr) = (radius.cosh(), radius.sinh());
            (
                Arc::new(move |z: &[Jet]| {
                    let mut v = vec![Jet::constant(z[0].nvars(), cr)];
                    v.extend(gnomonic(z).into_iter().map(|x| x * sr));
                    v
                }),
                vec![k, 1],
                Curvatures::Numeric,
            )
        }
        CylinderBase::Horosphere => {
            hyperbolic_only("horosphere")?;
            let mut exact = vec![1.0; k];
            exact.push(0.0);
            (
                Arc::new(|z: &[Jet]| horospherical(z, Jet::constant(z[0].nvars(), 0.0))),
                vec![k, 1],
                Curvatures::Exact(exact),
            )
        }
        CylinderBase::Equidistant { distance } => {
            hyperbolic_only("equidistant")?;
            let (cd, sd) = (distance.cosh(), distance.sinh());
            let (mults, curv) = if distance == 0.0 {
                (vec![n], Curvatures::Exact(vec![0.0; n]))
            } else {
                (vec![k, 1], Curvatures::Numeric)
            };
            (
                Arc::new(move |z: &[Jet]| {
                    let mut v: Vec<Jet> = hyperboloid(z).into_iter().map(|x| x * cd).collect();
                    v.push(Jet::constant(z[0].nvars(), sd));
                    v
                }),
                mults,
                curv,
            )
        }
        CylinderBase::TotallyGeodesic => {
            if !c.is_sphere() {
                return cylinder(c, n, CylinderBase::Equidistant { distance: 0.0 });
            }
            (
                Arc::new(|z: &[Jet]| {
                    let mut v = gnomonic(z);
                    v.push(Jet::constant(z[0].nvars(), 0.0));
                    v
                }),
                vec![n],
                Curvatures::Exact(vec![0.0; n]),
            )
        }
    };
    let label = match base {
        CylinderBase::GeodesicSphere { radius } => format!("geodesic-sphere(r={radius})"),
        CylinderBase::Hypersphere { radius } => format!("hypersphere(r={radius})"),
        CylinderBase::Horosphere => "horosphere".to_string(),
        CylinderBase::Equidistant { distance } => format!("equidistant(d={distance})"),
        CylinderBase::TotallyGeodesic => "totally-geodesic".to_string(),
    };
    let chart = AnalyticChart::new(
        format!("cylinder(c={},n={n},{label})", c.value()),
        c,
        Domain::cube(n, HALF_WIDTH),
        move |u| {
            let mut v = map(&u[..k]);
            v.push(u[k]);
            v
        },
    );
    Ok(CatalogEntry::new(
        chart.name().to_string(),
        chart,
        mults,
        curv,
        NuBehavior::Zero,
        Some(true),
    ))
}

/// `S^p(r) x S^q(s) x R` in `S^{p+q+1} x R`, with `r^2 + s^2 = 1`.
pub fn clifford_product(p: usize, q: usize, r: f64, s: f64) -> Result<CatalogEntry> {
    if p == 0 || q == 0 {
        return Err(GeomError::Parameter("sphere factors need positive dimension".into()));
    }
    if !(r > 0.0 && r < 1.0 && s > 0.0 && s < 1.0) || (r * r + s * s - 1.0).abs() > 1e-12 {
        return Err(GeomError::Parameter(format!(
            "radii ({r}, {s}) must lie in (0, 1) with r^2 + s^2 = 1"
        )));
    }
    let n = p + q + 1;
    check_dim(n, 3)?;
    let chart = AnalyticChart::new(
        format!("clifford(p={p},q={q},r={r},s={s})"),
        ModelConstant::SPHERE,
        Domain::cube(n, HALF_WIDTH),
        move |u| {
            let mut v: Vec<Jet> = gnomonic(&u[..p]).into_iter().map(|x| x * r).collect();
            v.extend(gnomonic(&u[p..p + q]).into_iter().map(|x| x * s));
            v.push(u[n - 1]);
            v
        },
    );
    Ok(CatalogEntry::new(
        chart.name().to_string(),
        chart,
        vec![p, q, 1],
        Curvatures::Numeric,
        NuBehavior::Zero,
        Some(true),
    ))
}

/// `H^{n-k-1}(rho) x S^k(r) x R` in `H^n x R`, with `rho^2 - r^2 = 1`.
pub fn hyperbolic_product(k: usize, n: usize, r: f64) -> Result<CatalogEntry> {
    check_dim(n, 3)?;
    if k == 0 || k + 2 > n {
        return Err(GeomError::Parameter(format!("need 1 <= k <= n - 2, got k = {k}, n = {n}")));
    }
    if !(r > 0.0) {
        return Err(GeomError::Parameter(format!("radius {r} must be positive")));
    }
    let rho = (1.0 + r * r).sqrt();
    let h = n - k - 1;
    let chart = AnalyticChart::new(
        format!("hyperbolic-product(k={k},n={n},r={r})"),
        ModelConstant::HYPERBOLIC,
        Domain::cube(n, HALF_WIDTH),
        move |u| {
            let mut v: Vec<Jet> = hyperboloid(&u[..h]).into_iter().map(|x| x * rho).collect();
            v.extend(gnomonic(&u[h..h + k]).into_iter().map(|x| x * r));
            v.push(u[n - 1]);
            v
        },
    );
    let mut e = CatalogEntry::new(
        chart.name().to_string(),
        chart,
        vec![k, h, 1],
        Curvatures::Numeric,
        NuBehavior::Zero,
        Some(true),
    );
    e.reciprocal_pair = true;
    Ok(e)
}

/// `(y, s) -> (h_s(y), a(s))` where `h_s` are the parallel horospheres
/// `x_0 - x_1 = e^{-s}` of `H^n`.
pub fn rotational(profile: &ProfileFunction, n: usize, name: impl Into<String>) -> Result<AnalyticChart> {
    check_dim(n, 2)?;
    let (lo, hi) = profile.domain();
    let (s_lo, s_hi) = (lo.max(-HALF_WIDTH), hi.min(HALF_WIDTH));
    if !(s_lo < s_hi) {
        return Err(GeomError::Parameter("profile domain misses the parameter box".into()));
    }
    let mut dlo = vec![-HALF_WIDTH; n];
    let mut dhi = vec![HALF_WIDTH; n];
    dlo[n - 1] = s_lo;
    dhi[n - 1] = s_hi;
    let a = profile.clone();
    Ok(AnalyticChart::new(
        name,
        ModelConstant::HYPERBOLIC,
        Domain::new(dlo, dhi),
        move |u| {
            let s = u[n - 1];
            let mut v = horospherical(&u[..n - 1], s);
            // the chart only evaluates inside the profile's domain
            let [a0, a1, a2, _] = a.eval(s.value()).unwrap_or([f64::NAN; 4]);
            v.push(s.chain(a0, a1, a2));
            v
        },
    ))
}

/// The rotational hypersurface over horospheres with height `B s`.
pub fn rotational_horosphere(b: f64, n: usize) -> Result<CatalogEntry> {
    let profile = ProfileFunction::affine(b, f64::NEG_INFINITY, f64::INFINITY)?;
    let chart = rotational(&profile, n, format!("rotational-horosphere(B={b},n={n})"))?;
    let mu = b / (1.0 + b * b).sqrt();
    let mut exact = vec![mu; n - 1];
    exact.push(0.0);
    Ok(CatalogEntry::new(
        chart.name().to_string(),
        chart,
        vec![n - 1, 1],
        Curvatures::Exact(exact),
        NuBehavior::ConstantNonzero,
        Some(true),
    ))
}

/// Rotational chart with height `s + k s^3`: `T` stays principal but `|T|`
/// and the curvatures vary.
pub fn rotational_cubic(k: f64, n: usize) -> Result<AnalyticChart> {
    let profile = ProfileFunction::cubic(k, -1.0, 1.0);
    rotational(&profile, n, format!("rotational-cubic(k={k},n={n})"))
}

/// Graphs over `Q^n_c` with no special structure.
pub fn generic_graphs() -> Vec<Arc<dyn Chart>> {
    let sphere2 = AnalyticChart::new(
        "graph(c=1,n=2)",
        ModelConstant::SPHERE,
        Domain::cube(2, HALF_WIDTH),
        |u| {
            let mut v = gnomonic(u);
            v.push((u[0] * 1.3).sin() * 0.3 + u[1] * u[1] * 0.2 - u[0] * u[1] * 0.1);
            v
        },
    );
    let hyper2 = AnalyticChart::new(
        "graph(c=-1,n=2)",
        ModelConstant::HYPERBOLIC,
        Domain::cube(2, HALF_WIDTH),
        |u| {
            let mut v = hyperboloid(u);
            v.push(u[0] * u[1] * 0.25 + u[1].cos() * 0.1 + u[0] * 0.4);
            v
        },
    );
    let sphere3 = AnalyticChart::new(
        "graph(c=1,n=3)",
        ModelConstant::SPHERE,
        Domain::cube(3, HALF_WIDTH),
        |u| {
            let mut v = gnomonic(u);
            v.push((u[0] + u[2] * 0.5).exp() * 0.2 + u[1] * u[1] * u[1] * 0.3);
            v
        },
    );
    vec![Arc::new(sphere2), Arc::new(hyper2), Arc::new(sphere3)]
}

/// Every entry exercised by the validation suite.
pub fn default_catalog() -> Vec<CatalogEntry> {
    let s = ModelConstant::SPHERE;
    let h = ModelConstant::HYPERBOLIC;
    let entries = [
        slice(s, 2, 0.3),
        slice(h, 3, -0.2),
        cylinder(s, 2, CylinderBase::GeodesicSphere { radius: 0.7 }),
        cylinder(s, 3, CylinderBase::GeodesicSphere { radius: FRAC_PI_4 }),
        cylinder(s, 2, CylinderBase::TotallyGeodesic),
        cylinder(h, 2, CylinderBase::Horosphere),
        cylinder(h, 3, CylinderBase::Horosphere),
        cylinder(h, 3, CylinderBase::Hypersphere { radius: 0.8 }),
        cylinder(h, 2, CylinderBase::Equidistant { distance: 0.5 }),
        cylinder(h, 3, CylinderBase::Equidistant { distance: 0.5 }),
        cylinder(h, 3, CylinderBase::TotallyGeodesic),
        clifford_product(1, 1, FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        clifford_product(2, 1, 0.8, 0.6),
        hyperbolic_product(1, 4, 1.0),
        rotational_horosphere(1.0, 2),
        rotational_horosphere(1.0, 4),
        rotational_horosphere(2.0, 3),
    ];
    entries
        .into_iter()
        .map(|e| e.expect("catalog parameters are admissible"))
        .collect()
}

/// Catalog entry by name.
pub fn find(name: &str) -> Result<CatalogEntry> {
    default_catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| GeomError::Config(format!("unknown catalog entry `{name}`")))
}

/// Catalog entry or generic chart by name.
pub fn find_chart(name: &str) -> Result<Arc<dyn Chart>> {
    if let Ok(e) = find(name) {
        return Ok(e.chart);
    }
    generic_graphs()
        .into_iter()
        .find(|c| c.name() == name)
        .ok_or_else(|| GeomError::Config(format!("unknown chart `{name}`")))
}

/// Largest value per residual name over a grid.
pub fn sweep_residuals(
    grid: &Grid,
    f: impl Fn(&[f64]) -> Result<ResidualReport> + Sync,
) -> Result<ResidualReport> {
    let reports = grid
        .points()
        .par_iter()
        .map(|u| f(u))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ResidualReport::default();
    for r in &reports {
        out.merge(r);
    }
    Ok(out)
}

/// Acceptance thresholds of [`validate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub unit: f64,
    pub invariant: f64,
    pub inclusion: f64,
    pub structure: f64,
    pub t_direction: f64,
    pub curvature: f64,
    pub nu: f64,
    pub surface_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unit: 1e-10,
            invariant: 1e-9,
            inclusion: 1e-8,
            structure: 1e-6,
            t_direction: 1e-8,
            curvature: 1e-7,
            nu: 1e-8,
            surface_identity: 1e-6,
        }
    }
}

/// Distance between a computed spectrum and an expected multiset up to
/// one sign.
fn signed_distance(spectra: &[Vec<f64>], expected: &[f64]) -> f64 {
    let neg: Vec<f64> = expected.iter().map(|v| -v).collect();
    let worst = |target: &[f64]| {
        spectra
            .iter()
            .map(|s| sorted_distance(s, target))
            .fold(0.0, f64::max)
    };
    worst(expected).min(worst(&neg))
}

/// Eigenvector for the curvature nearest `lambda`, G-normalized.
fn eigenvector_near(sd: &ShapeData, lambda: f64) -> Result<nalgebra::DVector<f64>> {
    let e = sd.eigen()?;
    let k = (0..e.values.len())
        .min_by(|&a, &b| (e.values[a] - lambda).abs().total_cmp(&(e.values[b] - lambda).abs()))
        .unwrap_or(0);
    Ok(e.vectors.column(k).into_owned())
}

fn angle_to(sd: &ShapeData, x: &nalgebra::DVector<f64>) -> f64 {
    let cos = g_inner(&sd.g, &sd.t, x).abs() / (sd.tnorm * g_norm(&sd.g, x));
    cos.min(1.0).acos()
}

/// Runs every expected-invariant check of `entry` on `grid`.
pub fn validate(entry: &CatalogEntry, grid: &Grid) -> Vec<Check> {
    validate_with(entry, grid, &Tolerances::default())
}

pub fn validate_with(entry: &CatalogEntry, grid: &Grid, tol: &Tolerances) -> Vec<Check> {
    let chart = entry.chart.as_ref();
    let mut checks = Vec::new();
    let data = match grid
        .points()
        .par_iter()
        .map(|u| shape_data(chart, u))
        .collect::<Result<Vec<_>>>()
    {
        Ok(d) => d,
        Err(e) => return vec![Check::from_error("shape_data", &e)],
    };

    let mut inv = ResidualReport::default();
    for sd in &data {
        inv.merge(&sd.invariant_residuals());
    }
    for (name, v) in inv.iter() {
        let tol = if name == "unit_relation" { tol.unit } else { tol.invariant };
        checks.push(Check::at_most(format!("invariant.{name}"), v, tol));
    }

    let residual_group = |prefix: &str, tol: f64, r: Result<ResidualReport>| -> Vec<Check> {
        match r {
            Ok(r) => r
                .iter()
                .map(|(name, v)| Check::at_most(format!("{prefix}.{name}"), v, tol))
                .collect(),
            Err(e) => vec![Check::from_error(prefix, &e)],
        }
    };
    checks.extend(residual_group(
        "inclusion",
        tol.inclusion,
        sweep_residuals(grid, |u| inclusion_weingarten_check(chart, u)),
    ));
    checks.extend(residual_group(
        "structure",
        tol.structure,
        sweep_residuals(grid, |u| structure_residuals(chart, u, &[])),
    ));
    checks.extend(residual_group(
        "t_direction",
        tol.t_direction,
        sweep_residuals(grid, |u| t_direction_residuals(chart, u)),
    ));

    let spectra: Vec<Vec<f64>> = match data.iter().map(|sd| sd.principal_curvatures()).collect() {
        Ok(s) => s,
        Err(e) => {
            checks.push(Check::from_error("spectrum", &e));
            return checks;
        }
    };

    // multiplicities at every grid point
    let mut expected_m = entry.multiplicities.clone();
    expected_m.sort_unstable();
    let mut structure_ok = true;
    let mut structure_detail = String::new();
    for (k, s) in spectra.iter().enumerate() {
        match cluster_values(s, CLUSTER_TOL) {
            Ok(st) => {
                let mut m = st.multiplicities.clone();
                m.sort_unstable();
                if m != expected_m {
                    structure_ok = false;
                    structure_detail = format!("point {k}: multiplicities {:?}", st.multiplicities);
                    break;
                }
            }
            Err(e) => {
                structure_ok = false;
                structure_detail = format!("point {k}: {e}");
                break;
            }
        }
    }
    checks.push(Check::flag(
        "multiplicities",
        structure_ok,
        if structure_ok {
            format!("g = {}, m = {:?}", entry.expected_g, entry.multiplicities)
        } else {
            structure_detail
        },
    ));

    let n = entry.n;
    let constancy = (0..n)
        .map(|k| spread(spectra.iter().map(|s| s[k])))
        .fold(0.0, f64::max);
    checks.push(Check::at_most("curvature_constancy", constancy, tol.curvature));
    if let Curvatures::Exact(expected) = &entry.curvatures {
        checks.push(Check::at_most(
            "curvature_values",
            signed_distance(&spectra, expected),
            tol.curvature,
        ));
    }

    let nus: Vec<f64> = data.iter().map(|sd| sd.nu).collect();
    let nu_check = match entry.nu {
        NuBehavior::Zero => Check::at_most("nu_zero", nus.iter().fold(0.0, |m, v| m.max(v.abs())), tol.unit),
        NuBehavior::Unit => Check::at_most(
            "nu_unit",
            nus.iter().fold(0.0, |m, v| m.max((v.abs() - 1.0).abs())),
            tol.unit,
        ),
        NuBehavior::ConstantNonzero => {
            let min = nus.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            let s = spread(nus.iter().copied());
            if min > tol.nu {
                Check::at_most("nu_constant", s, tol.nu)
            } else {
                Check::flag("nu_constant", false, format!("nu vanishes (min |nu| = {min:.3e})"))
            }
        }
        NuBehavior::Varying => Check::above("nu_varying", spread(nus.iter().copied()), tol.nu),
    };
    checks.push(nu_check);

    match entry.t_principal {
        Some(expect) => {
            let worst = data
                .iter()
                .map(t_principal_angle)
                .collect::<Result<Vec<_>>>()
                .map(|v| v.into_iter().fold(0.0, f64::max));
            checks.push(match worst {
                Ok(a) if expect => Check::at_most("t_principal", a, T_PRINCIPAL_ANGLE),
                Ok(a) => Check::above("t_not_principal", a, T_PRINCIPAL_ANGLE),
                Err(e) => Check::from_error("t_principal", &e),
            });
        }
        None => {
            let worst = data.iter().fold(0.0f64, |m, sd| m.max(sd.tnorm));
            checks.push(Check::at_most("t_vanishes", worst, EPS_T));
        }
    }

    checks.extend(multiplicity_properties(&data, &spectra, tol));

    if entry.reciprocal_pair {
        let worst = spectra
            .iter()
            .map(|s| {
                let nonzero: Vec<f64> = s.iter().copied().filter(|v| v.abs() > 1e-6).collect();
                let lo = nonzero.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
                let hi = nonzero.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (lo * hi - 1.0).abs()
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most("reciprocal_pair", worst, tol.curvature));
    }

    if n == 2 {
        checks.push(match data.iter().map(surface_identity_at).collect::<Result<Vec<_>>>() {
            Ok(v) => Check::at_most("surface_identity", v.into_iter().fold(0.0, |m, x| m.max(x.abs())), tol.surface_identity),
            Err(GeomError::Umbilic) => Check::skip("surface_identity", "umbilic surface"),
            Err(e) => Check::from_error("surface_identity", &e),
        });
    }
    checks
}

/// Checks of the two multiplicity statements for hypersurfaces with
/// `nu != 0`: some curvature is simple; and if exactly one is, `T` is its
/// direction and every repeated curvature is nonzero.
pub fn multiplicity_properties(data: &[ShapeData], spectra: &[Vec<f64>], tol: &Tolerances) -> Vec<Check> {
    let nu_nonzero = data.iter().all(|sd| sd.nu.abs() > tol.nu);
    let structure = match spectra.first().map(|s| cluster_values(s, CLUSTER_TOL)) {
        Some(Ok(s)) => s,
        Some(Err(e)) => return vec![Check::from_error("simple_curvature", &e)],
        None => return Vec::new(),
    };
    let mut out = Vec::new();
    if !nu_nonzero || structure.clusters() < 2 {
        out.push(Check::skip("simple_curvature", "umbilic or nu vanishes somewhere"));
    } else {
        out.push(Check::flag(
            "simple_curvature",
            structure.multiplicities.contains(&1),
            format!("multiplicities {:?}", structure.multiplicities),
        ));
    }
    let simple: Vec<usize> = (0..structure.clusters())
        .filter(|&k| structure.multiplicities[k] == 1)
        .collect();
    if !nu_nonzero || simple.len() != 1 {
        out.push(Check::skip("t_on_simple_curvature", "needs exactly one simple curvature and nu != 0"));
        return out;
    }
    let lambda = structure.eigenvalues[simple[0]];
    let worst = data
        .iter()
        .map(|sd| eigenvector_near(sd, lambda).map(|x| angle_to(sd, &x)))
        .collect::<Result<Vec<_>>>();
    out.push(match worst {
        Ok(v) => Check::at_most(
            "t_on_simple_curvature",
            v.into_iter().fold(0.0, f64::max),
            T_PRINCIPAL_ANGLE,
        ),
        Err(e) => Check::from_error("t_on_simple_curvature", &e),
    });
    let repeated_min = (0..structure.clusters())
        .filter(|&k| structure.multiplicities[k] > 1)
        .map(|k| structure.eigenvalues[k].abs())
        .fold(f64::INFINITY, f64::min);
    out.push(Check::above("repeated_curvatures_nonzero", repeated_min, tol.curvature));
    out
}
