use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ProfileSpec, RunConfig};
use super::report::Report;
use crate::ambient::{cs_kernels, ModelConstant};
use crate::catalog::{self, sweep_residuals};
use crate::chart::{Chart, Grid};
use crate::check::{Check, Status};
use crate::eigenframe::{cluster_values, refinement_sequence, shape_operator_field, smooth_frame, FrameField, OperatorSample, CLUSTER_TOL};
use crate::error::{GeomError, Result};
use crate::immersion::{
    inclusion_weingarten_check, shape_data, structure_residuals, t_direction_residuals, t_principal_angle,
    EPS_T, T_PRINCIPAL_ANGLE,
};
use crate::linalg::{g_inner, g_norm, sorted_distance, spread};
use crate::parallel::{
    clip_t_range, isoparametric_cpc_test, parallel_immersion, CpcTolerances, ParallelFamily, PointSpectrum,
    EPS_REG,
};
use crate::profile::{case_constraints, closed_form_profile, ode_residual, rotational_curvatures, ProfileFunction, ProfileKind};
use crate::surface2d::minimal_scan;

/// One line of the curvature-versus-`t` CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub t: f64,
    pub lambda_index: usize,
    pub predicted: f64,
    pub measured: f64,
}

pub fn render_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from("t,lambda_index,predicted,measured\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            super::report::fmt12(r.t),
            r.lambda_index,
            super::report::fmt12(r.predicted),
            super::report::fmt12(r.measured)
        ));
    }
    s
}

fn residual_checks(report: &mut Report, prefix: &str, tol: f64, r: Result<crate::immersion::ResidualReport>) {
    match r {
        Ok(r) => {
            for (name, v) in r.iter() {
                report.push(Check::at_most(format!("{prefix}.{name}"), v, tol));
            }
        }
        Err(e) => report.push(Check::from_error(prefix, &e)),
    }
}

/// Pointwise data, structure equations and curvature structure over the grid.
pub fn cmd_analyze(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let subject = cfg.subject()?;
    let chart = subject.chart.as_ref();
    let grid = cfg.grid_for(chart)?;
    report.data("chart", chart.name());
    report.data("grid", grid.counts());
    if let Some(entry) = &subject.entry {
        report.extend("", catalog::validate_with(entry, &grid, &cfg.catalog_tolerances()));
    } else {
        let data = grid
            .points()
            .par_iter()
            .map(|u| shape_data(chart, u))
            .collect::<Result<Vec<_>>>()?;
        let mut inv = crate::immersion::ResidualReport::default();
        for sd in &data {
            inv.merge(&sd.invariant_residuals());
        }
        for (name, v) in inv.iter() {
            let tol = if name == "unit_relation" { cfg.tol("unit") } else { cfg.tol("invariant") };
            report.push(Check::at_most(format!("invariant.{name}"), v, tol));
        }
        residual_checks(report, "inclusion", cfg.tol("inclusion"), sweep_residuals(&grid, |u| inclusion_weingarten_check(chart, u)));
        residual_checks(report, "structure", cfg.tol("structure"), sweep_residuals(&grid, |u| structure_residuals(chart, u, &[])));
        residual_checks(report, "t_direction", cfg.tol("t_direction"), sweep_residuals(&grid, |u| t_direction_residuals(chart, u)));
    }
    let base = shape_data(chart, &chart.base_point())?;
    report.data("base_point.curvatures", base.principal_curvatures()?);
    report.data("base_point.nu", base.nu);
    report.data("base_point.tnorm", base.tnorm);
    if let Ok(s) = cluster_values(&base.principal_curvatures()?, CLUSTER_TOL) {
        report.data("base_point.eigenstructure", s);
    }
    Ok(())
}

/// Regularity margins of the parallel family, transported versus computed
/// spectra, and the constant-curvature criterion.
pub fn cmd_parallel(cfg: &RunConfig, report: &mut Report) -> Result<Vec<CurveRow>> {
    let subject = cfg.subject()?;
    let chart = subject.chart.clone();
    let grid = cfg.grid_for(chart.as_ref())?;
    let (lo, hi, count) = cfg.t_range.unwrap_or((-1.0, 1.0, 9));
    report.data("chart", chart.name());
    let (ts, clip) = match clip_t_range(chart.as_ref(), &grid, lo, hi, count) {
        Ok(x) => x,
        Err(e @ GeomError::Inapplicable(_)) => {
            report.push(Check::from_error("parallel_family", &e));
            return Ok(Vec::new());
        }
        Err(e) => return Err(e),
    };
    report.data("t_clip", &clip);
    if clip.clipped() {
        report.push(Check {
            name: "focal_margin".into(),
            status: Status::Error,
            measured: Some(clip.focal_bound),
            tolerance: None,
            detail: Some(format!(
                "requested t in [{lo}, {hi}] reaches a focal value at |t| = {:.6}; clipped to [{:.6}, {:.6}]",
                clip.focal_bound, clip.used.0, clip.used.1
            )),
        });
    }
    let family = ParallelFamily::new(chart.as_ref(), &grid, &ts)?;
    let min_margin = family.margins.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Check::above("regularity_margin", min_margin, EPS_REG));
    report.data("t_values", &family.t_values);
    report.data("margins", &family.margins);

    let c = chart.c();
    let (transport, metric) = transport_errors(&chart, &grid, &family, c)?;
    report.push(Check::at_most("transport", transport, cfg.tol("transport")));
    report.push(Check::at_most("parallel_metric", metric, cfg.tol("metric")));

    match isoparametric_cpc_test(
        chart.as_ref(),
        &grid,
        &ts,
        CpcTolerances {
            tnorm: cfg.tol("tnorm"),
            curvature: cfg.tol("cpc_curvature"),
        },
    ) {
        Ok(v) => {
            report.push(Check::flag(
                "cpc_criterion",
                v.implication_check,
                format!(
                    "constant |T|: {}, constant curvatures: {}",
                    v.constant_tnorm, v.constant_curvatures
                ),
            ));
            report.data("cpc_verdict", v);
        }
        Err(e) => report.push(Check::from_error("cpc_criterion", &e)),
    }

    let u0 = chart.base_point();
    let base = PointSpectrum::at(chart.as_ref(), &u0)?;
    let mut rows = Vec::new();
    for &t in &ts {
        let predicted = base.transported(c, t)?;
        let measured = shape_data(&parallel_immersion(chart.clone(), t)?, &u0)?.principal_curvatures()?;
        for (k, (p, m)) in predicted.iter().zip(&measured).enumerate() {
            rows.push(CurveRow {
                t,
                lambda_index: k,
                predicted: *p,
                measured: *m,
            });
        }
    }
    Ok(rows)
}

/// Largest gap between transported and computed spectra of `f_t`, and
/// largest error of the closed-form lengths `|df_t X|^2`, over the grid and
/// the family's `t` values.
pub fn transport_errors(
    chart: &Arc<dyn Chart>,
    grid: &Grid,
    family: &ParallelFamily,
    c: ModelConstant,
) -> Result<(f64, f64)> {
    let points = grid.points();
    let per_t = family
        .t_values
        .par_iter()
        .map(|&t| -> Result<(f64, f64)> {
            let pc = parallel_immersion(chart.clone(), t)?;
            let mut worst = (0.0f64, 0.0f64);
            for u in &points {
                let sd = shape_data(chart.as_ref(), u)?;
                let spec = PointSpectrum::from_shape(&sd)?;
                let predicted = spec.transported(c, t)?;
                let measured = shape_data(&pc, u)?.principal_curvatures()?;
                worst.0 = worst.0.max(sorted_distance(&predicted, &measured));
                let (cc, ss) = cs_kernels(sd.tnorm * t, c);
                let (lambdas, xs) = sd.transverse_spectrum();
                for (l, x) in lambdas.iter().zip(xs.column_iter()) {
                    let expect = (cc - l * ss / sd.tnorm).powi(2);
                    let got = pc.pushed_length_sq(u, &x.into_owned())?;
                    worst.1 = worst.1.max((got - expect).abs());
                }
                let xn: DVector<f64> = &sd.t / sd.tnorm;
                let expect = (1.0 - t * spec.lambda_n).powi(2);
                worst.1 = worst.1.max((pc.pushed_length_sq(u, &xn)? - expect).abs());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_t
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1))))
}

/// Frame checks on one operator field.
pub fn frame_checks(
    frame: &FrameField,
    tol_eigen: f64,
    tol_gram: f64,
    tol_projector: f64,
    tol_cross: f64,
) -> Vec<Check> {
    let m = &frame.metrics;
    vec![
        Check::at_most("frame.eigen_residual", m.eigen_residual, tol_eigen),
        Check::at_most("frame.orthonormality", m.gram_error, tol_gram),
        Check::at_most("frame.projector_residual", m.projector_residual, tol_projector),
        Check::at_most("frame.cross_cluster", m.cross_cluster, tol_cross),
        Check::flag(
            "frame.orientation",
            frame.positively_oriented,
            format!("min det = {:.6e}", m.min_determinant),
        ),
    ]
}

/// Adjacent-point deviations at `levels + 1` successive refinements, and the
/// checks on their ratios.
pub fn refinement_checks(
    grid: &Grid,
    levels: usize,
    structure: &crate::eigenframe::EigenStructure,
    field: &(dyn Fn(&[f64]) -> Result<OperatorSample> + Sync),
) -> Result<(Vec<Check>, Vec<f64>)> {
    let mut ratios = Vec::new();
    let mut checks = Vec::new();
    for (level, study) in refinement_sequence(grid, levels, structure, field)?.into_iter().enumerate() {
        match study.ratio {
            Some(r) => {
                ratios.push(r);
                checks.push(Check {
                    name: format!("frame.refinement_ratio.{level}"),
                    status: if (0.4..=0.6).contains(&r) { Status::Pass } else { Status::Fail },
                    measured: Some(r),
                    tolerance: None,
                    detail: Some("expected in [0.4, 0.6]".into()),
                });
            }
            None => {
                checks.push(Check::skip(
                    format!("frame.refinement_ratio.{level}"),
                    "frame is constant over the grid",
                ));
            }
        }
    }
    Ok((checks, ratios))
}

/// Coarsest grid of the refinement study: centered in `grid`, half its
/// extent, 5 points per axis, so that three refinements end at 33 points
/// per axis.
pub fn refinement_patch(grid: &Grid) -> Result<Grid> {
    let (a, b) = (grid.point(0), grid.point(grid.len() - 1));
    let lo = a.iter().zip(&b).map(|(x, y)| 0.75 * x + 0.25 * y).collect::<Vec<_>>();
    let hi = a.iter().zip(&b).map(|(x, y)| 0.25 * x + 0.75 * y).collect::<Vec<_>>();
    let n = lo.len();
    Grid::new(lo, hi, vec![5; n])
}

/// Eigenframe of the shape operator field with continuity metrics.
pub fn cmd_frame(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let subject = cfg.subject()?;
    let chart = subject.chart.as_ref();
    let grid = cfg.grid_for(chart)?;
    report.data("chart", chart.name());
    let field = shape_operator_field(chart, &grid)?;
    let structure = field[0].structure(CLUSTER_TOL)?;
    report.data("eigenstructure", &structure);
    let frame = smooth_frame(&grid, &field, &structure)?;
    report.extend(
        "",
        frame_checks(
            &frame,
            cfg.tol("frame_eigen"),
            cfg.tol("frame_gram"),
            cfg.tol("projector"),
            cfg.tol("cross_cluster"),
        ),
    );
    report.data("frame.metrics", frame.metrics);
    report.data("frame.seeds", &frame.seeds);
    report.data("frame.reseeded_points", &frame.reseeded);

    let sample = |u: &[f64]| -> Result<OperatorSample> {
        let sd = shape_data(chart, u)?;
        Ok(OperatorSample {
            operator: sd.a,
            metric: sd.g,
        })
    };
    let (checks, ratios) = refinement_checks(&refinement_patch(&grid)?, 3, &structure, &sample)?;
    report.extend("", checks);
    report.data("frame.refinement_ratios", ratios);

    // T against the frame cluster that contains it
    let data = grid
        .points()
        .iter()
        .map(|u| shape_data(chart, u))
        .collect::<Result<Vec<_>>>()?;
    let principal = data
        .iter()
        .all(|sd| sd.tnorm > EPS_T && t_principal_angle(sd).is_ok_and(|a| a <= T_PRINCIPAL_ANGLE));
    if principal {
        let mut worst: f64 = 0.0;
        for (k, sd) in data.iter().enumerate() {
            let that = &sd.t / sd.tnorm;
            let best = (0..structure.clusters())
                .map(|cl| {
                    let xs = frame.cluster_vectors(k, cl);
                    let mut proj = DVector::zeros(sd.n());
                    for x in xs.column_iter() {
                        let x = x.into_owned();
                        proj += &x * g_inner(&sd.g, &x, &that);
                    }
                    g_norm(&sd.g, &(&that - proj)).min(1.0).asin()
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        report.push(Check::at_most("frame.t_alignment", worst, cfg.tol("t_alignment")));
    } else {
        report.push(Check::skip("frame.t_alignment", "T vanishes or is not principal"));
    }
    if let Some(path) = &cfg.csv {
        std::fs::write(path, frame_dump(&grid, &frame))
            .map_err(|e| GeomError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// One row per grid point and frame vector.
pub fn frame_dump(grid: &Grid, frame: &FrameField) -> String {
    let n = grid.dim();
    let mut s = String::new();
    let coords: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    let comps: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    s.push_str(&format!("point,{},vector,cluster,eigenvalue,{}\n", coords.join(","), comps.join(",")));
    for (k, f) in frame.frames.iter().enumerate() {
        let u = grid.point(k);
        for cl in 0..frame.structure.clusters() {
            for i in frame.structure.columns(cl) {
                let x: Vec<String> = f.column(i).iter().map(|v| super::report::fmt12(*v)).collect();
                let uu: Vec<String> = u.iter().map(|v| super::report::fmt12(*v)).collect();
                s.push_str(&format!(
                    "{k},{},{i},{cl},{},{}\n",
                    uu.join(","),
                    super::report::fmt12(frame.eigenvalues[k][cl]),
                    x.join(",")
                ));
            }
        }
    }
    s
}

fn profile_of(cfg: &RunConfig) -> Result<ProfileFunction> {
    cfg.profile
        .unwrap_or(ProfileSpec::ClosedForm {
            c1: 1.0,
            c2: 0.0,
            c3: 0.0,
        })
        .build()
}

/// Interior samples of the ODE residual sweep. The residual is absolute and
/// its terms grow like `(1 - w^2)^(-7/2)` at the ends of a closed-form domain.
pub const ODE_SAMPLES: usize = 50;

/// Profile ODE sweeps and the case constraints of rotational hypersurfaces.
pub fn cmd_ode(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let tol = cfg.tol("ode");
    let profile = profile_of(cfg)?;
    report.data("profile", profile.kind());
    report.data("profile.domain", profile.domain());
    let samples = profile.samples(200);
    let residual = profile
        .samples(ODE_SAMPLES)
        .iter()
        .map(|&s| ode_residual(&profile, s).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.push(match profile.kind() {
        ProfileKind::Custom => Check::above("ode.residual", residual, tol).with_detail("not a solution"),
        _ => Check::at_most("ode.residual", residual, tol),
    });

    // mu_T derivative against its closed form
    let fd_worst = samples[10..190]
        .iter()
        .map(|&s| -> Result<f64> {
            let h = 1e-4;
            let mu_t = |x: f64| -> Result<f64> {
                let [_, a1, a2, _] = profile.eval(x)?;
                Ok(a2 / (1.0 + a1 * a1).powf(1.5))
            };
            let fd = (mu_t(s - 2.0 * h)? - 8.0 * mu_t(s - h)? + 8.0 * mu_t(s + h)? - mu_t(s + 2.0 * h)?) / (12.0 * h);
            let [_, a1, a2, a3] = profile.eval(s)?;
            let b = (1.0 + a1 * a1).sqrt();
            let db = a1 * a2 / b;
            let exact = (a3 * b - 3.0 * a2 * db) / b.powi(4);
            Ok((fd - exact).abs() / exact.abs().max(1.0))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.push(Check::at_most("ode.mu_t_derivative", fd_worst, 1e-6));

    let s_grid: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
    let slopes = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut horo: f64 = 0.0;
    let mut constancy: f64 = 0.0;
    for &b in &slopes {
        let a = ProfileFunction::affine(b, -2.0, 2.0)?;
        for &s in &s_grid {
            let (r2, r3) = case_constraints(&a, 1.0, ModelConstant::HYPERBOLIC, s)?;
            horo = horo.max(r2.abs()).max(r3.abs());
        }
        let mus = s_grid
            .iter()
            .map(|&s| rotational_curvatures(&a, 1.0, ModelConstant::HYPERBOLIC, s))
            .collect::<Result<Vec<_>>>()?;
        constancy = constancy
            .max(spread(mus.iter().map(|m| m.0)))
            .max(spread(mus.iter().map(|m| m.1)));
    }
    report.push(Check::at_most("case.horosphere_affine", horo, tol));
    report.push(Check::at_most("case.rotational_constancy", constancy, tol));

    let mut sphere_min = f64::INFINITY;
    for &b in &slopes {
        let a = ProfileFunction::affine(b, -2.0, 2.0)?;
        for k in 0..41 {
            let lambda = -4.0 + 0.2 * k as f64;
            let (r2, _) = case_constraints(&a, lambda, ModelConstant::SPHERE, 0.0)?;
            sphere_min = sphere_min.min(r2);
        }
    }
    report.push(Check::above("case.sphere_obstruction", sphere_min, 0.0));

    let mut closed_form_min = f64::INFINITY;
    for (c1, c2) in [(1.0, 0.0), (2.0, 0.1), (-1.5, 1.2)] {
        let a = closed_form_profile(c1, c2, 0.0)?;
        for s in a.samples(20) {
            let lambda = -c1 / (c1 * s + c2);
            for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
                let (r2, _) = case_constraints(&a, lambda, c, s)?;
                closed_form_min = closed_form_min.min(r2.abs());
            }
        }
    }
    report.push(Check::above("case.closed_form_incompatibility", closed_form_min, tol));
    Ok(())
}

/// Validation of the whole catalog plus the generic and surface checks.
pub fn cmd_suite(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let tol = cfg.catalog_tolerances();
    let entries = catalog::default_catalog();
    let results: Vec<(String, Vec<Check>)> = entries
        .par_iter()
        .map(|e| {
            let checks = match cfg.grid.as_ref().map(|g| g.resolve(e.chart.as_ref())) {
                Some(Ok(g)) => catalog::validate_with(e, &g, &tol),
                Some(Err(err)) => vec![Check::from_error("grid", &err)],
                None => match e.default_grid() {
                    Ok(g) => catalog::validate_with(e, &g, &tol),
                    Err(err) => vec![Check::from_error("grid", &err)],
                },
            };
            (e.name.clone(), checks)
        })
        .collect();
    for (name, checks) in results {
        report.extend(&name, checks);
    }
    for chart in catalog::generic_graphs() {
        let grid = cfg.grid_for(chart.as_ref())?;
        let c = chart.as_ref();
        let mut checks = Vec::new();
        match sweep_residuals(&grid, |u| structure_residuals(c, u, &[])) {
            Ok(r) => checks.extend(
                r.iter()
                    .map(|(k, v)| Check::at_most(format!("structure.{k}"), v, tol.structure)),
            ),
            Err(e) => checks.push(Check::from_error("structure", &e)),
        }
        report.extend(chart.name(), checks);
    }
    let scan = minimal_scan(0.05, 5.0, 500, 1e-9)?;
    report.push(Check::at_most("minimal_scan.counterexamples", scan.counterexamples as f64, 0.0));
    report.data("minimal_scan", scan);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::ConfigFile;

    fn cfg(command: &str, entry: &str) -> RunConfig {
        let mut c = RunConfig::new(command, ConfigFile::default()).unwrap();
        c.entry = Some(entry.to_string());
        c
    }

    #[test]
    fn analyze_slice_is_green() {
        let c = cfg("analyze", "slice(c=1,n=2,t0=0.3)");
        let mut r = Report::new("analyze", &c);
        cmd_analyze(&c, &mut r).unwrap();
        assert_eq!(r.exit_code(), 0, "{}", r.render_text());
        assert_eq!(r.checks["curvature_values"].status, Status::Pass);
    }

    #[test]
    fn parallel_past_a_focal_value_is_an_error() {
        let mut c = cfg("parallel", "cylinder(c=1,n=2,geodesic-sphere(r=0.7))");
        c.t_range = Some((-2.0, 2.0, 5));
        c.grid = Some(crate::cli::config::GridSpec::Uniform(3));
        let mut r = Report::new("parallel", &c);
        let rows = cmd_parallel(&c, &mut r).unwrap();
        assert_eq!(r.checks["focal_margin"].status, Status::Error);
        assert_eq!(r.exit_code(), 3);
        assert_eq!(rows.len(), 5 * 2);
        assert!(render_csv(&rows).starts_with("t,lambda_index,predicted,measured\n"));
    }

    #[test]
    fn ode_defaults_pass() {
        let c = RunConfig::new("ode", ConfigFile::default()).unwrap();
        let mut r = Report::new("ode", &c);
        cmd_ode(&c, &mut r).unwrap();
        assert_eq!(r.exit_code(), 0, "{}", r.render_text());
    }
}
