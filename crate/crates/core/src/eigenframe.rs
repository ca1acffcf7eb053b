//! Differentiable orthonormal eigenframes for fields of self-adjoint
//! operators whose eigenvalues keep constant multiplicities.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{Chart, Grid};
use crate::error::{GeomError, Result};
use crate::immersion::shape_data;
use crate::linalg::{g_inner, g_norm, metric_eigen};

/// Default clustering tolerance for computed spectra.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Relative projector-image norm below which a seed vector is rejected.
pub const SEED_THRESHOLD: f64 = 1e-10;

/// Distinct eigenvalues, decreasing, with their multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenStructure {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub tol_used: f64,
}

impl EigenStructure {
    pub fn n(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn clusters(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column range of cluster `k` in a frame.
    pub fn columns(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.multiplicities[..k].iter().sum();
        start..start + self.multiplicities[k]
    }

    fn same_shape(&self, other: &EigenStructure) -> bool {
        self.multiplicities == other.multiplicities
    }
}

/// Groups sorted eigenvalues into clusters of spread at most `tol` separated
/// by gaps above `2 tol`.
pub fn cluster_values(values: &[f64], tol: f64) -> Result<EigenStructure> {
    if values.is_empty() {
        return Err(GeomError::Usage("empty spectrum".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let mut groups: Vec<Vec<f64>> = vec![vec![v[0]]];
    for w in v.windows(2) {
        let gap = w[0] - w[1];
        if gap <= tol {
            groups.last_mut().unwrap().push(w[1]);
        } else if gap <= 2.0 * tol {
            return Err(GeomError::Clustering(format!(
                "gap {gap:.3e} between {} and {} is within (tol, 2 tol] for tol = {tol:.1e}",
                w[0], w[1]
            )));
        } else {
            groups.push(vec![w[1]]);
        }
    }
    for g in &groups {
        let spread = g[0] - g[g.len() - 1];
        if spread > tol {
            return Err(GeomError::Clustering(format!(
                "cluster spread {spread:.3e} exceeds tol = {tol:.1e}"
            )));
        }
    }
    Ok(EigenStructure {
        eigenvalues: groups
            .iter()
            .map(|g| g.iter().sum::<f64>() / g.len() as f64)
            .collect(),
        multiplicities: groups.iter().map(Vec::len).collect(),
        tol_used: tol,
    })
}

/// Eigenvalue clusters of a symmetric matrix.
pub fn cluster_spectrum(a: &DMatrix<f64>, tol: f64) -> Result<EigenStructure> {
    if !a.is_square() {
        return Err(GeomError::Precondition("operator must be square".into()));
    }
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 {
        return Err(GeomError::Precondition(format!(
            "matrix is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    cluster_values(&crate::linalg::sym_eigenvalues(a), tol)
}

/// An operator self-adjoint for `metric`, at one grid point.
#[derive(Debug, Clone)]
pub struct OperatorSample {
    pub operator: DMatrix<f64>,
    pub metric: DMatrix<f64>,
}

impl OperatorSample {
    /// A symmetric matrix with the identity metric.
    pub fn symmetric(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        Self {
            operator: a,
            metric: DMatrix::identity(n, n),
        }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let h = &self.metric * &self.operator;
        Ok(metric_eigen(&self.metric, &((&h + h.transpose()) * 0.5))?.values)
    }

    pub fn structure(&self, tol: f64) -> Result<EigenStructure> {
        cluster_values(&self.eigenvalues()?, tol)
    }
}

/// Samples a field of operators over a grid.
pub fn sample_field(
    grid: &Grid,
    f: impl Fn(&[f64]) -> Result<OperatorSample> + Sync,
) -> Result<Vec<OperatorSample>> {
    grid.points().par_iter().map(|u| f(u)).collect()
}

/// Shape operators of `chart` over `grid`, with the induced metric.
pub fn shape_operator_field(chart: &dyn Chart, grid: &Grid) -> Result<Vec<OperatorSample>> {
    sample_field(grid, |u| {
        let sd = shape_data(chart, u)?;
        Ok(OperatorSample {
            operator: sd.a,
            metric: sd.g,
        })
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FrameMetrics {
    /// `|<X_i, X_j> - delta_ij|`.
    pub gram_error: f64,
    /// `|A X - lambda X|` of the final frame.
    pub eigen_residual: f64,
    /// `|(A - lambda_k) X| / |X|` of the raw projector images.
    pub projector_residual: f64,
    /// Normalized inner products of raw images from distinct clusters.
    pub cross_cluster: f64,
    /// Largest change of a frame vector between adjacent grid points.
    pub max_adjacent_deviation: f64,
    /// `max_adjacent_deviation` over the largest grid spacing.
    pub continuity_constant: f64,
    pub min_determinant: f64,
}

/// One orthonormal eigenframe per grid point; columns grouped by cluster in
/// decreasing eigenvalue order.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub structure: EigenStructure,
    pub frames: Vec<DMatrix<f64>>,
    /// Cluster eigenvalues at each point, decreasing.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Canonical indices of the seed vectors, per cluster.
    pub seeds: Vec<Vec<usize>>,
    /// Grid points where a seed degenerated and the next canonical vector
    /// took its place.
    pub reseeded: Vec<usize>,
    pub positively_oriented: bool,
    pub metrics: FrameMetrics,
}

impl FrameField {
    pub fn cluster_vectors(&self, point: usize, cluster: usize) -> DMatrix<f64> {
        self.frames[point]
            .columns_range(self.structure.columns(cluster))
            .into_owned()
    }
}

fn projector(a: &DMatrix<f64>, values: &[f64], k: usize) -> (DMatrix<f64>, f64) {
    let n = a.nrows();
    let mut p = DMatrix::identity(n, n);
    let mut scale = 1.0;
    for (j, &l) in values.iter().enumerate() {
        if j != k {
            p = (a - DMatrix::identity(n, n) * l) * p;
            scale *= (values[k] - l).abs();
        }
    }
    if k % 2 == 1 {
        p = -p;
    }
    (p, scale)
}

fn canonical(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// First-fit choice of canonical seeds for cluster `k`: the `preferred`
/// indices first, then the remaining ones in order. Returns the chosen
/// indices with their projector images.
fn pick_seeds(
    sample: &OperatorSample,
    values: &[f64],
    k: usize,
    multiplicity: usize,
    preferred: &[usize],
) -> Option<Vec<(usize, DVector<f64>)>> {
    let n = sample.operator.nrows();
    let g = &sample.metric;
    let (p, scale) = projector(&sample.operator, values, k);
    let order = preferred
        .iter()
        .copied()
        .chain((0..n).filter(|i| !preferred.contains(i)));
    let mut accepted: Vec<DVector<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for i in order {
        if chosen.len() == multiplicity {
            break;
        }
        let x = &p * canonical(n, i);
        let mut v = &x / scale;
        for b in &accepted {
            v -= b * g_inner(g, b, &v);
        }
        let norm = g_norm(g, &v);
        if norm > SEED_THRESHOLD {
            accepted.push(v / norm);
            chosen.push((i, x));
        }
    }
    (chosen.len() == multiplicity).then_some(chosen)
}

fn choose_seeds(sample: &OperatorSample, values: &[f64], structure: &EigenStructure) -> Result<Vec<Vec<usize>>> {
    (0..values.len())
        .map(|k| {
            pick_seeds(sample, values, k, structure.multiplicities[k], &[])
                .map(|c| c.into_iter().map(|(i, _)| i).collect())
                .ok_or_else(|| {
                    GeomError::Seed(format!(
                        "no canonical seeds span eigenspace {k} (eigenvalue {})",
                        values[k]
                    ))
                })
        })
        .collect()
}

struct PointFrame {
    frame: DMatrix<f64>,
    values: Vec<f64>,
    projector_residual: f64,
    cross_cluster: f64,
    reseeded: bool,
}

fn frame_at(
    sample: &OperatorSample,
    structure: &EigenStructure,
    seeds: &[Vec<usize>],
    point: usize,
) -> Result<PointFrame> {
    let local = sample.structure(structure.tol_used)?;
    if !local.same_shape(structure) {
        return Err(GeomError::Stratification(format!(
            "multiplicities {:?} at grid point {point} differ from {:?}",
            local.multiplicities, structure.multiplicities
        )));
    }
    let n = structure.n();
    let g = &sample.metric;
    let a = &sample.operator;
    let values = local.eigenvalues;
    let mut raw: Vec<(usize, DVector<f64>)> = Vec::with_capacity(n);
    let mut projector_residual: f64 = 0.0;
    let mut reseeded = false;
    for k in 0..values.len() {
        let chosen = pick_seeds(sample, &values, k, structure.multiplicities[k], &seeds[k]).ok_or_else(|| {
            GeomError::Seed(format!("no canonical seeds span eigenspace {k} at grid point {point}"))
        })?;
        reseeded |= chosen.iter().map(|(i, _)| *i).ne(seeds[k].iter().copied());
        for (_, x) in chosen {
            let len = g_norm(g, &x);
            let r = a * &x - &x * values[k];
            projector_residual = projector_residual.max(g_norm(g, &r) / len);
            raw.push((k, x));
        }
    }
    let mut cross_cluster: f64 = 0.0;
    for (p, (kp, xp)) in raw.iter().enumerate() {
        for (kq, xq) in &raw[p + 1..] {
            if kp != kq {
                let cos = g_inner(g, xp, xq) / (g_norm(g, xp) * g_norm(g, xq));
                cross_cluster = cross_cluster.max(cos.abs());
            }
        }
    }
    // modified Gram-Schmidt in the metric
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for (_, x) in raw {
        let mut v = x;
        for b in &basis {
            let p = g_inner(g, b, &v);
            v -= b * p;
        }
        let norm = g_norm(g, &v);
        if !(norm > 0.0) {
            return Err(GeomError::Seed(format!("frame collapsed at grid point {point}")));
        }
        basis.push(v / norm);
    }
    Ok(PointFrame {
        frame: DMatrix::from_columns(&basis),
        values,
        projector_residual,
        cross_cluster,
        reseeded,
    })
}

/// Orthonormal eigenframes over `grid` built from projector products applied
/// to canonical seeds, with signs made continuous along the traversal order
/// (each point follows its [`Grid::parent`]).
pub fn smooth_frame(
    grid: &Grid,
    field: &[OperatorSample],
    structure: &EigenStructure,
) -> Result<FrameField> {
    if field.len() != grid.len() {
        return Err(GeomError::Usage(format!(
            "field has {} samples for a grid of {} points",
            field.len(),
            grid.len()
        )));
    }
    let first = field[0].structure(structure.tol_used)?;
    if !first.same_shape(structure) {
        return Err(GeomError::Stratification(format!(
            "multiplicities {:?} at the first grid point differ from {:?}",
            first.multiplicities, structure.multiplicities
        )));
    }
    let seeds = choose_seeds(&field[0], &first.eigenvalues, structure)?;
    let points = field
        .par_iter()
        .enumerate()
        .map(|(k, s)| frame_at(s, structure, &seeds, k))
        .collect::<Result<Vec<_>>>()?;

    let n = structure.n();
    let mut metrics = FrameMetrics::default();
    let mut frames: Vec<DMatrix<f64>> = Vec::with_capacity(points.len());
    let mut reseeded = Vec::new();
    let mut eigenvalues = Vec::with_capacity(points.len());
    for (k, p) in points.into_iter().enumerate() {
        let mut frame = p.frame;
        match grid.parent(k) {
            None => {
                if frame.determinant() < 0.0 {
                    let mut last = frame.column_mut(n - 1);
                    last *= -1.0;
                }
            }
            Some(parent) => {
                for i in 0..n {
                    let dot = frame.column(i).dot(&frames[parent].column(i));
                    if dot < 0.0 {
                        let mut col = frame.column_mut(i);
                        col *= -1.0;
                    }
                }
            }
        }
        if p.reseeded {
            reseeded.push(k);
        }
        metrics.projector_residual = metrics.projector_residual.max(p.projector_residual);
        metrics.cross_cluster = metrics.cross_cluster.max(p.cross_cluster);
        frames.push(frame);
        eigenvalues.push(p.values);
    }

    let mut min_det = f64::INFINITY;
    for (k, frame) in frames.iter().enumerate() {
        let g = &field[k].metric;
        let a = &field[k].operator;
        let gram = frame.transpose() * g * frame;
        metrics.gram_error = metrics
            .gram_error
            .max((gram - DMatrix::identity(n, n)).amax());
        for c in 0..structure.clusters() {
            for i in structure.columns(c) {
                let x = frame.column(i).into_owned();
                let r = a * &x - &x * eigenvalues[k][c];
                metrics.eigen_residual = metrics.eigen_residual.max(g_norm(g, &r));
            }
        }
        min_det = min_det.min(frame.determinant());
    }
    metrics.min_determinant = min_det;

    let h = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    for (p, q) in grid.edges() {
        let dev = (&frames[p] - &frames[q])
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        metrics.max_adjacent_deviation = metrics.max_adjacent_deviation.max(dev);
    }
    metrics.continuity_constant = metrics.max_adjacent_deviation / h;

    Ok(FrameField {
        structure: structure.clone(),
        frames,
        eigenvalues,
        seeds,
        reseeded,
        positively_oriented: min_det > 0.0,
        metrics,
    })
}

/// Maximal adjacent deviation at `grid` and at its refinement, and their
/// ratio, which tends to `1/2` for a differentiable frame. Constant frames
/// give a ratio of `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refinement {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: Option<f64>,
}

/// Deviations below this count as a constant frame.
pub const CONSTANT_FRAME: f64 = 1e-12;

pub fn refinement_study(
    grid: &Grid,
    structure: &EigenStructure,
    field: impl Fn(&[f64]) -> Result<OperatorSample> + Sync,
) -> Result<Refinement> {
    Ok(refinement_sequence(grid, 1, structure, field)?[0])
}

/// `levels` successive refinement studies starting at `grid`, each grid
/// framed once.
pub fn refinement_sequence(
    grid: &Grid,
    levels: usize,
    structure: &EigenStructure,
    field: impl Fn(&[f64]) -> Result<OperatorSample> + Sync,
) -> Result<Vec<Refinement>> {
    let mut g = grid.clone();
    let mut deviations = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        if level > 0 {
            g = g.refined();
        }
        let frame = smooth_frame(&g, &sample_field(&g, &field)?, structure)?;
        deviations.push(frame.metrics.max_adjacent_deviation);
    }
    Ok(deviations
        .windows(2)
        .map(|w| Refinement {
            coarse: w[0],
            fine: w[1],
            ratio: (w[0] > CONSTANT_FRAME).then(|| w[1] / w[0]),
        })
        .collect())
}
