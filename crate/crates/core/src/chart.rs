//! Parametrized hypersurfaces `F: U ⊂ R^n -> Q^n_c x R ⊂ E^{n+2}`.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::ambient::{scaled_model_residual, AmbientVector, ModelConstant, EPS_MODEL};
use crate::error::{GeomError, Result};
use crate::jets::{Jet, Jet2};

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    /// `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Self {
        Self::new(vec![-r; n], vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// The box shrunk by `frac` of each side length at both ends.
    pub fn shrink(&self, frac: f64) -> Domain {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let d = frac * (b - a);
                (a + d, b - d)
            })
            .unzip();
        Domain { lo, hi }
    }

    /// Tensor grid with `counts[i]` points on axis `i`, endpoints included.
    pub fn grid(&self, counts: &[usize]) -> Result<Grid> {
        Grid::new(self.lo.clone(), self.hi.clone(), counts.to_vec())
    }

    /// Grid on the interior box used for analyses, leaving room for
    /// difference stencils at the edges.
    pub fn analysis_grid(&self, counts: &[usize]) -> Result<Grid> {
        self.shrink(0.02).grid(counts)
    }
}

/// Regular tensor grid, traversed in lexicographic order with the last axis
/// fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != counts.len() || hi.len() != counts.len() {
            return Err(GeomError::Usage("grid axes do not match".into()));
        }
        if let Some(k) = counts.iter().find(|&&k| k < 2) {
            return Err(GeomError::Usage(format!(
                "grid needs at least 2 points per axis, got {k}"
            )));
        }
        Ok(Self { lo, hi, counts })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.counts[a];
            flat /= self.counts[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (i, k)| acc * k + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lo[a] + i as f64 * self.spacing(a))
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Neighbor reached by decrementing the last nonzero index; every point
    /// except the first has one and it precedes the point in traversal order.
    pub fn parent(&self, flat: usize) -> Option<usize> {
        let mut idx = self.multi_index(flat);
        let a = idx.iter().rposition(|&i| i > 0)?;
        idx[a] -= 1;
        Some(self.flat_index(&idx))
    }

    /// All pairs of axis-adjacent points, each listed once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            let idx = self.multi_index(k);
            for a in 0..self.dim() {
                if idx[a] + 1 < self.counts[a] {
                    let mut j = idx.clone();
                    j[a] += 1;
                    out.push((k, self.flat_index(&j)));
                }
            }
        }
        out
    }

    /// Same box with every axis refined to `2(k-1)+1` points.
    pub fn refined(&self) -> Grid {
        Grid {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            counts: self.counts.iter().map(|k| 2 * (k - 1) + 1).collect(),
        }
    }
}

/// A hypersurface chart into `Q^n_c x R`.
pub trait Chart: Send + Sync {
    fn name(&self) -> &str;
    fn n(&self) -> usize;
    fn c(&self) -> ModelConstant;
    fn domain(&self) -> &Domain;

    /// Point at which the normal orientation is fixed.
    fn base_point(&self) -> Vec<f64> {
        self.domain().center()
    }

    fn point(&self, u: &[f64]) -> Result<AmbientVector>;
    fn jet2(&self, u: &[f64]) -> Result<Jet2>;

    /// `+1` or `-1`, multiplied into the raw cofactor normal.
    fn orientation(&self) -> f64;
}

pub(crate) fn check_domain(chart: &dyn Chart, u: &[f64]) -> Result<()> {
    if u.len() != chart.n() {
        return Err(GeomError::Usage(format!(
            "chart `{}` takes {} parameters, got {}",
            chart.name(),
            chart.n(),
            u.len()
        )));
    }
    if !chart.domain().contains(u) {
        return Err(GeomError::Domain { point: u.to_vec() });
    }
    Ok(())
}

pub(crate) fn check_model(x: &AmbientVector, c: ModelConstant) -> Result<()> {
    let residual = scaled_model_residual(x.as_slice(), c);
    if !(residual <= EPS_MODEL) {
        return Err(GeomError::Constraint { residual });
    }
    if !c.is_sphere() && x[0] <= 0.0 {
        return Err(GeomError::Precondition("chart left the upper sheet".into()));
    }
    Ok(())
}

/// Value and derivatives of `chart` at `u`, with domain and model checks.
pub fn evaluate_jet2(chart: &dyn Chart, u: &[f64]) -> Result<Jet2> {
    check_domain(chart, u)?;
    let j = chart.jet2(u)?;
    check_model(&j.value, chart.c())?;
    Ok(j)
}

type JetMap = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// Chart given by a closure over jets; derivatives come out of the jet
/// arithmetic.
#[derive(Clone)]
pub struct AnalyticChart {
    name: String,
    n: usize,
    c: ModelConstant,
    domain: Domain,
    base: Vec<f64>,
    map: Arc<JetMap>,
    orientation: Arc<OnceLock<f64>>,
}

impl std::fmt::Debug for AnalyticChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticChart")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("c", &self.c)
            .field("domain", &self.domain)
            .finish()
    }
}

impl AnalyticChart {
    pub fn new(
        name: impl Into<String>,
        c: ModelConstant,
        domain: Domain,
        map: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        let n = domain.dim();
        let base = domain.center();
        Self {
            name: name.into(),
            n,
            c,
            domain,
            base,
            map: Arc::new(map),
            orientation: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_base_point(mut self, base: Vec<f64>) -> Self {
        self.base = base;
        self.orientation = Arc::new(OnceLock::new());
        self
    }

    /// Same map with the opposite normal.
    pub fn flipped(&self) -> Self {
        let sign = -self.orientation();
        let cell = OnceLock::new();
        let _ = cell.set(sign);
        Self {
            orientation: Arc::new(cell),
            ..self.clone()
        }
    }

    fn run(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        let out = (self.map)(u);
        if out.len() != self.n + 2 {
            return Err(GeomError::Usage(format!(
                "chart `{}` produced {} components, expected {}",
                self.name,
                out.len(),
                self.n + 2
            )));
        }
        Ok(out)
    }
}

impl Chart for AnalyticChart {
    fn name(&self) -> &str {
        &self.name
    }

    fn n(&self) -> usize {
        self.n
    }

    fn c(&self) -> ModelConstant {
        self.c
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn base_point(&self) -> Vec<f64> {
        self.base.clone()
    }

    fn point(&self, u: &[f64]) -> Result<AmbientVector> {
        check_domain(self, u)?;
        let args: Vec<Jet> = u.iter().map(|&x| Jet::constant(0, x)).collect();
        let out = self.run(&args)?;
        Ok(DVector::from_iterator(out.len(), out.iter().map(|j| j.value())))
    }

    fn jet2(&self, u: &[f64]) -> Result<Jet2> {
        check_domain(self, u)?;
        Ok(Jet2::from_components(&self.run(&Jet::seed(u))?))
    }

    fn orientation(&self) -> f64 {
        *self
            .orientation
            .get_or_init(|| crate::immersion::base_orientation(self).unwrap_or(1.0))
    }
}

/// `v -> chart(M v + b)` on a box of the new parameters.
pub struct AffineReparam {
    inner: Arc<dyn Chart>,
    matrix: DMatrix<f64>,
    offset: Vec<f64>,
    domain: Domain,
    name: String,
    orientation: OnceLock<f64>,
}

impl AffineReparam {
    pub fn new(
        inner: Arc<dyn Chart>,
        matrix: DMatrix<f64>,
        offset: Vec<f64>,
        domain: Domain,
    ) -> Result<Self> {
        let n = inner.n();
        if matrix.nrows() != n || matrix.ncols() != n || offset.len() != n || domain.dim() != n {
            return Err(GeomError::Usage("affine reparametrization shape mismatch".into()));
        }
        if matrix.determinant().abs() < 1e-12 {
            return Err(GeomError::Regularity("singular reparametrization".into()));
        }
        let name = format!("{}∘affine", inner.name());
        Ok(Self {
            inner,
            matrix,
            offset,
            domain,
            name,
            orientation: OnceLock::new(),
        })
    }

    fn map(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        let u = &self.matrix * v;
        u.iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }
}

impl Chart for AffineReparam {
    fn name(&self) -> &str {
        &self.name
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn c(&self) -> ModelConstant {
        self.inner.c()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn point(&self, v: &[f64]) -> Result<AmbientVector> {
        check_domain(self, v)?;
        self.inner.point(&self.map(v))
    }

    fn jet2(&self, v: &[f64]) -> Result<Jet2> {
        check_domain(self, v)?;
        let j = self.inner.jet2(&self.map(v))?;
        let m = &self.matrix;
        let n = self.n();
        let d1 = &j.d1 * m;
        Ok(Jet2::from_parts(j.value.clone(), d1, |a, b| {
            let mut acc = DVector::zeros(j.value.len());
            for p in 0..n {
                for q in 0..n {
                    let w = m[(p, a)] * m[(q, b)];
                    if w != 0.0 {
                        acc.axpy(w, j.second(p, q), 1.0);
                    }
                }
            }
            acc
        }))
    }

    fn orientation(&self) -> f64 {
        *self
            .orientation
            .get_or_init(|| crate::immersion::base_orientation(self).unwrap_or(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_chart() -> AnalyticChart {
        // slice of S^2 x R through a gnomonic chart, with a quadratic height
        AnalyticChart::new("test", ModelConstant::SPHERE, Domain::cube(2, 0.5), |u| {
            let r = (u[0] * u[0] + u[1] * u[1] + 1.0).sqrt();
            vec![1.0 / r, u[0] / r, u[1] / r, u[0] * u[1]]
        })
    }

    #[test]
    fn grid_indexing_round_trips() {
        let g = Grid::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![3, 5]).unwrap();
        assert_eq!(g.len(), 15);
        for k in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(k)), k);
            if k > 0 {
                assert!(g.parent(k).unwrap() < k);
            }
        }
        assert_eq!(g.parent(0), None);
        assert_eq!(g.point(14), vec![1.0, 2.0]);
        assert_eq!(g.edges().len(), 2 * 5 + 3 * 4);
        assert_eq!(g.refined().counts(), &[5, 9]);
    }

    #[test]
    fn grid_rejects_single_point_axes() {
        assert!(Grid::new(vec![0.0], vec![1.0], vec![1]).is_err());
    }

    #[test]
    fn evaluation_outside_domain_is_a_domain_error() {
        let c = plane_chart();
        assert!(matches!(
            evaluate_jet2(&c, &[0.9, 0.0]),
            Err(GeomError::Domain { .. })
        ));
    }

    #[test]
    fn mixed_height_component() {
        let c = plane_chart();
        let j = evaluate_jet2(&c, &[0.1, 0.2]).unwrap();
        assert_eq!(j.second(0, 1)[3], 1.0);
        assert_eq!(j.second(1, 0)[3], 1.0);
        assert_eq!(j.second(0, 0)[3], 0.0);
    }

    #[test]
    fn off_model_chart_is_rejected() {
        let bad = AnalyticChart::new("bad", ModelConstant::SPHERE, Domain::cube(2, 0.5), |u| {
            vec![u[0] * 0.0 + 1.0, u[0], u[1], u[0]]
        });
        assert!(matches!(
            evaluate_jet2(&bad, &[0.3, 0.1]),
            Err(GeomError::Constraint { .. })
        ));
    }
}
