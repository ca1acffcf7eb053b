//! Small dense helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::ambient::ModelConstant;
use crate::error::{GeomError, Result};

/// Vector orthogonal, in the signature-`c` metric, to the `len - 1` given
/// vectors of length `len`. Components are signed cofactors, so the result
/// depends smoothly on the inputs and vanishes exactly when they are
/// dependent.
pub fn cofactor_normal(rows: &[DVector<f64>], c: ModelConstant) -> DVector<f64> {
    let dim = rows.len() + 1;
    let mut out = DVector::zeros(dim);
    let mut minor = DMatrix::zeros(rows.len(), rows.len());
    for skip in 0..dim {
        for (r, row) in rows.iter().enumerate() {
            let mut col = 0;
            for k in 0..dim {
                if k != skip {
                    minor[(r, col)] = row[k];
                    col += 1;
                }
            }
        }
        let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
        out[skip] = sign * minor.clone().determinant();
    }
    out[0] *= c.value();
    out
}

/// Spectral data of a `G`-self-adjoint operator.
#[derive(Debug, Clone)]
pub struct MetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are `G`-orthonormal eigenvectors in chart coordinates.
    pub vectors: DMatrix<f64>,
}

/// Eigen-decomposition of `A = G^{-1} h` with `h` symmetric, through the
/// Cholesky factor `G = L L^T`.
pub fn metric_eigen(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<MetricEigen> {
    let l = g
        .clone()
        .cholesky()
        .ok_or_else(|| GeomError::Regularity("metric is not positive definite".into()))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Regularity("singular metric factor".into()))?;
    let m = &linv * h * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let lt_inv = linv.transpose();
    let n = g.nrows();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &(&lt_inv * eig.eigenvectors.column(k)));
    }
    Ok(MetricEigen { values, vectors })
}

/// Symmetric-matrix eigenvalues, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let m = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn g_inner(g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x.transpose() * g * y)[(0, 0)]
}

pub fn g_norm(g: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    g_inner(g, x, x).max(0.0).sqrt()
}

/// Largest gap between two multisets after sorting both.
pub fn sorted_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `max - min`, zero for empty input.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// Orthonormal basis (columns) of the `G`-orthogonal complement of `t`.
pub fn complement_basis(g: &DMatrix<f64>, t: &DVector<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut basis: Vec<DVector<f64>> = vec![t / g_norm(g, t)];
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for b in &basis {
            let p = g_inner(g, b, &v);
            v -= b * p;
        }
        let norm = g_norm(g, &v);
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    DMatrix::from_columns(&basis[1..])
}
