use crate::ambient::ModelConstant;
use crate::error::{GeomError, Result};

/// Highest derivative order tabulated.
pub const MAX_ORDER: usize = 30;

/// Integer coefficients `u_{k,j}` of the `k`-th `t`-derivative of a transported
/// curvature, written as a polynomial in the curvature `l` with weights
/// `(c |T|^2)^{(k+1-j)/2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTable {
    rows: Vec<Vec<u128>>,
}

impl CoefficientTable {
    pub fn order(&self) -> usize {
        self.rows.len() - 1
    }

    /// `u_{k,j}`, or `None` where the parity rule excludes the index.
    pub fn get(&self, k: usize, j: usize) -> Option<u128> {
        let row = self.rows.get(k)?;
        if (k + j) % 2 == 0 {
            return None;
        }
        row.get(j).copied()
    }

    /// `(j, u_{k,j})` for the admitted indices of row `k`.
    pub fn row(&self, k: usize) -> Vec<(usize, u128)> {
        (0..=k + 1).filter_map(|j| self.get(k, j).map(|u| (j, u))).collect()
    }
}

/// Rows `0..=k` of the table: `u_{0,1} = 1` and
/// `u_{k,j} = (j+1) u_{k-1,j+1} + (j-1) u_{k-1,j-1}`.
pub fn derivative_coefficients(k: usize) -> Result<CoefficientTable> {
    if k == 0 || k > MAX_ORDER {
        return Err(GeomError::Parameter(format!(
            "derivative order must lie in 1..={MAX_ORDER}, got {k}"
        )));
    }
    let mut rows: Vec<Vec<u128>> = vec![vec![0, 1]];
    for order in 1..=k {
        let prev = &rows[order - 1];
        let at = |j: usize| prev.get(j).copied().unwrap_or(0);
        let mut row = vec![0u128; order + 2];
        for (j, slot) in row.iter_mut().enumerate() {
            let up = at(j + 1).checked_mul(j as u128 + 1);
            let down = if j >= 2 {
                at(j - 1).checked_mul(j as u128 - 1)
            } else {
                Some(0)
            };
            *slot = up
                .zip(down)
                .and_then(|(a, b)| a.checked_add(b))
                .ok_or(GeomError::Overflow(order))?;
        }
        rows.push(row);
    }
    Ok(CoefficientTable { rows })
}

/// `k`-th `t`-derivative at `t = 0` of the transported curvature.
pub fn curvature_derivative(lambda: f64, tnorm: f64, c: ModelConstant, k: usize) -> Result<f64> {
    let table = derivative_coefficients(k)?;
    let w = c.value() * tnorm * tnorm;
    Ok(table
        .row(k)
        .into_iter()
        .map(|(j, u)| u as f64 * w.powi(((k + 1 - j) / 2) as i32) * lambda.powi(j as i32))
        .sum())
}
