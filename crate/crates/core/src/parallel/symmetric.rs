use nalgebra::DMatrix;

use crate::error::{GeomError, Result};

/// `p_k = sum_i l_i^k` for `k = 1..=k_max`.
pub fn power_sums(lambdas: &[f64], k_max: usize) -> Vec<f64> {
    let mut pows = vec![1.0; lambdas.len()];
    (1..=k_max)
        .map(|_| {
            for (p, l) in pows.iter_mut().zip(lambdas) {
                *p *= l;
            }
            pows.iter().sum()
        })
        .collect()
}

/// Elementary symmetric functions `e_1..e_n` from power sums `p_1..p_n`
/// through `k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} p_i`.
pub fn charpoly_from_power_sums(p: &[f64]) -> Vec<f64> {
    let mut e = vec![1.0];
    for k in 1..=p.len() {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i - 1];
        }
        e.push(acc / k as f64);
    }
    e.remove(0);
    e
}

fn horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in coeffs {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Roots, ascending, of `x^n - e_1 x^{n-1} + e_2 x^{n-2} - ...`; fails when a
/// root is far from the real axis.
pub fn real_roots(e: &[f64]) -> Result<Vec<f64>> {
    let n = e.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    // monic coefficients, highest degree first
    let mut coeffs = vec![1.0];
    for (k, ek) in e.iter().enumerate() {
        coeffs.push(if k % 2 == 0 { -ek } else { *ek });
    }
    let mut companion = DMatrix::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -coeffs[j + 1];
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let scale = 1.0 + coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots = Vec::with_capacity(n);
    for z in companion.complex_eigenvalues().iter() {
        if z.im.abs() > 1e-4 * scale {
            return Err(GeomError::Degenerate(format!(
                "polynomial has a non-real root {:.6}{:+.6}i",
                z.re, z.im
            )));
        }
        let mut x = z.re;
        for _ in 0..50 {
            let (p, dp) = horner(&coeffs, x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        roots.push(x);
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}
