//! Identities of constant-curvature surfaces in `Q^2_c x R`.

use serde::Serialize;

use crate::ambient::ModelConstant;
use crate::error::{GeomError, Result};
use crate::immersion::ShapeData;
use crate::linalg::g_inner;

/// Curvatures closer than this count as equal.
pub const UMBILIC_GAP: f64 = 1e-12;

/// `l1 l2 + 2c nu^2 + c(l1 b1^2 - l2 b2^2)/(l2 - l1) + 2 nu^2 (b1^2 + b2^2)/(l2 - l1)^2`,
/// where `(b1, b2)` are the components of `T` in a principal frame.
///
/// The unit relation `nu^2 + b1^2 + b2^2 = 1` is not enforced here; see
/// [`unit_defect`].
pub fn surface_identity_residual(l1: f64, l2: f64, b1: f64, b2: f64, nu: f64, c: ModelConstant) -> Result<f64> {
    let gap = l2 - l1;
    if gap.abs() <= UMBILIC_GAP {
        return Err(GeomError::Umbilic);
    }
    let cv = c.value();
    let nu2 = nu * nu;
    Ok(l1 * l2
        + 2.0 * cv * nu2
        + cv * (l1 * b1 * b1 - l2 * b2 * b2) / gap
        + 2.0 * nu2 * (b1 * b1 + b2 * b2) / (gap * gap))
}

/// `nu^2 + b1^2 + b2^2 - 1`.
pub fn unit_defect(b1: f64, b2: f64, nu: f64) -> f64 {
    nu * nu + b1 * b1 + b2 * b2 - 1.0
}

/// Principal curvatures and the components of `T` along the principal
/// directions, `(l1, l2, b1, b2)`.
pub fn principal_split(sd: &ShapeData) -> Result<(f64, f64, f64, f64)> {
    if sd.n() != 2 {
        return Err(GeomError::Precondition(format!("surface expected, got n = {}", sd.n())));
    }
    let eig = sd.eigen()?;
    let b = |k: usize| g_inner(&sd.g, &sd.t, &eig.vectors.column(k).into_owned());
    Ok((eig.values[0], eig.values[1], b(0), b(1)))
}

/// [`surface_identity_residual`] from the shape data of a surface.
pub fn surface_identity_at(sd: &ShapeData) -> Result<f64> {
    let (l1, l2, b1, b2) = principal_split(sd)?;
    surface_identity_residual(l1, l2, b1, b2, sd.nu, sd.c)
}

/// The quadratic in `nu^2` satisfied by a minimal constant-curvature surface
/// with curvatures `+-l1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Biquadratic {
    /// `(1, -(1 + 5c l1^2), l1^2 (2 l1^2 + c))`.
    pub coefficients: [f64; 3],
    pub discriminant: f64,
    /// Real roots in `nu^2`, ascending.
    pub roots: Vec<f64>,
    /// Real roots inside `[0, 1]`.
    pub admissible: Vec<f64>,
}

pub fn minimal_biquadratic(l1: f64, c: ModelConstant) -> Result<Biquadratic> {
    if l1 == 0.0 || !l1.is_finite() {
        return Err(GeomError::Degenerate(format!(
            "curvature {l1} is not admissible for a non-geodesic minimal surface"
        )));
    }
    let cv = c.value();
    let l2 = l1 * l1;
    let b = -(1.0 + 5.0 * cv * l2);
    let k = l2 * (2.0 * l2 + cv);
    let discriminant = b * b - 4.0 * k;
    let mut roots = Vec::new();
    if discriminant >= 0.0 {
        let sq = discriminant.sqrt();
        // stable form of the quadratic formula
        let q = -0.5 * (b + b.signum() * sq);
        roots.push(q);
        roots.push(if q != 0.0 { k / q } else { 0.0 });
        roots.sort_by(f64::total_cmp);
    }
    let admissible = roots
        .iter()
        .copied()
        .filter(|r| (-1e-12..=1.0 + 1e-12).contains(r))
        .collect();
    Ok(Biquadratic {
        coefficients: [1.0, b, k],
        discriminant,
        roots,
        admissible,
    })
}

/// Outcome of following each admissible root through the constraints of a
/// minimal constant-curvature surface.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MinimalScan {
    pub samples: usize,
    pub admissible_roots: usize,
    /// Roots compatible with the unit relation once `b1 = b2 = 0` is forced.
    pub unit_compatible: usize,
    /// Of those, the ones also satisfying the constraint identity.
    pub identity_compatible: usize,
    /// Survivors not forced into a slice.
    pub counterexamples: usize,
}

/// Sweeps `l1` over `count` values of `[lo, hi]` for both signs of `c`.
///
/// A root fixes `nu`, so `0 = X_i(nu) = -l_i b_i` and, as `l_i = +-l1 != 0`,
/// `T` vanishes. The unit relation then forces `nu^2 = 1`, and a surface with
/// `T = 0` lies in a slice and is totally geodesic.
pub fn minimal_scan(lo: f64, hi: f64, count: usize, tol: f64) -> Result<MinimalScan> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(GeomError::Usage(format!("bad sweep [{lo}, {hi}] x {count}")));
    }
    let mut scan = MinimalScan::default();
    for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
        for k in 0..count {
            let l1 = if count == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            };
            scan.samples += 1;
            let bq = minimal_biquadratic(l1, c)?;
            for &nu2 in &bq.admissible {
                scan.admissible_roots += 1;
                let nu = nu2.max(0.0).sqrt();
                // forced components of T along the two principal directions
                let (b1, b2) = (0.0, 0.0);
                if unit_defect(b1, b2, nu).abs() > tol {
                    continue;
                }
                scan.unit_compatible += 1;
                if surface_identity_residual(l1, -l1, b1, b2, nu, c)?.abs() > tol {
                    continue;
                }
                scan.identity_compatible += 1;
                // with T = 0 the surface lies in a slice, which is totally
                // geodesic; only a survivor with T != 0 could be minimal and
                // non-geodesic
                if b1 * b1 + b2 * b2 > tol {
                    scan.counterexamples += 1;
                }
            }
        }
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_data_with_matching_product() {
        let r = surface_identity_residual(1.0, 2.0, 0.0, 0.0, 1.0, ModelConstant::HYPERBOLIC).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn circle_cylinder_data() {
        let k = 1.3;
        let r = surface_identity_residual(k, 0.0, 0.0, 1.0, 0.0, ModelConstant::SPHERE).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn inadmissible_tuple_is_nonzero() {
        let r = surface_identity_residual(1.0, -1.0, 0.5, 0.5, 0.5, ModelConstant::SPHERE).unwrap();
        assert!((r + 0.6875).abs() < 1e-15);
        assert!(unit_defect(0.5, 0.5, 0.5) != 0.0);
    }

    #[test]
    fn equal_curvatures_are_umbilic() {
        assert!(matches!(
            surface_identity_residual(0.4, 0.4, 0.0, 1.0, 0.0, ModelConstant::SPHERE),
            Err(GeomError::Umbilic)
        ));
    }

    #[test]
    fn biquadratic_coefficients() {
        let s = minimal_biquadratic(1.0, ModelConstant::SPHERE).unwrap();
        assert_eq!(s.coefficients, [1.0, -6.0, 3.0]);
        assert_eq!(s.discriminant, 24.0);
        let h = minimal_biquadratic(1.0, ModelConstant::HYPERBOLIC).unwrap();
        assert_eq!(h.coefficients, [1.0, 4.0, 1.0]);
        assert!(h.roots.iter().all(|r| *r < 0.0));
        assert!(h.admissible.is_empty());
        assert!(matches!(
            minimal_biquadratic(0.0, ModelConstant::SPHERE),
            Err(GeomError::Degenerate(_))
        ));
    }

    #[test]
    fn roots_solve_the_quadratic() {
        for l1 in [0.05, 0.3, 1.0, 2.5, 5.0] {
            for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
                let q = minimal_biquadratic(l1, c).unwrap();
                let [a, b, k] = q.coefficients;
                for r in &q.roots {
                    assert!((a * r * r + b * r + k).abs() <= 1e-9 * (1.0 + b.abs() * r.abs()));
                }
            }
        }
    }

    #[test]
    fn scan_finds_no_counterexample() {
        let s = minimal_scan(0.05, 5.0, 200, 1e-9).unwrap();
        assert_eq!(s.samples, 400);
        assert!(s.admissible_roots > 0);
        assert_eq!(s.counterexamples, 0);
    }
}
