use crate::ambient::{cs_kernels, ModelConstant};
use crate::error::{GeomError, Result};

/// Smallest admitted immersion margin of a parallel map.
pub const EPS_REG: f64 = 1e-6;

/// `S_c(|T| t) / |T|`, continuous at `|T| = 0`.
fn scaled_s(tnorm: f64, t: f64, c: ModelConstant) -> f64 {
    if tnorm == 0.0 {
        t
    } else {
        cs_kernels(tnorm * t, c).1 / tnorm
    }
}

/// Curvature of a direction orthogonal to `T` after moving a distance `t`
/// along the normal.
pub fn transport_curvature(lambda: f64, tnorm: f64, c: ModelConstant, t: f64) -> Result<f64> {
    let (cc, ss) = cs_kernels(tnorm * t, c);
    let den = cc - lambda * scaled_s(tnorm, t, c);
    if !(den.abs() > EPS_REG) {
        return Err(GeomError::FocalPoint {
            index: 0,
            lambda,
            t,
            margin: den.abs(),
        });
    }
    Ok((c.value() * tnorm * ss + lambda * cc) / den)
}

/// Curvature of the `T` direction after moving a distance `t`.
pub fn transport_curvature_t(lambda_n: f64, t: f64) -> Result<f64> {
    let den = 1.0 - t * lambda_n;
    if !(den.abs() > EPS_REG) {
        return Err(GeomError::FocalPoint {
            index: 0,
            lambda: lambda_n,
            t,
            margin: den.abs(),
        });
    }
    Ok(lambda_n / den)
}

/// Smallest of the immersion factors `|C - lambda_i S / |T||` and
/// `|1 - t lambda_n|`, with the index of the curvature attaining it
/// (`transverse.len()` for the `T` direction).
pub fn regularity_margin(
    transverse: &[f64],
    lambda_n: f64,
    tnorm: f64,
    c: ModelConstant,
    t: f64,
) -> (f64, usize) {
    let (cc, _) = cs_kernels(tnorm * t, c);
    let s = scaled_s(tnorm, t, c);
    let mut best = ((1.0 - t * lambda_n).abs(), transverse.len());
    for (i, l) in transverse.iter().enumerate() {
        let m = (cc - l * s).abs();
        if m < best.0 {
            best = (m, i);
        }
    }
    best
}

/// Curvature of the parallel hypersurface at distance `s` inside the model
/// space itself.
pub fn model_parallel_curvature(lambda: f64, c: ModelConstant, s: f64) -> Result<f64> {
    let (cc, ss) = cs_kernels(s, c);
    let den = cc - ss * lambda;
    if !(den.abs() > EPS_REG) {
        return Err(GeomError::FocalPoint {
            index: 0,
            lambda,
            t: s,
            margin: den.abs(),
        });
    }
    Ok((c.value() * ss + cc * lambda) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn identity_at_zero() {
        for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
            assert_eq!(transport_curvature(0.37, 0.6, c, 0.0).unwrap(), 0.37);
            assert_eq!(model_parallel_curvature(-0.2, c, 0.0).unwrap(), -0.2);
        }
        assert_eq!(transport_curvature_t(0.8, 0.0).unwrap(), 0.8);
    }

    #[test]
    fn horosphere_curvature_is_a_fixed_point() {
        let c = ModelConstant::HYPERBOLIC;
        for k in -20..=20 {
            let t = 0.25 * k as f64;
            assert!((transport_curvature(-1.0, 1.0, c, t).unwrap() + 1.0).abs() < 1e-12);
            assert!((model_parallel_curvature(1.0, c, t).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t_direction_law() {
        for t in [-3.0, 0.5, 7.0] {
            assert_eq!(transport_curvature_t(0.0, t).unwrap(), 0.0);
        }
        assert_eq!(transport_curvature_t(0.5, 1.0).unwrap(), 1.0);
        assert!(matches!(
            transport_curvature_t(0.5, 2.0),
            Err(GeomError::FocalPoint { .. })
        ));
    }

    #[test]
    fn great_sphere_moves_like_tangent() {
        let v = model_parallel_curvature(0.0, ModelConstant::SPHERE, FRAC_PI_4).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn riccati_law_by_differences() {
        let h = 1e-4;
        for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
            for (lambda, tn, t) in [(0.3, 0.8, 0.2), (-0.7, 0.4, -0.3), (1.2, 1.0, 0.1)] {
                let d = (transport_curvature(lambda, tn, c, t + h).unwrap()
                    - transport_curvature(lambda, tn, c, t - h).unwrap())
                    / (2.0 * h);
                let l = transport_curvature(lambda, tn, c, t).unwrap();
                assert!((d - (c.value() * tn * tn + l * l)).abs() < 1e-6);
                let d = (model_parallel_curvature(lambda, c, t + h).unwrap()
                    - model_parallel_curvature(lambda, c, t - h).unwrap())
                    / (2.0 * h);
                let l = model_parallel_curvature(lambda, c, t).unwrap();
                assert!((d - (c.value() + l * l)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn vanishing_t_reduces_to_flat_law() {
        let a = transport_curvature(0.5, 0.0, ModelConstant::SPHERE, 1.0).unwrap();
        assert_eq!(a, 1.0);
    }
}
