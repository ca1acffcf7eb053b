//! Height profiles `a(s)` of rotational hypersurfaces, the third-order ODE
//! they must satisfy for a constant `T`-curvature, and the case constraints.

use std::sync::Arc;

use serde::Serialize;

use crate::ambient::ModelConstant;
use crate::error::{GeomError, Result};
use crate::parallel::model_parallel_curvature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Affine { slope: f64 },
    ClosedForm { c1: f64, c2: f64, c3: f64 },
    Custom,
}

type Evaluator = dyn Fn(f64) -> [f64; 4] + Send + Sync;

/// `s -> (a, a', a'', a''')` on an open interval where `a' > 0`.
#[derive(Clone)]
pub struct ProfileFunction {
    kind: ProfileKind,
    lo: f64,
    hi: f64,
    eval: Arc<Evaluator>,
}

impl std::fmt::Debug for ProfileFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProfileFunction")
            .field("kind", &self.kind)
            .field("domain", &(self.lo, self.hi))
            .finish()
    }
}

impl ProfileFunction {
    /// `a(s) = B s`.
    pub fn affine(slope: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(slope > 0.0) {
            return Err(GeomError::Parameter(format!("affine slope must be positive, got {slope}")));
        }
        Ok(Self {
            kind: ProfileKind::Affine { slope },
            lo,
            hi,
            eval: Arc::new(move |s| [slope * s, slope, 0.0, 0.0]),
        })
    }

    /// A profile with its own derivative evaluator.
    pub fn custom(lo: f64, hi: f64, eval: impl Fn(f64) -> [f64; 4] + Send + Sync + 'static) -> Self {
        Self {
            kind: ProfileKind::Custom,
            lo,
            hi,
            eval: Arc::new(eval),
        }
    }

    /// `a(s) = s + k s^3`.
    pub fn cubic(k: f64, lo: f64, hi: f64) -> Self {
        Self::custom(lo, hi, move |s| {
            [s + k * s * s * s, 1.0 + 3.0 * k * s * s, 6.0 * k * s, 6.0 * k]
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Open interval `(lo, hi)`.
    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, s: f64) -> bool {
        s > self.lo && s < self.hi
    }

    /// `(a, a', a'', a''')` at `s`.
    pub fn eval(&self, s: f64) -> Result<[f64; 4]> {
        if !self.contains(s) {
            return Err(GeomError::Domain { point: vec![s] });
        }
        Ok((self.eval)(s))
    }

    /// Same profile on a sub-interval.
    pub fn restricted(&self, lo: f64, hi: f64) -> Result<Self> {
        if lo < self.lo || hi > self.hi || lo >= hi {
            return Err(GeomError::Parameter(format!(
                "({lo}, {hi}) is not inside ({}, {})",
                self.lo, self.hi
            )));
        }
        Ok(Self {
            lo,
            hi,
            ..self.clone()
        })
    }

    /// `n` evenly spaced interior samples.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (n + 1) as f64)
            .collect()
    }
}

/// The closed-form family `a(s) = -sqrt(1 - (c1 s + c2)^2) / c1 + c3`, defined
/// where `0 < c1 s + c2 < 1`.
pub fn closed_form_profile(c1: f64, c2: f64, c3: f64) -> Result<ProfileFunction> {
    if c1 == 0.0 || !c1.is_finite() {
        return Err(GeomError::Parameter("c1 must be nonzero".into()));
    }
    let (e0, e1) = ((0.0 - c2) / c1, (1.0 - c2) / c1);
    let (lo, hi) = if e0 < e1 { (e0, e1) } else { (e1, e0) };
    Ok(ProfileFunction {
        kind: ProfileKind::ClosedForm { c1, c2, c3 },
        lo,
        hi,
        eval: Arc::new(move |s| {
            let w = c1 * s + c2;
            let q = 1.0 - w * w;
            let r = q.sqrt();
            [
                -r / c1 + c3,
                w / r,
                c1 / (q * r),
                3.0 * c1 * c1 * w / (q * q * r),
            ]
        }),
    })
}

/// `a'''(1 + a'^2) - 3 a''^2 a'`.
pub fn ode_residual(a: &ProfileFunction, s: f64) -> Result<f64> {
    let [_, a1, a2, a3] = a.eval(s)?;
    Ok(a3 * (1.0 + a1 * a1) - 3.0 * a2 * a2 * a1)
}

/// Curvatures of the rotational hypersurface `(h_s(x), a(s))` built on a
/// parallel family `h_s` with base curvature `lambda_base`: the one shared by
/// the orbit directions and the one of the profile direction.
pub fn rotational_curvatures(
    a: &ProfileFunction,
    lambda_base: f64,
    c: ModelConstant,
    s: f64,
) -> Result<(f64, f64)> {
    let [_, a1, a2, _] = a.eval(s)?;
    let b = (1.0 + a1 * a1).sqrt();
    let lambda_s = model_parallel_curvature(lambda_base, c, s)?;
    Ok((-(a1 / b) * lambda_s, a2 / (b * b * b)))
}

/// Residuals `(r2, r3)`: `r2 = a'' l + a'(1 + a'^2)(c + l^2)` vanishes iff the
/// orbit curvature is constant in `s`; `r3` is [`ode_residual`].
pub fn case_constraints(
    a: &ProfileFunction,
    lambda_s: f64,
    c: ModelConstant,
    s: f64,
) -> Result<(f64, f64)> {
    let [_, a1, a2, _] = a.eval(s)?;
    let r2 = a2 * lambda_s + a1 * (1.0 + a1 * a1) * (c.value() + lambda_s * lambda_s);
    Ok((r2, ode_residual(a, s)?))
}

/// `c1 l + (c1 s + c2)(c + l^2)`, the reduced form of `r2` on the closed-form
/// family.
pub fn closed_form_constraint(c1: f64, c2: f64, lambda_s: f64, c: ModelConstant, s: f64) -> f64 {
    c1 * lambda_s + (c1 * s + c2) * (c.value() + lambda_s * lambda_s)
}
