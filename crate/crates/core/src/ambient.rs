//! Flat ambient space E^{n+2}, the model spaces Q^n_c and the product
//! exponential map.
//!
//! Coordinates are `(x_1, ..., x_{n+2})`. The first `n+1` carry the model
//! quadric `c x_1^2 + x_2^2 + ... + x_{n+1}^2 = c`, the last one is the height
//! along the `R` factor, so `d/dt = e_{n+2}` everywhere.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Vectors of E^{n+2}.
pub type AmbientVector = DVector<f64>;

/// Membership tolerance for the model quadric.
pub const EPS_MODEL: f64 = 1e-9;

/// Sectional curvature sign of the model space: `+1` for S^n, `-1` for H^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct ModelConstant(i8);

impl ModelConstant {
    pub const SPHERE: ModelConstant = ModelConstant(1);
    pub const HYPERBOLIC: ModelConstant = ModelConstant(-1);

    pub fn new(c: i32) -> Result<Self> {
        match c {
            1 => Ok(Self::SPHERE),
            -1 => Ok(Self::HYPERBOLIC),
            other => Err(GeomError::Parameter(format!(
                "model constant must be +1 or -1, got {other}"
            ))),
        }
    }

    pub fn value(self) -> f64 {
        self.0 as f64
    }

    pub fn is_sphere(self) -> bool {
        self.0 == 1
    }
}

impl TryFrom<i32> for ModelConstant {
    type Error = GeomError;
    fn try_from(c: i32) -> Result<Self> {
        Self::new(c)
    }
}

impl From<ModelConstant> for i32 {
    fn from(c: ModelConstant) -> i32 {
        c.0 as i32
    }
}

impl std::fmt::Display for ModelConstant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:+}", self.0)
    }
}

/// `ds^2 = c dx_1^2 + dx_2^2 + ... + dx_{n+2}^2`.
pub fn inner(u: &AmbientVector, v: &AmbientVector, c: ModelConstant) -> Result<f64> {
    if u.len() != v.len() {
        return Err(GeomError::Usage(format!(
            "inner product of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(inner_unchecked(u.as_slice(), v.as_slice(), c))
}

/// Signature-weighted dot product without the dimension check.
#[inline]
pub(crate) fn inner_unchecked(u: &[f64], v: &[f64], c: ModelConstant) -> f64 {
    let mut acc = c.value() * (u[0] * v[0]);
    for k in 1..u.len() {
        acc += u[k] * v[k];
    }
    acc
}

/// The pair `(C_c(s), S_c(s))`: `(cos, sin)` on the sphere, `(cosh, sinh)` on
/// hyperbolic space.
pub fn cs_kernels(s: f64, c: ModelConstant) -> (f64, f64) {
    if c.is_sphere() {
        (s.cos(), s.sin())
    } else {
        (s.cosh(), s.sinh())
    }
}

/// Residual of the model quadric for the first `n+1` coordinates of `x`.
pub fn model_residual(x: &[f64], c: ModelConstant) -> f64 {
    let q = &x[..x.len() - 1];
    (inner_unchecked(q, q, c) - c.value()).abs()
}

/// Quadric residual divided by `max(1, |x|^2)` (Euclidean), the size of the
/// rounding error carried by the sum of squares far out on the hyperboloid.
pub fn scaled_model_residual(x: &[f64], c: ModelConstant) -> f64 {
    let q = &x[..x.len() - 1];
    let size: f64 = q.iter().map(|v| v * v).sum();
    model_residual(x, c) / size.max(1.0)
}

/// The model normal `xi = (pi_1(x), 0)`, with `<xi, xi> = c` on the model.
pub fn model_normal(x: &AmbientVector) -> AmbientVector {
    let mut xi = x.clone();
    let last = xi.len() - 1;
    xi[last] = 0.0;
    xi
}

/// A point of Q^n_c x R stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    coords: AmbientVector,
    c: ModelConstant,
}

impl ProductPoint {
    /// Validates the quadric, the hyperbolic sheet (`x_1 > 0` when `c = -1`)
    /// and the dimension (`n >= 2`).
    pub fn new(coords: AmbientVector, c: ModelConstant) -> Result<Self> {
        if coords.len() < 4 {
            return Err(GeomError::Usage(format!(
                "ambient dimension must be at least 4, got {}",
                coords.len()
            )));
        }
        if !c.is_sphere() && coords[0] <= 0.0 {
            return Err(GeomError::Precondition(format!(
                "x_1 = {} is not on the upper sheet of the hyperboloid",
                coords[0]
            )));
        }
        let residual = scaled_model_residual(coords.as_slice(), c);
        if !(residual <= EPS_MODEL) {
            return Err(GeomError::Constraint { residual });
        }
        Ok(Self { coords, c })
    }

    /// Point with model part `q` (length `n+1`) at height `t`.
    pub fn from_parts(q: &[f64], t: f64, c: ModelConstant) -> Result<Self> {
        let mut coords = Vec::with_capacity(q.len() + 1);
        coords.extend_from_slice(q);
        coords.push(t);
        Self::new(DVector::from_vec(coords), c)
    }

    pub fn coords(&self) -> &AmbientVector {
        &self.coords
    }

    pub fn c(&self) -> ModelConstant {
        self.c
    }

    /// Dimension `n` of the model factor.
    pub fn n(&self) -> usize {
        self.coords.len() - 2
    }

    /// Projection onto the model factor, embedded with a zero last slot.
    pub fn model_part(&self) -> AmbientVector {
        model_normal(&self.coords)
    }

    pub fn height(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn constraint_residual(&self) -> f64 {
        model_residual(self.coords.as_slice(), self.c)
    }

    pub fn scaled_constraint_residual(&self) -> f64 {
        scaled_model_residual(self.coords.as_slice(), self.c)
    }
}

/// Geodesic of Q^n_c x R through `p` with initial velocity `v`, evaluated at
/// parameter `t`.
pub fn exp_map(p: &ProductPoint, v: &AmbientVector, t: f64) -> Result<ProductPoint> {
    let c = p.c();
    if v.len() != p.coords().len() {
        return Err(GeomError::Usage(format!(
            "tangent vector has dimension {}, point has {}",
            v.len(),
            p.coords().len()
        )));
    }
    let base = p.model_part();
    let v1 = model_normal(v);
    let v2 = v[v.len() - 1];
    let radial = inner_unchecked(v1.as_slice(), base.as_slice(), c);
    let scale = 1.0 + v1.amax();
    if radial.abs() > 1e-9 * scale {
        return Err(GeomError::Precondition(format!(
            "velocity is not tangent to the model factor (<v_1, p> = {radial:.3e})"
        )));
    }
    let last = v.len() - 1;
    let height = p.height() + t * v2;
    let norm_sq = inner_unchecked(v1.as_slice(), v1.as_slice(), c);
    let mut out = if norm_sq == 0.0 {
        base
    } else {
        let speed = norm_sq.sqrt();
        let (cc, ss) = cs_kernels(speed * t, c);
        base * cc + v1 * (ss / speed)
    };
    out[last] = height;
    ProductPoint::new(out, c)
}
