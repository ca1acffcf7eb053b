//! Order-2 forward differentiation.
//!
//! [`Jet`] carries a value, its gradient and its Hessian with respect to up to
//! [`MAX_VARS`] parameters. The Hessian is stored as a packed upper triangle,
//! so `d2[i][j]` and `d2[j][i]` are the same memory cell and symmetry is exact.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};

use crate::ambient::AmbientVector;

/// Largest number of chart parameters a jet can differentiate against.
pub const MAX_VARS: usize = 6;
const PACKED: usize = MAX_VARS * (MAX_VARS + 1) / 2;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Truncated second-order Taylor number in `nvars` variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    nvars: u8,
    val: f64,
    grad: [f64; MAX_VARS],
    hess: [f64; PACKED],
}

impl Jet {
    pub fn constant(nvars: usize, val: f64) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} jet variables");
        Self {
            nvars: nvars as u8,
            val,
            grad: [0.0; MAX_VARS],
            hess: [0.0; PACKED],
        }
    }

    /// The coordinate function `u_index` at `val`.
    pub fn variable(nvars: usize, index: usize, val: f64) -> Self {
        assert!(index < nvars);
        let mut j = Self::constant(nvars, val);
        j.grad[index] = 1.0;
        j
    }

    /// Seeds all coordinate functions at the point `u`.
    pub fn seed(u: &[f64]) -> Vec<Jet> {
        (0..u.len()).map(|i| Jet::variable(u.len(), i, u[i])).collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn value(&self) -> f64 {
        self.val
    }

    pub fn d1(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(i, j)]
    }

    /// Same derivatives, another constant term.
    pub fn with_value(mut self, val: f64) -> Self {
        self.val = val;
        self
    }

    fn n(&self) -> usize {
        self.nvars as usize
    }

    fn npacked(&self) -> usize {
        let n = self.n();
        n * (n + 1) / 2
    }

    /// Composition `g(self)` given `g`, `g'` and `g''` at `self.value()`.
    pub fn chain(&self, g0: f64, g1: f64, g2: f64) -> Jet {
        let n = self.n();
        let mut out = Jet::constant(n, g0);
        for i in 0..n {
            out.grad[i] = g1 * self.grad[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = g1 * self.hess[k] + g2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.val.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.val.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(self) -> Jet {
        let t = self.val.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn sinh(self) -> Jet {
        let (s, c) = (self.val.sinh(), self.val.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(self) -> Jet {
        let (s, c) = (self.val.sinh(), self.val.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(self) -> Jet {
        let t = self.val.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn exp(self) -> Jet {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Jet {
        let r = 1.0 / self.val;
        self.chain(self.val.ln(), r, -r * r)
    }

    pub fn sqrt(self) -> Jet {
        let s = self.val.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.val))
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.val;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(self, k: i32) -> Jet {
        match k {
            0 => Jet::constant(self.n(), 1.0),
            1 => self,
            2 => self * self,
            _ => {
                let x = self.val;
                let kf = k as f64;
                self.chain(x.powi(k), kf * x.powi(k - 1), kf * (kf - 1.0) * x.powi(k - 2))
            }
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.nvars, rhs.nvars);
        self.val += rhs.val;
        for i in 0..self.n() {
            self.grad[i] += rhs.grad[i];
        }
        for k in 0..self.npacked() {
            self.hess[k] += rhs.hess[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.nvars, rhs.nvars);
        self.val -= rhs.val;
        for i in 0..self.n() {
            self.grad[i] -= rhs.grad[i];
        }
        for k in 0..self.npacked() {
            self.hess[k] -= rhs.hess[k];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.nvars, rhs.nvars);
        let n = self.n();
        let mut out = Jet::constant(n, self.val * rhs.val);
        for i in 0..n {
            out.grad[i] = self.val * rhs.grad[i] + rhs.val * self.grad[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = self.val * rhs.hess[k]
                    + rhs.val * self.hess[k]
                    + (self.grad[i] * rhs.grad[j] + self.grad[j] * rhs.grad[i]);
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.val = -self.val;
        for g in self.grad.iter_mut() {
            *g = -*g;
        }
        for h in self.hess.iter_mut() {
            *h = -*h;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.val += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.val -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.val *= rhs;
        for g in self.grad.iter_mut() {
            *g *= rhs;
        }
        for h in self.hess.iter_mut() {
            *h *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(mut self, rhs: f64) -> Jet {
        self.val /= rhs;
        for g in self.grad.iter_mut() {
            *g /= rhs;
        }
        for h in self.hess.iter_mut() {
            *h /= rhs;
        }
        self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        (-rhs) + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        *self = *self * rhs;
    }
}

/// Value, first and second derivatives of a map `R^n -> E^{n+2}` at one
/// parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: AmbientVector,
    /// Column `i` is `dF/du_i`.
    pub d1: DMatrix<f64>,
    d2: Vec<AmbientVector>,
    n: usize,
}

impl Jet2 {
    /// Collects per-component jets into derivative arrays.
    pub fn from_components(components: &[Jet]) -> Self {
        let dim = components.len();
        let n = components.first().map_or(0, |j| j.nvars());
        let value = DVector::from_iterator(dim, components.iter().map(|j| j.value()));
        let d1 = DMatrix::from_fn(dim, n, |k, i| components[k].d1(i));
        let mut d2 = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                d2.push(DVector::from_iterator(
                    dim,
                    components.iter().map(|c| c.d2(i, j)),
                ));
            }
        }
        Self { value, d1, d2, n }
    }

    /// Assembles a jet from explicitly supplied derivatives. `second(i, j)` is
    /// only queried for `i <= j`.
    pub fn from_parts(
        value: AmbientVector,
        d1: DMatrix<f64>,
        mut second: impl FnMut(usize, usize) -> AmbientVector,
    ) -> Self {
        let n = d1.ncols();
        let mut d2 = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                d2.push(second(i, j));
            }
        }
        Self { value, d1, d2, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first(&self, i: usize) -> AmbientVector {
        self.d1.column(i).into_owned()
    }

    pub fn second(&self, i: usize, j: usize) -> &AmbientVector {
        &self.d2[packed(i, j)]
    }
}
