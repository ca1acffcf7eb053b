//! First and second fundamental data of a hypersurface of `Q^n_c x R`, the
//! pair `(T, nu)` and the residuals of the structure equations.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ambient::{inner_unchecked, model_normal, AmbientVector, ModelConstant};
use crate::chart::{evaluate_jet2, Chart};
use crate::error::{GeomError, Result};
use crate::jets::Jet2;
use crate::linalg::{cofactor_normal, complement_basis, g_inner, g_norm, metric_eigen, sym_eigenvalues, MetricEigen};

/// Below this, `T` counts as vanishing.
pub const EPS_T: f64 = 1e-8;
/// Step of the central differences taken along chart coordinates.
pub const FD_STEP: f64 = 1e-3;
/// Largest admitted condition number of the induced metric.
pub const MAX_METRIC_CONDITION: f64 = 1e8;

/// Everything the structure equations talk about, at one parameter point.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub u: Vec<f64>,
    pub c: ModelConstant,
    pub point: AmbientVector,
    /// Columns `dF/du_i`.
    pub frame: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub eta: AmbientVector,
    pub xi: AmbientVector,
    /// Second fundamental form `h_ij = <d_ij F, eta>`.
    pub h: DMatrix<f64>,
    /// Shape operator `G^{-1} h`, so `A = -d eta` on tangent vectors.
    pub a: DMatrix<f64>,
    /// Components of `T` in chart coordinates.
    pub t: DVector<f64>,
    pub nu: f64,
    pub tnorm: f64,
}

impl ShapeData {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// `G T`, i.e. `<d_i F, T>` for each coordinate direction.
    pub fn t_lower(&self) -> DVector<f64> {
        &self.g * &self.t
    }

    pub fn eigen(&self) -> Result<MetricEigen> {
        metric_eigen(&self.g, &self.h)
    }

    /// Principal curvatures, ascending.
    pub fn principal_curvatures(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.values)
    }

    /// Image of a coordinate vector in `E^{n+2}`.
    pub fn push_forward(&self, x: &DVector<f64>) -> AmbientVector {
        &self.frame * x
    }

    /// Curvature of the `T` direction, `<AT, T> / |T|^2`.
    pub fn t_curvature(&self) -> f64 {
        g_inner(&self.h, &self.t, &self.t) / (self.tnorm * self.tnorm)
    }

    /// Principal curvatures on the orthogonal complement of `T`, ascending,
    /// with their `G`-orthonormal directions as columns.
    pub fn transverse_spectrum(&self) -> (Vec<f64>, DMatrix<f64>) {
        let q = complement_basis(&self.g, &self.t);
        let m = q.transpose() * &self.h * &q;
        let m = (&m + m.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let cols: Vec<DVector<f64>> = order
            .iter()
            .map(|&k| &q * eig.eigenvectors.column(k))
            .collect();
        (values, DMatrix::from_columns(&cols))
    }

    /// Residuals of the pointwise invariants, by name.
    pub fn invariant_residuals(&self) -> ResidualReport {
        let c = self.c;
        let mut r = ResidualReport::default();
        r.insert("unit_relation", (self.nu * self.nu + self.tnorm * self.tnorm - 1.0).abs());
        r.insert(
            "normal_length",
            (inner_unchecked(self.eta.as_slice(), self.eta.as_slice(), c) - 1.0).abs(),
        );
        r.insert(
            "normal_vs_model_normal",
            inner_unchecked(self.eta.as_slice(), self.xi.as_slice(), c).abs(),
        );
        let tangential = (0..self.n())
            .map(|i| {
                let col = self.frame.column(i).into_owned();
                inner_unchecked(self.eta.as_slice(), col.as_slice(), c).abs() / col.norm()
            })
            .fold(0.0, f64::max);
        r.insert("normal_vs_tangent", tangential);
        let ga = &self.g * &self.a;
        r.insert("self_adjoint", (&ga - ga.transpose()).amax());
        r
    }
}

/// Named residuals; every value is a nonnegative max-abs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualReport {
    entries: BTreeMap<String, f64>,
}

impl ResidualReport {
    pub fn insert(&mut self, name: &str, value: f64) {
        let value = value.abs();
        let slot = self.entries.entry(name.to_string()).or_insert(0.0);
        *slot = if value.is_nan() { f64::NAN } else { slot.max(value) };
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).copied()
    }

    pub fn max(&self) -> f64 {
        self.entries.values().fold(0.0, |a, &b| if b.is_nan() { f64::NAN } else { a.max(b) })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Entry-wise maximum with another report.
    pub fn merge(&mut self, other: &ResidualReport) {
        for (k, v) in other.iter() {
            self.insert(k, v);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn raw_normal(jet: &Jet2, c: ModelConstant) -> Result<AmbientVector> {
    let mut rows = Vec::with_capacity(jet.n() + 1);
    rows.push(model_normal(&jet.value));
    for i in 0..jet.n() {
        rows.push(jet.first(i));
    }
    let w = cofactor_normal(&rows, c);
    let len2 = inner_unchecked(w.as_slice(), w.as_slice(), c);
    if !(len2 > 0.0) {
        return Err(GeomError::Regularity("normal direction degenerates".into()));
    }
    Ok(w / len2.sqrt())
}

/// Sign making `nu >= 0` at the chart's base point, or, when `nu` vanishes
/// there, making the first nonzero component of the normal positive.
pub fn base_orientation(chart: &dyn Chart) -> Result<f64> {
    let jet = evaluate_jet2(chart, &chart.base_point())?;
    let eta = raw_normal(&jet, chart.c())?;
    let nu = eta[eta.len() - 1];
    if nu.abs() > 1e-12 {
        return Ok(nu.signum());
    }
    let first = eta.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
    Ok(first.signum())
}

/// Fundamental data from a jet, with the normal multiplied by `sign`.
pub fn shape_data_from_jet(jet: &Jet2, c: ModelConstant, u: &[f64], sign: f64) -> Result<ShapeData> {
    let n = jet.n();
    let cs = c;
    let frame = jet.d1.clone();
    let g = DMatrix::from_fn(n, n, |i, j| {
        inner_unchecked(frame.column(i).as_slice(), frame.column(j).as_slice(), cs)
    });
    let ev = sym_eigenvalues(&g);
    let (gmin, gmax) = (ev[0], ev[n - 1]);
    if !(gmin > 0.0) || gmax / gmin > MAX_METRIC_CONDITION {
        return Err(GeomError::Regularity(format!(
            "induced metric has eigenvalues in [{gmin:.3e}, {gmax:.3e}]"
        )));
    }
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Regularity("singular induced metric".into()))?;
    let eta = raw_normal(jet, c)? * sign;
    let xi = model_normal(&jet.value);
    let h = DMatrix::from_fn(n, n, |i, j| {
        if i <= j {
            inner_unchecked(jet.second(i, j).as_slice(), eta.as_slice(), cs)
        } else {
            inner_unchecked(jet.second(j, i).as_slice(), eta.as_slice(), cs)
        }
    });
    let a = &g_inv * &h;
    let last = jet.value.len() - 1;
    let height_grad = DVector::from_fn(n, |i, _| frame[(last, i)]);
    let t = &g_inv * &height_grad;
    let tnorm = g_norm(&g, &t);
    let nu = eta[last];
    Ok(ShapeData {
        u: u.to_vec(),
        c,
        point: jet.value.clone(),
        frame,
        g,
        g_inv,
        eta,
        xi,
        h,
        a,
        t,
        nu,
        tnorm,
    })
}

/// Fundamental data at `u`, oriented by the chart's convention.
pub fn shape_data(chart: &dyn Chart, u: &[f64]) -> Result<ShapeData> {
    shape_data_oriented(chart, u, chart.orientation())
}

/// Fundamental data at `u` with an explicit normal sign.
pub fn shape_data_oriented(chart: &dyn Chart, u: &[f64], sign: f64) -> Result<ShapeData> {
    let jet = evaluate_jet2(chart, u)?;
    shape_data_from_jet(&jet, chart.c(), u, sign)
}

/// Christoffel symbols `gamma[k][(i, j)]` of the induced metric.
pub fn christoffel(jet: &Jet2, g_inv: &DMatrix<f64>, c: ModelConstant) -> Vec<DMatrix<f64>> {
    let n = jet.n();
    // first-kind symbols <d_ij F, d_l F>
    let mut first = vec![DMatrix::zeros(n, n); n];
    for l in 0..n {
        let dl = jet.first(l);
        for i in 0..n {
            for j in i..n {
                let v = inner_unchecked(jet.second(i, j).as_slice(), dl.as_slice(), c);
                first[l][(i, j)] = v;
                first[l][(j, i)] = v;
            }
        }
    }
    (0..n)
        .map(|k| {
            let mut m = DMatrix::zeros(n, n);
            for l in 0..n {
                m += &first[l] * g_inv[(k, l)];
            }
            m
        })
        .collect()
}

/// Fourth-order central derivatives of a vector quantity along each chart
/// axis.
pub(crate) fn central_partials(
    chart: &dyn Chart,
    u: &[f64],
    h: f64,
    f: &(dyn Fn(&[f64]) -> Result<DVector<f64>> + Sync),
) -> Result<Vec<DVector<f64>>> {
    let n = chart.n();
    let mut out = Vec::with_capacity(n);
    for axis in 0..n {
        let at = |k: f64| -> Result<DVector<f64>> {
            let mut v = u.to_vec();
            v[axis] += k * h;
            if !chart.domain().contains(&v) {
                return Err(GeomError::Boundary(format!(
                    "stencil point {v:?} of `{}` is outside its domain",
                    chart.name()
                )));
            }
            f(&v)
        };
        let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
        out.push((&m2 - &p2 + (&p1 - &m1) * 8.0) / (12.0 * h));
    }
    Ok(out)
}

fn unit_probes(g: &DMatrix<f64>, probes: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let n = g.nrows();
    let raw: Vec<DVector<f64>> = if probes.is_empty() {
        (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                v
            })
            .collect()
    } else {
        probes.to_vec()
    };
    raw.into_iter()
        .filter_map(|v| {
            let norm = g_norm(g, &v);
            (norm > 0.0).then(|| v / norm)
        })
        .collect()
}

struct Packed {
    n: usize,
    dim: usize,
}

impl Packed {
    fn pack(&self, sd: &ShapeData, gamma: &[DMatrix<f64>]) -> DVector<f64> {
        let n = self.n;
        let mut v = Vec::with_capacity(n * n * n + n * n + n + 1 + self.dim);
        for g in gamma {
            v.extend(g.iter());
        }
        v.extend(sd.a.iter());
        v.extend(sd.t.iter());
        v.push(sd.nu);
        v.extend(sd.eta.iter());
        DVector::from_vec(v)
    }

    fn gamma(&self, v: &DVector<f64>, k: usize) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_column_slice(n, n, &v.as_slice()[k * n * n..(k + 1) * n * n])
    }

    fn a(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let off = n * n * n;
        DMatrix::from_column_slice(n, n, &v.as_slice()[off..off + n * n])
    }

    fn t(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let off = n * n * n + n * n;
        DVector::from_column_slice(&v.as_slice()[off..off + n])
    }

    fn nu(&self, v: &DVector<f64>) -> f64 {
        let n = self.n;
        v[n * n * n + n * n + n]
    }

    fn eta(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let off = n * n * n + n * n + n + 1;
        DVector::from_column_slice(&v.as_slice()[off..off + self.dim])
    }
}

/// Residuals of `A_xi T = -nu^2 T` and `A_xi X = -X` for `X` orthogonal to
/// `T`, where `A_xi` is the Weingarten operator of the inclusion.
pub fn inclusion_weingarten_check(chart: &dyn Chart, u: &[f64]) -> Result<ResidualReport> {
    inclusion_weingarten_check_signed(chart, u, 1.0)
}

/// As [`inclusion_weingarten_check`], with `xi` multiplied by `xi_sign`.
pub fn inclusion_weingarten_check_signed(
    chart: &dyn Chart,
    u: &[f64],
    xi_sign: f64,
) -> Result<ResidualReport> {
    let jet = evaluate_jet2(chart, u)?;
    let c = chart.c();
    let sd = shape_data_from_jet(&jet, c, u, chart.orientation())?;
    let n = sd.n();
    let xi = &sd.xi * xi_sign;
    let hxi = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        inner_unchecked(jet.second(a, b).as_slice(), xi.as_slice(), c)
    });
    let axi = &sd.g_inv * hxi;
    let mut r = ResidualReport::default();
    let perp: Vec<DVector<f64>> = if sd.tnorm > EPS_T {
        let rt = &axi * &sd.t + &sd.t * (sd.nu * sd.nu);
        r.insert("a_xi_on_t", g_norm(&sd.g, &rt));
        let q = complement_basis(&sd.g, &sd.t);
        q.column_iter().map(|c| c.into_owned()).collect()
    } else {
        r.insert("a_xi_on_t", 0.0);
        unit_probes(&sd.g, &[])
    };
    for x in perp {
        let rx = &axi * &x + &x;
        r.insert("a_xi_on_t_perp", g_norm(&sd.g, &rx));
    }
    Ok(r)
}

/// Residuals of the structure equations at `u`, maximized over all
/// combinations of the probe directions (coordinate axes when empty).
pub fn structure_residuals(
    chart: &dyn Chart,
    u: &[f64],
    probes: &[DVector<f64>],
) -> Result<ResidualReport> {
    let c = chart.c();
    let cv = c.value();
    let sign = chart.orientation();
    let n = chart.n();
    let layout = Packed { n, dim: n + 2 };
    let eval = |v: &[f64]| -> Result<(Jet2, ShapeData, Vec<DMatrix<f64>>)> {
        let jet = evaluate_jet2(chart, v)?;
        let sd = shape_data_from_jet(&jet, c, v, sign)?;
        let gamma = christoffel(&jet, &sd.g_inv, c);
        Ok((jet, sd, gamma))
    };
    let (jet, sd, gamma) = eval(u)?;
    let quantity = |v: &[f64]| -> Result<DVector<f64>> {
        let (_, sd, gamma) = eval(v)?;
        Ok(layout.pack(&sd, &gamma))
    };
    let partials = central_partials(chart, u, FD_STEP, &quantity)?;

    let a = &sd.a;
    let h = &sd.h;
    let g = &sd.g;
    let t = &sd.t;
    let tau = sd.t_lower();
    let nu = sd.nu;
    let last = n + 1;

    // dGamma[i][l] = d_i Gamma^l as n x n
    let d_gamma: Vec<Vec<DMatrix<f64>>> = partials
        .iter()
        .map(|p| (0..n).map(|l| layout.gamma(p, l)).collect())
        .collect();
    let d_a: Vec<DMatrix<f64>> = partials.iter().map(|p| layout.a(p)).collect();
    let d_t: Vec<DVector<f64>> = partials.iter().map(|p| layout.t(p)).collect();
    let d_nu: Vec<f64> = partials.iter().map(|p| layout.nu(p)).collect();
    let d_eta: Vec<DVector<f64>> = partials.iter().map(|p| layout.eta(p)).collect();

    let probes = unit_probes(g, probes);
    let mut r = ResidualReport::default();

    // nabla_X T - nu A X, as a matrix acting on X
    let mut dt_res = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let mut v = d_t[i][k] - nu * a[(k, i)];
            for l in 0..n {
                v += gamma[k][(i, l)] * t[l];
            }
            dt_res[(k, i)] = v;
        }
    }
    // X(nu) + <AX, T>
    let dnu_res = DVector::from_fn(n, |i, _| {
        d_nu[i] + (0..n).map(|l| h[(i, l)] * t[l]).sum::<f64>()
    });
    // d_i xi - (d_i F - <d_i, T> e_last)
    let xi_res: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let df = jet.first(i);
            let dxi = model_normal(&df);
            let mut target = df;
            target[last] -= tau[i];
            dxi - target
        })
        .collect();
    let xi_perp = DVector::from_fn(n, |i, _| {
        let dxi = model_normal(&jet.first(i));
        inner_unchecked(dxi.as_slice(), sd.eta.as_slice(), c) + nu * tau[i]
    });
    let eta_perp = DVector::from_fn(n, |i, _| {
        inner_unchecked(d_eta[i].as_slice(), sd.xi.as_slice(), c) - nu * tau[i]
    });

    // R^l_{ijk} - Gauss right-hand side, stored as gauss[l][(i, j, k)]
    let idx3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut gauss = vec![vec![0.0; n * n * n]; n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut rv = d_gamma[i][l][(j, k)] - d_gamma[j][l][(i, k)];
                    for m in 0..n {
                        rv += gamma[l][(i, m)] * gamma[m][(j, k)]
                            - gamma[l][(j, m)] * gamma[m][(i, k)];
                    }
                    let di = (l == i) as u8 as f64;
                    let dj = (l == j) as u8 as f64;
                    let mut rhs = h[(j, k)] * a[(l, i)] - h[(i, k)] * a[(l, j)];
                    rhs += cv
                        * (g[(j, k)] * di - g[(i, k)] * dj
                            - tau[j] * (tau[k] * di - g[(i, k)] * t[l])
                            + tau[i] * (tau[k] * dj - g[(j, k)] * t[l]));
                    gauss[l][idx3(i, j, k)] = rv - rhs;
                }
            }
        }
    }
    // (nabla_i A) d_j - (nabla_j A) d_i - c nu (d_i ^ d_j) T, as codazzi[k][(i, j)]
    let mut codazzi = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = d_a[i][(k, j)] - d_a[j][(k, i)];
                for l in 0..n {
                    v += gamma[k][(i, l)] * a[(l, j)] - gamma[k][(j, l)] * a[(l, i)];
                }
                let di = (k == i) as u8 as f64;
                let dj = (k == j) as u8 as f64;
                v -= cv * nu * (tau[j] * di - tau[i] * dj);
                codazzi[k][(i, j)] = v;
            }
        }
    }

    for x in &probes {
        r.insert("tangent_derivative", g_norm(g, &(&dt_res * x)));
        r.insert("angle_derivative", dnu_res.dot(x));
        let mut xr = DVector::zeros(n + 2);
        for i in 0..n {
            xr.axpy(x[i], &xi_res[i], 1.0);
        }
        r.insert("model_normal_derivative", xr.amax());
        r.insert("model_normal_normal_part", xi_perp.dot(x));
        r.insert("normal_model_part", eta_perp.dot(x));
        for y in &probes {
            let cz = DVector::from_fn(n, |k, _| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += x[i] * y[j] * codazzi[k][(i, j)];
                    }
                }
                s
            });
            r.insert("codazzi", g_norm(g, &cz));
            for z in &probes {
                let gz = DVector::from_fn(n, |l, _| {
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                s += x[i] * y[j] * z[k] * gauss[l][idx3(i, j, k)];
                            }
                        }
                    }
                    s
                });
                r.insert("gauss", g_norm(g, &gz));
            }
        }
    }
    Ok(r)
}

/// Angle between `T` and the nearest principal eigenspace, in radians.
pub fn t_principal_angle(sd: &ShapeData) -> Result<f64> {
    if sd.tnorm <= EPS_T {
        return Err(GeomError::Inapplicable("T vanishes".into()));
    }
    let eig = sd.eigen()?;
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-6 * scale;
    let that = &sd.t / sd.tnorm;
    let mut best = f64::INFINITY;
    let mut start = 0;
    let n = eig.values.len();
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= tol {
            end += 1;
        }
        let mut proj = DVector::zeros(sd.n());
        for k in start..end {
            let v = eig.vectors.column(k).into_owned();
            proj += &v * g_inner(&sd.g, &v, &that);
        }
        best = best.min(g_norm(&sd.g, &(&that - proj)));
        start = end;
    }
    Ok(best.min(1.0).asin())
}

/// Largest angle for which `T` still counts as principal.
pub const T_PRINCIPAL_ANGLE: f64 = 1e-6;

/// Residuals of the identities satisfied along a principal frame whose last
/// vector is `T / |T|`.
pub fn t_direction_residuals(chart: &dyn Chart, u: &[f64]) -> Result<ResidualReport> {
    let c = chart.c();
    let sign = chart.orientation();
    let jet = evaluate_jet2(chart, u)?;
    let sd = shape_data_from_jet(&jet, c, u, sign)?;
    if sd.tnorm <= EPS_T {
        return Err(GeomError::Inapplicable(format!(
            "|T| = {:.3e} is below the vanishing threshold",
            sd.tnorm
        )));
    }
    let angle = t_principal_angle(&sd)?;
    if angle > T_PRINCIPAL_ANGLE {
        return Err(GeomError::Inapplicable(format!(
            "T is not principal (angle {angle:.3e} rad)"
        )));
    }
    let n = sd.n();
    let dim = n + 2;
    let quantity = |v: &[f64]| -> Result<DVector<f64>> {
        let s = shape_data(chart, v)?;
        let mut out = DVector::zeros(dim + 2);
        out[0] = s.tnorm;
        out[1] = s.nu;
        out.rows_mut(2, dim).copy_from(&s.eta);
        Ok(out)
    };
    let partials = central_partials(chart, u, FD_STEP, &quantity)?;
    let along = |x: &DVector<f64>| -> DVector<f64> {
        let mut d = DVector::zeros(dim + 2);
        for k in 0..n {
            d.axpy(x[k], &partials[k], 1.0);
        }
        d
    };

    let xn = &sd.t / sd.tnorm;
    let lambda_n = sd.t_curvature();
    let (lambdas, xs) = sd.transverse_spectrum();
    let tau = sd.t_lower();
    let mut r = ResidualReport::default();

    let dn = along(&xn);
    r.insert("tnorm_derivative", dn[0] - sd.nu * lambda_n);
    r.insert("angle_derivative", dn[1] + lambda_n * sd.tnorm);
    let last = dim - 1;
    let height = (0..n).map(|k| xn[k] * sd.frame[(last, k)]).sum::<f64>();
    r.insert("height_derivative", height - sd.tnorm);

    let mut frame: Vec<(f64, DVector<f64>)> = lambdas
        .iter()
        .zip(xs.column_iter())
        .map(|(l, x)| (*l, x.into_owned()))
        .collect();
    for (_, x) in &frame {
        r.insert("tnorm_derivative", along(x)[0]);
    }
    frame.push((lambda_n, xn));
    for (lambda, x) in &frame {
        let d = along(x);
        let deta = d.rows(2, dim).into_owned();
        // the X(nu) d/dt terms on both sides cancel
        let rhs = sd.push_forward(x) * (-lambda) + &sd.xi * (c.value() * sd.nu * tau.dot(x));
        r.insert("normal_model_derivative", (deta - rhs).amax());
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{AnalyticChart, Domain};
    use crate::jets::Jet;

    fn gnomonic(u: &[Jet]) -> Vec<Jet> {
        let mut r2 = Jet::constant(u[0].nvars(), 1.0);
        for x in u {
            r2 += *x * *x;
        }
        let inv = r2.sqrt().recip();
        let mut out = vec![inv];
        out.extend(u.iter().map(|x| *x * inv));
        out
    }

    fn hyperboloid(u: &[Jet]) -> Vec<Jet> {
        let mut r2 = Jet::constant(u[0].nvars(), 1.0);
        for x in u {
            r2 += *x * *x;
        }
        let mut out = vec![r2.sqrt()];
        out.extend_from_slice(u);
        out
    }

    fn slice(c: ModelConstant) -> AnalyticChart {
        AnalyticChart::new("slice", c, Domain::cube(2, 0.5), move |u| {
            let mut v = if c.is_sphere() { gnomonic(u) } else { hyperboloid(u) };
            v.push(Jet::constant(u[0].nvars(), 0.7));
            v
        })
    }

    fn graph(c: ModelConstant) -> AnalyticChart {
        AnalyticChart::new("graph", c, Domain::cube(2, 0.5), move |u| {
            let mut v = if c.is_sphere() { gnomonic(u) } else { hyperboloid(u) };
            v.push((u[0] * 1.3).sin() * 0.4 + u[0] * u[1] * u[1] * 0.3 - u[1] * 0.2);
            v
        })
    }

    #[test]
    fn slice_is_totally_geodesic_with_vertical_normal() {
        for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
            let sd = shape_data(&slice(c), &[0.1, -0.2]).unwrap();
            assert!(sd.a.amax() < 1e-14);
            assert!(sd.t.amax() == 0.0);
            assert!((sd.nu - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn invariants_on_generic_graph() {
        for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
            let sd = shape_data(&graph(c), &[0.2, 0.3]).unwrap();
            let r = sd.invariant_residuals();
            assert!(r.get("unit_relation").unwrap() <= 1e-10, "{r:?}");
            assert!(r.get("self_adjoint").unwrap() <= 1e-9);
            assert!(r.max() <= 1e-10, "{r:?}");
        }
    }

    #[test]
    fn orientation_flip_is_exactly_antisymmetric() {
        let ch = graph(ModelConstant::HYPERBOLIC);
        let u = [0.1, -0.3];
        let p = shape_data_oriented(&ch, &u, 1.0).unwrap();
        let m = shape_data_oriented(&ch, &u, -1.0).unwrap();
        assert_eq!(p.a, -m.a);
        assert_eq!(p.t, m.t);
        assert_eq!(p.nu, -m.nu);
    }

    #[test]
    fn base_point_orientation_makes_nu_nonnegative() {
        let ch = graph(ModelConstant::SPHERE);
        let sd = shape_data(&ch, &ch.base_point()).unwrap();
        assert!(sd.nu >= 0.0);
    }

    #[test]
    fn gauss_and_codazzi_hold_on_generic_graph() {
        for c in [ModelConstant::SPHERE, ModelConstant::HYPERBOLIC] {
            let r = structure_residuals(&graph(c), &[0.15, -0.1], &[]).unwrap();
            assert!(r.max() <= 1e-6, "{r:?}");
            assert!(r.get("gauss").is_some() && r.get("codazzi").is_some());
        }
    }

    #[test]
    fn slice_structure_residuals_vanish() {
        let r = structure_residuals(&slice(ModelConstant::SPHERE), &[0.0, 0.0], &[]).unwrap();
        assert!(r.max() <= 1e-10, "{r:?}");
    }

    #[test]
    fn stencil_near_the_edge_is_a_boundary_error() {
        let r = structure_residuals(&graph(ModelConstant::SPHERE), &[0.4995, 0.0], &[]);
        assert!(matches!(r, Err(GeomError::Boundary(_))));
    }

    #[test]
    fn inclusion_weingarten_and_sign_sabotage() {
        let ch = graph(ModelConstant::HYPERBOLIC);
        let ok = inclusion_weingarten_check(&ch, &[0.2, 0.1]).unwrap();
        assert!(ok.max() <= 1e-8, "{ok:?}");
        let bad = inclusion_weingarten_check_signed(&ch, &[0.2, 0.1], -1.0).unwrap();
        assert!(bad.get("a_xi_on_t_perp").unwrap() > 0.5);
    }

    #[test]
    fn slice_is_inapplicable_for_t_direction_identities() {
        let r = t_direction_residuals(&slice(ModelConstant::SPHERE), &[0.0, 0.0]);
        assert!(matches!(r, Err(GeomError::Inapplicable(_))));
    }
}
