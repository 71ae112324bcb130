//! Matrix exponential, linear ODE integration, fourth-order finite
//! differences, cumulative quadrature, and leading minors.

use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Field = Array2<f64>;

/// Uniform tensor grid; fields are indexed `[ix, iy]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2D {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Grid2D {
    /// 201×201 nodes on [−1, 1]² with spacing 0.01.
    fn default() -> Self {
        Grid2D { x0: -1.0, y0: -1.0, hx: 0.01, hy: 0.01, nx: 201, ny: 201 }
    }
}

impl Grid2D {
    pub fn new(x0: f64, y0: f64, hx: f64, hy: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Grid2D { x0, y0, hx, hy, nx, ny };
        g.validate()?;
        Ok(g)
    }

    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let h = (hi - lo) / (n as f64 - 1.0);
        Self::new(lo, lo, h, h, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hx > 0.0 && self.hy > 0.0) || !self.hx.is_finite() || !self.hy.is_finite() {
            return Err(Error::config("/grid", "step sizes must be positive and finite"));
        }
        if self.nx < 5 || self.ny < 5 {
            return Err(Error::config("/grid", "at least 5 points per axis are required"));
        }
        if !self.x0.is_finite() || !self.y0.is_finite() {
            return Err(Error::config("/grid", "origin must be finite"));
        }
        Ok(())
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + self.hx * ix as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + self.hy * iy as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    pub fn zeros(&self) -> Field {
        Field::zeros((self.nx, self.ny))
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        Field::from_shape_fn((self.nx, self.ny), |(i, j)| f(self.x(i), self.y(j)))
    }

    /// Same spacing, half the number of intervals refined: h → h/2.
    pub fn refined(&self) -> Self {
        Grid2D {
            hx: self.hx / 2.0,
            hy: self.hy / 2.0,
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            ..*self
        }
    }
}

/// Outcome of one residual check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub max_abs: f64,
    pub rms: f64,
    pub argmax: [usize; 2],
    pub tol: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(name: impl Into<String>, max_abs: f64, rms: f64, argmax: [usize; 2], tol: f64) -> Self {
        let pass = max_abs <= tol;
        ResidualReport { name: name.into(), max_abs, rms, argmax, tol, pass }
    }

    pub fn scalar(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::new(name, value.abs(), value.abs(), [0, 0], tol)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.pass = self.max_abs <= tol;
        self
    }

    /// Combine several reports into one (max of maxima, pooled rms).
    pub fn merge(name: impl Into<String>, parts: &[ResidualReport], tol: f64) -> Self {
        let mut acc = Accumulator::default();
        for p in parts {
            acc.push_report(p);
        }
        acc.report(name, tol)
    }
}

impl std::fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let max = format!("{:.3e}", self.max_abs);
        let tol = format!("{:.1e}", self.tol);
        write!(f, "{:<40} max_abs={max:<12} tol={tol:<8} {}", self.name, if self.pass { "pass" } else { "FAIL" })
    }
}

/// Running max/rms statistics with the location of the maximum.
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    max_abs: f64,
    sum_sq: f64,
    count: usize,
    argmax: [usize; 2],
}

impl Accumulator {
    pub fn push(&mut self, v: f64, at: [usize; 2]) {
        let a = if v.is_nan() { f64::INFINITY } else { v.abs() };
        if a > self.max_abs || self.count == 0 {
            self.max_abs = a;
            self.argmax = at;
        }
        self.sum_sq += a * a;
        self.count += 1;
    }

    pub fn push_report(&mut self, r: &ResidualReport) {
        if r.max_abs > self.max_abs || self.count == 0 {
            self.max_abs = r.max_abs;
            self.argmax = r.argmax;
        }
        self.sum_sq += r.rms * r.rms;
        self.count += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn report(&self, name: impl Into<String>, tol: f64) -> ResidualReport {
        let rms = if self.count == 0 { 0.0 } else { (self.sum_sq / self.count as f64).sqrt() };
        ResidualReport::new(name, self.max_abs, rms, self.argmax, tol)
    }
}

/// Residual statistics of a field over nodes at least `ring` away from the
/// boundary, skipping nodes where `mask` is false.
pub fn field_residual(name: &str, r: &Field, ring: usize, mask: Option<&Array2<bool>>, tol: f64) -> ResidualReport {
    let mut acc = Accumulator::default();
    accumulate_field(&mut acc, r, ring, mask);
    acc.report(name, tol)
}

pub fn accumulate_field(acc: &mut Accumulator, r: &Field, ring: usize, mask: Option<&Array2<bool>>) {
    let (nx, ny) = r.dim();
    for ix in ring..nx.saturating_sub(ring) {
        for iy in ring..ny.saturating_sub(ring) {
            if mask.is_some_and(|m| !m[[ix, iy]]) {
                continue;
            }
            acc.push(r[[ix, iy]], [ix, iy]);
        }
    }
}

// ---------------------------------------------------------------------------
// matrix exponential

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(a: &Mat) -> f64 {
    (0..a.ncols()).map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// exp(A) by scaling and squaring with the degree-13 Padé approximant.
pub fn matrix_exp(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Argument(format!("matrix_exp of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("matrix_exp of a matrix with non-finite entries".into()));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let theta13 = 5.371920351148152;
    let nrm = norm1(a);
    let s = if nrm > theta13 { (nrm / theta13).log2().ceil() as i32 } else { 0 };
    let a = a / 2f64.powi(s);
    let id = Mat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Internal("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// linear ODEs

/// Which side the generator multiplies: dM/dt = L·M (left) or M·L (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn apply(side: Side, l: &Mat, m: &Mat) -> Mat {
    match side {
        Side::Left => l * m,
        Side::Right => m * l,
    }
}

/// One classical RK4 step.
pub fn rk4_step(l: &dyn Fn(f64) -> Mat, side: Side, t: f64, h: f64, m: &Mat) -> Mat {
    let lm = l(t + 0.5 * h);
    let k1 = apply(side, &l(t), m);
    let k2 = apply(side, &lm, &(m + &k1 * (0.5 * h)));
    let k3 = apply(side, &lm, &(m + &k2 * (0.5 * h)));
    let k4 = apply(side, &l(t + h), &(m + &k3 * h));
    m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrate from `t0` through the increasing or decreasing node list
/// `nodes`, using `substeps` RK4 steps between consecutive nodes. Returns
/// the state at every node.
pub fn rk4_sweep(l: &dyn Fn(f64) -> Mat, side: Side, t0: f64, m0: &Mat, nodes: &[f64], substeps: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut t = t0;
    let mut m = m0.clone();
    for &tn in nodes {
        let h = (tn - t) / substeps.max(1) as f64;
        if h != 0.0 {
            for _ in 0..substeps.max(1) {
                m = rk4_step(l, side, t, h, &m);
                t += h;
            }
        }
        t = tn;
        out.push(m.clone());
    }
    out
}

/// Like [`rk4_sweep`] but every gap is split into steps no longer than
/// `max_step`.
pub fn rk4_sweep_max_step(l: &dyn Fn(f64) -> Mat, side: Side, t0: f64, m0: &Mat, nodes: &[f64], max_step: f64) -> Vec<Mat> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut t = t0;
    let mut m = m0.clone();
    for &tn in nodes {
        let steps = ((tn - t).abs() / max_step).ceil().max(1.0) as usize;
        let h = (tn - t) / steps as f64;
        if h != 0.0 {
            for _ in 0..steps {
                m = rk4_step(l, side, t, h, &m);
                t += h;
            }
        }
        t = tn;
        out.push(m.clone());
    }
    out
}

#[derive(Debug, Clone)]
pub struct OdePath {
    pub times: Vec<f64>,
    pub states: Vec<Mat>,
    /// Max-abs difference between this path and the same integration with
    /// the step halved, at the final node.
    pub halving_error: f64,
}

/// Solve dM/dt = L(t)·M, M(t0) = M0, by RK4 with `steps` uniform steps,
/// sampling every step.
pub fn ode_linear_integrate(l: &dyn Fn(f64) -> Mat, t_span: (f64, f64), steps: usize, m0: &Mat) -> Result<OdePath> {
    if steps == 0 {
        return Err(Error::Argument("ode_linear_integrate needs at least one step".into()));
    }
    let (t0, t1) = t_span;
    let h = (t1 - t0) / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|i| t0 + h * i as f64).collect();
    let mut states = vec![m0.clone()];
    states.extend(rk4_sweep(l, Side::Left, t0, m0, &times[1..], 1));
    let fine = rk4_sweep(l, Side::Left, t0, m0, &[t1], 2 * steps);
    let halving_error = (&fine[0] - states.last().unwrap()).amax();
    Ok(OdePath { times, states, halving_error })
}

// ---------------------------------------------------------------------------
// finite differences (fourth order, central)

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// Width of the boundary ring on which central stencils are undefined.
pub const RING: usize = 2;

fn check_field(f: &Field) -> Result<()> {
    let (nx, ny) = f.dim();
    if nx < 5 || ny < 5 {
        return Err(Error::Argument(format!("field of shape {nx}x{ny} is too small for 5-point stencils")));
    }
    Ok(())
}

fn stencil_axis(f: &Field, w: &[f64; 5], scale: f64, axis: usize) -> Field {
    let (nx, ny) = f.dim();
    let mut out = Field::from_elem((nx, ny), f64::NAN);
    for ix in 0..nx {
        for iy in 0..ny {
            let (i, n) = if axis == 0 { (ix, nx) } else { (iy, ny) };
            if i < 2 || i + 2 >= n {
                continue;
            }
            let mut s = 0.0;
            for (k, wk) in w.iter().enumerate() {
                if *wk == 0.0 {
                    continue;
                }
                let v = if axis == 0 { f[[ix + k - 2, iy]] } else { f[[ix, iy + k - 2]] };
                s += wk * v;
            }
            out[[ix, iy]] = s * scale;
        }
    }
    out
}

pub fn d_dx(f: &Field, g: &Grid2D) -> Result<Field> {
    check_field(f)?;
    Ok(stencil_axis(f, &D1, 1.0 / (12.0 * g.hx), 0))
}

pub fn d_dy(f: &Field, g: &Grid2D) -> Result<Field> {
    check_field(f)?;
    Ok(stencil_axis(f, &D1, 1.0 / (12.0 * g.hy), 1))
}

pub fn d2_dx2(f: &Field, g: &Grid2D) -> Result<Field> {
    check_field(f)?;
    Ok(stencil_axis(f, &D2, 1.0 / (12.0 * g.hx * g.hx), 0))
}

pub fn d2_dy2(f: &Field, g: &Grid2D) -> Result<Field> {
    check_field(f)?;
    Ok(stencil_axis(f, &D2, 1.0 / (12.0 * g.hy * g.hy), 1))
}

/// ∂²f/∂x∂y on interior nodes (tensor product of the 5-point first
/// derivative stencil); the outer 2-point ring is NaN.
pub fn mixed_second_derivative(f: &Field, g: &Grid2D) -> Result<Field> {
    check_field(f)?;
    let (nx, ny) = f.dim();
    let scale = 1.0 / (144.0 * g.hx * g.hy);
    let mut out = Field::from_elem((nx, ny), f64::NAN);
    for ix in 2..nx - 2 {
        for iy in 2..ny - 2 {
            let mut s = 0.0;
            for (a, wa) in D1.iter().enumerate() {
                if *wa == 0.0 {
                    continue;
                }
                for (b, wb) in D1.iter().enumerate() {
                    if *wb == 0.0 {
                        continue;
                    }
                    s += wa * wb * f[[ix + a - 2, iy + b - 2]];
                }
            }
            out[[ix, iy]] = s * scale;
        }
    }
    Ok(out)
}

/// First derivative of a uniformly sampled 1-D function; NaN on the two
/// end points at each side.
pub fn derivative_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::NAN; n];
    for i in 2..n.saturating_sub(2) {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    out
}

pub fn second_derivative_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::NAN; n];
    for i in 2..n.saturating_sub(2) {
        out[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h);
    }
    out
}

// ---------------------------------------------------------------------------
// quadrature

/// Antiderivative of uniformly sampled `f` vanishing at `baseline`.
/// Interior intervals use the four-point cubic rule, the two end intervals
/// a one-sided cubic; fewer than four samples fall back to trapezoids.
pub fn cumulative_integral(f: &[f64], h: f64, baseline: usize) -> Vec<f64> {
    let n = f.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(baseline < n, "baseline index out of range");
    let interval = |j: usize| -> f64 {
        if n < 4 {
            return 0.5 * h * (f[j] + f[j + 1]);
        }
        if j == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if j + 2 >= n {
            h / 24.0 * (f[j - 2] - 5.0 * f[j - 1] + 19.0 * f[j] + 9.0 * f[j + 1])
        } else {
            h / 24.0 * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2])
        }
    };
    let mut out = vec![0.0; n];
    for j in baseline..n - 1 {
        out[j + 1] = out[j] + interval(j);
    }
    for j in (0..baseline).rev() {
        out[j] = out[j + 1] - interval(j);
    }
    out
}

/// Cumulative integral along x of every column of a grid field.
pub fn cumulative_integral_x(f: &Field, hx: f64, baseline: usize) -> Field {
    let (nx, ny) = f.dim();
    let mut out = Field::zeros((nx, ny));
    for iy in 0..ny {
        let col: Vec<f64> = (0..nx).map(|ix| f[[ix, iy]]).collect();
        for (ix, v) in cumulative_integral(&col, hx, baseline).into_iter().enumerate() {
            out[[ix, iy]] = v;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// determinants

/// Determinants of the upper-left i×i blocks, i = 1..k (Det_0 = 1 is
/// implicit). Each block is factorized with partial pivoting.
pub fn leading_minors(x: &Mat) -> Result<Vec<f64>> {
    if x.nrows() != x.ncols() {
        return Err(Error::Argument("leading_minors of a non-square matrix".into()));
    }
    Ok((1..=x.nrows()).map(|i| x.view((0, 0), (i, i)).clone_owned().lu().determinant()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Mat {
        Mat::from_fn(n, n, |_, _| rng.random_range(-scale..scale))
    }

    /// Truncated Taylor series of exp(A / 2^s), squared s times.
    fn taylor_exp(a: &Mat, terms: usize) -> Mat {
        let n = a.nrows();
        let s = (norm1(a).max(1.0)).log2().ceil() as i32 + 1;
        let b = a / 2f64.powi(s);
        let mut term = Mat::identity(n, n);
        let mut sum = term.clone();
        for k in 1..terms {
            term = &term * &b / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn exp_trivial_cases() {
        assert_eq!(matrix_exp(&Mat::zeros(3, 3)).unwrap(), Mat::identity(3, 3));
        let mut e = Mat::zeros(2, 2);
        e[(0, 1)] = 1.0;
        let x = matrix_exp(&e).unwrap();
        assert!((x - (Mat::identity(2, 2) + e)).amax() < 1e-15);
        assert!(matrix_exp(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn exp_matches_taylor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for scale in [0.3, 1.0, 4.0] {
            let a = random_mat(&mut rng, 6, scale);
            let e = matrix_exp(&a).unwrap();
            let t = taylor_exp(&a, 30);
            assert!((&e - &t).amax() / t.amax() < 1e-12, "scale {scale}");
        }
    }

    #[test]
    fn exp_large_norm_relative_error() {
        // diagonalizable with known spectrum: A = S D S^-1
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = Mat::identity(4, 4) + random_mat(&mut rng, 4, 0.2);
        let sinv = s.clone().try_inverse().unwrap();
        let d = [12.0, -9.0, 3.0, 7.5];
        let a = &s * Mat::from_diagonal(&nalgebra::DVector::from_row_slice(&d)) * &sinv;
        assert!(norm1(&a) <= 50.0);
        let exact = &s * Mat::from_diagonal(&nalgebra::DVector::from_iterator(4, d.iter().map(|v| v.exp()))) * &sinv;
        let e = matrix_exp(&a).unwrap();
        assert!((&e - &exact).amax() / exact.amax() < 1e-12);
    }

    #[test]
    fn exp_group_property_commuting() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_mat(&mut rng, 5, 0.7);
        let b = &a * 0.4 + &a * &a * 0.1;
        let lhs = matrix_exp(&a).unwrap() * matrix_exp(&b).unwrap();
        let rhs = matrix_exp(&(&a + &b)).unwrap();
        assert!((lhs - rhs).amax() < 1e-11);
    }

    #[test]
    fn ode_examples() {
        let id = Mat::identity(2, 2);
        let zero = |_: f64| Mat::zeros(2, 2);
        let p = ode_linear_integrate(&zero, (0.0, 1.0), 10, &id).unwrap();
        assert!(p.states.iter().all(|m| *m == id));
        let mut xm = Mat::zeros(2, 2);
        xm[(1, 0)] = 1.0;
        let l = |_: f64| xm.clone();
        let p = ode_linear_integrate(&l, (0.0, 1.0), 10, &id).unwrap();
        assert!((p.states.last().unwrap() - (&id + &xm)).amax() < 1e-14);
        assert!(ode_linear_integrate(&l, (0.0, 1.0), 0, &id).is_err());
    }

    #[test]
    fn ode_matches_exponential_and_converges_fourth_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_mat(&mut rng, 4, 1.0);
        let l = |_: f64| a.clone();
        let id = Mat::identity(4, 4);
        let exact = matrix_exp(&a).unwrap();
        let p = ode_linear_integrate(&l, (0.0, 1.0), 1000, &id).unwrap();
        assert!((p.states.last().unwrap() - &exact).amax() < 1e-10);
        assert!(p.halving_error < 1e-10);
        let e1 = (ode_linear_integrate(&l, (0.0, 1.0), 20, &id).unwrap().states.last().unwrap() - &exact).amax();
        let e2 = (ode_linear_integrate(&l, (0.0, 1.0), 40, &id).unwrap().states.last().unwrap() - &exact).amax();
        assert!(e1 / e2 >= 14.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn ode_flow_composition() {
        let l = |t: f64| Mat::from_row_slice(2, 2, &[0.1 * t, 1.0, -t * t, -0.1 * t]);
        let id = Mat::identity(2, 2);
        let direct = rk4_sweep(&l, Side::Left, 0.0, &id, &[2.0], 400);
        let half = rk4_sweep(&l, Side::Left, 0.0, &id, &[1.0], 200);
        let composed = rk4_sweep(&l, Side::Left, 1.0, &half[0], &[2.0], 200);
        assert!((&direct[0] - &composed[0]).amax() < 1e-9);
    }

    #[test]
    fn mixed_derivative_examples() {
        let g = Grid2D::square(-1.0, 1.0, 21).unwrap();
        let f = g.sample(|x, y| x * y);
        let d = mixed_second_derivative(&f, &g).unwrap();
        let r = field_residual("xy", &d.mapv(|v| v - 1.0), RING, None, 1e-12);
        assert!(r.pass, "{r:?}");
        let c = g.sample(|_, _| 3.0);
        assert!(field_residual("c", &mixed_second_derivative(&c, &g).unwrap(), RING, None, 1e-12).pass);
        let g = Grid2D::new(1.0 - 2e-3, 1.0 - 2e-3, 1e-3, 1e-3, 5, 5).unwrap();
        let f = g.sample(|x, y| x * x * y * y);
        let d = mixed_second_derivative(&f, &g).unwrap();
        assert!((d[[2, 2]] - 4.0).abs() < 1e-6);
        let small = Field::zeros((4, 9));
        assert!(mixed_second_derivative(&small, &g).is_err());
    }

    #[test]
    fn second_derivatives() {
        let g = Grid2D::square(0.0, 1.0, 41).unwrap();
        let f = g.sample(|x, y| (x * 2.0).sin() * y.exp());
        let dxx = d2_dx2(&f, &g).unwrap();
        let dyy = d2_dy2(&f, &g).unwrap();
        let rx = &dxx + &(&f * 4.0);
        let ry = &dyy - &f;
        assert!(field_residual("xx", &rx, RING, None, 1e-5).pass);
        assert!(field_residual("yy", &ry, RING, None, 1e-6).pass);
    }

    #[test]
    fn cumulative_examples() {
        assert!(cumulative_integral(&[0.0; 10], 0.1, 3).iter().all(|v| *v == 0.0));
        let n = 15709; // [0, π/2] at h ≈ 1e-4
        let h = std::f64::consts::FRAC_PI_2 / (n as f64 - 1.0);
        let f: Vec<f64> = (0..n).map(|i| (h * i as f64).cos()).collect();
        let i = cumulative_integral(&f, h, 0);
        let err = i.iter().enumerate().map(|(k, v)| (v - (h * k as f64).sin()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        // baseline in the middle
        let i = cumulative_integral(&f, h, n / 2);
        let s0 = (h * (n / 2) as f64).sin();
        let err = i.iter().enumerate().map(|(k, v)| (v - ((h * k as f64).sin() - s0)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn cumulative_then_derivative_returns_integrand() {
        let h = 0.01;
        let f: Vec<f64> = (0..201).map(|i| (-1.0 + h * i as f64).exp() * 0.3).collect();
        let back = derivative_1d(&cumulative_integral(&f, h, 0), h);
        for i in 2..199 {
            assert!((back[i] - f[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn minors_examples() {
        assert_eq!(leading_minors(&Mat::identity(3, 3)).unwrap(), vec![1.0, 1.0, 1.0]);
        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0, 4.0]));
        assert_eq!(leading_minors(&d).unwrap(), vec![2.0, 6.0, 24.0]);
    }

    fn cofactor_det(m: &Mat) -> f64 {
        let n = m.nrows();
        if n == 1 {
            return m[(0, 0)];
        }
        (0..n)
            .map(|c| {
                let minor = m.clone().remove_row(0).remove_column(c);
                let s = if c % 2 == 0 { 1.0 } else { -1.0 };
                s * m[(0, c)] * cofactor_det(&minor)
            })
            .sum()
    }

    #[test]
    fn minors_match_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_mat(&mut rng, 5, 1.0);
        let d = leading_minors(&m).unwrap();
        for i in 1..=5 {
            let exact = cofactor_det(&m.view((0, 0), (i, i)).clone_owned());
            assert!((d[i - 1] - exact).abs() <= 1e-10 * exact.abs().max(1e-3));
        }
    }

    proptest! {
        #[test]
        fn triangular_minors_are_diagonal_products(diag in proptest::collection::vec(-3i32..=3, 1..7), fill in -5i32..5) {
            let n = diag.len();
            let mut m = Mat::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = diag[i] as f64;
                for j in i + 1..n {
                    m[(i, j)] = fill as f64 + j as f64;
                }
            }
            let d = leading_minors(&m).unwrap();
            let mut p = 1.0;
            for i in 0..n {
                p *= diag[i] as f64;
                prop_assert_eq!(d[i], p);
            }
        }

        #[test]
        fn cumulative_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, base in 0usize..30) {
            let h = 0.05;
            let f: Vec<f64> = (0..31).map(|i| (i as f64 * h).sin()).collect();
            let g: Vec<f64> = (0..31).map(|i| (i as f64 * h).powi(2)).collect();
            let comb: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            let lhs = cumulative_integral(&comb, h, base);
            let fi = cumulative_integral(&f, h, base);
            let gi = cumulative_integral(&g, h, base);
            for i in 0..31 {
                prop_assert!((lhs[i] - (a * fi[i] + b * gi[i])).abs() < 1e-13);
            }
        }
    }
}
