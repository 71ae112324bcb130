//! Wronskian solutions of the linear time flow Ẋ = X^{(k)}, the nilpotent
//! chain systems they solve, and the time-dependent tau functions built from
//! them (UToda(k,1) data and Davey–Stewartson pairs).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{self, Axis, CoefficientSamples, FlowPath, FlowSide, GradedLagrangian, InitialFactor, KernelField, RepSet};
use crate::lattice::{self, TauField};
use crate::mappings::DsFields;
use crate::numerics::{self, Accumulator, Field, Grid2D, Mat, ResidualReport, RING};

/// Frame description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub k: usize,
    pub modes: Vec<f64>,
    /// c_q; empty means all zero.
    #[serde(default)]
    pub amps: Vec<f64>,
}

impl FrameSpec {
    /// Default exponential frames for k = 2 and k = 3.
    pub fn default_for(k: usize) -> Result<Self> {
        let modes = match k {
            2 => vec![-1.0, 0.3, 1.1],
            3 => vec![-1.2, -0.2, 0.5, 1.3],
            _ => return Err(Error::Argument(format!("no default frame for k = {k}"))),
        };
        Ok(FrameSpec { k, modes, amps: Vec::new() })
    }
}

/// Basis X_q = ∂^r/∂a^r exp(a_q y + a_q^k t̄ + c_q), r the number of earlier
/// occurrences of the same mode. Distinct modes give exponentials, repeated
/// modes confluent elements (heat polynomials at a = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct WronskianFrame {
    pub k: usize,
    pub modes: Vec<f64>,
    pub amps: Vec<f64>,
    order: Vec<usize>,
}

fn binom(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(r: usize) -> f64 {
    (1..=r).fold(1.0, |a, i| a * i as f64)
}

/// Closed-form quantities of the frame at one (y, t̄).
#[derive(Debug, Clone)]
pub struct Gauge {
    pub l: Mat,
    pub u: Mat,
    /// L⁻¹ C_y L restricted to its upper part (the plus Lagrangian of U).
    pub lplus: Mat,
    /// L⁻¹ C_t L restricted to its upper part (the time Lagrangian of U).
    pub p: Mat,
    /// D⁻¹·strictupper(L⁻¹C_yL)·D; superdiagonal G_i.
    pub a: Mat,
    /// D⁻¹·strictupper(L⁻¹C_tL)·D; B[i−1, i−1+s] = π^{(s}_i.
    pub b: Mat,
}

/// G_i and their exact y and t̄ derivatives, index i−1.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainValues {
    pub g: Vec<f64>,
    pub gy: Vec<f64>,
    pub gt: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericityIssue {
    pub minor: usize,
    pub iy: usize,
    pub it: usize,
}

impl WronskianFrame {
    pub fn new(spec: &FrameSpec) -> Result<Self> {
        if spec.k == 0 {
            return Err(Error::Argument("frame order k must be at least 1".into()));
        }
        if spec.modes.is_empty() {
            return Err(Error::Argument("frame needs at least one mode".into()));
        }
        let amps = if spec.amps.is_empty() { vec![0.0; spec.modes.len()] } else { spec.amps.clone() };
        if amps.len() != spec.modes.len() {
            return Err(Error::Argument(format!("{} modes but {} amplitudes", spec.modes.len(), amps.len())));
        }
        if spec.modes.iter().chain(&amps).any(|v| !v.is_finite()) {
            return Err(Error::Argument("frame modes and amplitudes must be finite".into()));
        }
        let order = (0..spec.modes.len()).map(|q| spec.modes[..q].iter().filter(|&&a| a == spec.modes[q]).count()).collect();
        Ok(WronskianFrame { k: spec.k, modes: spec.modes.clone(), amps, order })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// ∂_y^{py} ∂_t^{pt} X_q.
    pub fn deriv(&self, q: usize, py: usize, pt: usize, y: f64, t: f64) -> f64 {
        let (a, c, r, k) = (self.modes[q], self.amps[q], self.order[q], self.k);
        let big_n = py + k * pt;
        // exp(φ(a+ε)) = Σ e_n εⁿ with φ(a+ε) − φ(a) = Σ s_m ε^m
        let s: Vec<f64> = (0..=r)
            .map(|m| {
                if m == 0 {
                    return 0.0;
                }
                let time = if m <= k { t * binom(k, m) * a.powi((k - m) as i32) } else { 0.0 };
                time + if m == 1 { y } else { 0.0 }
            })
            .collect();
        let mut e = vec![(a * y + a.powi(k as i32) * t + c).exp()];
        for n in 1..=r {
            let v = (1..=n).map(|j| j as f64 * s[j] * e[n - j]).sum::<f64>() / n as f64;
            e.push(v);
        }
        let poly = |i: usize| if i > big_n { 0.0 } else { binom(big_n, i) * a.powi((big_n - i) as i32) };
        factorial(r) * (0..=r).map(|i| poly(i) * e[r - i]).sum::<f64>()
    }

    pub fn value(&self, q: usize, y: f64, t: f64) -> f64 {
        self.deriv(q, 0, 0, y, t)
    }

    /// W_{p,q} = ∂_y^p ∂_t^{pt} X_q for p < rows.
    pub fn matrix(&self, rows: usize, pt: usize, y: f64, t: f64) -> Mat {
        Mat::from_fn(rows, self.len(), |p, q| self.deriv(q, p, pt, y, t))
    }

    /// Wronskian of the chosen basis elements.
    pub fn wronskian_of(&self, cols: &[usize], y: f64, t: f64) -> f64 {
        Mat::from_fn(cols.len(), cols.len(), |p, c| self.deriv(cols[c], p, 0, y, t)).determinant()
    }

    /// Det_0 = 1, Det_1, …, Det_N.
    pub fn minors(&self, y: f64, t: f64) -> Vec<f64> {
        let w = self.matrix(self.len(), 0, y, t);
        let mut out = vec![1.0];
        out.extend((1..=self.len()).map(|i| w.view((0, 0), (i, i)).determinant()));
        out
    }

    /// y and t̄ derivatives of the leading minors by row replacement.
    pub fn minor_derivatives(&self, y: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let w = self.matrix(n + 1, 0, y, t);
        let wt = self.matrix(n, 1, y, t);
        let mut dy = vec![0.0];
        let mut dt = vec![0.0];
        for i in 1..=n {
            let (mut sy, mut st) = (0.0, 0.0);
            for p in 0..i {
                let mut m = w.view((0, 0), (i, i)).clone_owned();
                for c in 0..i {
                    m[(p, c)] = w[(p + 1, c)];
                }
                sy += m.determinant();
                let mut m = w.view((0, 0), (i, i)).clone_owned();
                for c in 0..i {
                    m[(p, c)] = wt[(p, c)];
                }
                st += m.determinant();
            }
            dy.push(sy);
            dt.push(st);
        }
        (dy, dt)
    }

    /// Det_{i+1}/Det_i, i = 0..N−1.
    pub fn minor_ratios(&self, y: f64, t: f64) -> Vec<f64> {
        let d = self.minors(y, t);
        d.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// G_i = Det_{i+1}Det_{i−1}/Det_i², i = 1..N−1.
    pub fn chain(&self, y: f64, t: f64) -> ChainValues {
        let d = self.minors(y, t);
        let (dy, dt) = self.minor_derivatives(y, t);
        let n = self.len();
        let mut g = Vec::new();
        let mut gy = Vec::new();
        let mut gt = Vec::new();
        for i in 1..n {
            let v = d[i + 1] * d[i - 1] / (d[i] * d[i]);
            let lg = |dd: &[f64]| dd[i + 1] / d[i + 1] + dd[i - 1] / d[i - 1] - 2.0 * dd[i] / d[i];
            g.push(v);
            gy.push(v * lg(&dy));
            gt.push(v * lg(&dt));
        }
        ChainValues { g, gy, gt }
    }

    /// W = LU without pivoting.
    pub fn lu(&self, y: f64, t: f64) -> Result<(Mat, Mat)> {
        let n = self.len();
        let mut u = self.matrix(n, 0, y, t);
        let mut l = Mat::identity(n, n);
        for c in 0..n {
            let piv = u[(c, c)];
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::singular(format!("Wronskian minor Det_{} vanishes at y={y}, t={t}", c + 1), vec![]));
            }
            for r in c + 1..n {
                let f = u[(r, c)] / piv;
                l[(r, c)] = f;
                for cc in c..n {
                    u[(r, cc)] -= f * u[(c, cc)];
                }
            }
        }
        Ok((l, u))
    }

    pub fn gauge(&self, y: f64, t: f64) -> Result<Gauge> {
        let n = self.len();
        let (l, u) = self.lu(y, t)?;
        let w1 = self.matrix(n + 1, 0, y, t).rows(1, n).clone_owned();
        let wt = self.matrix(n, 1, y, t);
        // L⁻¹·X·U⁻¹ by two triangular solves
        let conj = |x: &Mat| -> Result<Mat> {
            let left = l.solve_lower_triangular(x).ok_or_else(|| Error::Internal("singular L".into()))?;
            let right = u
                .transpose()
                .solve_lower_triangular(&left.transpose())
                .ok_or_else(|| Error::Internal("singular U".into()))?;
            Ok(right.transpose())
        };
        let my = conj(&w1)?;
        let mt = conj(&wt)?;
        let upper = |m: &Mat, strict: bool| Mat::from_fn(n, n, |r, c| if c > r || (!strict && c == r) { m[(r, c)] } else { 0.0 });
        let d: Vec<f64> = (0..n).map(|i| u[(i, i)]).collect();
        let scale = |m: Mat| Mat::from_fn(n, n, |r, c| m[(r, c)] * d[c] / d[r]);
        Ok(Gauge { a: scale(upper(&my, true)), b: scale(upper(&mt, true)), lplus: upper(&my, false), p: upper(&mt, false), l, u })
    }

    /// Nodes where some Det_i is not strictly positive.
    pub fn genericity_scan(&self, ys: &[f64], ts: &[f64]) -> Vec<GenericityIssue> {
        let mut out = Vec::new();
        for (iy, &y) in ys.iter().enumerate() {
            for (it, &t) in ts.iter().enumerate() {
                for (i, d) in self.minors(y, t).into_iter().enumerate().skip(1) {
                    if !(d > 0.0) {
                        out.push(GenericityIssue { minor: i, iy, it });
                    }
                }
            }
        }
        out
    }
}

/// |Ẋ_q − ∂_y^k X_q| over a (y, t̄) sample; zero up to rounding for the
/// closed-form family.
pub fn linear_eq_residual(frame: &WronskianFrame, ys: &[f64], ts: &[f64], tol: f64) -> ResidualReport {
    let mut acc = Accumulator::default();
    for (iy, &y) in ys.iter().enumerate() {
        for (it, &t) in ts.iter().enumerate() {
            for q in 0..frame.len() {
                acc.push(frame.deriv(q, 0, 1, y, t) - frame.deriv(q, frame.k, 0, y, t), [iy, it]);
            }
        }
    }
    acc.report(format!("linear_eq(k={})", frame.k), tol)
}

/// Basis given by samples on a grid whose first axis is y and second t̄,
/// for Ẋ = X^{(k)} + A^{(2)}X^{(k−2)} + … + A^{(k)}X.
#[derive(Debug, Clone)]
pub struct SampledFrame {
    pub k: usize,
    pub grid: Grid2D,
    pub basis: Vec<Field>,
    /// A^{(2)}, …, A^{(k)} sampled on the same grid.
    pub coeffs: Vec<Field>,
}

fn y_derivative(f: &Field, g: &Grid2D, order: usize) -> Result<(Field, usize)> {
    let mut out = f.clone();
    let mut ring = 0;
    let mut left = order;
    while left >= 2 {
        out = numerics::d2_dx2(&out, g)?;
        ring += RING;
        left -= 2;
    }
    if left == 1 {
        out = numerics::d_dx(&out, g)?;
        ring += RING;
    }
    Ok((out, ring))
}

impl SampledFrame {
    pub fn residual(&self, tol: f64) -> Result<ResidualReport> {
        if self.coeffs.len() + 1 != self.k.max(1) {
            return Err(Error::Argument(format!("order {} needs {} coefficient fields", self.k, self.k.saturating_sub(1))));
        }
        let mut acc = Accumulator::default();
        for x in &self.basis {
            let xt = numerics::d_dy(x, &self.grid)?;
            let (top, mut ring) = y_derivative(x, &self.grid, self.k)?;
            let mut r = xt - top;
            for (idx, a) in self.coeffs.iter().enumerate() {
                let (d, rr) = y_derivative(x, &self.grid, self.k - (idx + 2))?;
                ring = ring.max(rr);
                r = r - a * &d;
            }
            numerics::accumulate_field(&mut acc, &r, ring.max(RING), None);
        }
        Ok(acc.report(format!("linear_eq_sampled(k={})", self.k), tol))
    }
}

/// φ₁ = X₁, φ_i = Det_iDet_{i−2}/Det_{i−1}² (so φ_{i+1} = G_i), sampled on
/// `ys` at fixed t̄; `[i−1][iy]`.
pub fn frobenius_factors(frame: &WronskianFrame, ys: &[f64], t: f64) -> Result<Vec<Vec<f64>>> {
    let n = frame.len();
    let mut out = vec![Vec::with_capacity(ys.len()); n];
    for (iy, &y) in ys.iter().enumerate() {
        let d = frame.minors(y, t);
        if let Some(i) = (1..=n).find(|&i| d[i] == 0.0 || !d[i].is_finite()) {
            return Err(Error::singular(format!("minor Det_{i} vanishes"), vec![(iy, 0)]));
        }
        out[0].push(d[1]);
        for i in 2..=n {
            out[i - 1].push(d[i] * d[i - 2] / (d[i - 1] * d[i - 1]));
        }
    }
    Ok(out)
}

/// Rebuild every X_q from the factors by nested quadrature,
/// X_q = φ₁(J_{q,1} + ∫φ₂(J_{q,2} + …)), constants J from Wronskians at the
/// baseline. Returns the max-abs reconstruction error.
pub fn frobenius_roundtrip(frame: &WronskianFrame, ys: &[f64], t: f64, baseline: usize, tol: f64) -> Result<ResidualReport> {
    if ys.len() < 5 || baseline >= ys.len() {
        return Err(Error::Argument("round trip needs at least 5 nodes and a baseline inside them".into()));
    }
    let h = ys[1] - ys[0];
    let phi = frobenius_factors(frame, ys, t)?;
    let yb = ys[baseline];
    let mut acc = Accumulator::default();
    for q in 0..frame.len() {
        let mut w = vec![1.0; ys.len()];
        for j in (0..q).rev() {
            let cols: Vec<usize> = (0..j).chain([q]).collect();
            let lower: Vec<usize> = (0..=j).collect();
            let c = frame.wronskian_of(&cols, yb, t) / frame.wronskian_of(&lower, yb, t);
            let integrand: Vec<f64> = phi[j + 1].iter().zip(&w).map(|(a, b)| a * b).collect();
            w = numerics::cumulative_integral(&integrand, h, baseline).into_iter().map(|v| v + c).collect();
        }
        for (iy, &y) in ys.iter().enumerate() {
            acc.push(phi[0][iy] * w[iy] - frame.value(q, y, t), [q, iy]);
        }
    }
    Ok(acc.report("frobenius_roundtrip", tol))
}

/// Ordering of the commutator in the chain equations of level s ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainOrder {
    /// (π^{(s}_i)′ = G_iπ^{(s−1}_{i+1} − π^{(s−1}_iG_{i+s−1}.
    Derived,
    /// (π^{(s}_i)′ = π^{(s−1}_iG_{i+s−1} − G_iπ^{(s−1}_{i+1}.
    Reversed,
}

/// Sample domain of the chain check: first axis y, second t̄.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainDomain {
    pub grid: Grid2D,
    /// y index where the π are matched to the closed form.
    pub baseline: usize,
}

impl Default for ChainDomain {
    fn default() -> Self {
        ChainDomain { grid: Grid2D::new(-1.0, -0.1, 0.01, 0.01, 201, 21).expect("static grid"), baseline: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// Quadrature-recovered π^{(s}_i against the closed-form gauge.
    pub pi: ResidualReport,
    /// π^{(k}_i − G_i⋯G_{i+k−1}.
    pub top: ResidualReport,
    /// (G_i⋯G_{i+k−1})′ against the level-k right side.
    pub local: ResidualReport,
    /// B_y − A_t − [A, B] (with the commutator reversed for the reversed order).
    pub zero_curvature: ResidualReport,
    pub all: ResidualReport,
}

const ZC_STEP: f64 = 1e-3;

/// Five-point first derivative from samples f(0..5) centred on f(2).
fn stencil(f: &dyn Fn(usize) -> Result<Mat>, h: f64) -> Result<Mat> {
    Ok((f(0)? - f(1)? * 8.0 + f(3)? * 8.0 - f(4)?) / (12.0 * h))
}

pub fn nilpotent_chain_residual(frame: &WronskianFrame, order: ChainOrder, dom: &ChainDomain, tol: f64) -> Result<ChainReport> {
    let g = &dom.grid;
    let (ny, nt) = (g.nx, g.ny);
    if dom.baseline >= ny {
        return Err(Error::Argument("chain baseline outside the y range".into()));
    }
    let n = frame.len();
    let k = frame.k;
    let sites = n.saturating_sub(k);
    let mut acc_pi = Accumulator::default();
    let mut acc_top = Accumulator::default();
    let mut acc_loc = Accumulator::default();
    let mut acc_zc = Accumulator::default();
    let name = format!("nilpotent_chain(k={k})");
    if sites == 0 {
        let r = |s: &str| ResidualReport::new(format!("{name}/{s}"), 0.0, 0.0, [0, 0], tol);
        return Ok(ChainReport { pi: r("pi"), top: r("top"), local: r("local"), zero_curvature: r("zero_curvature"), all: r("all") });
    }
    let sign = match order {
        ChainOrder::Derived => 1.0,
        ChainOrder::Reversed => -1.0,
    };
    let mut gauges: Vec<Vec<Gauge>> = Vec::with_capacity(nt);
    for it in 0..nt {
        let t = g.y(it);
        let row = (0..ny).map(|iy| frame.gauge(g.x(iy), t)).collect::<Result<Vec<_>>>()?;
        gauges.push(row);
    }
    for it in 0..nt {
        let t = g.y(it);
        let ch: Vec<ChainValues> = (0..ny).map(|iy| frame.chain(g.x(iy), t)).collect();
        // pi[s][i-1][iy] for s = 1..=k, i = 1..=n−s
        let mut pi: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
        for s in 1..=k {
            let mut level = Vec::new();
            for i in 1..=n - s {
                let rhs: Vec<f64> = (0..ny)
                    .map(|iy| {
                        if s == 1 {
                            ch[iy].gt[i - 1]
                        } else {
                            let gi = ch[iy].g[i - 1];
                            let gl = ch[iy].g[i + s - 2];
                            sign * (gi * pi[s - 1][i][iy] - pi[s - 1][i - 1][iy] * gl)
                        }
                    })
                    .collect();
                let c = gauges[it][dom.baseline].b[(i - 1, i - 1 + s)];
                let v: Vec<f64> = numerics::cumulative_integral(&rhs, g.hx, dom.baseline).into_iter().map(|x| x + c).collect();
                for (iy, x) in v.iter().enumerate() {
                    acc_pi.push(x - gauges[it][iy].b[(i - 1, i - 1 + s)], [iy, it]);
                }
                level.push(v);
            }
            pi.push(level);
        }
        for i in 1..=sites {
            for iy in 0..ny {
                let c = &ch[iy];
                let prod: f64 = c.g[i - 1..i - 1 + k].iter().product();
                acc_top.push(pi[k][i - 1][iy] - prod, [iy, it]);
                let dprod: f64 = prod * (i - 1..i - 1 + k).map(|m| c.gy[m] / c.g[m]).sum::<f64>();
                let b = &gauges[it][iy].b;
                let rhs = if k == 1 {
                    c.gt[i - 1]
                } else {
                    sign * (c.g[i - 1] * b[(i, i - 1 + k)] - b[(i - 1, i + k - 2)] * c.g[i + k - 2])
                };
                acc_loc.push(dprod - rhs, [iy, it]);
            }
        }
    }
    // zero curvature probed with local stencils finer than the sample grid
    let hp = ZC_STEP;
    for it in 0..nt {
        for iy in 0..ny {
            let (y, t) = (g.x(iy), g.y(it));
            let by = stencil(&|j| frame.gauge(y + (j as f64 - 2.0) * hp, t).map(|x| x.b), hp)?;
            let at = stencil(&|j| frame.gauge(y, t + (j as f64 - 2.0) * hp).map(|x| x.a), hp)?;
            let (a, b) = (&gauges[it][iy].a, &gauges[it][iy].b);
            let r = by - at - (a * b - b * a) * sign;
            acc_zc.push(r.amax(), [iy, it]);
        }
    }
    let pi = acc_pi.report(format!("{name}/pi"), tol);
    let top = acc_top.report(format!("{name}/top"), tol);
    let local = acc_loc.report(format!("{name}/local"), tol);
    let zero_curvature = acc_zc.report(format!("{name}/zero_curvature"), tol);
    let all = ResidualReport::merge(name, &[pi.clone(), top.clone(), local.clone(), zero_curvature.clone()], tol);
    Ok(ChainReport { pi, top, local, zero_curvature, all })
}

// ---------------------------------------------------------------------------
// Time-dependent kernels

/// Base chain for the time-dependent kernels: A_n with a unit depth-1 minus
/// flow along x; the plus side is the U factor of the frame's Wronskian.
#[derive(Debug, Clone)]
pub struct SolitonSetup {
    pub n: usize,
    /// (x, y) grid, or (x, t̄) grid for [`xt_tau`].
    pub grid: Grid2D,
    pub k0: Vec<InitialFactor>,
    pub substeps: usize,
}

struct Base {
    reps: RepSet,
    minus: FlowPath,
    minus_coeffs: CoefficientSamples,
    k0: Vec<Mat>,
}

fn base(frame: &WronskianFrame, setup: &SolitonSetup) -> Result<Base> {
    if frame.len() != setup.n + 1 {
        return Err(Error::Argument(format!("A{} needs a frame of {} basis elements, got {}", setup.n, setup.n + 1, frame.len())));
    }
    let reps = RepSet::new(setup.n)?;
    let g = &setup.grid;
    let x_axis = Axis::uniform(g.x0, g.hx, g.nx, 0.0);
    let lag = GradedLagrangian::unit(FlowSide::Minus, setup.n, 1);
    let minus = flows::solve_smatrix_scaled(&lag, &reps, &x_axis, setup.substeps, -1.0)?;
    let minus_coeffs = CoefficientSamples::from_lagrangian(&lag, &x_axis.nodes);
    let k0 = flows::initial_element(&reps, &setup.k0)?;
    Ok(Base { reps, minus, minus_coeffs, k0 })
}

fn plus_path(reps: &RepSet, nodes: &[f64], us: &[Mat]) -> Result<FlowPath> {
    let mut m = Vec::with_capacity(reps.n);
    let mut inverse = Vec::with_capacity(reps.n);
    for j in 1..=reps.n {
        m.push(us.iter().map(|u| reps.lift_group(j, u)).collect());
        inverse.push(
            us.iter()
                .map(|u| u.clone().try_inverse().map(|ui| reps.lift_group(j, &ui)).ok_or_else(|| Error::Internal("singular U".into())))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(FlowPath { side: FlowSide::Plus, nodes: nodes.to_vec(), m, inverse })
}

/// Coefficient table of an upper-triangular Lagrangian: grade s ≥ 1 at site
/// i is entry (i−1, i−1+s); the grade-0 (Cartan) row is not used by the
/// lattice equations and is left at zero.
fn plus_coeffs(ls: &[Mat], depth: usize, n: usize) -> CoefficientSamples {
    let values = (0..=depth)
        .map(|s| {
            (1..=n)
                .map(|i| ls.iter().map(|l| if s == 0 || i - 1 + s > n { 0.0 } else { l[(i - 1, i - 1 + s)] }).collect())
                .collect()
        })
        .collect();
    CoefficientSamples { depth, values }
}

fn xy_kernel_from(frame: &WronskianFrame, b: &Base, g: &Grid2D, t: f64) -> Result<KernelField> {
    let ys = g.ys();
    let gauges = ys.iter().map(|&y| frame.gauge(y, t)).collect::<Result<Vec<_>>>()?;
    let us: Vec<Mat> = gauges.iter().map(|x| x.u.clone()).collect();
    let ls: Vec<Mat> = gauges.iter().map(|x| x.lplus.clone()).collect();
    let plus = plus_path(&b.reps, &ys, &us)?;
    flows::from_paths(b.reps.clone(), &b.minus, &plus, b.k0.clone(), b.minus_coeffs.clone(), plus_coeffs(&ls, 1, b.reps.n))
}

/// Kernel on the (x, y) grid at time t̄: M₊(y) = U(y, t̄).
pub fn xy_kernel(frame: &WronskianFrame, setup: &SolitonSetup, t: f64) -> Result<KernelField> {
    let b = base(frame, setup)?;
    xy_kernel_from(frame, &b, &setup.grid, t)
}

/// Tau functions on the (x, y) grid at every t̄, the grade-0 dressing
/// diag U(y, t̄) included.
#[derive(Debug, Clone)]
pub struct TimeTau {
    pub ts: Vec<f64>,
    pub slices: Vec<TauField>,
}

pub fn time_dependent_tau(frame: &WronskianFrame, setup: &SolitonSetup, ts: &[f64]) -> Result<TimeTau> {
    let b = base(frame, setup)?;
    let slices = ts
        .iter()
        .map(|&t| lattice::compute_tau(&xy_kernel_from(frame, &b, &setup.grid, t)?, 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeTau { ts: ts.to_vec(), slices })
}

/// Kernel on the (x, t̄) grid at fixed y: the grid's second axis is t̄ and
/// M₊(t̄) = U(y, t̄) has the depth-k time Lagrangian upper(L⁻¹C_tL).
pub fn xt_kernel(frame: &WronskianFrame, setup: &SolitonSetup, y: f64) -> Result<KernelField> {
    let b = base(frame, setup)?;
    let ts = setup.grid.ys();
    let gauges = ts.iter().map(|&t| frame.gauge(y, t)).collect::<Result<Vec<_>>>()?;
    let us: Vec<Mat> = gauges.iter().map(|x| x.u.clone()).collect();
    let ps: Vec<Mat> = gauges.iter().map(|x| x.p.clone()).collect();
    let plus = plus_path(&b.reps, &ts, &us)?;
    flows::from_paths(b.reps, &b.minus, &plus, b.k0, b.minus_coeffs, plus_coeffs(&ps, frame.k.min(setup.n), setup.n))
}

/// Tau fields of [`xt_kernel`] with α fields to depth k.
pub fn xt_tau(frame: &WronskianFrame, setup: &SolitonSetup, y: f64) -> Result<TauField> {
    lattice::compute_tau(&xt_kernel(frame, setup, y)?, frame.k)
}

/// u = ⟨i−1⟩/⟨i⟩, v = ⟨i+1⟩/⟨i⟩ on the (x, y) grid at every t̄, with
/// Φ = (ln⟨i⟩)_yy supplied at the centre column.
pub fn ds_soliton(frame: &WronskianFrame, setup: &SolitonSetup, site: usize, ts: &[f64]) -> Result<DsFields> {
    if site == 0 || site > setup.n {
        return Err(Error::Argument(format!("site {site} outside 1..={}", setup.n)));
    }
    let tt = time_dependent_tau(frame, setup, ts)?;
    let g = setup.grid;
    let baseline = g.nx / 2;
    let i = site as isize;
    let mut u = Vec::new();
    let mut v = Vec::new();
    let mut phi = Vec::new();
    for s in &tt.slices {
        s.check_regular()?;
        u.push(s.tau(i - 1) / s.tau(i));
        v.push(s.tau(i + 1) / s.tau(i));
        let lyy = numerics::d2_dy2(&s.tau(i).mapv(f64::ln), &g)?;
        phi.push((0..g.ny).map(|iy| lyy[[baseline, iy]]).collect());
    }
    Ok(DsFields { grid: g, ts: ts.to_vec(), u, v, valid_ring: 0, baseline, phi_baseline: Some(phi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::Generator;
    use crate::mappings::{ds_invariance_check, ds_residual, DsVariant};

    fn frame(k: usize, modes: &[f64]) -> WronskianFrame {
        WronskianFrame::new(&FrameSpec { k, modes: modes.to_vec(), amps: vec![] }).unwrap()
    }

    fn default_frame(k: usize) -> WronskianFrame {
        WronskianFrame::new(&FrameSpec::default_for(k).unwrap()).unwrap()
    }

    fn cartan_k0(n: usize, c: f64) -> Vec<InitialFactor> {
        (1..=n).map(|i| InitialFactor { generator: Generator::Cartan, site: i, coef: c }).collect()
    }

    #[test]
    fn series_derivatives_match_closed_forms() {
        let f = frame(2, &[0.7]);
        let (y, t) = (0.3f64, -0.2f64);
        let e = (0.7 * y + 0.49 * t).exp();
        assert!((f.deriv(0, 3, 1, y, t) - 0.7f64.powi(5) * e).abs() < 1e-14);
        // heat polynomials: {1, y, y² + 2t, y³ + 6yt}
        let h = frame(2, &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.value(0, y, t), 1.0);
        assert!((h.value(1, y, t) - y).abs() < 1e-15);
        assert!((h.value(2, y, t) - (y * y + 2.0 * t)).abs() < 1e-15);
        assert!((h.value(3, y, t) - (y * y * y + 6.0 * y * t)).abs() < 1e-14);
        assert!((h.deriv(3, 0, 1, y, t) - h.deriv(3, 2, 0, y, t)).abs() < 1e-14);
        // confluent at nonzero a, k = 3: ∂_a e^{ay+a³t} = (y + 3a²t)e
        let c = frame(3, &[0.5, 0.5]);
        let e = (0.5 * y + 0.125 * t).exp();
        assert!((c.value(1, y, t) - (y + 0.75 * t) * e).abs() < 1e-15);
    }

    #[test]
    fn linear_equation_exact_for_exponentials() {
        let ys: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        for k in [2, 3] {
            let r = linear_eq_residual(&default_frame(k), &ys, &[-0.1, 0.0, 0.1], 1e-12);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn sampled_frame_with_potential() {
        // X = (y² + 2t)e^{ct} solves Ẋ = X″ + cX
        let c = 0.8;
        let g = Grid2D::new(-1.0, 0.0, 0.01, 0.01, 201, 51).unwrap();
        let x = g.sample(|y, t| (y * y + 2.0 * t) * (c * t).exp());
        let sf = SampledFrame { k: 2, grid: g, basis: vec![x.clone()], coeffs: vec![g.sample(|_, _| c)] };
        assert!(sf.residual(1e-5).unwrap().pass);
        let wrong = SampledFrame { coeffs: vec![g.zeros()], ..sf };
        assert!(!wrong.residual(1e-5).unwrap().pass);
    }

    #[test]
    fn shift_law_and_invariant_chain() {
        let base = default_frame(3);
        let c = 0.37;
        let shifted = WronskianFrame::new(&FrameSpec { k: 3, modes: base.modes.clone(), amps: vec![c; 4] }).unwrap();
        let (y, t) = (0.2, 0.05);
        let (d0, d1) = (base.minors(y, t), shifted.minors(y, t));
        for i in 1..=4 {
            assert!((d1[i].ln() - d0[i].ln() - i as f64 * c).abs() < 1e-12);
        }
        let (r0, r1) = (base.minor_ratios(y, t), shifted.minor_ratios(y, t));
        for i in 0..4 {
            assert!((r1[i] / r0[i] - c.exp()).abs() < 1e-12);
        }
        let (g0, g1) = (base.chain(y, t), shifted.chain(y, t));
        for i in 0..3 {
            assert!((g0.g[i] - g1.g[i]).abs() < 1e-12 * g0.g[i].abs());
        }
    }

    #[test]
    fn minor_derivatives_match_differences() {
        let f = default_frame(3);
        let (y, t, h) = (0.1, 0.02, 1e-5);
        let (dy, dt) = f.minor_derivatives(y, t);
        let m = |y, t| f.minors(y, t);
        for i in 1..=4 {
            let fy = (m(y + h, t)[i] - m(y - h, t)[i]) / (2.0 * h);
            let ft = (m(y, t + h)[i] - m(y, t - h)[i]) / (2.0 * h);
            assert!((dy[i] - fy).abs() < 1e-6 * (1.0 + fy.abs()));
            assert!((dt[i] - ft).abs() < 1e-6 * (1.0 + ft.abs()));
        }
    }

    #[test]
    fn gauge_structure() {
        let f = default_frame(2);
        let gg = f.gauge(0.3, 0.05).unwrap();
        let ch = f.chain(0.3, 0.05);
        for i in 0..2 {
            assert!((gg.lplus[(i, i + 1)] - 1.0).abs() < 1e-12);
            assert!((gg.a[(i, i + 1)] - ch.g[i]).abs() < 1e-12);
        }
        assert!((gg.p[(0, 2)] - 1.0).abs() < 1e-12);
        assert!((gg.b[(0, 2)] - ch.g[0] * ch.g[1]).abs() < 1e-12);
        assert!(gg.lplus[(0, 2)].abs() < 1e-12);
    }

    #[test]
    fn frobenius_factors_and_roundtrip() {
        let f = frame(2, &[-1.0, 0.3]);
        let ys: Vec<f64> = (0..201).map(|i| -1.0 + 0.01 * i as f64).collect();
        let phi = frobenius_factors(&f, &ys, 0.05).unwrap();
        for (iy, &y) in ys.iter().enumerate() {
            // (X₂/X₁)′ = (a₂ − a₁) X₂/X₁
            let q = f.value(1, y, 0.05) / f.value(0, y, 0.05);
            assert!((phi[1][iy] - 1.3 * q).abs() < 1e-13);
        }
        assert_eq!(frobenius_factors(&frame(2, &[0.4]), &ys, 0.0).unwrap().len(), 1);
        for k in [2, 3] {
            let r = frobenius_roundtrip(&default_frame(k), &ys, 0.03, 100, 1e-7).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn chain_k2_and_k3() {
        let dom = ChainDomain::default();
        let r2 = nilpotent_chain_residual(&default_frame(2), ChainOrder::Derived, &dom, 1e-7).unwrap();
        assert!(r2.all.pass, "{r2:#?}");
        let r3 = nilpotent_chain_residual(&default_frame(3), ChainOrder::Derived, &dom, 1e-6).unwrap();
        assert!(r3.all.pass, "{r3:#?}");
    }

    #[test]
    fn reversed_chain_order_fails() {
        let dom = ChainDomain::default();
        for k in [2, 3] {
            let r = nilpotent_chain_residual(&default_frame(k), ChainOrder::Reversed, &dom, 1e-6).unwrap();
            assert!(!r.all.pass);
        }
    }

    #[test]
    fn chain_vacuous_and_permuted() {
        let dom = ChainDomain::default();
        let r = nilpotent_chain_residual(&frame(2, &[0.5, 1.0]), ChainOrder::Derived, &dom, 1e-7).unwrap();
        assert!(r.all.pass && r.all.max_abs == 0.0);
        let p = frame(2, &[0.3, -1.0, 1.1]);
        let d = p.minors(0.0, 0.0);
        assert!(d[2] < 0.0);
        assert!(!p.genericity_scan(&[0.0], &[0.0]).is_empty());
        assert!(default_frame(2).genericity_scan(&[-1.0, 0.0, 1.0], &[-0.1, 0.1]).is_empty());
        let r = nilpotent_chain_residual(&p, ChainOrder::Derived, &dom, 1e-7).unwrap();
        assert!(r.all.pass, "{r:#?}");
    }

    #[test]
    fn frame_spec_json() {
        let s: FrameSpec = serde_json::from_str(r#"{"k":2,"modes":[-1,0.3,1.1]}"#).unwrap();
        assert_eq!(s, FrameSpec::default_for(2).unwrap());
        assert!(serde_json::from_str::<FrameSpec>(r#"{"k":2,"modes":[1],"speed":3}"#).is_err());
        assert!(WronskianFrame::new(&FrameSpec { k: 2, modes: vec![1.0, 2.0], amps: vec![0.0] }).is_err());
    }

    #[test]
    fn frozen_time_is_a_toda_solution() {
        let setup = SolitonSetup { n: 2, grid: Grid2D::square(-0.5, 0.5, 201).unwrap(), k0: cartan_k0(2, 0.6), substeps: 4 };
        let tau = lattice::compute_tau(&xy_kernel(&default_frame(2), &setup, 0.05).unwrap(), 1).unwrap();
        tau.check_regular().unwrap();
        let r = lattice::toda_residual(&tau, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
        let bad = SolitonSetup { n: 3, ..setup };
        assert!(matches!(xy_kernel(&default_frame(2), &bad, 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn utoda_k1_from_wronskian_time() {
        // x ∈ [−0.5, 0.5], t̄ ∈ [−0.1, 0.1]
        let setup = SolitonSetup { n: 2, grid: Grid2D::new(-0.5, -0.1, 0.01, 0.002, 101, 101).unwrap(), k0: cartan_k0(2, 0.6), substeps: 4 };
        let tau = xt_tau(&default_frame(2), &setup, 0.1).unwrap();
        tau.check_regular().unwrap();
        let p = lattice::compute_p(&tau, 1, 2).unwrap();
        let r = lattice::utoda_k1_residual(&tau, &p, 2, 1e-5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn timeflow_reproduces_u() {
        let f = default_frame(2);
        let reps = RepSet::new(2).unwrap();
        let ys: Vec<f64> = (0..101).map(|i| -0.5 + 0.01 * i as f64).collect();
        let base: Vec<Vec<Mat>> =
            (1..=2).map(|j| ys.iter().map(|&y| reps.lift_group(j, &f.gauge(y, 0.0).unwrap().u)).collect()).collect();
        let t_axis = Axis::uniform(0.0, 0.02, 11, 0.0);
        let tf = flows::solve_timeflow(
            &reps,
            &|y, t| f.gauge(y, t).unwrap().lplus,
            &|y, t| f.gauge(y, t).unwrap().p,
            &base,
            &ys,
            &t_axis,
            8,
            1e-6,
        )
        .unwrap();
        assert!(tf.consistency.pass, "{:?}", tf.consistency);
        for (iy, &y) in ys.iter().enumerate() {
            let exact = reps.lift_group(2, &f.gauge(y, 0.2).unwrap().u);
            assert!((&tf.m[1][iy][10] - exact).amax() < 1e-8);
        }
    }

    #[test]
    fn one_mode_soliton_translates() {
        // modes {0, 1}: U depends on y + t̄ only
        let g = Grid2D::square(-0.5, 0.5, 101).unwrap();
        let setup = SolitonSetup { n: 1, grid: g, k0: vec![], substeps: 4 };
        let ds = ds_soliton(&frame(2, &[0.0, 1.0]), &setup, 1, &[0.0, 0.05]).unwrap();
        let mut worst = 0.0f64;
        for ix in 0..g.nx {
            for iy in 0..g.ny - 5 {
                worst = worst.max((ds.u[1][[ix, iy]] - ds.u[0][[ix, iy + 5]]).abs());
            }
        }
        assert!(worst < 1e-4, "{worst}");
        let zero = ds_soliton(&frame(2, &[0.0, 0.0]), &setup, 1, &[0.0, 0.3]).unwrap();
        assert!(lattice::max_field_difference(&zero.u[..1], &zero.u[1..]) < 1e-12);
        assert!(lattice::max_field_difference(&zero.v[..1], &zero.v[1..]) < 1e-12);
    }

    #[test]
    fn ds_pair_and_invariance() {
        let g = Grid2D::square(-0.5, 0.5, 101).unwrap();
        let ts: Vec<f64> = (0..7).map(|i| -0.03 + 0.01 * i as f64).collect();
        let setup = SolitonSetup { n: 2, grid: g, k0: cartan_k0(2, 0.6), substeps: 4 };
        let ds = ds_soliton(&default_frame(2), &setup, 1, &ts).unwrap();
        let inv = ds_invariance_check(&ds, 1e-4, 1e-3).unwrap();
        assert!(inv.pair.all.pass, "{:#?}", inv.pair);
        assert!(inv.mapped.all.pass, "{:#?}", inv.mapped);
        let flipped = ds_residual(&ds, DsVariant::Flipped, 1e-4).unwrap();
        assert!(!flipped.all.pass);
        let matched = ds_residual(&DsFields { phi_baseline: None, ..ds }, DsVariant::Derived, 1e-4).unwrap();
        assert!(matched.all.pass, "{matched:#?}");
    }
}
