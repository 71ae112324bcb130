//! Graded Lagrangians, S-matrix flows dM/dt = L(t)M, time flows, and the
//! kernel element K(x, y) = M₊(y)·K₀·M₋(x)⁻¹ in every fundamental
//! representation of A_n.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::algebra::{self, FundamentalRep, RepF, Sign};
use crate::error::{Error, Result};
use crate::numerics::{self, Accumulator, Mat, ResidualReport, Side};

/// Scalar coefficient function of one real argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Coefficient {
    Const(f64),
    /// Ascending powers: c₀ + c₁t + c₂t² + …
    Poly(Vec<f64>),
    /// amp·exp(rate·t)
    Exp { amp: f64, rate: f64 },
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::Poly(c) => c.iter().rev().fold(0.0, |acc, v| acc * t + v),
            Coefficient::Exp { amp, rate } => amp * (rate * t).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowSide {
    Plus,
    Minus,
}

/// One term φ^{±s}_i(t)·(generator of grade ±s at site i). Grade 0 means the
/// Cartan element h_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub grade: usize,
    pub site: usize,
    pub coef: Coefficient,
}

/// Graded coefficient data of one side of the S-matrix equations.
///
/// Minus side, grade s: φ^s_i multiplies Y^{-s}_i. Plus side, grade s:
/// φ̄^s_i multiplies (Y^{-s}_i)ᵀ, which equals (−1)^{s−1}Y^{+s}_i; with this
/// choice the p̄ functions are the exact mirror of the p functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedLagrangian {
    pub side: FlowSide,
    pub n: usize,
    pub depth: usize,
    pub terms: Vec<Term>,
}

impl GradedLagrangian {
    pub fn zero(side: FlowSide, n: usize, depth: usize) -> Self {
        GradedLagrangian { side, n, depth, terms: Vec::new() }
    }

    /// Unit grade-1 coefficients and, for depth ≥ 2, unit top-grade
    /// coefficients; everything else zero.
    pub fn unit(side: FlowSide, n: usize, depth: usize) -> Self {
        let mut l = Self::zero(side, n, depth);
        for i in 1..=n {
            l.terms.push(Term { grade: 1, site: i, coef: Coefficient::Const(1.0) });
        }
        if depth >= 2 && depth <= n {
            for i in 1..=n + 1 - depth {
                l.terms.push(Term { grade: depth, site: i, coef: Coefficient::Const(1.0) });
            }
        }
        l
    }

    /// Insert or replace the term at (grade, site).
    pub fn set(mut self, grade: usize, site: usize, coef: Coefficient) -> Result<Self> {
        self.check_slot(grade, site)?;
        self.terms.retain(|t| !(t.grade == grade && t.site == site));
        self.terms.push(Term { grade, site, coef });
        Ok(self)
    }

    fn check_slot(&self, grade: usize, site: usize) -> Result<()> {
        if grade > self.depth {
            return Err(Error::Argument(format!("grade {grade} exceeds depth {}", self.depth)));
        }
        let hi = if grade == 0 { self.n } else { (self.n + 1).saturating_sub(grade) };
        if site == 0 || site > hi {
            return Err(Error::Argument(format!("site {site} outside 1..={hi} for grade {grade}")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            self.check_slot(t.grade, t.site)?;
        }
        Ok(())
    }

    /// Coefficient of (grade, site) at t (zero if absent).
    pub fn coefficient(&self, grade: usize, site: usize, t: f64) -> f64 {
        self.terms
            .iter()
            .filter(|term| term.grade == grade && term.site == site)
            .map(|term| term.coef.eval(t))
            .sum()
    }

    /// Highest grade carrying a term.
    pub fn max_grade(&self) -> usize {
        self.terms.iter().map(|t| t.grade).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == Coefficient::Const(0.0))
    }

    /// Assembled matrix in representation `j` of the set.
    pub fn assemble(&self, reps: &RepSet, j: usize, t: f64) -> Mat {
        let g = &reps.gens[j - 1];
        let dim = reps.reps[j - 1].dim;
        let mut m = Mat::zeros(dim, dim);
        for term in &self.terms {
            let c = term.coef.eval(t);
            if c == 0.0 {
                continue;
            }
            let gen = if term.grade == 0 {
                &reps.reps[j - 1].h[term.site - 1]
            } else {
                match self.side {
                    FlowSide::Minus => &g.minus[term.grade - 1][term.site - 1],
                    FlowSide::Plus => &g.plus[term.grade - 1][term.site - 1],
                }
            };
            m += gen * c;
        }
        m
    }
}

/// Float generators of every fundamental representation of one A_n.
#[derive(Debug, Clone)]
pub struct RepSet {
    pub n: usize,
    pub reps: Vec<RepF>,
    pub gens: Vec<GradedGens>,
    pub grading: Vec<Mat>,
    /// Λ^j images of the elementary matrices E_ab of gl(n+1), indexed
    /// `[j-1][a*(n+1)+b]`.
    pub elementary: Vec<Vec<Mat>>,
    pub basis: Vec<Vec<Vec<usize>>>,
}

/// Y^{-s}_i and (Y^{-s}_i)ᵀ, indexed `[s-1][i-1]`.
#[derive(Debug, Clone)]
pub struct GradedGens {
    pub minus: Vec<Vec<Mat>>,
    pub plus: Vec<Vec<Mat>>,
}

impl RepSet {
    pub fn new(n: usize) -> Result<Self> {
        let exact: Vec<FundamentalRep> = (1..=n).map(|j| algebra::fundamental_rep(n, j)).collect::<Result<_>>()?;
        let mut gens = Vec::new();
        let mut grading = Vec::new();
        let mut elementary = Vec::new();
        for r in &exact {
            let minus: Vec<Vec<Mat>> = (1..=n)
                .map(|s| algebra::graded_generators(r, s, Sign::Minus).iter().map(algebra::to_f64).collect())
                .collect();
            let plus = minus.iter().map(|v| v.iter().map(|m| m.transpose()).collect()).collect();
            gens.push(GradedGens { minus, plus });
            grading.push(algebra::to_f64(&algebra::principal_grading(r)));
            let m = n + 1;
            let mut el = Vec::with_capacity(m * m);
            for a in 0..m {
                for b in 0..m {
                    let mut e = algebra::QMatrix::zeros(m, m);
                    e[(a, b)] = algebra::Q::from_integer(1);
                    el.push(algebra::to_f64(&algebra::exterior_lift(&r.basis, &e)));
                }
            }
            elementary.push(el);
        }
        Ok(RepSet {
            n,
            reps: exact.iter().map(|r| r.to_float()).collect(),
            gens,
            grading,
            elementary,
            basis: exact.iter().map(|r| r.basis.clone()).collect(),
        })
    }

    /// Λ^j image of a gl(n+1) algebra element given in the defining rep.
    pub fn lift_algebra(&self, j: usize, m: &Mat) -> Mat {
        let dim = self.reps[j - 1].dim;
        let nn = self.n + 1;
        let mut out = Mat::zeros(dim, dim);
        for a in 0..nn {
            for b in 0..nn {
                let v = m[(a, b)];
                if v != 0.0 {
                    out += &self.elementary[j - 1][a * nn + b] * v;
                }
            }
        }
        out
    }

    /// Λ^j image of a GL(n+1) group element: the j-th compound matrix.
    pub fn lift_group(&self, j: usize, g: &Mat) -> Mat {
        let basis = &self.basis[j - 1];
        let dim = basis.len();
        Mat::from_fn(dim, dim, |r, c| {
            let rows = &basis[r];
            let cols = &basis[c];
            let sub = Mat::from_fn(j, j, |a, b| g[(rows[a], cols[b])]);
            sub.determinant()
        })
    }

    pub fn hw(&self, j: usize) -> usize {
        self.reps[j - 1].hw_index
    }
}

/// Checks that the algebra element `m` (defining rep) only has grade
/// components allowed for the side and depth; grade 0 is always allowed.
pub fn check_grades(m: &Mat, side: FlowSide, depth: usize) -> Result<()> {
    let n = m.nrows();
    for a in 0..n {
        for b in 0..n {
            if m[(a, b)] == 0.0 {
                continue;
            }
            let grade = b as isize - a as isize;
            let ok = match side {
                FlowSide::Plus => grade >= 0 && grade as usize <= depth,
                FlowSide::Minus => grade <= 0 && (-grade) as usize <= depth,
            };
            if !ok {
                return Err(Error::Contract(format!(
                    "{side:?} Lagrangian has a component in grade block {grade} (allowed 0..={depth})"
                )));
            }
        }
    }
    Ok(())
}

/// Verify [H, L_s] = ±s·L_s for every grade block of the assembled Lagrangian
/// at the sample points.
pub fn check_lagrangian_grades(lag: &GradedLagrangian, reps: &RepSet, samples: &[f64]) -> Result<()> {
    lag.validate()?;
    for j in 1..=reps.n {
        let h = &reps.grading[j - 1];
        for &t in samples {
            for s in 0..=lag.depth {
                let block = GradedLagrangian {
                    terms: lag.terms.iter().filter(|term| term.grade == s).cloned().collect(),
                    ..lag.clone()
                };
                let l = block.assemble(reps, j, t);
                let sign = match lag.side {
                    FlowSide::Plus => 1.0,
                    FlowSide::Minus => -1.0,
                };
                let r = (h * &l - &l * h - &l * (sign * s as f64)).amax();
                if r > 1e-12 * (1.0 + l.amax()) {
                    return Err(Error::Contract(format!(
                        "{:?} Lagrangian grade block {s} violates [H, L_s] = ±s L_s (residual {r:e})",
                        lag.side
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Nodes along one flow axis and the point where M = I.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub origin: f64,
}

impl Axis {
    pub fn uniform(start: f64, step: f64, count: usize, origin: f64) -> Self {
        Axis { nodes: (0..count).map(|i| start + step * i as f64).collect(), origin }
    }
}

/// Sampled solution path of dM/dt = L(t)·M (and its inverse) for every
/// representation, indexed `[j-1][node]`.
#[derive(Debug, Clone)]
pub struct FlowPath {
    pub side: FlowSide,
    pub nodes: Vec<f64>,
    pub m: Vec<Vec<Mat>>,
    pub inverse: Vec<Vec<Mat>>,
}

fn sweep_both_ways(l: &dyn Fn(f64) -> Mat, side: Side, m0: &Mat, axis: &Axis, substeps: usize) -> Vec<Mat> {
    let mut out = vec![m0.clone(); axis.nodes.len()];
    let gap = axis.nodes.windows(2).map(|w| (w[1] - w[0]).abs()).filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    let max_step = if gap.is_finite() { gap / substeps.max(1) as f64 } else { 1.0 / substeps.max(1) as f64 };
    let fwd: Vec<usize> = (0..axis.nodes.len()).filter(|&i| axis.nodes[i] >= axis.origin).collect();
    let bwd: Vec<usize> = (0..axis.nodes.len()).rev().filter(|&i| axis.nodes[i] < axis.origin).collect();
    for idx in [fwd, bwd] {
        let ts: Vec<f64> = idx.iter().map(|&i| axis.nodes[i]).collect();
        let sol = numerics::rk4_sweep_max_step(l, side, axis.origin, m0, &ts, max_step);
        for (k, &i) in idx.iter().enumerate() {
            out[i] = sol[k].clone();
        }
    }
    out
}

/// Solve dM/dt = scale·L(t)·M from M(origin) = I in every representation,
/// together with M⁻¹ from the companion equation dM⁻¹/dt = −scale·M⁻¹L.
pub fn solve_smatrix_scaled(
    lag: &GradedLagrangian,
    reps: &RepSet,
    axis: &Axis,
    substeps: usize,
    scale: f64,
) -> Result<FlowPath> {
    if lag.n != reps.n {
        return Err(Error::Argument(format!("Lagrangian for A{} used with A{} representations", lag.n, reps.n)));
    }
    let mut samples = vec![axis.origin];
    samples.extend(axis.nodes.iter().step_by((axis.nodes.len() / 4).max(1)));
    check_lagrangian_grades(lag, reps, &samples)?;
    let mut m = Vec::with_capacity(reps.n);
    let mut inverse = Vec::with_capacity(reps.n);
    for j in 1..=reps.n {
        let dim = reps.reps[j - 1].dim;
        let id = Mat::identity(dim, dim);
        let l = |t: f64| lag.assemble(reps, j, t) * scale;
        let li = |t: f64| lag.assemble(reps, j, t) * (-scale);
        m.push(sweep_both_ways(&l, Side::Left, &id, axis, substeps));
        inverse.push(sweep_both_ways(&li, Side::Right, &id, axis, substeps));
    }
    Ok(FlowPath { side: lag.side, nodes: axis.nodes.clone(), m, inverse })
}

/// Solve the S-matrix equation dM/dt = L(t)·M, M(origin) = I.
pub fn solve_smatrix(lag: &GradedLagrangian, reps: &RepSet, axis: &Axis, substeps: usize) -> Result<FlowPath> {
    solve_smatrix_scaled(lag, reps, axis, substeps, 1.0)
}

/// Sampled graded coefficients along one axis: `[s][i-1][node]`, s = 0..=depth.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSamples {
    pub depth: usize,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl CoefficientSamples {
    pub fn from_lagrangian(lag: &GradedLagrangian, nodes: &[f64]) -> Self {
        let values = (0..=lag.depth)
            .map(|s| (1..=lag.n).map(|i| nodes.iter().map(|&t| lag.coefficient(s, i, t)).collect()).collect())
            .collect();
        CoefficientSamples { depth: lag.depth, values }
    }

    /// φ^s_i at a node; zero for sites or grades outside the table.
    pub fn get(&self, s: usize, i: isize, node: usize) -> f64 {
        if s > self.depth || i < 1 {
            return 0.0;
        }
        self.values[s].get(i as usize - 1).map_or(0.0, |v| v[node])
    }

    pub fn nodes(&self) -> usize {
        self.values.first().and_then(|v| v.first()).map_or(0, |v| v.len())
    }
}

/// Factor of the initial element K₀ = Π exp(c·Z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialFactor {
    pub generator: Generator,
    pub site: usize,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "X+")]
    Raise,
    #[serde(rename = "X-")]
    Lower,
    #[serde(rename = "h")]
    Cartan,
}

pub fn initial_element(reps: &RepSet, factors: &[InitialFactor]) -> Result<Vec<Mat>> {
    (1..=reps.n)
        .map(|j| {
            let r = &reps.reps[j - 1];
            let mut k = Mat::identity(r.dim, r.dim);
            for f in factors {
                if f.site == 0 || f.site > reps.n {
                    return Err(Error::Argument(format!("initial factor site {} outside 1..={}", f.site, reps.n)));
                }
                let z = match f.generator {
                    Generator::Raise => &r.e[f.site - 1],
                    Generator::Lower => &r.f[f.site - 1],
                    Generator::Cartan => &r.h[f.site - 1],
                };
                k = k * numerics::matrix_exp(&(z * f.coef))?;
            }
            Ok(k)
        })
        .collect()
}

/// Kernel element sampled on a tensor grid: the `a` axis carries the minus
/// flow (x), the `b` axis the plus flow (y, or a time t̄ at fixed y).
#[derive(Debug, Clone)]
pub struct KernelField {
    pub n: usize,
    pub reps: RepSet,
    pub a_nodes: Vec<f64>,
    pub b_nodes: Vec<f64>,
    /// M₋(x)⁻¹ per representation, `[j-1][ix]`.
    pub minus_inv: Vec<Vec<Mat>>,
    /// M₊ per representation, `[j-1][ib]`.
    pub plus: Vec<Vec<Mat>>,
    pub k0: Vec<Mat>,
    /// det K in the defining representation at each node factorizes as
    /// det_plus[ib]·det_k0·det_minus_inv[ix].
    pub det_plus: Vec<f64>,
    pub det_minus_inv: Vec<f64>,
    pub det_k0: f64,
    pub minus_coeffs: CoefficientSamples,
    pub plus_coeffs: CoefficientSamples,
}

impl KernelField {
    /// K = M₊(y)·K₀·M₋(x)⁻¹ at a node, representation j.
    pub fn k(&self, j: usize, ia: usize, ib: usize) -> Mat {
        &self.plus[j - 1][ib] * &self.k0[j - 1] * &self.minus_inv[j - 1][ia]
    }

    pub fn det(&self, ia: usize, ib: usize) -> f64 {
        self.det_plus[ib] * self.det_k0 * self.det_minus_inv[ia]
    }

    fn check_word(&self, word: &[usize]) -> Result<()> {
        if let Some(bad) = word.iter().find(|&&i| i == 0 || i > self.n) {
            return Err(Error::Argument(format!("generator index {bad} outside 1..={}", self.n)));
        }
        Ok(())
    }

    /// ⟨j| X⁺_{l1}X⁺_{l2}… K X⁻_{r1}X⁻_{r2}… |j⟩.
    pub fn matrix_element(&self, j: usize, left: &[usize], right: &[usize], ia: usize, ib: usize) -> Result<f64> {
        if j == 0 || j > self.n {
            return Err(Error::Argument(format!("representation index {j} outside 1..={}", self.n)));
        }
        self.check_word(left)?;
        self.check_word(right)?;
        let row = self.left_row(j, left, ib);
        let col = self.right_col(j, right, ia);
        Ok(row.dot(&col))
    }

    /// ⟨j|X⁺…·M₊(b)·K₀ as a row (returned as a column vector).
    pub fn left_row(&self, j: usize, word: &[usize], ib: usize) -> DVector<f64> {
        let r = &self.reps.reps[j - 1];
        let mut v = DVector::zeros(r.dim);
        v[r.hw_index] = 1.0;
        // row vector times matrices = transpose applied on the left
        for &i in word {
            v = r.e[i - 1].transpose() * v;
        }
        (&self.plus[j - 1][ib] * &self.k0[j - 1]).transpose() * v
    }

    /// M₋(a)⁻¹·X⁻…|j⟩.
    pub fn right_col(&self, j: usize, word: &[usize], ia: usize) -> DVector<f64> {
        let r = &self.reps.reps[j - 1];
        let mut v = DVector::zeros(r.dim);
        v[r.hw_index] = 1.0;
        for &i in word.iter().rev() {
            v = &r.f[i - 1] * v;
        }
        &self.minus_inv[j - 1][ia] * v
    }
}

/// Build a kernel from the two S-matrix flows with the orientation
/// K = M₊(y)K₀M₋(x)⁻¹, dM₋⁻¹/dx = M₋⁻¹L₋, dM₊/dy = L₊M₊.
pub fn kernel(
    minus: &GradedLagrangian,
    plus: &GradedLagrangian,
    x_axis: &Axis,
    y_axis: &Axis,
    k0: Option<&[InitialFactor]>,
    substeps: usize,
) -> Result<KernelField> {
    if minus.n != plus.n {
        return Err(Error::Argument("plus and minus Lagrangians belong to different algebras".into()));
    }
    if minus.side != FlowSide::Minus || plus.side != FlowSide::Plus {
        return Err(Error::Argument("kernel expects a minus and a plus Lagrangian".into()));
    }
    let reps = RepSet::new(minus.n)?;
    // M₋ solves dM₋/dx = −L₋M₋, so its inverse solves d/dx = +M₋⁻¹L₋
    let mp = solve_smatrix_scaled(minus, &reps, x_axis, substeps, -1.0)?;
    let pp = solve_smatrix(plus, &reps, y_axis, substeps)?;
    let k0 = initial_element(&reps, k0.unwrap_or(&[]))?;
    from_paths(reps, &mp, &pp, k0, CoefficientSamples::from_lagrangian(minus, &x_axis.nodes), CoefficientSamples::from_lagrangian(plus, &y_axis.nodes))
}

/// Assemble a kernel from precomputed minus (inverse) and plus paths.
pub fn from_paths(
    reps: RepSet,
    minus: &FlowPath,
    plus: &FlowPath,
    k0: Vec<Mat>,
    minus_coeffs: CoefficientSamples,
    plus_coeffs: CoefficientSamples,
) -> Result<KernelField> {
    if minus.m.len() != reps.n || plus.m.len() != reps.n || k0.len() != reps.n {
        return Err(Error::Argument("representation sets of the paths do not match".into()));
    }
    let det_plus = plus.m[0].iter().map(|m| m.determinant()).collect();
    let det_minus_inv = minus.inverse[0].iter().map(|m| m.determinant()).collect();
    let det_k0 = k0[0].determinant();
    Ok(KernelField {
        n: reps.n,
        a_nodes: minus.nodes.clone(),
        b_nodes: plus.nodes.clone(),
        minus_inv: minus.inverse.clone(),
        plus: plus.m.clone(),
        k0,
        det_plus,
        det_minus_inv,
        det_k0,
        minus_coeffs,
        plus_coeffs,
        reps,
    })
}

/// Result of integrating a time flow on a (y, t̄) grid.
#[derive(Debug, Clone)]
pub struct TimeFlow {
    pub y_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    /// `[j-1][iy][it]`
    pub m: Vec<Vec<Vec<Mat>>>,
    /// Mismatch between ∂M/∂y (differenced) and L_y(y, t̄)·M on interior
    /// y nodes: measures path independence of the two flows.
    pub consistency: ResidualReport,
}

/// Extend a base path M(y, t̄₀) to a (y, t̄) grid by integrating
/// dM/dt̄ = L_t(y, t̄)·M from t̄₀ at each y. Lagrangians are given in the
/// defining representation and lifted to every fundamental module.
#[allow(clippy::too_many_arguments)]
pub fn solve_timeflow(
    reps: &RepSet,
    space_l: &dyn Fn(f64, f64) -> Mat,
    time_l: &dyn Fn(f64, f64) -> Mat,
    base: &[Vec<Mat>],
    y_nodes: &[f64],
    t_axis: &Axis,
    substeps: usize,
    tol: f64,
) -> Result<TimeFlow> {
    if base.len() != reps.n || base.iter().any(|p| p.len() != y_nodes.len()) {
        return Err(Error::Argument("base path does not match representations and y nodes".into()));
    }
    let mut m = Vec::with_capacity(reps.n);
    for j in 1..=reps.n {
        let mut per_y = Vec::with_capacity(y_nodes.len());
        for (iy, &y) in y_nodes.iter().enumerate() {
            let l = |t: f64| reps.lift_algebra(j, &time_l(y, t));
            per_y.push(sweep_both_ways(&l, Side::Left, &base[j - 1][iy], t_axis, substeps));
        }
        m.push(per_y);
    }
    let mut acc = Accumulator::default();
    if y_nodes.len() >= 5 {
        let hy = y_nodes[1] - y_nodes[0];
        for j in 1..=reps.n {
            for iy in 2..y_nodes.len() - 2 {
                for (it, &t) in t_axis.nodes.iter().enumerate() {
                    let mm = |k: usize| &m[j - 1][k][it];
                    let dy = (mm(iy - 2) - mm(iy - 1) * 8.0 + mm(iy + 1) * 8.0 - mm(iy + 2)) / (12.0 * hy);
                    let r = dy - reps.lift_algebra(j, &space_l(y_nodes[iy], t)) * mm(iy);
                    acc.push(r.amax(), [iy, it]);
                }
            }
        }
    }
    Ok(TimeFlow {
        y_nodes: y_nodes.to_vec(),
        t_nodes: t_axis.nodes.clone(),
        m,
        consistency: acc.report("timeflow_consistency", tol),
    })
}
