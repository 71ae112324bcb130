//! Tau functions and derived lattice fields of a kernel, and grid residuals
//! of the Toda, UToda(m₁,m₂), UToda(k,1) and GToda(2,2;s,s̄) systems.

use ndarray::{Array2, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{CartanMatrix, Series};
use crate::error::{Error, Result};
use crate::flows::{CoefficientSamples, KernelField};
use crate::numerics::{self, Accumulator, Field, Grid2D, ResidualReport, RING};

/// Which of the four α-type functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaKind {
    /// α^{+m}_i = ⟨i|K X⁻_{i+m−1}…X⁻_i|i⟩/⟨i⟩
    Plus,
    /// α^{−m}_i = ⟨i|K X⁻_{i−m+1}…X⁻_i|i⟩/⟨i⟩
    Minus,
    /// ᾱ^{+m}_i = ⟨i|X⁺_i…X⁺_{i+m−1} K|i⟩/⟨i⟩
    BarPlus,
    /// ᾱ^{−m}_i = ⟨i|X⁺_i…X⁺_{i−m+1} K|i⟩/⟨i⟩
    BarMinus,
}

const KINDS: [AlphaKind; 4] = [AlphaKind::Plus, AlphaKind::Minus, AlphaKind::BarPlus, AlphaKind::BarMinus];

fn kind_index(k: AlphaKind) -> usize {
    match k {
        AlphaKind::Plus => 0,
        AlphaKind::Minus => 1,
        AlphaKind::BarPlus => 2,
        AlphaKind::BarMinus => 3,
    }
}

/// Lattice functions on the kernel's grid. Site arguments are signed;
/// sites outside the stored range read as the fixed-end values.
#[derive(Debug, Clone)]
pub struct TauField {
    pub n: usize,
    pub depth: usize,
    pub grid: Grid2D,
    /// ⟨i⟩ for i = 0..=n+1.
    pub tau: Vec<Field>,
    /// θ_i for i = 0..=n+1 (θ₀ = θ_{n+1} = 0).
    pub theta: Vec<Field>,
    /// `[kind][m][i]`, m = 0..=depth, i = 0..=n+1.
    alpha: Vec<Vec<Vec<Field>>>,
    /// False within reach of a stencil of a node where some ⟨i⟩ vanishes or
    /// changes sign.
    pub mask: Array2<bool>,
    pub singular_nodes: Vec<(usize, usize)>,
    pub minus_coeffs: CoefficientSamples,
    pub plus_coeffs: CoefficientSamples,
    zero: Field,
    one: Field,
}

impl TauField {
    pub fn tau(&self, i: isize) -> &Field {
        if i < 0 || i > self.n as isize + 1 {
            &self.zero
        } else {
            &self.tau[i as usize]
        }
    }

    pub fn theta(&self, i: isize) -> &Field {
        if i < 1 || i > self.n as isize {
            &self.zero
        } else {
            &self.theta[i as usize]
        }
    }

    pub fn alpha(&self, kind: AlphaKind, m: usize, i: isize) -> &Field {
        if m == 0 {
            return &self.one;
        }
        if i < 1 || i > self.n as isize {
            return &self.zero;
        }
        assert!(m <= self.depth, "alpha depth {m} not computed (depth {})", self.depth);
        &self.alpha[kind_index(kind)][m][i as usize]
    }

    /// Θ^{+p}_i = Π_{r=0..p} θ_{i+r}, Θ^{−p}_i = Π_{r=0..p} θ_{i−r}.
    pub fn big_theta(&self, plus: bool, p: usize, i: isize) -> Field {
        let mut out = self.theta(i).clone();
        for r in 1..=p as isize {
            out = out * self.theta(if plus { i + r } else { i - r });
        }
        out
    }

    pub fn zeros(&self) -> Field {
        self.zero.clone()
    }
}

fn grid_from_nodes(a: &[f64], b: &[f64]) -> Result<Grid2D> {
    let step = |v: &[f64]| -> Result<f64> {
        if v.len() < 5 {
            return Err(Error::Argument("kernel axes need at least 5 nodes".into()));
        }
        let h = v[1] - v[0];
        if v.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300)) {
            return Err(Error::Argument("kernel axes must be uniform".into()));
        }
        Ok(h)
    };
    Grid2D::new(a[0], b[0], step(a)?, step(b)?, a.len(), b.len())
}

fn word(kind: AlphaKind, i: usize, m: usize, n: usize) -> Option<Vec<usize>> {
    let i = i as isize;
    let m = m as isize;
    let seq: Vec<isize> = match kind {
        AlphaKind::Plus => (0..m).rev().map(|r| i + r).collect(),
        AlphaKind::Minus => (0..m).rev().map(|r| i - r).collect(),
        AlphaKind::BarPlus => (0..m).map(|r| i + r).collect(),
        AlphaKind::BarMinus => (0..m).map(|r| i - r).collect(),
    };
    if seq.iter().any(|&s| s < 1 || s > n as isize) {
        None
    } else {
        Some(seq.into_iter().map(|s| s as usize).collect())
    }
}

/// Tau functions, θ and α-type fields up to `depth` from a kernel.
pub fn compute_tau(k: &KernelField, depth: usize) -> Result<TauField> {
    let n = k.n;
    let grid = grid_from_nodes(&k.a_nodes, &k.b_nodes)?;
    let (na, nb) = (grid.nx, grid.ny);
    let zero = Field::zeros((na, nb));
    let one = Field::ones((na, nb));
    let mut tau = vec![one.clone()];
    let mut alpha = vec![vec![vec![zero.clone(); n + 2]; depth + 1]; 4];
    for j in 1..=n {
        let rows0: Vec<_> = (0..nb).map(|ib| k.left_row(j, &[], ib)).collect();
        let cols0: Vec<_> = (0..na).map(|ia| k.right_col(j, &[], ia)).collect();
        let t = Field::from_shape_fn((na, nb), |(ia, ib)| rows0[ib].dot(&cols0[ia]));
        for kind in KINDS {
            for m in 1..=depth {
                let Some(w) = word(kind, j, m, n) else { continue };
                let f = match kind {
                    AlphaKind::Plus | AlphaKind::Minus => {
                        let cols: Vec<_> = (0..na).into_par_iter().map(|ia| k.right_col(j, &w, ia)).collect();
                        Field::from_shape_fn((na, nb), |(ia, ib)| rows0[ib].dot(&cols[ia]) / t[[ia, ib]])
                    }
                    AlphaKind::BarPlus | AlphaKind::BarMinus => {
                        let rows: Vec<_> = (0..nb).into_par_iter().map(|ib| k.left_row(j, &w, ib)).collect();
                        Field::from_shape_fn((na, nb), |(ia, ib)| rows[ib].dot(&cols0[ia]) / t[[ia, ib]])
                    }
                };
                alpha[kind_index(kind)][m][j] = f;
            }
        }
        tau.push(t);
    }
    tau.push(Field::from_shape_fn((na, nb), |(ia, ib)| k.det(ia, ib)));

    let mut theta = vec![zero.clone()];
    for i in 1..=n {
        theta.push(Zip::from(&tau[i - 1]).and(&tau[i]).and(&tau[i + 1]).map_collect(|a, b, c| a * c / (b * b)));
    }
    theta.push(zero.clone());

    // singular locus: vanishing or sign change relative to the grid centre
    let mut flagged = Array2::from_elem((na, nb), false);
    for t in tau.iter().skip(1) {
        let scale = t.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let reference = t[[na / 2, nb / 2]].signum();
        Zip::from(&mut flagged).and(t).for_each(|f, v| {
            if v.abs() <= 1e-12 * scale || v.signum() != reference {
                *f = true;
            }
        });
    }
    let mut singular_nodes = Vec::new();
    let mut mask = Array2::from_elem((na, nb), true);
    for ia in 0..na {
        for ib in 0..nb {
            if flagged[[ia, ib]] {
                singular_nodes.push((ia, ib));
                for da in ia.saturating_sub(RING)..(ia + RING + 1).min(na) {
                    for db in ib.saturating_sub(RING)..(ib + RING + 1).min(nb) {
                        mask[[da, db]] = false;
                    }
                }
            }
        }
    }
    Ok(TauField {
        n,
        depth,
        grid,
        tau,
        theta,
        alpha,
        mask,
        singular_nodes,
        minus_coeffs: k.minus_coeffs.clone(),
        plus_coeffs: k.plus_coeffs.clone(),
        zero,
        one,
    })
}

impl TauField {
    /// Error naming the singular nodes, if any.
    pub fn check_regular(&self) -> Result<()> {
        if self.singular_nodes.is_empty() {
            Ok(())
        } else {
            Err(Error::singular("vanishing tau function", self.singular_nodes.clone()))
        }
    }
}

/// p^{(r}_i and p̄^{(r}_i; `[r][i]` with r = 0..=m+1, i = 0..=n+1.
#[derive(Debug, Clone)]
pub struct PFields {
    pub m1: usize,
    pub m2: usize,
    p: Vec<Vec<Field>>,
    pbar: Vec<Vec<Field>>,
    n: usize,
    zero: Field,
}

impl PFields {
    pub fn p(&self, r: usize, i: isize) -> &Field {
        if r == 0 || r > self.m1 || i < 1 || i > self.n as isize {
            &self.zero
        } else {
            &self.p[r][i as usize]
        }
    }

    pub fn pbar(&self, r: usize, i: isize) -> &Field {
        if r == 0 || r > self.m2 || i < 1 || i > self.n as isize {
            &self.zero
        } else {
            &self.pbar[r][i as usize]
        }
    }
}

fn highest_nonzero_grade(c: &CoefficientSamples) -> usize {
    (1..=c.depth)
        .rev()
        .find(|&s| c.values[s].iter().any(|v| v.iter().any(|x| *x != 0.0)))
        .unwrap_or(0)
}

/// One side of the p computation: `along_a` selects whether coefficients
/// vary along the a axis (minus side) or the b axis (plus side).
fn p_side(tau: &TauField, coeffs: &CoefficientSamples, m: usize, bar: bool) -> Vec<Vec<Field>> {
    let n = tau.n;
    let (kp, km) = if bar { (AlphaKind::BarPlus, AlphaKind::BarMinus) } else { (AlphaKind::Plus, AlphaKind::Minus) };
    let mut out = vec![vec![tau.zeros(); n + 2]; m + 2];
    for r in 1..=m {
        for i in 1..=n as isize {
            let mut acc = tau.zeros();
            for nn in 1..=m {
                for s in 0..nn {
                    let Some(plus_depth) = (nn - s).checked_sub(r) else { continue };
                    let site = i - s as isize;
                    let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                    let am = tau.alpha(km, s, i - 1);
                    let ap = tau.alpha(kp, plus_depth, i + r as isize);
                    Zip::indexed(&mut acc).and(am).and(ap).for_each(|(ia, ib), a, x, y| {
                        let node = if bar { ib } else { ia };
                        let phi = coeffs.get(nn, site, node);
                        if phi != 0.0 {
                            *a += sign * phi * x * y;
                        }
                    });
                }
            }
            out[r][i as usize] = acc;
        }
    }
    out
}

/// p and p̄ fields for depths (m₁, m₂) from the kernel's coefficient tables.
/// The top member reduces to the top-grade coefficient, p^{(m₁}_i = φ^{m₁}_i,
/// so it vanishes at sites past n+1−m₁.
pub fn compute_p(tau: &TauField, m1: usize, m2: usize) -> Result<PFields> {
    let need = m1.max(m2).saturating_sub(1);
    if tau.depth < need {
        return Err(Error::Contract(format!("alpha fields computed to depth {}, need {need}", tau.depth)));
    }
    if m1 == 0 || m2 == 0 {
        return Err(Error::Argument("flow depths must be at least 1".into()));
    }
    for (c, m, side) in [(&tau.minus_coeffs, m1, "minus"), (&tau.plus_coeffs, m2, "plus")] {
        let top = highest_nonzero_grade(c);
        if top > m {
            return Err(Error::Contract(format!("{side} coefficients have grade {top} > depth {m}")));
        }
    }
    Ok(PFields {
        m1,
        m2,
        p: p_side(tau, &tau.minus_coeffs, m1, false),
        pbar: p_side(tau, &tau.plus_coeffs, m2, true),
        n: tau.n,
        zero: tau.zeros(),
    })
}

fn ln_abs(f: &Field) -> Field {
    f.mapv(|v| v.abs().ln())
}

fn residual_over_sites(name: &str, tau: &TauField, fields: &[Field], tol: f64) -> ResidualReport {
    let mut acc = Accumulator::default();
    for f in fields {
        numerics::accumulate_field(&mut acc, f, RING, Some(&tau.mask));
    }
    acc.report(name, tol)
}

fn require_unit_grade1(c: &CoefficientSamples, n: usize, side: &str) -> Result<()> {
    let ok = c.depth >= 1 && (1..=n).all(|i| (0..c.nodes()).all(|t| (c.get(1, i as isize, t) - 1.0).abs() < 1e-12));
    if !ok {
        return Err(Error::Contract(format!(
            "Toda equation requires unit grade-1 coefficients on the {side} side"
        )));
    }
    Ok(())
}

/// ∂²ln⟨i⟩/∂a∂b − θ_i over interior nodes and all sites.
pub fn toda_residual(tau: &TauField, tol: f64) -> Result<ResidualReport> {
    require_unit_grade1(&tau.minus_coeffs, tau.n, "minus")?;
    require_unit_grade1(&tau.plus_coeffs, tau.n, "plus")?;
    for (c, side) in [(&tau.minus_coeffs, "minus"), (&tau.plus_coeffs, "plus")] {
        if highest_nonzero_grade(c) > 1 {
            return Err(Error::Contract(format!("Toda equation requires depth-1 flows ({side} side has higher grades)")));
        }
    }
    let fields: Vec<Field> = (1..=tau.n as isize)
        .map(|i| Ok(numerics::mixed_second_derivative(&ln_abs(tau.tau(i)), &tau.grid)? - tau.theta(i)))
        .collect::<Result<_>>()?;
    Ok(residual_over_sites("toda", tau, &fields, tol))
}

/// Right-hand sides of the three UToda(m₁,m₂) families.
#[derive(Debug, Clone)]
pub struct UTodaRhs {
    /// ∂p̄^{(r}_i/∂a, `[r][i]` for r = 1..m₂−1 (index 0 unused).
    pub x_eq: Vec<Vec<Field>>,
    /// ∂²ln⟨i⟩/∂a∂b, `[i]` (index 0 unused).
    pub mixed: Vec<Field>,
    /// ∂p^{(r}_i/∂b, `[r][i]` for r = 1..m₁−1.
    pub y_eq: Vec<Vec<Field>>,
}

fn derivative_eq_rhs(tau: &TauField, p: &PFields, r: usize, i: isize, m_outer: usize, for_pbar: bool) -> Field {
    // ∂p̄^{(r}_i/∂x = Σ_{q=1}^{m₂−r} (Θ^{+(q−1)}_{i+r} p^{(q}_{i+r} p̄^{(q+r}_i − Θ^{−(q−1)}_{i−1} p^{(q}_{i−q} p̄^{(q+r}_{i−q})
    // and the mirror with p ↔ p̄.
    let inner = |a: usize, b: isize| if for_pbar { p.p(a, b) } else { p.pbar(a, b) };
    let outer = |a: usize, b: isize| if for_pbar { p.pbar(a, b) } else { p.p(a, b) };
    let ri = r as isize;
    let mut acc = tau.zeros();
    for q in 1..=m_outer.saturating_sub(r) {
        let qi = q as isize;
        let up = tau.big_theta(true, q - 1, i + ri) * inner(q, i + ri) * outer(q + r, i);
        let down = tau.big_theta(false, q - 1, i - 1) * inner(q, i - qi) * outer(q + r, i - qi);
        acc = acc + up - down;
    }
    acc
}

pub fn utoda_rhs(tau: &TauField, p: &PFields) -> UTodaRhs {
    let n = tau.n as isize;
    let (m1, m2) = (p.m1, p.m2);
    let x_eq = (0..m2)
        .map(|r| if r == 0 { Vec::new() } else { (0..=n).map(|i| derivative_eq_rhs(tau, p, r, i, m2, true)).collect() })
        .collect();
    let y_eq = (0..m1)
        .map(|r| if r == 0 { Vec::new() } else { (0..=n).map(|i| derivative_eq_rhs(tau, p, r, i, m1, false)).collect() })
        .collect();
    let cap = m1.min(m2) - 1;
    let mixed = (0..=n)
        .map(|i| {
            let mut acc = tau.zeros();
            if i == 0 {
                return acc;
            }
            for pp in 0..=cap {
                for qq in 0..=cap - pp {
                    let r = pp + qq + 1;
                    let site = i - pp as isize;
                    // θ_i⁻¹Θ^{−p}_iΘ^{+q}_i without the division
                    let mut w = tau.big_theta(false, pp, i);
                    for s in 1..=qq as isize {
                        w = w * tau.theta(i + s);
                    }
                    acc = acc + w * p.p(r, site) * p.pbar(r, site);
                }
            }
            acc
        })
        .collect();
    UTodaRhs { x_eq, mixed, y_eq }
}

/// Residual reports of the three UToda families and their maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UTodaReport {
    pub x_eq: ResidualReport,
    pub mixed: ResidualReport,
    pub y_eq: ResidualReport,
    pub all: ResidualReport,
}

pub fn utoda_residual(tau: &TauField, p: &PFields, tol: f64) -> Result<UTodaReport> {
    let rhs = utoda_rhs(tau, p);
    let n = tau.n as isize;
    let g = &tau.grid;
    let mut xs = Vec::new();
    for r in 1..p.m2 {
        for i in 1..=n {
            xs.push(numerics::d_dx(p.pbar(r, i), g)? - &rhs.x_eq[r][i as usize]);
        }
    }
    let mut ys = Vec::new();
    for r in 1..p.m1 {
        for i in 1..=n {
            ys.push(numerics::d_dy(p.p(r, i), g)? - &rhs.y_eq[r][i as usize]);
        }
    }
    let mixed: Vec<Field> = (1..=n)
        .map(|i| Ok(numerics::mixed_second_derivative(&ln_abs(tau.tau(i)), g)? - &rhs.mixed[i as usize]))
        .collect::<Result<_>>()?;
    let x_eq = residual_over_sites("utoda_x", tau, &xs, tol);
    let y_eq = residual_over_sites("utoda_y", tau, &ys, tol);
    let mixed = residual_over_sites("utoda_mixed", tau, &mixed, tol);
    let all = ResidualReport::merge(format!("utoda({},{})", p.m1, p.m2), &[x_eq.clone(), mixed.clone(), y_eq.clone()], tol);
    Ok(UTodaReport { x_eq, mixed, y_eq, all })
}

/// UToda(k,1) in the coordinates (x, t̄_k): the kernel's b axis is the time
/// and its plus coefficients are those of the depth-k time Lagrangian.
pub fn utoda_k1_residual(tau: &TauField, p: &PFields, k: usize, tol: f64) -> Result<ResidualReport> {
    if p.m1 != 1 || p.m2 != k {
        return Err(Error::Contract(format!("UToda({k},1) needs p fields of depths (1,{k})")));
    }
    let r = utoda_residual(tau, p, tol)?;
    Ok(ResidualReport::merge(format!("utoda_k1(k={k})"), &[r.x_eq, r.mixed], tol))
}

/// Residuals of the four α/ᾱ derivative formulas for m = 1..=m_max.
pub fn alpha_derivative_residual(tau: &TauField, p: &PFields, m_max: usize, tol: f64) -> Result<ResidualReport> {
    if m_max > tau.depth {
        return Err(Error::Contract(format!("alpha depth {m_max} requested, {} computed", tau.depth)));
    }
    let n = tau.n as isize;
    let g = &tau.grid;
    let mut parts = Vec::new();
    for m in 1..=m_max {
        for i in 1..=n {
            let mut r_bp = numerics::d_dx(tau.alpha(AlphaKind::BarPlus, m, i), g)?;
            let mut r_bm = numerics::d_dx(tau.alpha(AlphaKind::BarMinus, m, i), g)?;
            let mut r_p = numerics::d_dy(tau.alpha(AlphaKind::Plus, m, i), g)?;
            let mut r_m = numerics::d_dy(tau.alpha(AlphaKind::Minus, m, i), g)?;
            for q in 0..m {
                let qi = q as isize;
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let tp = tau.big_theta(true, q, i);
                let tm = tau.big_theta(false, q, i);
                r_bp = r_bp - &tp * p.p(q + 1, i) * tau.alpha(AlphaKind::BarPlus, m - 1 - q, i + qi + 1);
                r_bm = r_bm - &tm * p.p(q + 1, i - qi) * tau.alpha(AlphaKind::BarMinus, m - 1 - q, i - qi - 1) * sign;
                r_p = r_p - &tp * p.pbar(q + 1, i) * tau.alpha(AlphaKind::Plus, m - 1 - q, i + qi + 1);
                r_m = r_m - &tm * p.pbar(q + 1, i - qi) * tau.alpha(AlphaKind::Minus, m - 1 - q, i - qi - 1) * sign;
            }
            parts.extend([r_bp, r_bm, r_p, r_m]);
        }
    }
    Ok(residual_over_sites("alpha_derivatives", tau, &parts, tol))
}

/// Sign convention of the first two GToda equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GTodaSign {
    /// ∂p¹_i/∂y = −Σ_j K_ij φ^{−2}_{j,i} θ_j p̄¹_j (holds for the kernel).
    Derived,
    /// The same with a plus sign.
    Flipped,
}

/// GToda fields: p¹, p̄¹, Cartan θ and the right-hand sides, `[i]` with
/// index 0 unused.
#[derive(Debug, Clone)]
pub struct GTodaFields {
    pub p1: Vec<Field>,
    pub pbar1: Vec<Field>,
    pub theta: Vec<Field>,
    pub rhs_y: Vec<Field>,
    pub rhs_x: Vec<Field>,
    pub rhs_mixed: Vec<Field>,
}

fn check_pattern(p: &[f64], n: usize, name: &str) -> Result<()> {
    if p.len() != n.saturating_sub(1) {
        return Err(Error::Argument(format!("pattern {name} has length {}, expected {}", p.len(), n - 1)));
    }
    if p.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Argument(format!("pattern {name} must contain only 0 and 1")));
    }
    Ok(())
}

/// φ_{j,i} with φ_{i+1,i} = s_i and φ_{i,i+1} = −s_i (1-based sites).
fn antisym(s: &[f64], j: isize, i: isize) -> f64 {
    let n = s.len() as isize + 1;
    if i < 1 || j < 1 || i > n || j > n {
        return 0.0;
    }
    if j == i + 1 {
        s[(i - 1) as usize]
    } else if i == j + 1 {
        -s[(j - 1) as usize]
    } else {
        0.0
    }
}

pub fn gtoda_fields(cartan: &CartanMatrix, tau: &TauField, s: &[f64], sbar: &[f64], sign: GTodaSign) -> Result<GTodaFields> {
    if cartan.series != Series::A || cartan.rank != tau.n {
        return Err(Error::Argument("GToda needs the A-series Cartan matrix of the kernel's rank".into()));
    }
    if tau.depth < 1 {
        return Err(Error::Contract("GToda needs alpha fields of depth 1".into()));
    }
    let n = tau.n as isize;
    check_pattern(s, tau.n, "s")?;
    check_pattern(sbar, tau.n, "sbar")?;
    let (na, nb) = (tau.grid.nx, tau.grid.ny);
    // θ_i = Π_j ⟨j⟩^{−K_ij}, ends ⟨0⟩ = ⟨n+1⟩ = 1 do not enter
    let mut theta = vec![tau.zeros()];
    for i in 1..=n {
        let mut t = Field::ones((na, nb));
        for j in 1..=n {
            let kij = cartan.k_or_zero(i, j);
            if kij != 0 {
                t = t * tau.tau(j).mapv(|v| v.powi(-kij as i32));
            }
        }
        // the fixed end ⟨n+1⟩ enters through the neighbouring site
        if i == n {
            t = t * tau.tau(n + 1);
        }
        theta.push(t);
    }
    let th = |i: isize| -> Field { if i < 1 || i > n { tau.zeros() } else { theta[i as usize].clone() } };
    let coef = |c: &CoefficientSamples, bar: bool, i: isize| -> Field {
        Field::from_shape_fn((na, nb), |(ia, ib)| c.get(1, i, if bar { ib } else { ia }))
    };
    let mut p1 = vec![tau.zeros()];
    let mut pbar1 = vec![tau.zeros()];
    for i in 1..=n {
        let mut a = coef(&tau.minus_coeffs, false, i);
        let mut b = coef(&tau.plus_coeffs, true, i);
        for j in [i - 1, i + 1] {
            let k = cartan.k_or_zero(i, j) as f64;
            a = a - tau.alpha(AlphaKind::Plus, 1, j) * (k * antisym(s, j, i));
            b = b - tau.alpha(AlphaKind::BarPlus, 1, j) * (k * antisym(sbar, j, i));
        }
        p1.push(a);
        pbar1.push(b);
    }
    let sg = match sign {
        GTodaSign::Derived => -1.0,
        GTodaSign::Flipped => 1.0,
    };
    let get = |v: &Vec<Field>, i: isize| -> Field { if i < 1 || i > n { tau.zeros() } else { v[i as usize].clone() } };
    let mut rhs_y = vec![tau.zeros()];
    let mut rhs_x = vec![tau.zeros()];
    let mut rhs_mixed = vec![tau.zeros()];
    for i in 1..=n {
        let mut ry = tau.zeros();
        let mut rx = tau.zeros();
        let mut corr = tau.zeros();
        for j in [i - 1, i + 1] {
            let kij = cartan.k_or_zero(i, j) as f64;
            let kji = cartan.k_or_zero(j, i) as f64;
            ry = ry + th(j) * get(&pbar1, j) * (sg * kij * antisym(s, j, i));
            rx = rx + th(j) * get(&p1, j) * (sg * kij * antisym(sbar, j, i));
            corr = corr + th(j) * (kji * antisym(s, j, i) * antisym(sbar, j, i));
        }
        let ti = th(i);
        rhs_mixed.push(&ti * &p1[i as usize] * &pbar1[i as usize] - &ti * corr);
        rhs_y.push(ry);
        rhs_x.push(rx);
    }
    Ok(GTodaFields { p1, pbar1, theta, rhs_y, rhs_x, rhs_mixed })
}

/// Residuals of the three GToda(2,2;s,s̄) equations.
pub fn gtoda_residual(
    cartan: &CartanMatrix,
    tau: &TauField,
    s: &[f64],
    sbar: &[f64],
    sign: GTodaSign,
    tol: f64,
) -> Result<UTodaReport> {
    let f = gtoda_fields(cartan, tau, s, sbar, sign)?;
    let g = &tau.grid;
    let n = tau.n;
    let mut ys = Vec::new();
    let mut xs = Vec::new();
    let mut mixed = Vec::new();
    for i in 1..=n {
        ys.push(numerics::d_dy(&f.p1[i], g)? - &f.rhs_y[i]);
        xs.push(numerics::d_dx(&f.pbar1[i], g)? - &f.rhs_x[i]);
        mixed.push(numerics::mixed_second_derivative(&ln_abs(tau.tau(i as isize)), g)? - &f.rhs_mixed[i]);
    }
    let x_eq = residual_over_sites("gtoda_x", tau, &xs, tol);
    let y_eq = residual_over_sites("gtoda_y", tau, &ys, tol);
    let mixed = residual_over_sites("gtoda_mixed", tau, &mixed, tol);
    let all = ResidualReport::merge("gtoda", &[x_eq.clone(), mixed.clone(), y_eq.clone()], tol);
    Ok(UTodaReport { x_eq, mixed, y_eq, all })
}

/// Max-abs difference of two field lists over all nodes (no ring), for
/// formula-level comparisons.
pub fn max_field_difference(a: &[Field], b: &[Field]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| Zip::from(x).and(y).fold(0.0f64, |m, u, v| if u.is_nan() && v.is_nan() { m } else { m.max((u - v).abs()) }))
        .fold(0.0, f64::max)
}
