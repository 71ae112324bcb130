//! Integrable substitutions as grid-to-grid maps, and the Davey–Stewartson
//! residual with its invariance under the Darboux–Toda map.

use std::collections::BTreeMap;

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{PFields, TauField};
use crate::numerics::{self, Accumulator, Field, Grid2D, ResidualReport, RING};

/// Named fields on one grid. Nodes closer than `valid_ring` to the boundary
/// carry no information (NaN after differencing).
#[derive(Debug, Clone, PartialEq)]
pub struct MappingState {
    pub grid: Grid2D,
    pub fields: BTreeMap<String, Field>,
    pub valid_ring: usize,
}

impl MappingState {
    pub fn new(grid: Grid2D) -> Self {
        MappingState { grid, fields: BTreeMap::new(), valid_ring: 0 }
    }

    pub fn with(mut self, name: &str, f: Field) -> Result<Self> {
        if f.dim() != (self.grid.nx, self.grid.ny) {
            return Err(Error::Argument(format!(
                "field {name} has shape {:?}, grid is {}x{}",
                f.dim(),
                self.grid.nx,
                self.grid.ny
            )));
        }
        self.fields.insert(name.to_string(), f);
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&Field> {
        self.fields.get(name).ok_or_else(|| Error::Argument(format!("mapping state has no field {name:?}")))
    }

    fn inside(&self, ix: usize, iy: usize) -> bool {
        let r = self.valid_ring;
        ix >= r && iy >= r && ix + r < self.grid.nx && iy + r < self.grid.ny
    }

    /// Nodes of the valid region where `f` vanishes or has the opposite sign
    /// to its value at the first valid node.
    fn sign_breaks(&self, f: &Field) -> Vec<(usize, usize)> {
        let mut reference = 0.0;
        let mut out = Vec::new();
        for ((ix, iy), &v) in f.indexed_iter() {
            if !self.inside(ix, iy) || v.is_nan() {
                continue;
            }
            if reference == 0.0 {
                reference = v.signum();
            }
            if v == 0.0 || v.signum() != reference {
                out.push((ix, iy));
            }
        }
        out
    }

    /// Max-abs difference to another state over the common valid region.
    pub fn max_difference(&self, other: &MappingState, names: &[&str]) -> Result<f64> {
        let ring = self.valid_ring.max(other.valid_ring);
        let mut worst = 0.0f64;
        for name in names {
            let (a, b) = (self.get(name)?, other.get(name)?);
            for ((ix, iy), &v) in a.indexed_iter() {
                if ix < ring || iy < ring || ix + ring >= self.grid.nx || iy + ring >= self.grid.ny {
                    continue;
                }
                let d = (v - b[[ix, iy]]).abs();
                worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Utoda11,
    Dt,
    Utoda12,
}

impl std::str::FromStr for MapKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utoda11" => Ok(MapKind::Utoda11),
            "dt" => Ok(MapKind::Dt),
            "utoda12" => Ok(MapKind::Utoda12),
            other => Err(Error::Argument(format!("unknown map kind {other:?}"))),
        }
    }
}

impl MapKind {
    /// The transformed functions: 2^{m₁+m₂−1} of them.
    pub fn fields(self) -> &'static [&'static str] {
        match self {
            MapKind::Utoda11 => &["phi1", "phi2"],
            MapKind::Dt => &["u", "v"],
            MapKind::Utoda12 => &["phi1", "phi2", "phi3", "phi4"],
        }
    }
}

/// Sign in front of (ln v)_xy in the Darboux–Toda map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtSign {
    /// ṽ = v(uv + (ln v)_xy): sends site i to site i+1 of the chain.
    Derived,
    /// ṽ = v(uv − (ln v)_xy).
    Flipped,
}

fn ln_abs(f: &Field) -> Field {
    f.mapv(|v| v.abs().ln())
}

fn shrink(state: &MappingState, fields: Vec<(&str, Field)>) -> Result<MappingState> {
    let mut out = MappingState::new(state.grid);
    out.valid_ring = state.valid_ring + RING;
    for (name, f) in fields {
        out = out.with(name, f)?;
    }
    Ok(out)
}

/// Map inputs read off a lattice at `site`: θ pairs, the (u, v) pair, or
/// θ and p pairs for the (1,2) map (`p` required).
pub fn lattice_state(tau: &TauField, p: Option<&PFields>, kind: MapKind, site: isize) -> Result<MappingState> {
    let s = MappingState::new(tau.grid);
    match kind {
        MapKind::Utoda11 => s.with("phi1", tau.theta(site).clone())?.with("phi2", tau.theta(site - 1).clone()),
        MapKind::Dt => s.with("u", tau.tau(site - 1) / tau.tau(site))?.with("v", tau.tau(site + 1) / tau.tau(site)),
        MapKind::Utoda12 => {
            let p = p.ok_or_else(|| Error::Internal("p fields missing".into()))?;
            s.with("phi1", tau.theta(site).clone())?
                .with("phi2", tau.theta(site - 1).clone())?
                .with("phi3", p.p(1, site).clone())?
                .with("phi4", p.p(1, site - 1).clone())
        }
    }
}

/// φ̃₁ = ∂²ln φ₁/∂x∂y + 2φ₁ − φ₂, φ̃₂ = φ₁.
pub fn utoda11_map(state: &MappingState) -> Result<MappingState> {
    let (p1, p2) = (state.get("phi1")?, state.get("phi2")?);
    let bad = state.sign_breaks(p1);
    if !bad.is_empty() {
        return Err(Error::singular("phi1 changes sign (logarithm branch)", bad));
    }
    let mixed = numerics::mixed_second_derivative(&ln_abs(p1), &state.grid)?;
    let t1 = mixed + p1 * 2.0 - p2;
    shrink(state, vec![("phi1", t1), ("phi2", p1.clone())])
}

/// ũ = 1/v, ṽ = v(uv ± (ln v)_xy).
pub fn darboux_toda_map(state: &MappingState, sign: DtSign) -> Result<MappingState> {
    let (u, v) = (state.get("u")?, state.get("v")?);
    let bad = state.sign_breaks(v);
    if !bad.is_empty() {
        return Err(Error::singular("v vanishes or changes sign", bad));
    }
    let s = match sign {
        DtSign::Derived => 1.0,
        DtSign::Flipped => -1.0,
    };
    let lv = numerics::mixed_second_derivative(&ln_abs(v), &state.grid)?;
    let vt = Zip::from(u).and(v).and(&lv).map_collect(|&u, &v, &l| v * (u * v + s * l));
    shrink(state, vec![("u", v.mapv(|x| 1.0 / x)), ("v", vt)])
}

/// φ̃₄ = φ₃, φ̃₂ = φ₁, φ̃₁ = φ₂ + ∂φ₃/∂y, φ̃₃ = (∂²ln φ₁/∂x∂y − φ₂φ₄ + 2φ₁φ₃)/φ̃₁.
pub fn utoda12_map(state: &MappingState) -> Result<MappingState> {
    let (p1, p2, p3, p4) = (state.get("phi1")?, state.get("phi2")?, state.get("phi3")?, state.get("phi4")?);
    let bad = state.sign_breaks(p1);
    if !bad.is_empty() {
        return Err(Error::singular("phi1 changes sign (logarithm branch)", bad));
    }
    let g = &state.grid;
    let t1 = p2 + &numerics::d_dy(p3, g)?;
    let mut probe = state.clone();
    probe.valid_ring += RING;
    let bad = probe.sign_breaks(&t1);
    if !bad.is_empty() {
        return Err(Error::singular("new phi1 vanishes", bad));
    }
    let num = numerics::mixed_second_derivative(&ln_abs(p1), g)? - p2 * p4 + p1 * p3 * 2.0;
    let t3 = num / &t1;
    shrink(state, vec![("phi1", t1), ("phi2", p1.clone()), ("phi3", t3), ("phi4", p3.clone())])
}

pub fn apply(state: &MappingState, kind: MapKind, sign: DtSign) -> Result<MappingState> {
    match kind {
        MapKind::Utoda11 => utoda11_map(state),
        MapKind::Dt => darboux_toda_map(state, sign),
        MapKind::Utoda12 => utoda12_map(state),
    }
}

/// `times` successive applications of one map.
pub fn iterate(state: &MappingState, kind: MapKind, sign: DtSign, times: usize) -> Result<MappingState> {
    let mut s = state.clone();
    for _ in 0..times {
        s = apply(&s, kind, sign)?;
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Davey–Stewartson

/// A (u, v) pair sampled on (x, y) slices at uniformly spaced times.
#[derive(Debug, Clone)]
pub struct DsFields {
    pub grid: Grid2D,
    pub ts: Vec<f64>,
    pub u: Vec<Field>,
    pub v: Vec<Field>,
    /// Nodes closer than this to the (x, y) boundary are not valid.
    pub valid_ring: usize,
    /// x index of the column where the nonlocal term is anchored.
    pub baseline: usize,
    /// Φ = ∫dx (uv)_y + C at the baseline column, `[it][iy]`, when known
    /// (for example (ln⟨i⟩)_yy from tau data).
    pub phi_baseline: Option<Vec<Vec<f64>>>,
}

/// Sign convention of the evolution pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DsVariant {
    /// −u̇ − u_yy − 2uΦ = 0, v̇ − v_yy − 2vΦ = 0.
    Derived,
    /// −u̇ + u_yy + 2uΦ = 0, v̇ + v_yy + 2vΦ = 0.
    Flipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsReport {
    pub u_eq: ResidualReport,
    pub v_eq: ResidualReport,
    /// x-differentiated form, free of the integration constant.
    pub local: ResidualReport,
    pub all: ResidualReport,
}

fn time_derivative(slices: &[Field], it: usize, ht: f64) -> Field {
    (&slices[it - 2] - &slices[it - 1] * 8.0 + &slices[it + 1] * 8.0 - &slices[it + 2]) / (12.0 * ht)
}

fn uniform_step(ts: &[f64]) -> Result<f64> {
    if ts.len() < 5 {
        return Err(Error::Argument("DS residual needs at least 5 time slices".into()));
    }
    let h = ts[1] - ts[0];
    if !(h > 0.0) || ts.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::Argument("time slices must be uniformly spaced and increasing".into()));
    }
    Ok(h)
}

/// Antiderivative along x over the valid columns only, zero at `baseline`.
fn integrate_x(f: &Field, hx: f64, ring: usize, baseline: usize) -> Field {
    let (nx, ny) = f.dim();
    let mut out = Field::from_elem((nx, ny), f64::NAN);
    for iy in 0..ny {
        let col: Vec<f64> = (ring..nx - ring).map(|ix| f[[ix, iy]]).collect();
        for (k, v) in numerics::cumulative_integral(&col, hx, baseline - ring).into_iter().enumerate() {
            out[[ring + k, iy]] = v;
        }
    }
    out
}

/// Residuals of the DS pair. Φ = ∫dx (uv)_y + C(y, t) with C taken from
/// `phi_baseline` when present, otherwise matched from the u-equation at the
/// baseline column.
pub fn ds_residual(d: &DsFields, variant: DsVariant, tol: f64) -> Result<DsReport> {
    let ht = uniform_step(&d.ts)?;
    let nt = d.ts.len();
    if d.u.len() != nt || d.v.len() != nt {
        return Err(Error::Argument("u, v and time slices differ in length".into()));
    }
    let g = &d.grid;
    let field_ring = d.valid_ring + RING;
    if d.baseline < field_ring || d.baseline + field_ring >= g.nx {
        return Err(Error::Argument(format!("baseline column {} outside the valid region", d.baseline)));
    }
    let (su, sv) = match variant {
        DsVariant::Derived => ((-1.0, -1.0, -2.0), (1.0, -1.0, -2.0)),
        DsVariant::Flipped => ((-1.0, 1.0, 2.0), (1.0, 1.0, 2.0)),
    };
    let mut acc_u = Accumulator::default();
    let mut acc_v = Accumulator::default();
    let mut acc_l = Accumulator::default();
    for it in 2..nt - 2 {
        let (u, v) = (&d.u[it], &d.v[it]);
        let ut = time_derivative(&d.u, it, ht);
        let vt = time_derivative(&d.v, it, ht);
        let uyy = numerics::d2_dy2(u, g)?;
        let vyy = numerics::d2_dy2(v, g)?;
        let uv_y = numerics::d_dy(&(u * v), g)?;
        let mut phi = integrate_x(&uv_y, g.hx, field_ring, d.baseline);
        for iy in field_ring..g.ny - field_ring {
            let b = d.baseline;
            let c = match &d.phi_baseline {
                Some(p) => p[it][iy],
                None => (su.0 * ut[[b, iy]] + su.1 * uyy[[b, iy]]) / (-su.2 * u[[b, iy]]),
            };
            for ix in 0..g.nx {
                phi[[ix, iy]] += c;
            }
        }
        let ru = &ut * su.0 + &uyy * su.1 + &(u * &phi) * su.2;
        let rv = &vt * sv.0 + &vyy * sv.1 + &(v * &phi) * sv.2;
        numerics::accumulate_field(&mut acc_u, &ru, field_ring, None);
        numerics::accumulate_field(&mut acc_v, &rv, field_ring, None);
        // ∂_x of the Φ each equation implies must equal (uv)_y
        let phi_u = (&ut * su.0 + &uyy * su.1) / &(u * -su.2);
        let phi_v = (&vt * sv.0 + &vyy * sv.1) / &(v * -sv.2);
        let lu = numerics::d_dx(&phi_u, g)? - &uv_y;
        let lv = numerics::d_dx(&phi_v, g)? - &uv_y;
        numerics::accumulate_field(&mut acc_l, &lu, field_ring + RING, None);
        numerics::accumulate_field(&mut acc_l, &lv, field_ring + RING, None);
    }
    let u_eq = acc_u.report("ds_u", tol);
    let v_eq = acc_v.report("ds_v", tol);
    let local = acc_l.report("ds_local", tol);
    let all = ResidualReport::merge("ds", &[u_eq.clone(), v_eq.clone(), local.clone()], tol);
    Ok(DsReport { u_eq, v_eq, local, all })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsInvariance {
    pub pair: DsReport,
    pub mapped: DsReport,
}

/// DS residual of the pair, and of its image under the Darboux–Toda map.
pub fn ds_invariance_check(d: &DsFields, tol_pair: f64, tol_mapped: f64) -> Result<DsInvariance> {
    let pair = ds_residual(d, DsVariant::Derived, tol_pair)?;
    let mut mu = Vec::with_capacity(d.ts.len());
    let mut mv = Vec::with_capacity(d.ts.len());
    for (u, v) in d.u.iter().zip(&d.v) {
        let mut s = MappingState::new(d.grid).with("u", u.clone())?.with("v", v.clone())?;
        s.valid_ring = d.valid_ring;
        let m = darboux_toda_map(&s, DtSign::Derived)?;
        mu.push(m.get("u")?.clone());
        mv.push(m.get("v")?.clone());
    }
    // Φ̃ = Φ + (ln v)_yy at the baseline when Φ is known
    let phi_baseline = match &d.phi_baseline {
        Some(p) => {
            let mut out = p.clone();
            for (it, v) in d.v.iter().enumerate() {
                let lvyy = numerics::d2_dy2(&ln_abs(v), &d.grid)?;
                for (iy, o) in out[it].iter_mut().enumerate() {
                    *o += lvyy[[d.baseline, iy]];
                }
            }
            Some(out)
        }
        None => None,
    };
    let mapped = DsFields {
        grid: d.grid,
        ts: d.ts.clone(),
        u: mu,
        v: mv,
        valid_ring: d.valid_ring + RING,
        baseline: d.baseline,
        phi_baseline,
    };
    let mapped = ds_residual(&mapped, DsVariant::Derived, tol_mapped)?;
    Ok(DsInvariance { pair, mapped })
}
