//! The first and second Jacobi identities for highest-weight matrix
//! elements of an A_n group element, and the recurrence for the Q
//! functions built on top of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{cartan_matrix, CartanMatrix, Series};
use crate::error::{Error, Result};
use crate::flows::{initial_element, InitialFactor, RepSet};
use crate::numerics::{self, Accumulator, Mat, ResidualReport};

/// A group element of SL(n+1) given in every fundamental representation.
#[derive(Debug, Clone)]
pub struct GroupElementSample {
    pub n: usize,
    pub reps: RepSet,
    /// G in representation j at index j-1.
    pub g: Vec<Mat>,
    pub seed: Option<u64>,
}

impl GroupElementSample {
    /// Element given in the defining representation; the others are its
    /// compound matrices.
    pub fn from_defining(reps: RepSet, g: &Mat) -> Result<Self> {
        if g.nrows() != reps.n + 1 || g.ncols() != reps.n + 1 {
            return Err(Error::Argument(format!("group element must be {0}x{0}", reps.n + 1)));
        }
        let lifted = (1..=reps.n).map(|j| reps.lift_group(j, g)).collect();
        Ok(GroupElementSample { n: reps.n, reps, g: lifted, seed: None })
    }

    /// Ordered product of exponentials of Chevalley generators.
    pub fn from_factors(n: usize, factors: &[InitialFactor]) -> Result<Self> {
        let reps = RepSet::new(n)?;
        let g = initial_element(&reps, factors)?;
        Ok(GroupElementSample { n, reps, g, seed: None })
    }

    /// Product of `factors` exponentials exp(c·Z) with Z a random Chevalley
    /// generator and c uniform in [−1, 1].
    pub fn random(reps: &RepSet, seed: u64, stream: u64, factors: usize) -> Result<Self> {
        let n = reps.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let defining = &reps.reps[0];
        let mut g = Mat::identity(n + 1, n + 1);
        for _ in 0..factors {
            let site = rng.random_range(0..n);
            let z = match rng.random_range(0..3) {
                0 => &defining.e[site],
                1 => &defining.f[site],
                _ => &defining.h[site],
            };
            let c: f64 = rng.random_range(-1.0..=1.0);
            g *= numerics::matrix_exp(&(z * c))?;
        }
        let mut s = Self::from_defining(reps.clone(), &g)?;
        s.seed = Some(seed);
        Ok(s)
    }

    /// D₁·G·D₂ with D = exp(Σ c_i h_i).
    pub fn torus_twist(&self, left: &[f64], right: &[f64]) -> Result<Self> {
        let d = |c: &[f64]| -> Result<Mat> {
            let r = &self.reps.reps[0];
            let mut h = Mat::zeros(self.n + 1, self.n + 1);
            for (i, v) in c.iter().enumerate() {
                h += &r.h[i] * *v;
            }
            numerics::matrix_exp(&h)
        };
        let (d1, d2) = (d(left)?, d(right)?);
        let g = (1..=self.n)
            .map(|j| self.reps.lift_group(j, &d1) * &self.g[j - 1] * self.reps.lift_group(j, &d2))
            .collect();
        Ok(GroupElementSample { g, ..self.clone() })
    }

    /// ⟨j| X⁺_{l1}X⁺_{l2}… G X⁻_{r1}X⁻_{r2}… |j⟩ for 1 ≤ j ≤ n; ⟨0⟩ and
    /// ⟨n+1⟩ read as 1 for empty words. Letters outside 1..=n give 0.
    pub fn element(&self, j: usize, left: &[usize], right: &[usize]) -> f64 {
        if j == 0 || j == self.n + 1 {
            return if left.is_empty() && right.is_empty() { 1.0 } else { 0.0 };
        }
        if j > self.n || left.iter().chain(right).any(|&i| i == 0 || i > self.n) {
            return 0.0;
        }
        let r = &self.reps.reps[j - 1];
        let mut row = nalgebra::DVector::zeros(r.dim);
        row[r.hw_index] = 1.0;
        for &i in left {
            row = r.e[i - 1].transpose() * row;
        }
        let mut col = nalgebra::DVector::zeros(r.dim);
        col[r.hw_index] = 1.0;
        for &i in right.iter().rev() {
            col = &r.f[i - 1] * col;
        }
        row.dot(&(&self.g[j - 1] * col))
    }

    pub fn tau(&self, j: usize) -> f64 {
        self.element(j, &[], &[])
    }

    fn nonvanishing(&self, j: usize) -> Result<f64> {
        let t = self.tau(j);
        if t.abs() < 1e-300 || !t.is_finite() {
            return Err(Error::singular(format!("vanishing ⟨{j}|G|{j}⟩"), vec![(j, 0)]));
        }
        Ok(t)
    }
}

/// det[[⟨j|X⁺GX⁻|j⟩, ⟨j|X⁺G|j⟩], [⟨j|GX⁻|j⟩, ⟨j|G|j⟩]] − Π_{i≠j} ⟨i|G|i⟩^{−K_ji}.
pub fn first_jacobi_value(g: &GroupElementSample, cartan: &CartanMatrix, j: usize) -> Result<f64> {
    let lhs = g.element(j, &[j], &[j]) * g.tau(j) - g.element(j, &[j], &[]) * g.element(j, &[], &[j]);
    let mut rhs = 1.0;
    for i in 1..=g.n {
        let k = cartan.k(j, i);
        if i != j && k != 0 {
            rhs *= g.nonvanishing(i)?.powi(-k as i32);
        }
    }
    Ok(lhs - rhs)
}

pub fn first_jacobi_residual(g: &GroupElementSample, j: usize, tol: f64) -> Result<ResidualReport> {
    check_site(g, j)?;
    let k = cartan_matrix(Series::A, g.n)?;
    let v = first_jacobi_value(g, &k, j)?;
    Ok(ResidualReport::new(format!("jacobi1(n={},j={j})", g.n), v.abs(), v.abs(), [j, 0], tol))
}

/// K_ij·⟨j|X⁺_jX⁺_iG|j⟩/⟨j⟩ + K_ji·⟨i|X⁺_iX⁺_jG|i⟩/⟨i⟩ + K_ijK_ji·ᾱ_j·ᾱ_i with
/// all parity signs +1.
pub fn second_jacobi_value(g: &GroupElementSample, cartan: &CartanMatrix, i: usize, j: usize) -> Result<f64> {
    let (kij, kji) = (cartan.k(i, j) as f64, cartan.k(j, i) as f64);
    let tj = g.nonvanishing(j)?;
    let ti = g.nonvanishing(i)?;
    let a = g.element(j, &[j, i], &[]) / tj;
    let b = g.element(i, &[i, j], &[]) / ti;
    let c = (g.element(j, &[j], &[]) / tj) * (g.element(i, &[i], &[]) / ti);
    Ok(kij * a + kji * b + kij * kji * c)
}

pub fn second_jacobi_residual(g: &GroupElementSample, i: usize, j: usize, tol: f64) -> Result<ResidualReport> {
    check_site(g, i)?;
    check_site(g, j)?;
    let k = cartan_matrix(Series::A, g.n)?;
    if i == j || k.k(i, j) == 0 {
        return Err(Error::Argument(format!("second Jacobi identity needs distinct linked sites, got ({i},{j})")));
    }
    let v = second_jacobi_value(g, &k, i, j)?;
    Ok(ResidualReport::new(format!("jacobi2(n={},i={i},j={j})", g.n), v.abs(), v.abs(), [i, j], tol))
}

fn check_site(g: &GroupElementSample, j: usize) -> Result<()> {
    if j == 0 || j > g.n {
        return Err(Error::Argument(format!("site {j} outside 1..={}", g.n)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Plus,
    Minus,
}

/// Left word R^±_a(X⁺_s) and right word T^±_b(X⁻_s) as generator indices,
/// or None if a letter leaves 1..=n.
fn words(n: usize, s: isize, a: usize, b: usize, dir: Direction) -> Option<(Vec<usize>, Vec<usize>)> {
    let step: isize = if dir == Direction::Plus { 1 } else { -1 };
    let left: Vec<isize> = (0..a as isize).map(|r| s + step * r).collect();
    let right: Vec<isize> = (0..b as isize).rev().map(|r| s + step * r).collect();
    if left.iter().chain(&right).any(|&v| v < 1 || v > n as isize) {
        return None;
    }
    Some((left.iter().map(|&v| v as usize).collect(), right.iter().map(|&v| v as usize).collect()))
}

/// Q^±_{a,b;s} = ⟨s|R^±_a(X⁺_s) G T^±_b(X⁻_s)|s⟩.
pub fn q_function(g: &GroupElementSample, s: isize, a: usize, b: usize, dir: Direction) -> f64 {
    if s < 0 || s > g.n as isize + 1 {
        return 0.0;
    }
    if a == 0 && b == 0 {
        return g.element(s as usize, &[], &[]);
    }
    match words(g.n, s, a, b, dir) {
        Some((l, r)) => g.element(s as usize, &l, &r),
        None => 0.0,
    }
}

/// Q^±_{a,b;i±1} − [⟨i⟩/⟨i±1⟩·Q^±_{a−1,b−1;i±2} + ⟨i±1⟩·ᾱ^{±a}_{i±1}·α^{±b}_{i±1}].
pub fn recurrence_value(g: &GroupElementSample, i: usize, a: usize, b: usize, dir: Direction) -> Result<f64> {
    if a == 0 || b == 0 {
        return Err(Error::Argument("recurrence needs a, b ≥ 1".into()));
    }
    let step: isize = if dir == Direction::Plus { 1 } else { -1 };
    let s1 = i as isize + step;
    let s2 = i as isize + 2 * step;
    if s1 < 1 || s1 > g.n as isize {
        return Err(Error::Argument(format!("site {s1} outside 1..={}", g.n)));
    }
    let t1 = g.nonvanishing(s1 as usize)?;
    let ti = g.tau(i);
    let abar = q_function(g, s1, a, 0, dir) / t1;
    let alpha = q_function(g, s1, 0, b, dir) / t1;
    let rhs = ti / t1 * q_function(g, s2, a - 1, b - 1, dir) + t1 * abar * alpha;
    Ok(q_function(g, s1, a, b, dir) - rhs)
}

pub fn recurrence_residual(g: &GroupElementSample, i: usize, a: usize, b: usize, dir: Direction, tol: f64) -> Result<ResidualReport> {
    let v = recurrence_value(g, i, a, b, dir)?;
    Ok(ResidualReport::new(format!("recurrence(n={},i={i},a={a},b={b},{dir:?})", g.n), v.abs(), v.abs(), [a, b], tol))
}

/// Settings of the seeded identity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub max_rank: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { max_rank: 4, samples: 100, seed: 0, tol: 1e-9 }
    }
}

/// Maxima of the first Jacobi, second Jacobi and recurrence residuals over
/// seeded random group elements for A_1..A_max_rank.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    let mut first = Accumulator::default();
    let mut second = Accumulator::default();
    let mut rec = Accumulator::default();
    for n in 1..=cfg.max_rank {
        let reps = RepSet::new(n)?;
        let cartan = cartan_matrix(Series::A, n)?;
        let rows: Vec<Result<(Vec<f64>, Vec<f64>, Vec<f64>)>> = (0..cfg.samples)
            .into_par_iter()
            .map(|s| {
                let g = GroupElementSample::random(&reps, cfg.seed, (n as u64) << 32 | s as u64, 3 * n + 3)?;
                let f = (1..=n).map(|j| first_jacobi_value(&g, &cartan, j)).collect::<Result<_>>()?;
                let mut sj = Vec::new();
                for i in 1..n {
                    sj.push(second_jacobi_value(&g, &cartan, i, i + 1)?);
                    sj.push(second_jacobi_value(&g, &cartan, i + 1, i)?);
                }
                let mut rr = Vec::new();
                for i in 0..n {
                    for (a, b) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
                        for dir in [Direction::Plus, Direction::Minus] {
                            let s1 = i as isize + if dir == Direction::Plus { 1 } else { -1 };
                            if s1 >= 1 && s1 <= n as isize {
                                rr.push(recurrence_value(&g, i, a, b, dir)?);
                            }
                        }
                    }
                }
                Ok((f, sj, rr))
            })
            .collect();
        for (s, row) in rows.into_iter().enumerate() {
            let (f, sj, rr) = row?;
            for v in f {
                first.push(v, [n, s]);
            }
            for v in sj {
                second.push(v, [n, s]);
            }
            for v in rr {
                rec.push(v, [n, s]);
            }
        }
    }
    out.push(first.report("jacobi1", cfg.tol));
    out.push(second.report("jacobi2", cfg.tol));
    out.push(rec.report("recurrence", cfg.tol));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::Generator;
    use proptest::prelude::*;

    fn factor(generator: Generator, site: usize, coef: f64) -> InitialFactor {
        InitialFactor { generator, site, coef }
    }

    #[test]
    fn identity_element() {
        let g = GroupElementSample::from_factors(3, &[]).unwrap();
        for j in 1..=3 {
            assert_eq!(first_jacobi_residual(&g, j, 0.0).unwrap().max_abs, 0.0);
        }
        assert_eq!(second_jacobi_residual(&g, 1, 2, 0.0).unwrap().max_abs, 0.0);
    }

    #[test]
    fn explicit_a2_elements() {
        let g = GroupElementSample::from_factors(2, &[factor(Generator::Lower, 1, 1.0), factor(Generator::Raise, 1, 1.0)]).unwrap();
        for j in 1..=2 {
            assert!(first_jacobi_residual(&g, j, 1e-12).unwrap().pass);
        }
        // G = exp(X⁻₁ + X⁻₂) from the defining representation
        let reps = RepSet::new(2).unwrap();
        let z = &reps.reps[0].f[0] + &reps.reps[0].f[1];
        let g = GroupElementSample::from_defining(reps, &numerics::matrix_exp(&z).unwrap()).unwrap();
        assert!(second_jacobi_residual(&g, 1, 2, 1e-12).unwrap().pass);
        assert!(second_jacobi_residual(&g, 2, 1, 1e-12).unwrap().pass);
    }

    #[test]
    fn a2_first_identity_by_hand() {
        // defining rep, j = 1: G₁₁G₂₂ − G₁₂G₂₁ = ⟨2|G|2⟩ (a 2×2 minor)
        let reps = RepSet::new(2).unwrap();
        let g = Mat::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, 1.5, 0.2, 0.3, 0.1, 1.0]);
        let g = &g / g.determinant().cbrt();
        let s = GroupElementSample::from_defining(reps, &g).unwrap();
        let minor = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        assert!((s.tau(2) - minor).abs() < 1e-14);
        assert!(first_jacobi_residual(&s, 1, 1e-13).unwrap().pass);
    }

    #[test]
    fn vanishing_tau_is_singular() {
        let reps = RepSet::new(2).unwrap();
        let g = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let s = GroupElementSample::from_defining(reps, &g).unwrap();
        assert!(matches!(first_jacobi_residual(&s, 2, 1e-9), Err(Error::Singular { .. })));
    }

    #[test]
    fn recurrence_base_case_is_first_identity() {
        let reps = RepSet::new(3).unwrap();
        let g = GroupElementSample::random(&reps, 7, 0, 12).unwrap();
        let k = cartan_matrix(Series::A, 3).unwrap();
        for i in 0..3 {
            let r = recurrence_value(&g, i, 1, 1, Direction::Plus).unwrap();
            let j = first_jacobi_value(&g, &k, i + 1).unwrap() / g.tau(i + 1);
            assert!((r - j).abs() < 1e-10, "{r} {j}");
        }
        assert!(recurrence_residual(&g, 2, 1, 1, Direction::Plus, 1e-9).unwrap().pass);
        assert!(recurrence_residual(&g, 2, 1, 1, Direction::Minus, 1e-9).unwrap().pass);
    }

    #[test]
    fn empty_words() {
        let reps = RepSet::new(3).unwrap();
        let g = GroupElementSample::random(&reps, 3, 1, 12).unwrap();
        assert_eq!(q_function(&g, 2, 0, 0, Direction::Plus), g.tau(2));
        assert_eq!(q_function(&g, 2, 0, 2, Direction::Plus), g.element(2, &[], &[3, 2]));
        assert_eq!(q_function(&g, 2, 2, 0, Direction::Minus), g.element(2, &[2, 1], &[]));
        assert_eq!(q_function(&g, 3, 2, 0, Direction::Plus), 0.0);
    }

    #[test]
    fn recurrence_higher_words() {
        let reps = RepSet::new(4).unwrap();
        for s in 0..10 {
            let g = GroupElementSample::random(&reps, 11, s, 15).unwrap();
            for (a, b) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
                assert!(recurrence_value(&g, 0, a, b, Direction::Plus).unwrap().abs() < 1e-8);
                assert!(recurrence_value(&g, 4, a, b, Direction::Minus).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn random_sweep() {
        let cfg = SweepConfig { samples: 30, ..Default::default() };
        for r in sweep(&cfg).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = SweepConfig { max_rank: 3, samples: 8, seed: 5, tol: 1e-9 };
        assert_eq!(sweep(&cfg).unwrap(), sweep(&cfg).unwrap());
    }

    #[test]
    fn determinant_is_one() {
        let reps = RepSet::new(4).unwrap();
        let g = GroupElementSample::random(&reps, 1, 2, 15).unwrap();
        for m in &g.g {
            assert!((m.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn torus_invariance() {
        let reps = RepSet::new(3).unwrap();
        let g = GroupElementSample::random(&reps, 9, 0, 12).unwrap();
        let t = g.torus_twist(&[0.3, -0.2, 0.5], &[-0.4, 0.1, 0.2]).unwrap();
        for j in 1..=3 {
            assert!(first_jacobi_residual(&t, j, 1e-9).unwrap().pass);
        }
        assert!(second_jacobi_residual(&t, 2, 3, 1e-9).unwrap().pass);
    }

    #[test]
    fn residual_is_linear_in_perturbation() {
        let reps = RepSet::new(2).unwrap();
        let g = GroupElementSample::random(&reps, 4, 0, 9).unwrap();
        let hw = g.reps.hw(1);
        let res = |eps: f64| {
            let mut p = g.clone();
            p.g[0][(hw, hw)] += eps;
            first_jacobi_residual(&p, 1, 1.0).unwrap().max_abs
        };
        let ratio = res(1e-5) / res(1e-6);
        assert!((ratio - 10.0).abs() < 2.0, "{ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn jacobi_holds_for_any_seed(seed in any::<u64>(), n in 1usize..4) {
            let reps = RepSet::new(n).unwrap();
            let g = GroupElementSample::random(&reps, seed, 0, 3 * n + 3).unwrap();
            let k = cartan_matrix(Series::A, n).unwrap();
            for j in 1..=n {
                prop_assert!(first_jacobi_value(&g, &k, j).unwrap().abs() < 1e-9);
            }
        }
    }
}
