//! GToda(2,2; s, s̄) on A3: depth-2 flows whose grade-2 coefficients are the
//! 0/1 pattern. All ones reproduces UToda(2,2).

use utoda::algebra::{self, Series};
use utoda::flows::{self, Axis, Coefficient, FlowSide, Generator, GradedLagrangian, InitialFactor};
use utoda::lattice::{self, GTodaSign};

fn main() -> utoda::Result<()> {
    let a = Axis::uniform(-0.5, 0.005, 201, 0.0);
    let k0: Vec<_> = (1..=3).map(|site| InitialFactor { generator: Generator::Cartan, site, coef: 0.6 }).collect();
    let cm = algebra::cartan_matrix(Series::A, 3)?;
    for (s, sbar) in [([1.0, 1.0], [1.0, 1.0]), ([1.0, 0.0], [0.0, 1.0]), ([0.0, 0.0], [0.0, 0.0])] {
        let mut m = GradedLagrangian::unit(FlowSide::Minus, 3, 2);
        let mut p = GradedLagrangian::unit(FlowSide::Plus, 3, 2);
        for i in 0..2 {
            m = m.set(2, i + 1, Coefficient::Const(s[i]))?;
            p = p.set(2, i + 1, Coefficient::Const(sbar[i]))?;
        }
        let tau = lattice::compute_tau(&flows::kernel(&m, &p, &a, &a, Some(&k0), 4)?, 2)?;
        tau.check_regular()?;
        let r = lattice::gtoda_residual(&cm, &tau, &s, &sbar, GTodaSign::Derived, 1e-5)?;
        println!("s = {s:?}, s̄ = {sbar:?}: {}", r.all);
    }
    Ok(())
}
