//! Depth-(m1, m2) flows on A3: the UToda(m1, m2) residuals and the α-field
//! derivative rules.

use utoda::flows::{self, Axis, FlowSide, Generator, GradedLagrangian, InitialFactor};
use utoda::lattice;

fn main() -> utoda::Result<()> {
    let a = Axis::uniform(-0.5, 0.005, 201, 0.0);
    let k0: Vec<_> = (1..=3).map(|site| InitialFactor { generator: Generator::Cartan, site, coef: 0.6 }).collect();
    for (m1, m2) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        let m = GradedLagrangian::unit(FlowSide::Minus, 3, m1);
        let p = GradedLagrangian::unit(FlowSide::Plus, 3, m2);
        let tau = lattice::compute_tau(&flows::kernel(&m, &p, &a, &a, Some(&k0), 4)?, m1.max(m2))?;
        tau.check_regular()?;
        let pf = lattice::compute_p(&tau, m1, m2)?;
        let r = lattice::utoda_residual(&tau, &pf, 1e-6)?;
        let al = lattice::alpha_derivative_residual(&tau, &pf, m1.max(m2), 1e-6)?;
        println!("UToda({m1},{m2})  x {:.2e}  mixed {:.2e}  y {:.2e}  alpha {:.2e}", r.x_eq.max_abs, r.mixed.max_abs, r.y_eq.max_abs, al.max_abs);
    }
    Ok(())
}
