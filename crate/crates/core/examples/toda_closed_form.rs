//! Solve the A1 Toda equation through the S-matrix flows and compare with
//! ⟨1⟩ = 1 + xy, then run A2 with polynomial Cartan coefficients.

use utoda::flows::{self, Axis, Coefficient, FlowSide, Generator, GradedLagrangian, InitialFactor};
use utoda::lattice;

fn main() -> utoda::Result<()> {
    let a = Axis::uniform(-0.5, 0.005, 201, 0.0);

    let m = GradedLagrangian::unit(FlowSide::Minus, 1, 1);
    let p = GradedLagrangian::unit(FlowSide::Plus, 1, 1);
    let tau = lattice::compute_tau(&flows::kernel(&m, &p, &a, &a, None, 4)?, 1)?;
    let mut worst = 0.0f64;
    for ((i, j), v) in tau.tau(1).indexed_iter() {
        worst = worst.max((v - (1.0 + a.nodes[i] * a.nodes[j])).abs());
    }
    println!("A1: |<1> - (1 + xy)| <= {worst:.2e}");
    println!("A1: {}", lattice::toda_residual(&tau, 1e-6)?);

    let m = GradedLagrangian::unit(FlowSide::Minus, 2, 1).set(0, 1, Coefficient::Poly(vec![0.1, 0.5, -0.3]))?;
    let p = GradedLagrangian::unit(FlowSide::Plus, 2, 1).set(0, 2, Coefficient::Poly(vec![0.0, 0.3, 0.2]))?;
    let k0: Vec<_> = (1..=2).map(|site| InitialFactor { generator: Generator::Cartan, site, coef: 0.3 }).collect();
    let tau = lattice::compute_tau(&flows::kernel(&m, &p, &a, &a, Some(&k0), 4)?, 1)?;
    tau.check_regular()?;
    println!("A2: {}", lattice::toda_residual(&tau, 1e-6)?);
    Ok(())
}
