//! The three substitutions act as lattice shifts: map the fields read at
//! site i and compare with the fields at site i + 1.

use utoda::flows::{self, Axis, FlowSide, Generator, GradedLagrangian, InitialFactor};
use utoda::lattice::{self, TauField};
use utoda::mappings::{self, DtSign, MapKind};

fn tau(n: usize, m1: usize) -> utoda::Result<TauField> {
    let a = Axis::uniform(-0.5, 0.005, 201, 0.0);
    let k0: Vec<_> = (1..=n).map(|site| InitialFactor { generator: Generator::Cartan, site, coef: 0.4 }).collect();
    let m = GradedLagrangian::unit(FlowSide::Minus, n, m1);
    let p = GradedLagrangian::unit(FlowSide::Plus, n, 1);
    let t = lattice::compute_tau(&flows::kernel(&m, &p, &a, &a, Some(&k0), 4)?, m1)?;
    t.check_regular()?;
    Ok(t)
}

fn main() -> utoda::Result<()> {
    let a4 = tau(4, 1)?;
    for (kind, site, times) in [(MapKind::Dt, 1, 1), (MapKind::Dt, 1, 2), (MapKind::Utoda11, 2, 2)] {
        let from = mappings::lattice_state(&a4, None, kind, site)?;
        let to = mappings::lattice_state(&a4, None, kind, site + times as isize)?;
        let d = mappings::iterate(&from, kind, DtSign::Derived, times)?.max_difference(&to, kind.fields())?;
        println!("{kind:?} x{times} from site {site}: {d:.2e}");
    }
    // the opposite sign breaks the shift
    let from = mappings::lattice_state(&a4, None, MapKind::Dt, 1)?;
    let to = mappings::lattice_state(&a4, None, MapKind::Dt, 2)?;
    match mappings::apply(&from, MapKind::Dt, DtSign::Flipped) {
        Ok(s) => println!("Dt with flipped sign: {:.2e}", s.max_difference(&to, MapKind::Dt.fields())?),
        Err(e) => println!("Dt with flipped sign: {e}"),
    }

    let a3 = tau(3, 2)?;
    let pf = lattice::compute_p(&a3, 2, 1)?;
    let from = mappings::lattice_state(&a3, Some(&pf), MapKind::Utoda12, 2)?;
    let to = mappings::lattice_state(&a3, Some(&pf), MapKind::Utoda12, 3)?;
    let d = mappings::apply(&from, MapKind::Utoda12, DtSign::Derived)?.max_difference(&to, MapKind::Utoda12.fields())?;
    println!("Utoda12 x1 from site 2: {d:.2e}");
    Ok(())
}
