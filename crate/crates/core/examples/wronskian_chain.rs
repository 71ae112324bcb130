//! Wronskian frames in (y, t): the linear problem, the Gauss factors and the
//! nilpotent chain with its zero-curvature pair.

use utoda::solitons::{self, ChainDomain, ChainOrder, FrameSpec, WronskianFrame};

fn main() -> utoda::Result<()> {
    let dom = ChainDomain::default();
    for k in [2, 3] {
        let frame = WronskianFrame::new(&FrameSpec::default_for(k)?)?;
        let ys = dom.grid.xs();
        println!("k = {k}, modes {:?}", FrameSpec::default_for(k)?.modes);
        println!("  {}", solitons::linear_eq_residual(&frame, &ys, &dom.grid.ys(), 1e-10));
        println!("  {}", solitons::frobenius_roundtrip(&frame, &ys, 0.0, dom.baseline, 1e-7)?);
        let c = solitons::nilpotent_chain_residual(&frame, ChainOrder::Derived, &dom, 1e-6)?;
        for r in [c.pi, c.top, c.local, c.zero_curvature] {
            println!("  {r}");
        }
        let g = frame.gauge(0.2, 0.01)?;
        println!("  gauge at (0.2, 0.01): D = {:?}", (0..frame.len()).map(|i| g.u[(i, i)]).collect::<Vec<_>>());
    }
    Ok(())
}
