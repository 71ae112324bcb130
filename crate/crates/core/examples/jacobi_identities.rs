//! Determinant identities between matrix elements of random group elements:
//! both Jacobi identities and the Q-function recurrence.

use utoda::identities::{self, SweepConfig};

fn main() -> utoda::Result<()> {
    let cfg = SweepConfig { max_rank: 4, samples: 25, seed: 2024, ..SweepConfig::default() };
    for r in identities::sweep(&cfg)? {
        println!("{:<12} max {:.3e}  rms {:.3e}  {}", r.name, r.max_abs, r.rms, if r.pass { "ok" } else { "FAIL" });
    }
    Ok(())
}
