//! Build the fundamental modules Λ^j C^{n+1} of A_n and check the Chevalley
//! relations together with the highest-weight conditions.

use utoda::algebra::{self, Series};

fn main() -> utoda::Result<()> {
    for n in 1..=5 {
        print!("A{n}  ");
        for j in 1..=n {
            let rep = algebra::fundamental_rep_for(Series::A, n, j)?;
            print!("Λ^{j}: dim {:>2} err {:.0e}  ", rep.dim, algebra::verify_chevalley(&rep));
        }
        println!();
    }
    Ok(())
}
