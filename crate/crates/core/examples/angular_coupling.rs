//! Spin coupling of two atomic triplets into molecular `|S M⟩` states.
//!
//! ```sh
//! cargo run --example angular_coupling
//! ```

use std::f64::consts::FRAC_PI_2;

use hestar::angular::{clebsch_gordan, three_j, wigner_d1};
use hestar::control::{molecular_coefficients, PreparationState};

fn main() -> hestar::Result<()> {
    println!("⟨1 1; 1 -1 | S 0⟩ for S = 0, 1, 2:");
    for s in 0..=2 {
        println!("  S={s}: {:+.6}", clebsch_gordan(s, 0, 1, -1)?);
    }
    println!("(1 1 2; 0 0 0) = {:+.6}", three_j(1, 1, 2, 0, 0, 0)?);

    let d = wigner_d1(FRAC_PI_2);
    println!("d¹(π/2):");
    for mp in -1..=1 {
        println!("  {:+.4} {:+.4} {:+.4}", d.get(mp, -1), d.get(mp, 0), d.get(mp, 1));
    }

    for (ma, mb) in [(1, 1), (1, 0), (0, 0), (1, -1)] {
        let m = molecular_coefficients(&PreparationState::product(ma, mb)?)?;
        let [p0, p1, p2] = m.populations();
        println!("|1 {ma:+}⟩|1 {mb:+}⟩  P_S = {p0:.4} {p1:.4} {p2:.4}");
    }
    Ok(())
}
