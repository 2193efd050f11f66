//! Complex phase shifts of the absorbing entrance channels and the
//! threshold behaviour of the absorption probability.
//!
//! ```sh
//! cargo run --release --example entrance_phase
//! ```

use num_complex::Complex64;

use hestar::potentials::model_system;
use hestar::radial::{propagate, RadialGrid};
use hestar::units::{kelvin_to_hartree, HE_PAIR_REDUCED_MASS as MU};

fn main() -> hestar::Result<()> {
    let sys = model_system("model-A")?;
    let grid = RadialGrid::default();
    for spin in [0u8, 1] {
        let ch = sys.entrance(spin).unwrap();
        let v = |r: f64| ch.eval(r);
        // lowest partial wave allowed by exchange symmetry
        let j = spin as u32;
        println!("S={spin} J*={j}");
        println!("{:>10} {:>14} {:>14} {:>12}", "T/K", "Re δ", "Im δ", "1-|S|²");
        for t in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1] {
            let sol = propagate::<Complex64>(&v, kelvin_to_hartree(t), j, MU, &grid)?;
            println!("{t:10.0e} {:14.6e} {:14.6e} {:12.4e}", sol.phase.re, sol.phase.im, sol.absorption());
        }
    }
    Ok(())
}
