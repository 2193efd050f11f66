//! Rovibrational levels of the molecular ion, the final states of
//! associative ionization.
//!
//! ```sh
//! cargo run --release --example exit_levels
//! ```

use hestar::potentials::{model_system, Parity};
use hestar::radial::{bound_states, RadialGrid};
use hestar::units::{HARTREE_EV, HE_PAIR_REDUCED_MASS as MU};

fn main() -> hestar::Result<()> {
    let sys = model_system("model-A")?;
    let grid = RadialGrid::default();
    for p in Parity::BOTH {
        let exit = sys.exit(p);
        let v = |r: f64| exit.eval(r);
        for j in [0, 5] {
            let levels = bound_states(&v, j, MU, &grid);
            println!("{p} J₊={j}: {} levels", levels.len());
            for b in levels.iter().take(4).chain(levels.last()) {
                println!(
                    "  v={:<3} E = {:+.10e} Eh ({:+.5} meV), {} nodes",
                    b.v,
                    b.energy,
                    1e3 * b.energy * HARTREE_EV,
                    b.nodes()
                );
            }
        }
    }
    Ok(())
}
