//! Per-spin Penning and associative ionization cross sections, with the
//! partial-wave breakdown at one temperature.
//!
//! ```sh
//! cargo run --release --example cross_sections
//! ```

use hestar::ionization::{IonizationSettings, Ionizer};
use hestar::potentials::model_system;
use hestar::units::kelvin_to_hartree;

fn main() -> hestar::Result<()> {
    let sys = model_system("model-A")?;
    let ion = Ionizer::new(&sys, IonizationSettings::default())?;

    let energies: Vec<f64> = [1e-4, 1e-3, 1e-2].map(kelvin_to_hartree).to_vec();
    let table = ion.table(&energies)?;
    print!("{}", table.to_csv());

    let s = ion.sigma(0, kelvin_to_hartree(1e-3))?;
    println!("\nS=0 at 1 mK by partial wave:");
    for w in &s.partial_waves {
        let ratio = w.flux_ratio.map_or("-".to_string(), |r| format!("{r:.4}"));
        println!(
            "  J*={:<2} absorbed {:.3e}  PI {:.3e}  AI {:.3e}  flux {ratio}",
            w.j_star, w.absorption, w.pi_probability, w.ai_probability
        );
    }
    Ok(())
}
