//! Multistart search for the preparations that extremize σ_PI and the
//! AI/PI ratio, checked against an exhaustive angle grid.
//!
//! ```sh
//! cargo run --release --example optimize_preparation
//! ```

use hestar::control::maximal_state_ratio;
use hestar::ionization::{IonizationSettings, Ionizer, SpinSigmas};
use hestar::optimizer::{grid_oracle_with, multistart_with, Objective, OptimizerSettings, Sense};
use hestar::potentials::model_system;
use hestar::units::kelvin_to_hartree;

fn main() -> hestar::Result<()> {
    let sys = model_system("model-A")?;
    let ion = Ionizer::new(&sys, IonizationSettings::default())?;
    let e = kelvin_to_hartree(1e-2);
    let (s0, s1) = (ion.sigma(0, e)?, ion.sigma(1, e)?);
    let sigmas = SpinSigmas::new([s0.sigma_ai, s1.sigma_ai], [s0.sigma_pi, s1.sigma_pi]);
    let st = OptimizerSettings::default();

    for objective in [Objective::Pi, Objective::Ratio] {
        let oracle = grid_oracle_with(&sigmas, objective, 12)?;
        for sense in [Sense::Max, Sense::Min] {
            let found = multistart_with(32, &sigmas, objective, sense, &st)?;
            let best = &found[0].point;
            let grid_best = match sense {
                Sense::Max => oracle.max,
                Sense::Min => oracle.min,
            };
            println!(
                "{objective:?} {sense:?}: {:.6e} ({:?}, {} orbits, grid {:.6e})",
                best.value.unwrap_or(f64::NAN),
                best.classification,
                found.len(),
                grid_best
            );
            let r = &best.representative;
            println!("  a = {:.4?}", r.a.map(|z| z.norm()));
            println!("  b = {:.4?}", r.b.map(|z| z.norm()));
        }
    }
    println!("ratio of the maximal-spin state: {:.6}", maximal_state_ratio(&sigmas)?);
    Ok(())
}
