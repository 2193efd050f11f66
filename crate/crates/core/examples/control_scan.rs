//! Rotating each atom of a `|1 1⟩|1 0⟩` pair about y and following the
//! AI/PI branching across the angle grid.
//!
//! ```sh
//! cargo run --release --example control_scan
//! ```

use hestar::control::{angle_grid, ratio_bounds, scan_with};
use hestar::ionization::{IonizationSettings, Ionizer, SpinSigmas};
use hestar::potentials::model_system;
use hestar::units::kelvin_to_hartree;

fn main() -> hestar::Result<()> {
    let sys = model_system("model-A")?;
    let ion = Ionizer::new(&sys, IonizationSettings::default())?;
    let e = kelvin_to_hartree(1e-3);
    let (s0, s1) = (ion.sigma(0, e)?, ion.sigma(1, e)?);
    let sigmas = SpinSigmas::new([s0.sigma_ai, s1.sigma_ai], [s0.sigma_pi, s1.sigma_pi]);

    let grid = angle_grid(24);
    let surf = scan_with(1, 0, &grid, &grid, &sigmas, e)?;

    let defined = surf.points.iter().filter_map(|p| p.ratio.map(|r| (r, p)));
    let (lo, hi) = defined.fold((None, None), |(lo, hi): (Option<(f64, _)>, Option<(f64, _)>), (r, p)| {
        (
            if lo.is_none_or(|(x, _)| r < x) { Some((r, p)) } else { lo },
            if hi.is_none_or(|(x, _)| r > x) { Some((r, p)) } else { hi },
        )
    });
    let (lo, hi) = (lo.unwrap(), hi.unwrap());
    println!("ratio bracket {:.4?}", ratio_bounds(&sigmas)?);
    println!("lowest  {:.4} at α={:.3} β={:.3}", lo.0, lo.1.alpha, lo.1.beta);
    println!("highest {:.4} at α={:.3} β={:.3}", hi.0, hi.1.alpha, hi.1.beta);

    // equal angles rotate the pair as a whole and change nothing
    let d = surf.at(5, 5).sigma;
    println!("α = β: σ_PI={:.4e}, same as unrotated {:.4e}", d.pi, surf.at(0, 0).sigma.pi);

    println!("\nrotating atom A alone:");
    for i in (0..grid.len()).step_by(3) {
        let p = surf.at(i, 0);
        println!("  α={:.3}  σ_PI={:.4e}  σ_AI={:.4e}", p.alpha, p.sigma.pi, p.sigma.ai);
    }
    Ok(())
}
