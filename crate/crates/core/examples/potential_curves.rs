//! The bundled model system: curves, widths and the validation report.
//!
//! ```sh
//! cargo run --example potential_curves
//! ```

use hestar::potentials::{model_system, system_report, Parity, PRESETS};

fn main() -> hestar::Result<()> {
    println!("presets: {}", PRESETS.join(", "));
    let sys = model_system("model-A")?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "R", "V_1", "Γ_1", "V_3", "V_g", "V_u");
    for i in 0..=12 {
        let r = 3.0 + 0.75 * i as f64;
        let s = sys.entrance(0).unwrap().eval(r);
        let t = sys.entrance(1).unwrap().eval(r);
        println!(
            "{r:6.2} {:12.4e} {:12.4e} {:12.4e} {:12.4e} {:12.4e}",
            s.re,
            -2.0 * s.im,
            t.re,
            sys.exit(Parity::Gerade).eval(r),
            sys.exit(Parity::Ungerade).eval(r),
        );
    }

    for rep in system_report(&sys) {
        println!(
            "{:<10} {:<9} min {:+.4e} at R = {:.2}  {}",
            rep.channel, rep.column, rep.min_value, rep.r_at_min, rep.long_range
        );
    }
    Ok(())
}
