use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

use hestar::potentials::{model_system, Parity};
use hestar::radial::{bound_states, propagate, RadialGrid};
use hestar::units::HE_PAIR_REDUCED_MASS as MU;

/// Colbert–Miller sinc-DVR eigenvalues of `-1/(2μ) d²/dR² + V + J(J+1)/(2μR²)`
/// on `n` points `r0 + iΔ`.
fn dvr_levels(v: &dyn Fn(f64) -> f64, j: u32, r0: f64, delta: f64, n: usize) -> Vec<f64> {
    let t = 1.0 / (2.0 * MU * delta * delta);
    let cent = (j * (j + 1)) as f64 / (2.0 * MU);
    let h = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            let r = r0 + a as f64 * delta;
            t * PI * PI / 3.0 + v(r) + cent / (r * r)
        } else {
            let d = a as f64 - b as f64;
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            t * 2.0 * sign / (d * d)
        }
    });
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().filter(|e| *e < 0.0).collect();
    e.sort_by(f64::total_cmp);
    e
}

fn fold(x: f64) -> f64 {
    (x + PI / 2.0).rem_euclid(PI) - PI / 2.0
}

#[test]
fn exit_levels_match_dvr_oracle() {
    let sys = model_system("model-A").unwrap();
    let grid = RadialGrid::default();
    // (parity, J₊, DVR start, spacing, points); levels deeper than 1e-6
    // hartree decay well inside every box
    let cases = [
        (Parity::Gerade, 0, 3.5, 0.04, 1000),
        (Parity::Gerade, 3, 3.5, 0.04, 1000),
        (Parity::Ungerade, 0, 1.5, 0.03, 1300),
    ];
    for (p, j, r0, delta, n) in cases {
        let exit = sys.exit(p);
        let v = |r: f64| exit.eval(r);
        let ours: Vec<f64> = bound_states(&v, j, MU, &grid).iter().map(|b| b.energy).filter(|e| *e < -1e-6).collect();
        let oracle: Vec<f64> = dvr_levels(&v, j, r0, delta, n).into_iter().filter(|e| *e < -1e-6).collect();
        assert!(!ours.is_empty());
        assert_eq!(ours.len(), oracle.len(), "{p} J₊={j}: {ours:?} vs {oracle:?}");
        for (a, b) in ours.iter().zip(&oracle) {
            assert!(((a - b) / b).abs() < 1e-8, "{p} J₊={j}: {a} vs {b}");
        }
    }
}

#[test]
fn grid_halving_changes_phase_and_levels_little() {
    let sys = model_system("model-A").unwrap();
    let coarse = RadialGrid::default();
    let fine = coarse.halved();
    for spin in [0u8, 1] {
        let ch = sys.entrance(spin).unwrap();
        let v = |r: f64| ch.eval(r);
        for (e, j) in [(1e-10, spin as u32), (1e-7, 2 + spin as u32), (1e-5, 6 + spin as u32)] {
            let a = propagate::<Complex64>(&v, e, j, MU, &coarse).unwrap();
            let b = propagate::<Complex64>(&v, e, j, MU, &fine).unwrap();
            let d = Complex64::new(fold(a.phase.re - b.phase.re), a.phase.im - b.phase.im);
            assert!(d.norm() < 1e-7, "S={spin} E={e} J={j}: {} vs {}", a.phase, b.phase);
        }
    }
    for p in Parity::BOTH {
        let exit = sys.exit(p);
        let v = |r: f64| exit.eval(r);
        let a = bound_states(&v, 1, MU, &coarse);
        let b = bound_states(&v, 1, MU, &fine);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.energy - y.energy).abs() < 1e-9, "{p} v={}: {} vs {}", x.v, x.energy, y.energy);
        }
    }
}

#[test]
fn real_potential_has_real_phase() {
    let sys = model_system("model-A").unwrap();
    let grid = RadialGrid::default();
    let exit = sys.exit(Parity::Gerade);
    let v = |r: f64| Complex64::new(exit.eval(r), 0.0);
    for (e, j) in [(1e-8, 0), (1e-4, 3), (0.05, 10)] {
        let sol = propagate::<Complex64>(&v, e, j, MU, &grid).unwrap();
        assert!(sol.phase.im.abs() < 1e-12, "E={e} J={j}: {}", sol.phase);
        assert!((sol.s_matrix.norm() - 1.0).abs() < 1e-12);
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn absorption_follows_threshold_law() {
    let sys = model_system("model-A").unwrap();
    let grid = RadialGrid::default();
    let energies = [1e-13, 1e-12, 1e-11, 1e-10, 1e-9];
    // J ≥ 2 absorption drops below double-precision resolution of
    // 1 − |e^{2iδ}|² at these energies
    for (spin, j) in [(0u8, 0u32), (1, 1)] {
        let ch = sys.entrance(spin).unwrap();
        let v = |r: f64| ch.eval(r);
        let (xs, ys): (Vec<f64>, Vec<f64>) = energies
            .iter()
            .map(|&e| {
                let a = propagate::<Complex64>(&v, e, j, MU, &grid).unwrap().absorption();
                (e.ln(), a.ln())
            })
            .unzip();
        let s = slope(&xs, &ys);
        assert!((s - (j as f64 + 0.5)).abs() < 0.05, "S={spin} J={j}: slope {s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_levels_obey_node_theorem(depth in 5e-4f64..2e-2, a in 0.5f64..1.2, r_eq in 3.0f64..8.0, j in 0u32..6) {
        let v = move |r: f64| {
            let e = (-a * (r - r_eq)).exp();
            depth * e * (e - 2.0)
        };
        let grid = RadialGrid::default();
        let levels = bound_states(&v, j, MU, &grid);
        for (n, b) in levels.iter().enumerate() {
            prop_assert_eq!(b.v, n);
            prop_assert!(b.energy > -depth && b.energy < 0.0);
            if b.energy < -1e-7 {
                prop_assert_eq!(b.nodes(), n);
                prop_assert!((b.norm() - 1.0).abs() < 1e-9);
            }
        }
        for w in levels.windows(2) {
            prop_assert!(w[1].energy > w[0].energy);
        }
        let higher = bound_states(&v, j + 3, MU, &grid);
        prop_assert!(higher.len() <= levels.len());
    }

    #[test]
    fn free_particle_phase_vanishes(log_e in -12.0f64..-3.0, j in 0u32..8) {
        let grid = RadialGrid::default();
        let sol = propagate::<f64>(&|_| 0.0, 10f64.powf(log_e), j, MU, &grid).unwrap();
        prop_assert!(fold(sol.phase.re).abs() < 1e-8);
    }
}
