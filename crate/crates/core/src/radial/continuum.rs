use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::{find_start, lattice_step, riccati_j, riccati_n, Amplitude, ContinuumSolution, LatticePotential, RadialGrid, Start};
use crate::{Error, Result};

/// Largest partial wave the continuum solver accepts.
pub const MAX_PARTIAL_WAVE: u32 = 400;

/// Solves for the regular scattering solution at energy `E > 0` (hartree)
/// and partial wave `J`, with reduced mass `μ` in electron masses.
pub fn propagate<T: Amplitude>(
    potential: &(dyn Fn(f64) -> T + Sync),
    energy: f64,
    j: u32,
    mu: f64,
    grid: &RadialGrid,
) -> Result<ContinuumSolution<T>> {
    let h = continuum_step(&|r| potential(r).re(), energy, mu, grid);
    let lattice = LatticePotential::new(potential, h, grid.fine_end);
    propagate_on(&lattice, energy, j, mu, grid)
}

/// Fine lattice step for energy `E` on `potential`: the largest local
/// wavenumber inside `fine_end` sets it through [`lattice_step`].
pub fn continuum_step(potential: &dyn Fn(f64) -> f64, energy: f64, mu: f64, grid: &RadialGrid) -> f64 {
    let n = 4000;
    let v_min = (0..=n)
        .map(|i| potential(grid.r_start + (grid.fine_end - grid.r_start) * i as f64 / n as f64))
        .fold(0.0f64, f64::min);
    lattice_step(grid, (2.0 * mu * (energy - v_min).max(0.0)).sqrt())
}

/// Dimensionless strength of the potential beyond `R`, used to place the
/// outer matching radius.
fn tail_strength<T: Amplitude>(pot: &LatticePotential<T>, r: f64, k: f64, mu: f64) -> f64 {
    2.0 * mu * pot.eval(r).abs() * r * r.max(1.0 / k)
}

/// Like [`propagate`], on a pre-sampled potential. The lattice spacing of
/// `pot` overrides `grid.step`.
pub fn propagate_on<T: Amplitude>(
    pot: &LatticePotential<T>,
    energy: f64,
    j: u32,
    mu: f64,
    grid: &RadialGrid,
) -> Result<ContinuumSolution<T>> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("continuum energy must be positive, got {energy}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("reduced mass must be positive, got {mu}")));
    }
    if j > MAX_PARTIAL_WAVE {
        return Err(Error::Domain(format!("partial wave {j} exceeds {MAX_PARTIAL_WAVE}")));
    }
    let h = pot.step();
    let k = (2.0 * mu * energy).sqrt();
    let l2 = (j as f64) * (j as f64 + 1.0);
    let two_mu = T::from(2.0 * mu);
    let e = T::from(energy);
    let q = |i: usize| -> T {
        let r = i as f64 * h;
        two_mu * (pot.at(i) - e) + T::from(l2 / (r * r))
    };

    // Outer radii: four matching points spaced by Δ, all where the potential
    // is negligible.
    let delta = (FRAC_PI_2 / k).min(5.0);
    let mut r_tail = grid.fine_end.max(4.0 * delta);
    let mut clear = 0;
    while r_tail < grid.r_end {
        if tail_strength(pot, r_tail, k, mu) < grid.tail_tolerance {
            clear += 1;
            if clear == 3 {
                break;
            }
        } else {
            clear = 0;
        }
        r_tail *= 1.02;
    }
    // Inside the centrifugal barrier δ is ill-conditioned; keep the inner
    // matching pair beyond kR = J + 3√J + 5 when the cap allows it.
    let jf = j as f64;
    let r_barrier = (jf + 3.0 * jf.sqrt() + 5.0) / k;
    if j > 0 && r_barrier + 3.0 * delta <= grid.r_end {
        r_tail = r_tail.max(r_barrier);
    }
    let r_end = (r_tail + 3.0 * delta).min(grid.r_end.max(grid.fine_end + 4.0 * delta));
    let max_coarse = delta / 4.0;

    let i_wall = ((grid.r_start / h).round() as usize).max(2);
    let (i0, p0) = match find_start(|i| q(i).re(), h, i_wall, j) {
        Start::Wkb(i) => {
            // Langer-corrected Q, exact for the pure centrifugal power law
            let langer = |i: usize| q(i) + T::from(0.25 / (i as f64 * h).powi(2));
            let (q0, q1) = (langer(i - 1), langer(i));
            (i, (q1 / q0).powf(0.25) * (-(q0.sqrt() + q1.sqrt()) * (0.5 * h)).exp())
        }
        Start::Origin(i) => (i, T::from(((i - 1) as f64 / i as f64).powi(j as i32 + 1))),
    };
    let i_fine_end = (grid.fine_end / h).ceil() as usize;

    let mut index = vec![i0];
    let mut ratios: Vec<T> = Vec::new();
    let mut idx = i0;
    let mut s = 1usize;
    let mut p = p0;
    let one = T::from(1.0);
    let x_at = |i: usize, s: usize| q(i) * ((s as f64 * h).powi(2));
    let mut x_prev = if p == T::from(0.0) { T::from(0.0) } else { x_at(idx - 1, 1) };
    let mut x_cur = x_at(idx, 1);
    let mut since_change = 0usize;
    while (idx as f64) * h < r_end {
        let x_next = x_at(idx + s, s);
        let r = ((T::from(2.0) + x_cur * (5.0 / 6.0)) - (one - x_prev * (1.0 / 12.0)) * p) / (one - x_next * (1.0 / 12.0));
        ratios.push(r);
        idx += s;
        index.push(idx);
        p = one / r;
        x_prev = x_cur;
        x_cur = x_next;
        since_change += 1;

        // |Q| may dip to zero at a turning point but never exceeds
        // max(|Q|, k²) further out, and the step is never reduced again
        let big = 2 * s;
        let rr = idx as f64 * h;
        if idx >= i_fine_end
            && since_change >= 2
            && big as f64 * h * q(idx).abs().max(k * k).sqrt() <= grid.phase_step
            && big as f64 * h <= (rr / 100.0).min(max_coarse)
        {
            let n = ratios.len();
            p = one / (ratios[n - 1] * ratios[n - 2]);
            s = big;
            x_cur = x_at(idx, s);
            x_prev = x_at(idx - s, s);
            since_change = 0;
        }
    }

    // Backward reconstruction from u(R_end) = 1.
    let n = index.len();
    let mut u = vec![T::from(0.0); n];
    u[n - 1] = one;
    for m in (0..n - 1).rev() {
        u[m] = u[m + 1] / ratios[m];
        if !u[m].abs().is_finite() {
            u[m] = T::from(0.0);
        }
    }

    let nearest = |target: f64| -> usize {
        let t = target / h;
        match index.binary_search_by(|&i| (i as f64).partial_cmp(&t).unwrap()) {
            Ok(m) => m,
            Err(m) if m == 0 => 0,
            Err(m) if m >= n => n - 1,
            Err(m) => {
                if t - index[m - 1] as f64 <= index[m] as f64 - t {
                    m - 1
                } else {
                    m
                }
            }
        }
    };
    let r_last = index[n - 1] as f64 * h;
    let pick = |m: usize| (index[m] as f64 * h, u[m].to_complex());
    let pair_a = (pick(n - 1), pick(nearest(r_last - delta)));
    let pair_b = (pick(nearest(r_last - 2.0 * delta)), pick(nearest(r_last - 3.0 * delta)));
    let (ca, sa) = match_pair(pair_a.0, pair_a.1, k, j);
    let (cb, sb) = match_pair(pair_b.0, pair_b.1, k, j);
    let s_a = s_from(ca, sa);
    let s_b = s_from(cb, sb);
    let mismatch = (s_a - s_b).norm();
    if !(mismatch <= grid.match_tolerance) {
        return Err(Error::PhaseMismatch {
            energy,
            j,
            first: format!("{s_a:.12e}"),
            second: format!("{s_b:.12e}"),
            mismatch,
        });
    }

    let i = Complex64::i();
    let phase = 0.5 * s_a.arg() - 0.5 * i * s_a.norm().ln();
    let (cos_d, sin_d) = (phase.cos(), phase.sin());
    let amp = if cos_d.norm() >= sin_d.norm() { ca / cos_d } else { sa / sin_d };
    let scale = T::from_complex(1.0 / (amp * k.sqrt()));
    let values = u.into_iter().map(|v| v * scale).collect();

    Ok(ContinuumSolution {
        j,
        energy,
        k,
        step: h,
        index,
        values,
        phase,
        s_matrix: s_a,
        r_end: r_last,
        mismatch,
    })
}

/// Coefficients `(A cos δ, A sin δ)` of `u = A cos δ ĵ + A sin δ n̂` from
/// two samples.
fn match_pair(p1: (f64, Complex64), p2: (f64, Complex64), k: f64, j: u32) -> (Complex64, Complex64) {
    let (r1, u1) = p1;
    let (r2, u2) = p2;
    let (j1, n1) = (riccati_j(j, k * r1), riccati_n(j, k * r1));
    let (j2, n2) = (riccati_j(j, k * r2), riccati_n(j, k * r2));
    let det = j1 * n2 - j2 * n1;
    ((u1 * n2 - u2 * n1) / det, (u2 * j1 - u1 * j2) / det)
}

fn s_from(c: Complex64, s: Complex64) -> Complex64 {
    let i = Complex64::i();
    (c + i * s) / (c - i * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::HE_PAIR_REDUCED_MASS as MU;

    fn square_well_phase(k: f64, depth: f64, a: f64, mu: f64) -> f64 {
        let kin = (k * k + 2.0 * mu * depth).sqrt();
        let t = (k / kin * (kin * a).tan()).atan() - k * a;
        // fold to (-π/2, π/2]
        let mut d = t;
        while d > FRAC_PI_2 {
            d -= std::f64::consts::PI;
        }
        while d <= -FRAC_PI_2 {
            d += std::f64::consts::PI;
        }
        d
    }

    fn fold(d: f64) -> f64 {
        let mut d = d;
        while d > FRAC_PI_2 {
            d -= std::f64::consts::PI;
        }
        while d <= -FRAC_PI_2 {
            d += std::f64::consts::PI;
        }
        d
    }

    #[test]
    fn free_particle_has_zero_phase() {
        let grid = RadialGrid::default();
        for &e in &[1e-10, 1e-6, 1e-3] {
            for j in [0, 1, 3] {
                let sol = propagate::<f64>(&|_| 0.0, e, j, MU, &grid).unwrap();
                assert!(sol.phase.norm() < 1e-8, "E={e} J={j} δ={}", sol.phase);
            }
        }
    }

    #[test]
    fn square_well_s_wave() {
        // the jump sits on a lattice node carrying the mean value, which
        // leaves an O(h²) error; a finer lattice brings it under 1e-6
        let grid = RadialGrid::default().with_step(5e-4);
        let a = 5.0;
        for &depth in &[1e-4, 5e-3] {
            let well = move |r: f64| {
                if (r - a).abs() < 1e-9 {
                    -0.5 * depth
                } else if r < a {
                    -depth
                } else {
                    0.0
                }
            };
            for &e in &[1e-9, 1e-6, 1e-3] {
                let sol = propagate::<f64>(&well, e, 0, MU, &grid).unwrap();
                let exact = square_well_phase(sol.k, depth, a, MU);
                assert!(fold(sol.phase.re - exact).abs() < 1e-6, "{} vs {exact}", sol.phase);
            }
        }
    }

    #[test]
    fn absorbing_potential_has_positive_imaginary_phase() {
        let grid = RadialGrid::default();
        let v = |r: f64| Complex64::new(-2e-3 * (-(r - 5.0).powi(2)).exp(), -1e-3 * (-(r - 4.0).powi(2)).exp());
        let sol = propagate::<Complex64>(&v, 1e-6, 0, MU, &grid).unwrap();
        assert!(sol.phase.im > 0.0);
        assert!(sol.s_matrix.norm() < 1.0);
    }

    #[test]
    fn normalization_matches_asymptotic_form() {
        let grid = RadialGrid::default();
        let v = |r: f64| -1e-3 * (-(r - 5.0).powi(2)).exp();
        let sol = propagate::<f64>(&v, 1e-3, 2, MU, &grid).unwrap();
        let n = sol.values.len();
        let r = sol.index[n - 1] as f64 * sol.step;
        let expect = (sol.k * r - 2.0 * FRAC_PI_2 + sol.phase.re).sin() / sol.k.sqrt();
        // leading correction to the asymptotic form is O(J(J+1)/(kR))
        let exact = (riccati_j(2, sol.k * r) * sol.phase.re.cos() + riccati_n(2, sol.k * r) * sol.phase.re.sin())
            / sol.k.sqrt();
        assert!((sol.values[n - 1] - exact).abs() < 1e-9, "{} {}", sol.values[n - 1], exact);
        assert!((sol.values[n - 1] - expect).abs() < 0.1);
    }
}
