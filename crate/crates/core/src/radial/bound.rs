use super::{find_start, lattice_step, simpson, BoundState, LatticePotential, RadialGrid, Start};

/// The outer wall sits at least this many decay lengths `1/κ` beyond the
/// outer turning point of the shallowest level.
const WALL_DECAY: f64 = 12.0;

/// The zero-energy solution is followed until `2μ|V|R²` drops below this.
const TAIL_STRENGTH: f64 = 1e-6;

struct Problem<'p, 'a> {
    pot: &'p LatticePotential<'a, f64>,
    mu: f64,
    j: u32,
    l2: f64,
    h: f64,
    i0: usize,
    i_end: usize,
    wkb: bool,
}

impl Problem<'_, '_> {
    fn q(&self, i: usize, e: f64) -> f64 {
        let r = i as f64 * self.h;
        2.0 * self.mu * (self.pot.at(i) - e) + self.l2 / (r * r)
    }

    fn x(&self, i: usize, e: f64) -> f64 {
        self.h * self.h * self.q(i, e)
    }

    /// `u_{i0-1}/u_{i0} - 1` for the regular solution.
    fn start_ratio_m1(&self, e: f64) -> f64 {
        if self.wkb {
            let langer = |i: usize| self.q(i, e) + 0.25 / (i as f64 * self.h).powi(2);
            let (q0, q1) = (langer(self.i0 - 1), langer(self.i0));
            (0.25 * ((q1 - q0) / q0).ln_1p() - 0.5 * self.h * (q0.sqrt() + q1.sqrt())).exp_m1()
        } else {
            ((self.j as f64 + 1.0) * (-1.0 / self.i0 as f64).ln_1p()).exp_m1()
        }
    }

    /// One Numerov step in ratio-minus-one form: given `p = u_prev/u_cur - 1`
    /// and `x = h²Q` at the previous, current and next node, returns
    /// `u_next/u_cur - 1`. Near threshold the ratios sit within `κh` of one,
    /// and carrying only their deviation keeps the energy dependence from
    /// drowning in rounding.
    #[inline]
    fn step(p: f64, x_prev: f64, x_cur: f64, x_next: f64) -> f64 {
        let (a, b, c) = (x_next / 12.0, 5.0 * x_cur / 6.0, x_prev / 12.0);
        (a + b + c - p * (1.0 - c)) / (1.0 - a)
    }

    /// `1/(1 + s) - 1`, saturating where `u` vanishes on a node.
    #[inline]
    fn invert(s: f64) -> f64 {
        let r = 1.0 + s;
        if r == 0.0 {
            f64::MAX
        } else {
            -s / r
        }
    }

    /// Outward `u_{i+1}/u_i - 1` for `i0 ≤ i < stop`, passed to `f`.
    fn outward(&self, e: f64, stop: usize, mut f: impl FnMut(usize, f64)) {
        let mut p = self.start_ratio_m1(e);
        let mut x_prev = if p == -1.0 { 0.0 } else { self.x(self.i0 - 1, e) };
        let mut x_cur = self.x(self.i0, e);
        for i in self.i0..stop {
            let x_next = self.x(i + 1, e);
            let s = Self::step(p, x_prev, x_cur, x_next);
            f(i, s);
            p = Self::invert(s);
            x_prev = x_cur;
            x_cur = x_next;
        }
    }

    /// Inward `u_{i+1}/u_i - 1` for `stop ≤ i < i_end`, from `u(i_end) = 0`,
    /// passed to `f` in decreasing `i`.
    fn inward(&self, e: f64, stop: usize, mut f: impl FnMut(usize, f64)) {
        let mut t = -1.0;
        f(self.i_end - 1, t);
        let mut x_next2 = self.x(self.i_end, e);
        let mut x_next = self.x(self.i_end - 1, e);
        for i in (stop..self.i_end - 1).rev() {
            let x_i = self.x(i, e);
            // u_i/u_{i+1} - 1 from the step run backwards
            let back = Self::step(t, x_next2, x_next, x_i);
            t = Self::invert(back);
            f(i, t);
            x_next2 = x_next;
            x_next = x_i;
        }
    }

    fn count(&self, e: f64) -> usize {
        let mut n = 0;
        self.outward(e, self.i_end, |_, s| {
            if s < -1.0 {
                n += 1
            }
        });
        n
    }

    /// Levels of the unconfined problem: nodes of the zero-energy solution
    /// up to `i_far`, plus one if its asymptotic form `A R^{J+1} + B R^{-J}`
    /// still crosses zero further out (`R u'/u < -J`).
    fn zero_energy_count(&self, i_far: usize) -> usize {
        let mut n = 0;
        let mut last = 0.0;
        self.outward(0.0, i_far, |_, s| {
            if s < -1.0 {
                n += 1;
            }
            last = s;
        });
        let r_mid = (i_far as f64 - 0.5) * self.h;
        let log_der = 2.0 * last / (self.h * (2.0 + last));
        if last > -1.0 && r_mid * log_der < -(self.j as f64) {
            n += 1;
        }
        n
    }

    /// First lattice index beyond the bound box where the potential no
    /// longer bends the zero-energy solution, capped at `r_end`.
    fn far_index(&self, grid: &RadialGrid) -> usize {
        let mut r = grid.bound_box;
        while r < grid.r_end && 2.0 * self.mu * self.pot.eval(r).abs() * r * r > TAIL_STRENGTH {
            r *= 1.25;
        }
        ((r.min(grid.r_end) / self.h).round() as usize).max(self.i_end)
    }

    fn turning_index(&self, e: f64) -> usize {
        let mut m = self.i0 + 2;
        for i in (self.i0..self.i_end).rev() {
            if self.q(i, e) < 0.0 {
                m = i;
                break;
            }
        }
        m.clamp(self.i0 + 2, self.i_end - 2)
    }

    /// Log-derivative mismatch `u_{m+1}/u_m` (outward minus inward).
    fn mismatch(&self, e: f64, m: usize) -> f64 {
        let mut out = 0.0;
        self.outward(e, m + 1, |i, r| {
            if i == m {
                out = r
            }
        });
        let mut inn = 0.0;
        self.inward(e, m, |i, t| {
            if i == m {
                inn = t
            }
        });
        out - inn
    }

    fn wavefunction(&self, e: f64) -> Vec<f64> {
        let m = self.turning_index(e);
        let n = self.i_end - self.i0 + 1;
        let mut u = vec![0.0; n];
        let mut out = vec![0.0; m - self.i0];
        self.outward(e, m, |i, s| out[i - self.i0] = 1.0 + s);
        u[m - self.i0] = 1.0;
        for i in (self.i0..m).rev() {
            u[i - self.i0] = u[i + 1 - self.i0] / out[i - self.i0];
        }
        let mut inn = vec![0.0; self.i_end - m];
        self.inward(e, m, |i, t| inn[i - m] = 1.0 + t);
        for i in m..self.i_end {
            u[i + 1 - self.i0] = inn[i - m] * u[i - self.i0];
        }
        for v in u.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let norm = simpson(&sq, self.h).sqrt();
        let peak = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let first = u.iter().find(|v| v.abs() > 1e-6 * peak).copied().unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        u.iter().map(|v| sign * v / norm).collect()
    }
}

fn setup<'p, 'a>(pot: &'p LatticePotential<'a, f64>, j: u32, mu: f64, grid: &RadialGrid) -> Problem<'p, 'a> {
    let h = pot.step();
    let l2 = j as f64 * (j as f64 + 1.0);
    let i_end = (grid.bound_box / h).round() as usize;
    let mut prob = Problem {
        pot,
        mu,
        j,
        l2,
        h,
        i0: 0,
        i_end,
        wkb: true,
    };
    let i_wall = ((grid.r_start / h).round() as usize).max(2);
    match find_start(|i| prob.q(i, 0.0), h, i_wall, j) {
        Start::Wkb(i) => prob.i0 = i,
        Start::Origin(i) => {
            prob.i0 = i;
            prob.wkb = false;
        }
    }
    prob
}

/// Number of nodes of the regular solution at energy `e` inside the bound
/// box, i.e. the number of box eigenvalues below `e`.
pub fn node_count(pot: &LatticePotential<f64>, e: f64, j: u32, mu: f64, grid: &RadialGrid) -> usize {
    setup(pot, j, mu, grid).count(e)
}

/// All bound levels below the asymptote `V(∞) = 0`, on the lattice of
/// `pot`.
///
/// The outer wall starts at `grid.bound_box` and moves out (up to
/// `grid.r_end`) until the box holds as many levels as the unconfined
/// problem and the shallowest one has decayed by `e^{-12}` at the wall, so
/// weakly bound levels near threshold are neither lost nor shifted.
pub fn bound_states_on(pot: &LatticePotential<f64>, j: u32, mu: f64, grid: &RadialGrid) -> Vec<BoundState> {
    let mut prob = setup(pot, j, mu, grid);
    let mut e_min = f64::INFINITY;
    for i in prob.i0..=prob.i_end {
        let r = i as f64 * prob.h;
        e_min = e_min.min(pot.at(i) + prob.l2 / (2.0 * mu * r * r));
    }
    if e_min >= 0.0 {
        return Vec::new();
    }
    let i_max = ((grid.r_end / prob.h).round() as usize).max(prob.i_end);
    let wanted = prob.zero_energy_count(prob.far_index(grid));
    while prob.count(0.0) < wanted && prob.i_end < i_max {
        prob.i_end = (2 * prob.i_end).min(i_max);
    }
    loop {
        let levels = levels_in_box(&prob, e_min);
        let Some(top) = levels.last() else {
            return levels;
        };
        let kappa = (2.0 * mu * -top.energy).sqrt();
        let r_turn = prob.turning_index(top.energy) as f64 * prob.h;
        let need = ((r_turn + WALL_DECAY / kappa) / prob.h).ceil() as usize;
        if need <= prob.i_end || prob.i_end >= i_max {
            return levels;
        }
        prob.i_end = need.min(i_max);
    }
}

fn levels_in_box(prob: &Problem, e_min: f64) -> Vec<BoundState> {
    let e_top = 0.0;
    let total = prob.count(e_top);
    let mut levels = Vec::with_capacity(total);
    let mut lo = e_min;
    for v in 0..total {
        // count(lo) ≤ v < count(hi)
        let mut hi = e_top;
        while hi - lo > 1e-7 * hi.abs().max(lo.abs()) && hi - lo > 1e-300 {
            let mid = 0.5 * (lo + hi);
            if prob.count(mid) > v {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let e = refine(prob, lo, hi, v);
        let values = prob.wavefunction(e);
        levels.push(BoundState {
            v,
            j: prob.j,
            energy: e,
            step: prob.h,
            first_index: prob.i0,
            values,
        });
        lo = hi;
    }
    levels
}

/// Regula falsi (Illinois) on the matching function inside a bracket that
/// holds exactly one level; falls back to node-count bisection when the
/// matching function does not change sign across it.
fn refine(prob: &Problem, mut lo: f64, mut hi: f64, v: usize) -> f64 {
    let m = prob.turning_index(0.5 * (lo + hi));
    let (mut f_lo, mut f_hi) = (prob.mismatch(lo, m), prob.mismatch(hi, m));
    let tol = 1e-15 * hi.abs().max(lo.abs());
    if f_lo.is_finite() && f_hi.is_finite() && f_lo * f_hi < 0.0 {
        let mut side = 0i8;
        for _ in 0..100 {
            let e = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            let f = prob.mismatch(e, m);
            if f == 0.0 || hi - lo < tol {
                return e;
            }
            if f * f_lo > 0.0 {
                lo = e;
                f_lo = f;
                if side == -1 {
                    f_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = e;
                f_hi = f;
                if side == 1 {
                    f_lo *= 0.5;
                }
                side = 1;
            }
            if (hi - lo).abs() < tol {
                break;
            }
        }
        return 0.5 * (lo + hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if prob.count(mid) > v {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bound levels of a real potential, sampled on a lattice fine enough for
/// the deepest well.
pub fn bound_states(potential: &(dyn Fn(f64) -> f64 + Sync), j: u32, mu: f64, grid: &RadialGrid) -> Vec<BoundState> {
    let h = bound_step(potential, mu, grid);
    let lattice = LatticePotential::new(potential, h, grid.bound_box);
    bound_states_on(&lattice, j, mu, grid)
}

/// Lattice step for bound states: `grid.step` halved until
/// `h·k_max ≤ phase_step` at the bottom of the well.
pub fn bound_step(potential: &(dyn Fn(f64) -> f64 + Sync), mu: f64, grid: &RadialGrid) -> f64 {
    let n = 4000;
    let v_min = (0..=n)
        .map(|i| potential(grid.r_start + (grid.bound_box - grid.r_start) * i as f64 / n as f64))
        .fold(0.0f64, f64::min);
    let k_max = (2.0 * mu * -v_min).sqrt();
    lattice_step(grid, k_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::HE_PAIR_REDUCED_MASS as MU;

    fn morse(depth: f64, r_eq: f64, a: f64) -> impl Fn(f64) -> f64 + Sync {
        move |r| {
            let e = (-a * (r - r_eq)).exp();
            depth * e * (e - 2.0)
        }
    }

    fn morse_level(depth: f64, a: f64, v: usize) -> f64 {
        let w = a * (2.0 * depth / MU).sqrt();
        let x = w * (v as f64 + 0.5);
        -depth + x - x * x / (4.0 * depth)
    }

    #[test]
    fn morse_spectrum() {
        let (d, re, a) = (1.5e-3, 8.0, 0.65);
        let f = morse(d, re, a);
        let levels = bound_states(&f, 0, MU, &RadialGrid::default());
        let lambda = (2.0 * MU * d).sqrt() / a;
        assert_eq!(levels.len(), (lambda - 0.5).ceil() as usize);
        for s in &levels {
            let exact = morse_level(d, a, s.v);
            assert!(((s.energy - exact) / exact).abs() < 1e-8, "v={} {} vs {exact}", s.v, s.energy);
            assert_eq!(s.nodes(), s.v);
            assert!((s.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn repulsive_has_no_levels() {
        let f = |r: f64| 1.0 / (r * r * r);
        assert!(bound_states(&f, 0, MU, &RadialGrid::default()).is_empty());
    }

    #[test]
    fn counts_do_not_grow_with_rotation() {
        let f = morse(0.02, 3.0, 1.0);
        let mut last = usize::MAX;
        let mut last_e0 = f64::NEG_INFINITY;
        for j in [0, 2, 5, 10, 20] {
            let levels = bound_states(&f, j, MU, &RadialGrid::default());
            assert!(levels.len() <= last);
            assert!(levels.windows(2).all(|w| w[0].energy < w[1].energy));
            assert!(levels[0].energy > last_e0);
            last = levels.len();
            last_e0 = levels[0].energy;
        }
    }
}

