//! Single-channel radial Schrödinger equation
//! `u'' = [2μ(V(R) - E) + J(J+1)/R²] u` for real and complex (optical)
//! potentials.
//!
//! Continuum solutions are propagated outward with a renormalized
//! (ratio) Numerov scheme on the lattice `R = i·h`, with the step doubled
//! once the local wavelength allows it, and matched to Riccati–Bessel
//! functions at two pairs of asymptotic radii. Bound states are located by
//! node counting and refined on a log-derivative matching function.

mod bessel;
mod bound;
mod continuum;

pub use bessel::{riccati_j, riccati_n};
pub use bound::{bound_states, bound_states_on, bound_step, node_count};
pub use continuum::{continuum_step, propagate, propagate_on, MAX_PARTIAL_WAVE};

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Field the radial solution lives in: `f64` for real potentials,
/// `Complex64` for optical potentials.
pub trait Amplitude:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn re(self) -> f64;
    fn abs(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn to_complex(self) -> Complex64;
    /// Keeps only the real part; used to build the real `n̂`/`ĵ` basis.
    fn from_complex(z: Complex64) -> Self;
    fn conj(self) -> Self;
}

impl Amplitude for f64 {
    fn re(self) -> f64 {
        self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn conj(self) -> Self {
        self
    }
}

impl Amplitude for Complex64 {
    fn re(self) -> f64 {
        self.re
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn powf(self, p: f64) -> Self {
        Complex64::powf(self, p)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

/// Grid and accuracy controls shared by the continuum and bound-state
/// solvers. Distances in bohr.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RadialGrid {
    /// Inner radius. If the equation is classically forbidden there the
    /// solution starts from the WKB ratio, otherwise from the origin.
    pub r_start: f64,
    /// Upper bound for the adaptive outer radius.
    pub r_end: f64,
    /// Lattice spacing `h` of the fine region.
    pub step: f64,
    /// The step is held at `step` up to this radius.
    pub fine_end: f64,
    /// Largest local phase per step, `h·√|Q|`. The fine lattice is halved
    /// until it holds and the step is doubled only while it still holds.
    pub phase_step: f64,
    /// Acceptable phase error from truncating the potential at `r_end`.
    pub tail_tolerance: f64,
    /// Largest allowed `|S_A - S_B|` between the two matching pairs.
    pub match_tolerance: f64,
    /// Starting outer wall for bound states; moved out as far as `r_end`
    /// for weakly bound levels.
    pub bound_box: f64,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self {
            r_start: 1.0,
            r_end: 5000.0,
            step: 0.005,
            fine_end: 20.0,
            phase_step: 0.01,
            tail_tolerance: 1e-12,
            match_tolerance: 1e-6,
            bound_box: 100.0,
        }
    }
}

impl RadialGrid {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    /// Both the base step and the phase bound halved, so that every
    /// lattice derived from the grid is halved too.
    pub fn halved(self) -> Self {
        Self {
            step: self.step / 2.0,
            phase_step: self.phase_step / 2.0,
            ..self
        }
    }
}

/// `step` halved until `h·k_max ≤ phase_step`, so that lattices for
/// different energies nest.
pub fn lattice_step(grid: &RadialGrid, k_max: f64) -> f64 {
    let mut h = grid.step;
    while h * k_max > grid.phase_step {
        h *= 0.5;
    }
    h
}

/// A potential sampled on the lattice `R = i·h` up to some radius, with the
/// underlying function used beyond it.
pub struct LatticePotential<'a, T> {
    h: f64,
    cache: Vec<T>,
    f: &'a (dyn Fn(f64) -> T + Sync),
}

impl<'a, T: Amplitude> LatticePotential<'a, T> {
    pub fn new(f: &'a (dyn Fn(f64) -> T + Sync), h: f64, r_cache: f64) -> Self {
        let n = (r_cache / h).ceil() as usize + 2;
        // index 0 (R = 0) is never used by the solvers; avoid evaluating there
        let cache = (0..n).map(|i| if i == 0 { f(0.5 * h) } else { f(i as f64 * h) }).collect();
        Self { h, cache, f }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn at(&self, i: usize) -> T {
        match self.cache.get(i) {
            Some(v) => *v,
            None => (self.f)(i as f64 * self.h),
        }
    }

    pub fn eval(&self, r: f64) -> T {
        (self.f)(r)
    }
}

/// Regular scattering solution normalized to
/// `ψ(R) → k^{-1/2} sin(kR - Jπ/2 + δ)`.
#[derive(Debug, Clone)]
pub struct ContinuumSolution<T> {
    pub j: u32,
    pub energy: f64,
    pub k: f64,
    /// Lattice spacing of the fine region; every radius is a multiple of it.
    pub step: f64,
    /// Lattice index of each stored radius.
    pub index: Vec<usize>,
    pub values: Vec<T>,
    /// Complex phase shift; real for real potentials, `Im δ ≥ 0` for
    /// absorbing ones.
    pub phase: Complex64,
    /// `e^{2iδ}`.
    pub s_matrix: Complex64,
    /// Outer matching radius actually used.
    pub r_end: f64,
    /// `|S_A - S_B|` between the two matching pairs.
    pub mismatch: f64,
}

impl<T: Amplitude> ContinuumSolution<T> {
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.index.iter().map(|&i| i as f64 * self.step)
    }

    /// Absorption probability `1 - |e^{2iδ}|²`.
    pub fn absorption(&self) -> f64 {
        1.0 - self.s_matrix.norm_sqr()
    }

    /// Values on the uniform part of the lattice: `(first index, values)`.
    pub fn fine_values(&self) -> (usize, &[T]) {
        let first = self.index[0];
        let n = self
            .index
            .iter()
            .enumerate()
            .take_while(|&(n, &i)| i == first + n)
            .count();
        (first, &self.values[..n])
    }
}

/// Unit-normalized bound level on the uniform lattice.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub v: usize,
    pub j: u32,
    pub energy: f64,
    pub step: f64,
    /// Lattice index of `values[0]`.
    pub first_index: usize,
    pub values: Vec<f64>,
}

impl BoundState {
    pub fn nodes(&self) -> usize {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut count = 0;
        let mut last = 0.0;
        for &v in &self.values {
            if v.abs() < 1e-10 * peak {
                continue;
            }
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
        count
    }

    pub fn norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        simpson(&sq, self.step)
    }
}

/// Where the outward solution begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Start {
    /// WKB ratio at this lattice index, deep under a barrier.
    Wkb(usize),
    /// Small-R power law `u ∝ R^{J+1}` from this lattice index.
    Origin(usize),
}

/// WKB starts are accepted once `∫κ dR` inward of them reaches this.
const WKB_DEPTH: f64 = 20.0;

/// Walks inward from `i_wall` until the barrier is deep enough for a WKB
/// start, the lattice can no longer resolve the potential (`h²Q ≥ 1`), or
/// the origin region is reached. `q(i)` is `Re Q` at lattice index `i`.
/// If the lattice cannot resolve the potential at `i_wall` itself, the start
/// moves outward to the first index where it can.
pub(crate) fn find_start(q: impl Fn(usize) -> f64, h: f64, i_wall: usize, j: u32) -> Start {
    let l2 = j as f64 * (j as f64 + 1.0);
    let i_origin = if j == 0 { 1 } else { ((10.0 * l2).sqrt().ceil() as usize).max(1) };
    let mut depth = 0.0;
    let mut i = i_wall.max(i_origin + 1);
    if h * h * q(i) >= 1.0 {
        while h * h * q(i) >= 1.0 {
            i += 1;
        }
        return Start::Wkb(i);
    }
    while i > i_origin + 1 {
        let r = i as f64 * h;
        let qi = q(i);
        if h * h * qi >= 1.0 {
            return Start::Wkb(i + 1);
        }
        let ql = qi + 0.25 / (r * r);
        if qi > 0.0 {
            depth += h * ql.sqrt();
            if depth >= WKB_DEPTH {
                return Start::Wkb(i);
            }
        } else {
            depth = 0.0;
        }
        i -= 1;
    }
    Start::Origin(i_origin)
}

/// Composite Simpson rule on equally spaced samples; an odd number of
/// intervals ends with Simpson's 3/8 rule.
pub fn simpson<T: Amplitude>(f: &[T], h: f64) -> T {
    let n = f.len();
    let zero = T::from(0.0);
    match n {
        0 | 1 => zero,
        2 => (f[0] + f[1]) * (0.5 * h),
        3 => (f[0] + f[1] * 4.0 + f[2]) * (h / 3.0),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals % 2 == 0 { (n - 1, false) } else { (n - 4, true) };
            let mut acc = f[0] + f[even_end];
            for (i, v) in f.iter().enumerate().take(even_end).skip(1) {
                acc = acc + *v * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let mut total = acc * (h / 3.0);
            if tail {
                let a = even_end;
                total = total + (f[a] + f[a + 1] * 3.0 + f[a + 2] * 3.0 + f[a + 3]) * (3.0 * h / 8.0);
            }
            total
        }
    }
}
