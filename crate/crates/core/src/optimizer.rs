//! Preparations that extremize `σ^AI`, `σ^PI` or `σ^AI/σ^PI`.
//!
//! Stationary points of `σ = Σ_SM w_S |c_SM|²` on `|a| = |b| = 1` obey
//! `a_j = Σ_SM w_S c_SM ∂c*_SM/∂a*_j / σ` (and likewise for `b`), with the
//! Lagrange multiplier equal to `σ`. The map is iterated with damping from
//! seeds spread over the preparation space. Minima are found as maxima of
//! `σ_max − σ`; the ratio is handled by Dinkelbach's parametric scheme,
//! which reduces it to a sequence of quadratic problems.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{spin_one_table, wigner_d1};
use crate::control::{controlled_sigma, couple, ControlledSigma, MolecularState, PreparationState};
use crate::ionization::{CrossSectionTable, SpinSigmas};
use crate::{Error, Result};

type Triple = [Complex64; 3];

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Objectives below this fraction of the largest weight count as zero.
const ZERO_OBJECTIVE: f64 = 1e-14;

/// Two converged points closer than this (up to symmetry) are one point.
pub const ORBIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Ai,
    Pi,
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ai" => Ok(Self::Ai),
            "pi" => Ok(Self::Pi),
            "ratio" => Ok(Self::Ratio),
            _ => Err(Error::validation("objective", format!("`{s}` is not one of ai, pi, ratio"))),
        }
    }
}

impl FromStr for Sense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "min" => Ok(Self::Min),
            _ => Err(Error::validation("sense", format!("`{s}` is not one of max, min"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ai => "ai",
            Self::Pi => "pi",
            Self::Ratio => "ratio",
        })
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Max => "max",
            Self::Min => "min",
        })
    }
}

/// Channel weights `w_S`, `S = 0, 1, 2`, of a quadratic objective.
pub type Weights = [f64; 3];

impl Objective {
    /// `None` for the ratio, which is not quadratic.
    pub fn weights(self, s: &SpinSigmas) -> Option<Weights> {
        match self {
            Self::Ai => Some([s.ai[0], s.ai[1], 0.0]),
            Self::Pi => Some([s.pi[0], s.pi[1], 0.0]),
            Self::Ratio => None,
        }
    }

    pub fn value(self, sigma: &ControlledSigma) -> Option<f64> {
        match self {
            Self::Ai => Some(sigma.ai),
            Self::Pi => Some(sigma.pi),
            Self::Ratio => sigma.ratio(),
        }
    }
}

/// Seed coordinates. `ρ, η, ψ, χ ∈ [0, π/2)`, phases in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedAngles {
    pub rho: f64,
    pub eta: f64,
    pub psi: f64,
    pub chi: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
}

impl SeedAngles {
    /// Point `index ≥ 1` of the Halton sequence in bases 2..19.
    pub fn halton(index: usize) -> Self {
        let h = |base: u8| halton::number(base, index);
        Self {
            rho: FRAC_PI_2 * h(2),
            eta: FRAC_PI_2 * h(3),
            psi: FRAC_PI_2 * h(5),
            chi: FRAC_PI_2 * h(7),
            alpha0: TAU * h(11),
            alpha1: TAU * h(13),
            beta0: TAU * h(17),
            beta1: TAU * h(19),
        }
    }
}

fn seed_triple(r: f64, e: f64, p0: f64, p1: f64) -> Triple {
    let (sr, cr) = r.sin_cos();
    let (se, ce) = e.sin_cos();
    // a₋₁ = √(1 − |a₀|² − |a₁|²) = |cos ρ|, written so the norm is exact
    [
        Complex64::new(cr.abs(), 0.0),
        Complex64::from_polar(sr * se, p0),
        Complex64::from_polar(sr * ce.abs(), p1),
    ]
}

/// Preparation of a seed; `a₋₁`, `b₋₁` are real and non-negative.
pub fn seed(sa: &SeedAngles) -> PreparationState {
    PreparationState {
        a: seed_triple(sa.rho, sa.eta, sa.alpha0, sa.alpha1),
        b: seed_triple(sa.psi, sa.chi, sa.beta0, sa.beta1),
    }
}

/// `Σ_S P_S w_S`.
pub fn quadratic(p: &PreparationState, w: &Weights) -> f64 {
    let pop = couple(&p.a, &p.b).populations();
    pop.iter().zip(w).map(|(x, y)| x * y).sum()
}

/// `(∂σ/∂a*_j, ∂σ/∂b*_j)` of `σ = Σ_SM w_S |c_SM|²`.
pub fn gradient(p: &PreparationState, w: &Weights) -> (Triple, Triple) {
    let cg = spin_one_table();
    let c = couple(&p.a, &p.b);
    let (mut ga, mut gb) = ([C0; 3], [C0; 3]);
    for s in 0..3usize {
        for i in 0..3 {
            for j in 0..3 {
                let m = i as i32 + j as i32 - 2;
                if m.unsigned_abs() as usize > s {
                    continue;
                }
                let k = cg[s][(m + 2) as usize][i][j];
                if k == 0.0 {
                    continue;
                }
                let wc = c.c[MolecularState::index(s as u32, m)] * (w[s] * k);
                ga[i] += wc * p.b[j].conj();
                gb[j] += wc * p.a[i].conj();
            }
        }
    }
    (ga, gb)
}

fn weight_scale(w: &Weights) -> f64 {
    w.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE)
}

/// `max_j |∂σ/∂a*_j − σ a_j|` over both atoms, in units of `max_S |w_S|`.
/// Zero exactly at stationary points, including the `σ = 0` manifold.
pub fn stationarity_residual(p: &PreparationState, w: &Weights) -> f64 {
    let (ga, gb) = gradient(p, w);
    let sigma = quadratic(p, w);
    let worst = ga
        .iter()
        .zip(&p.a)
        .chain(gb.iter().zip(&p.b))
        .map(|(g, x)| (g - x * sigma).norm())
        .fold(0.0, f64::max);
    worst / weight_scale(w)
}

/// Stationarity residual of `σ^AI/σ^PI`: `max_j |∂σ^AI/∂x*_j − r ∂σ^PI/∂x*_j|`
/// at `r = σ^AI/σ^PI`, in units of `max(max_S σ_S^AI, r max_S σ_S^PI)`. This
/// is the residual of the quadratic problem with weights `w^AI − r w^PI`,
/// whose multiplier vanishes at the point. `None` where `σ^PI = 0`.
pub fn ratio_residual(p: &PreparationState, s: &SpinSigmas) -> Option<f64> {
    let (w_ai, w_pi) = (Objective::Ai.weights(s)?, Objective::Pi.weights(s)?);
    let (ai, pi) = (quadratic(p, &w_ai), quadratic(p, &w_pi));
    if pi <= ZERO_OBJECTIVE * weight_scale(&w_pi) {
        return None;
    }
    let r = ai / pi;
    let (ga, gb) = gradient(p, &w_ai);
    let (pa, pb) = gradient(p, &w_pi);
    let worst = ga
        .iter()
        .zip(&pa)
        .chain(gb.iter().zip(&pb))
        .map(|(x, y)| (x - y * r).norm())
        .fold(0.0, f64::max);
    Some(worst / weight_scale(&w_ai).max(r * weight_scale(&w_pi)))
}

/// One undamped update of both triples followed by renormalization.
pub fn fixed_point_step(p: &PreparationState, w: &Weights) -> Result<PreparationState> {
    let sigma = quadratic(p, w);
    if sigma <= ZERO_OBJECTIVE * weight_scale(w) {
        return Err(Error::ZeroObjective);
    }
    let (ga, gb) = gradient(p, w);
    PreparationState::normalized(ga.map(|z| z / sigma), gb.map(|z| z / sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    /// `new = (1 − w)·old + w·step`.
    pub damping: f64,
    /// Stop once no coefficient moves by more than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Size of the probes used to classify a converged point.
    pub probe: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-12,
            max_iterations: 10_000,
            probe: 1e-3,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::validation("damping", "must lie in (0, 1]"));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::validation("tolerance", "tolerance and max_iterations must be positive"));
        }
        if !(self.probe > 0.0 && self.probe < 0.5) {
            return Err(Error::validation("probe", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Max,
    Min,
    Saddle,
    /// The objective is undefined at the point (ratio on the `σ = 0`
    /// manifold).
    BoundaryDegenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub objective: Objective,
    pub sense: Sense,
    pub preparation: PreparationState,
    /// Canonical member of the symmetry orbit, see [`reduce`].
    pub representative: PreparationState,
    pub sigma: ControlledSigma,
    /// Objective at the point; `None` for an undefined ratio.
    pub value: Option<f64>,
    /// Lagrange multiplier; equals `σ` for the cross sections and `0` for
    /// the ratio.
    pub multiplier: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub classification: Classification,
}

fn max_change(p: &PreparationState, q: &PreparationState) -> f64 {
    p.a.iter()
        .zip(&q.a)
        .chain(p.b.iter().zip(&q.b))
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn pack(p: &PreparationState) -> [f64; 12] {
    let mut x = [0.0; 12];
    for k in 0..3 {
        (x[k], x[k + 3]) = (p.a[k].re, p.a[k].im);
        (x[k + 6], x[k + 9]) = (p.b[k].re, p.b[k].im);
    }
    x
}

fn unpack(x: &[f64; 12]) -> PreparationState {
    PreparationState {
        a: [0, 1, 2].map(|k| Complex64::new(x[k], x[k + 3])),
        b: [0, 1, 2].map(|k| Complex64::new(x[k + 6], x[k + 9])),
    }
}

/// Gradient of `Σ P_S w_S` in the real coordinates of [`pack`], without the
/// norm constraints.
fn real_gradient(x: &[f64; 12], w: &Weights) -> [f64; 12] {
    let (ga, gb) = gradient(&unpack(x), w);
    let mut g = [0.0; 12];
    for k in 0..3 {
        (g[k], g[k + 3]) = (2.0 * ga[k].re, 2.0 * ga[k].im);
        (g[k + 6], g[k + 9]) = (2.0 * gb[k].re, 2.0 * gb[k].im);
    }
    g
}

/// Newton steps on `|a| = |b| = 1` after the fixed-point map has done the
/// bulk of the work.
///
/// The extremal families are flat to fourth order in some directions, where
/// the map only converges like `n^{-1/2}`; Newton still gains a factor 2/3
/// per step there. The objective is a quartic polynomial, so a five-point
/// stencil of the analytic gradient gives the Hessian up to rounding.
/// Eigenvalues below `1e-13` of the largest (symmetry directions) are
/// dropped and the others enter with their modulus, so every step ascends.
fn polish(mut p: PreparationState, w: &Weights) -> (PreparationState, usize) {
    use nalgebra::{SMatrix, SVector, SymmetricEigen};
    let scale = weight_scale(w);
    let h = 0.25;
    for it in 0..200 {
        let x = pack(&p);
        let f0 = quadratic(&p, w);
        let g = SVector::<f64, 12>::from(real_gradient(&x, w));
        let mut hess = SMatrix::<f64, 12, 12>::zeros();
        for j in 0..12 {
            let at = |t: f64| {
                let mut y = x;
                y[j] += t;
                SVector::<f64, 12>::from(real_gradient(&y, w))
            };
            let col = ((at(h) - at(-h)) * 8.0 - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            hess.set_column(j, &col);
        }
        let hess = (hess + hess.transpose()) * 0.5 - SMatrix::<f64, 12, 12>::identity() * (2.0 * f0);
        let mut proj = SMatrix::<f64, 12, 12>::identity();
        for block in [0..6, 6..12] {
            let mut u = SVector::<f64, 12>::zeros();
            for k in block {
                u[k] = x[k];
            }
            let u = u.normalize();
            proj -= u * u.transpose();
        }
        let gt = proj * g;
        let eig = SymmetricEigen::new(proj * hess * proj);
        let top = eig.eigenvalues.amax();
        let mut delta = SVector::<f64, 12>::zeros();
        for (i, lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() > 1e-13 * top {
                let v = eig.eigenvectors.column(i);
                delta += v * (v.dot(&gt) / lam.abs());
            }
        }
        let size = delta.norm();
        if !(size > 1e-15) {
            return (p, it);
        }
        if size > 0.1 {
            delta *= 0.1 / size;
        }
        let mut accepted = None;
        for k in 0..12 {
            let step = delta * 0.5f64.powi(k);
            let mut y = x;
            for i in 0..12 {
                y[i] += step[i];
            }
            let q = unpack(&y);
            let Ok(q) = PreparationState::normalized(q.a, q.b) else { break };
            if quadratic(&q, w) >= f0 - 4.0 * f64::EPSILON * scale {
                accepted = Some((q, step.norm()));
                break;
            }
        }
        let Some((q, moved)) = accepted else {
            return (p, it);
        };
        p = q;
        if moved < 1e-15 {
            return (p, it + 1);
        }
    }
    (p, 200)
}

/// Damped iteration to a maximum of `Σ P_S w_S` (`w_S ≥ 0`), followed by
/// [`polish`]. Returns the last iterate, the iteration count and whether it
/// converged.
fn climb(p: PreparationState, w: &Weights, st: &OptimizerSettings) -> (PreparationState, usize, bool) {
    let (p, its, settled) = iterate(p, w, st);
    if settled && quadratic(&p, w) <= ZERO_OBJECTIVE * weight_scale(w) {
        return (p, its, true);
    }
    let (p, extra) = polish(p, w);
    let ok = settled || stationarity_residual(&p, w) <= st.tolerance;
    (p, its + extra, ok)
}

fn iterate(mut p: PreparationState, w: &Weights, st: &OptimizerSettings) -> (PreparationState, usize, bool) {
    for it in 1..=st.max_iterations {
        let step = match fixed_point_step(&p, w) {
            Ok(s) => s,
            Err(_) => return (p, it - 1, true),
        };
        let mix = |x: &Triple, y: &Triple| {
            let mut o = [C0; 3];
            for k in 0..3 {
                o[k] = x[k] * (1.0 - st.damping) + y[k] * st.damping;
            }
            o
        };
        let next = match PreparationState::normalized(mix(&p.a, &step.a), mix(&p.b, &step.b)) {
            Ok(n) => n,
            Err(_) => return (p, it, false),
        };
        let change = max_change(&p, &next);
        p = next;
        if change < st.tolerance {
            return (p, it, true);
        }
    }
    (p, st.max_iterations, false)
}

/// `w → max(w) − w`, so that maximizing the result minimizes `Σ P_S w_S`.
fn flipped(w: &Weights) -> Weights {
    let top = w.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    w.map(|x| top - x)
}

fn shifted(w: Weights) -> Weights {
    let low = w.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    w.map(|x| x - low)
}

/// Dinkelbach iteration for the ratio: repeatedly extremize
/// `σ^AI − λ σ^PI` and update `λ` to the achieved ratio.
fn climb_ratio(
    mut p: PreparationState,
    s: &SpinSigmas,
    sense: Sense,
    st: &OptimizerSettings,
) -> (PreparationState, usize, bool) {
    let ratio = |p: &PreparationState| objective_at(p, s, Objective::Ratio);
    let Some(mut lambda) = ratio(&p) else {
        return (p, 0, true);
    };
    let mut total = 0;
    for _ in 0..100 {
        let mut w = [s.ai[0] - lambda * s.pi[0], s.ai[1] - lambda * s.pi[1], 0.0];
        if sense == Sense::Min {
            w = w.map(|x| -x);
        }
        let (q, its, ok) = climb(p, &shifted(w), st);
        total += its;
        let Some(next) = ratio(&q) else {
            return (p, total, false);
        };
        let moved = max_change(&p, &q);
        p = q;
        let settled = (next - lambda).abs() <= 4.0 * f64::EPSILON * next.abs();
        lambda = next;
        if !ok {
            return (p, total, false);
        }
        if settled && moved < st.tolerance {
            return (p, total, true);
        }
    }
    (p, total, false)
}

/// Objective value; the ratio counts as undefined once `σ^PI` is at the
/// rounding level of the channel values.
fn value_of(objective: Objective, sigma: &ControlledSigma, s: &SpinSigmas) -> Option<f64> {
    match objective {
        Objective::Ratio if sigma.pi <= ZERO_OBJECTIVE * s.pi[0].max(s.pi[1]) => None,
        _ => objective.value(sigma),
    }
}

fn objective_at(p: &PreparationState, s: &SpinSigmas, objective: Objective) -> Option<f64> {
    value_of(objective, &controlled_sigma(&couple(&p.a, &p.b), s), s)
}

/// Compares the objective at `p` with `probes` nearby normalized points.
fn classify(p: &PreparationState, s: &SpinSigmas, objective: Objective, sense: Sense, probe: f64) -> Classification {
    let Some(f0) = objective_at(p, s, objective) else {
        return Classification::BoundaryDegenerate;
    };
    let scale = match objective.weights(s) {
        Some(w) => weight_scale(&w),
        None => f0.abs(),
    };
    let tol = 1e-10 * f0.abs() + 1e-14 * scale;
    const PRIMES: [u8; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let (mut above, mut below) = (false, false);
    for n in 1..=48 {
        let d: Vec<f64> = PRIMES.iter().map(|b| 2.0 * halton::number(*b, n) - 1.0).collect();
        let shift = |x: &Triple, o: usize| {
            let mut y = *x;
            for k in 0..3 {
                y[k] += Complex64::new(d[o + 2 * k], d[o + 2 * k + 1]) * probe;
            }
            y
        };
        let Ok(q) = PreparationState::normalized(shift(&p.a, 0), shift(&p.b, 6)) else {
            continue;
        };
        if let Some(f) = objective_at(&q, s, objective) {
            above |= f > f0 + tol;
            below |= f < f0 - tol;
        }
    }
    match (above, below) {
        (false, true) => Classification::Max,
        (true, false) => Classification::Min,
        (false, false) => match sense {
            Sense::Max => Classification::Max,
            Sense::Min => Classification::Min,
        },
        (true, true) => Classification::Saddle,
    }
}

fn finish(
    p: PreparationState,
    s: &SpinSigmas,
    objective: Objective,
    sense: Sense,
    iterations: usize,
    converged: bool,
    st: &OptimizerSettings,
) -> StationaryPoint {
    let sigma = controlled_sigma(&couple(&p.a, &p.b), s);
    let (residual, multiplier) = match objective.weights(s) {
        Some(w) => {
            let (ga, _) = gradient(&p, &w);
            let lambda: Complex64 = p.a.iter().zip(&ga).map(|(x, g)| x.conj() * g).sum();
            (stationarity_residual(&p, &w), lambda.re)
        }
        None => (ratio_residual(&p, s).unwrap_or(0.0), 0.0),
    };
    StationaryPoint {
        objective,
        sense,
        representative: reduce(&p),
        sigma,
        value: value_of(objective, &sigma, s),
        multiplier,
        residual,
        iterations,
        converged,
        classification: classify(&p, s, objective, sense, st.probe),
        preparation: p,
    }
}

/// Iterates from one seed with per-spin values `s`.
pub fn optimize_with(
    sa: &SeedAngles,
    s: &SpinSigmas,
    objective: Objective,
    sense: Sense,
    st: &OptimizerSettings,
) -> Result<StationaryPoint> {
    st.validate()?;
    let p0 = seed(sa);
    // seeds on the σ = 0 manifold are already global minima
    let pop = couple(&p0.a, &p0.b).populations();
    if pop[0] + pop[1] <= ZERO_OBJECTIVE {
        return Ok(finish(p0, s, objective, sense, 0, true, st));
    }
    let (p, its, ok) = match objective.weights(s) {
        Some(w) => {
            let w = match sense {
                Sense::Max => w,
                Sense::Min => flipped(&w),
            };
            climb(p0, &w, st)
        }
        None => climb_ratio(p0, s, sense, st),
    };
    Ok(finish(p, s, objective, sense, its, ok, st))
}

/// Iterates from one seed at `E*`, interpolating the table.
pub fn optimize(
    sa: &SeedAngles,
    table: &CrossSectionTable,
    e_star: f64,
    objective: Objective,
    sense: Sense,
    st: &OptimizerSettings,
) -> Result<StationaryPoint> {
    optimize_with(sa, &table.at(e_star)?, objective, sense, st)
}

/// A distinct stationary point and the seeds that reached it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Found {
    pub point: StationaryPoint,
    /// 1-based Halton index of the first seed that reached the orbit.
    pub first_seed: usize,
    pub hits: usize,
}

/// Runs `n` Halton seeds and merges results lying on one symmetry orbit.
/// Sorted best first.
pub fn multistart_with(
    n: usize,
    s: &SpinSigmas,
    objective: Objective,
    sense: Sense,
    st: &OptimizerSettings,
) -> Result<Vec<Found>> {
    if n == 0 {
        return Err(Error::validation("seeds", "at least one seed is required"));
    }
    let points = (1..=n)
        .into_par_iter()
        .map(|i| optimize_with(&SeedAngles::halton(i), s, objective, sense, st))
        .collect::<Result<Vec<_>>>()?;
    // values at the rounding level of the channel values count as zero
    let floor = match objective.weights(s) {
        Some(w) => ZERO_OBJECTIVE * weight_scale(&w),
        None => 0.0,
    };
    let mut found: Vec<Found> = Vec::new();
    for (i, point) in points.into_iter().enumerate() {
        let same = |f: &Found| {
            let close = match (f.point.value, point.value) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-8 * x.abs().max(y.abs()) + floor,
                (None, None) => true,
                _ => false,
            };
            let (u, v) = (invariants(&f.point.preparation), invariants(&point.preparation));
            close
                && u.iter().zip(&v).all(|(x, y)| (x - y).abs() < 10.0 * ORBIT_TOLERANCE)
                && orbit_distance(&f.point.preparation, &point.preparation) < ORBIT_TOLERANCE
        };
        match found.iter_mut().find(|f| same(f)) {
            Some(f) => f.hits += 1,
            None => found.push(Found {
                point,
                first_seed: i + 1,
                hits: 1,
            }),
        }
    }
    let key = |f: &Found| match (f.point.value, sense) {
        (Some(v), Sense::Max) => -v,
        (Some(v), Sense::Min) => v,
        (None, _) => f64::INFINITY,
    };
    found.sort_by(|x, y| key(x).total_cmp(&key(y)));
    Ok(found)
}

pub fn multistart(
    n: usize,
    table: &CrossSectionTable,
    e_star: f64,
    objective: Objective,
    sense: Sense,
    st: &OptimizerSettings,
) -> Result<Vec<Found>> {
    multistart_with(n, &table.at(e_star)?, objective, sense, st)
}

// ---------------------------------------------------------------------------
// symmetry orbits

/// `D¹_{M'M}(α, β, γ)` in the `M = -1, 0, 1` ordering.
fn rotation(alpha: f64, beta: f64, gamma: f64) -> [[Complex64; 3]; 3] {
    let d = wigner_d1(beta);
    let mut out = [[C0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let (mp, m) = (i as f64 - 1.0, j as f64 - 1.0);
            *x = Complex64::from_polar(d.entries[i][j], -mp * alpha - m * gamma);
        }
    }
    out
}

fn apply(r: &[[Complex64; 3]; 3], v: &Triple) -> Triple {
    r.map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
}

fn inner(x: &Triple, y: &Triple) -> Complex64 {
    x.iter().zip(y).map(|(u, v)| u.conj() * v).sum()
}

/// `|⟨a_p, R a_q⟩| + |⟨b_p, R b_q⟩|`; global phases of each atom drop out.
fn overlap(p: &PreparationState, q: &PreparationState, e: [f64; 3]) -> f64 {
    let r = rotation(e[0], e[1], e[2]);
    inner(&p.a, &apply(&r, &q.a)).norm() + inner(&p.b, &apply(&r, &q.b)).norm()
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Smallest `‖p − g·q‖` over global rotations `g` (and phases of each
/// atom). A coarse Euler grid seeds cyclic golden-section searches along
/// rotations about three fixed axes applied on top of the current best, which
/// avoids the degeneracy of Euler angles near `β = 0`.
fn best_alignment(p: &PreparationState, q: &PreparationState) -> f64 {
    let mut coarse: Vec<(f64, [f64; 3])> = Vec::with_capacity(12 * 7 * 12);
    for i in 0..12 {
        for j in 0..7 {
            for k in 0..12 {
                let e = [TAU * i as f64 / 12.0, PI * j as f64 / 6.0, TAU * k as f64 / 12.0];
                coarse.push((overlap(p, q, e), e));
            }
        }
    }
    coarse.sort_by(|x, y| y.0.total_cmp(&x.0));
    let generators = [
        |t: f64| rotation(0.0, t, 0.0),
        |t: f64| rotation(t, 0.0, 0.0),
        |t: f64| rotation(FRAC_PI_2, t, -FRAC_PI_2),
    ];
    let rotate = |r: &[[Complex64; 3]; 3], x: &PreparationState| PreparationState {
        a: apply(r, &x.a),
        b: apply(r, &x.b),
    };
    // squared distance with the optimal phase of each atom, evaluated
    // directly so that it stays accurate near zero
    let gap = |x: &Triple, y: &Triple| {
        let ph = inner(y, x);
        let ph = if ph.norm() > 0.0 { ph / ph.norm() } else { Complex64::new(1.0, 0.0) };
        x.iter().zip(y).map(|(u, v)| (u - v * ph).norm_sqr()).sum::<f64>()
    };
    let fit = |x: &PreparationState| -(gap(&p.a, &x.a) + gap(&p.b, &x.b));
    let mut best = f64::INFINITY;
    for &(_, e) in coarse.iter().take(6) {
        let mut cur = rotate(&rotation(e[0], e[1], e[2]), q);
        let mut width = PI / 6.0;
        while width > 1e-13 {
            let mut moved = 0.0f64;
            for g in &generators {
                let t = golden_max(|t| fit(&rotate(&g(t), &cur)), -width, width, 1e-3 * width);
                cur = rotate(&g(t), &cur);
                moved = moved.max(t.abs());
            }
            width = (0.5 * width).min((4.0 * moved).max(0.05 * width));
        }
        best = best.min((-fit(&cur)).sqrt());
    }
    best
}

/// Moduli of the rotation-invariant products `a·a`, `b·b` (sorted, for
/// interchange), `a·b` and `⟨a|b⟩`. Equal on an orbit; a cheap filter before
/// [`orbit_distance`].
fn invariants(p: &PreparationState) -> [f64; 4] {
    let (x, y) = (to_cartesian(&p.a), to_cartesian(&p.b));
    let dot = |u: &Triple, v: &Triple| u.iter().zip(v).map(|(s, t)| s * t).sum::<Complex64>().norm();
    let (aa, bb) = (dot(&x, &x), dot(&y, &y));
    [aa.min(bb), aa.max(bb), dot(&x, &y), inner(&p.a, &p.b).norm()]
}

/// Distance between the orbits of `p` and `q` under global rotations of
/// both atoms, separate phases of each atom and interchange of the atoms.
pub fn orbit_distance(p: &PreparationState, q: &PreparationState) -> f64 {
    best_alignment(p, q).min(best_alignment(p, &q.swapped()))
}

// Cartesian form v = Σ_M a_M e_M with e_±1 = ∓(x̂ ± iŷ)/√2, e_0 = ẑ.
fn to_cartesian(a: &Triple) -> Triple {
    let s = FRAC_1_SQRT_2;
    [(a[0] - a[2]) * s, -I * (a[2] + a[0]) * s, a[1]]
}

fn from_cartesian(v: &Triple) -> Triple {
    let s = FRAC_1_SQRT_2;
    [(v[0] + I * v[1]) * s, v[2], -(v[0] - I * v[1]) * s]
}

type Real3 = [f64; 3];

fn cross(x: Real3, y: Real3) -> Real3 {
    [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]]
}

fn unit(x: Real3) -> Real3 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.map(|v| v / n)
}

fn len(x: Real3) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rotate_real(r: &[Real3; 3], v: &Triple) -> Triple {
    r.map(|row| row.iter().zip(v).map(|(x, y)| y * *x).sum())
}

fn about_z(phi: f64) -> [Real3; 3] {
    let (s, c) = phi.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

const FRAME_TOL: f64 = 1e-9;

/// Residual freedom left after fixing the frame of the first atom.
enum Freedom {
    AboutZ,
    HalfTurn,
}

/// Rotation taking atom A to canonical form, and what it leaves free.
/// Isotropic vectors (`v·v = 0`) go to `|1 1⟩`, real ones to `|1 0⟩`,
/// others to a real mix of `|1 ±1⟩` with the `|1 1⟩` part larger.
fn frame(v: &Triple) -> (u8, [Real3; 3], Freedom) {
    let s: Complex64 = v.iter().map(|z| z * z).sum();
    let re = |w: &Triple| w.map(|z| z.re);
    let im = |w: &Triple| w.map(|z| z.im);
    if s.norm() <= FRAME_TOL {
        let (x, y) = (re(v), im(v));
        let e3 = unit(cross(x, y));
        let e1 = unit(x);
        let e2 = cross(e3, e1);
        return (0, [e1.map(|t| -t), e2.map(|t| -t), e3], Freedom::AboutZ);
    }
    let w = v.map(|z| z * Complex64::from_polar(1.0, -0.5 * s.arg()));
    let (x, y) = (re(&w), im(&w));
    if len(y) <= FRAME_TOL {
        let e3 = unit(x);
        let pick = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = unit(cross(pick, e3));
        let e2 = cross(e3, e1);
        return (2, [e1, e2, e3], Freedom::AboutZ);
    }
    let e1 = unit(x);
    let e3 = unit(cross(x, y));
    let e2 = cross(e3, e1);
    (1, [e1.map(|t| -t), e2.map(|t| -t), e3], Freedom::HalfTurn)
}

/// Angles about z that put the phase-invariant features of `w` in a
/// standard position.
fn z_candidates(w: &Triple, freedom: &Freedom) -> Vec<f64> {
    match freedom {
        Freedom::HalfTurn => vec![0.0, PI],
        Freedom::AboutZ => {
            let (x, y) = (w.map(|z| z.re), w.map(|z| z.im));
            let m = cross(x, y);
            if m[0].hypot(m[1]) > FRAME_TOL {
                return vec![-m[1].atan2(m[0])];
            }
            let q = |i: usize, j: usize| x[i] * x[j] + y[i] * y[j];
            let (dxx, dxy) = (q(0, 0) - q(1, 1), 2.0 * q(0, 1));
            if dxx.hypot(dxy) > FRAME_TOL {
                let phi = -0.5 * dxy.atan2(dxx);
                vec![phi, phi + PI]
            } else {
                vec![0.0]
            }
        }
    }
}

/// Multiplies by the phase making the first sizeable component (in the
/// order `M = 1, 0, -1`) real and positive.
fn fix_phase(a: &Triple) -> Triple {
    let lead = [2, 1, 0].into_iter().map(|k| a[k]).find(|z| z.norm() > FRAME_TOL);
    match lead {
        Some(z) => {
            let ph = z.conj() / z.norm();
            a.map(|x| x * ph)
        }
        None => *a,
    }
}

fn sort_key(p: &PreparationState) -> Vec<i64> {
    p.a.iter()
        .chain(&p.b)
        .flat_map(|z| [z.re, z.im])
        .map(|x| (x * 1e9).round() as i64)
        .collect()
}

fn reduce_ordered(p: &PreparationState) -> (u8, PreparationState) {
    let (kind, r, freedom) = frame(&to_cartesian(&p.a));
    let (va, vb) = (rotate_real(&r, &to_cartesian(&p.a)), rotate_real(&r, &to_cartesian(&p.b)));
    let mut best: Option<PreparationState> = None;
    for phi in z_candidates(&vb, &freedom) {
        let z = about_z(phi);
        let cand = PreparationState {
            a: fix_phase(&from_cartesian(&rotate_real(&z, &va))),
            b: fix_phase(&from_cartesian(&rotate_real(&z, &vb))),
        };
        if best.as_ref().is_none_or(|b| sort_key(&cand) < sort_key(b)) {
            best = Some(cand);
        }
    }
    (kind, best.expect("at least one candidate"))
}

/// Canonical member of the symmetry orbit of `p`: a global rotation brings
/// atom A to a standard frame, the remaining freedom is fixed with atom B,
/// and each atom's phase makes its leading coefficient real positive.
/// The atom whose coefficient vector is closer to isotropic comes first.
pub fn reduce(p: &PreparationState) -> PreparationState {
    let (ka, x) = reduce_ordered(p);
    let (kb, y) = reduce_ordered(&p.swapped());
    if (kb, sort_key(&y)) < (ka, sort_key(&x)) {
        y
    } else {
        x
    }
}

/// Largest violation of the conditions characterizing the `a₁ = b₋₁ = 1`
/// family: `|a₁ + a₋₁|² = |b₁ + b₋₁|² = 1`, `a_j = e^{iρ}(−1)^j b_{−j}`
/// and real ratios within each atom.
pub fn maximal_family_residual(p: &PreparationState) -> f64 {
    let (a, b) = (&p.a, &p.b);
    let sign = |j: usize| if j == 1 { 1.0 } else { -1.0 };
    let mut worst = ((a[2] + a[0]).norm_sqr() - 1.0).abs();
    worst = worst.max(((b[2] + b[0]).norm_sqr() - 1.0).abs());
    // best e^{iρ} for a_j = e^{iρ}(−1)^j b_{−j}
    let mirrored: Triple = [0, 1, 2].map(|j| b[2 - j] * sign(j));
    let phase = inner(&mirrored, a);
    let e = if phase.norm() > 0.0 { phase / phase.norm() } else { Complex64::new(1.0, 0.0) };
    for j in 0..3 {
        worst = worst.max((a[j] - e * mirrored[j]).norm());
    }
    for v in [a, b] {
        for j in 0..3 {
            for k in 0..3 {
                worst = worst.max((v[j] * v[k].conj()).im.abs());
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// grid oracle

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub objective: Objective,
    pub resolution: usize,
    pub max: f64,
    pub min: f64,
    pub argmax: SeedAngles,
    pub argmin: SeedAngles,
    pub evaluations: u64,
}

/// Exhaustive evaluation over the seed lattice with `resolution` points per
/// angle. Populations are computed from invariants rather than from the
/// coupled coefficients: `P₀ = |a₁b₋₁ − a₀b₀ + a₋₁b₁|²/3` and
/// `P₁ = (1 − |⟨a|b⟩|²)/2` (antisymmetric part of `a ⊗ b`).
pub fn grid_oracle_with(s: &SpinSigmas, objective: Objective, resolution: usize) -> Result<OracleResult> {
    if resolution < 8 {
        return Err(Error::validation("resolution", "at least 8 points per angle"));
    }
    let n = resolution;
    let angles = |k: usize| {
        let (i, j, p, q) = (k / (n * n * n), (k / (n * n)) % n, (k / n) % n, k % n);
        let f = |m: usize| FRAC_PI_2 * m as f64 / n as f64;
        let g = |m: usize| TAU * m as f64 / n as f64;
        (f(i), f(j), g(p), g(q))
    };
    let count = n * n * n * n;
    let triples: Vec<Triple> = (0..count)
        .map(|k| {
            let (r, e, p0, p1) = angles(k);
            seed_triple(r, e, p0, p1)
        })
        .collect();
    let eval = |a: &Triple, b: &Triple| -> Option<f64> {
        let singlet = a[2] * b[0] - a[1] * b[1] + a[0] * b[2];
        let p0 = singlet.norm_sqr() / 3.0;
        let p1 = 0.5 * (1.0 - inner(a, b).norm_sqr());
        let ai = p0 * s.ai[0] + p1 * s.ai[1];
        let pi = p0 * s.pi[0] + p1 * s.pi[1];
        match objective {
            Objective::Ai => Some(ai),
            Objective::Pi => Some(pi),
            Objective::Ratio => (pi > 0.0).then(|| ai / pi),
        }
    };
    // per-A extremes, reduced in index order so ties resolve identically
    let per_a: Vec<(f64, usize, f64, usize)> = triples
        .par_iter()
        .map(|a| {
            let (mut hi, mut ih, mut lo, mut il) = (f64::NEG_INFINITY, 0, f64::INFINITY, 0);
            for (k, b) in triples.iter().enumerate() {
                if let Some(v) = eval(a, b) {
                    if v > hi {
                        (hi, ih) = (v, k);
                    }
                    if v < lo {
                        (lo, il) = (v, k);
                    }
                }
            }
            (hi, ih, lo, il)
        })
        .collect();
    let (mut hi, mut arg_hi, mut lo, mut arg_lo) = (f64::NEG_INFINITY, (0, 0), f64::INFINITY, (0, 0));
    for (ka, &(h, ih, l, il)) in per_a.iter().enumerate() {
        if h > hi {
            (hi, arg_hi) = (h, (ka, ih));
        }
        if l < lo {
            (lo, arg_lo) = (l, (ka, il));
        }
    }
    let seed_of = |(ka, kb): (usize, usize)| {
        let (rho, eta, alpha0, alpha1) = angles(ka);
        let (psi, chi, beta0, beta1) = angles(kb);
        SeedAngles {
            rho,
            eta,
            psi,
            chi,
            alpha0,
            alpha1,
            beta0,
            beta1,
        }
    };
    Ok(OracleResult {
        objective,
        resolution,
        max: hi,
        min: lo,
        argmax: seed_of(arg_hi),
        argmin: seed_of(arg_lo),
        evaluations: (count as u64) * (count as u64),
    })
}

pub fn grid_oracle(table: &CrossSectionTable, e_star: f64, objective: Objective, resolution: usize) -> Result<OracleResult> {
    grid_oracle_with(&table.at(e_star)?, objective, resolution)
}
