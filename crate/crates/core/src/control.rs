//! Coherent control through the atomic preparation.
//!
//! Each atom is prepared in `Σ_M a_M |1M⟩` (resp. `b_M`). The pair couples
//! to molecular spin states `|S M⟩` with `c_SM = Σ a_M b_M' ⟨S M|1M, 1M'⟩`,
//! and, since σ_S does not depend on `M`, the controlled cross section is
//! `σ = Σ_{S,M} |c_SM|² σ_S` with `σ_2 = 0`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::angular::{spin_one_table, wigner_big_d, wigner_d1};
use crate::ionization::{CrossSectionTable, SpinSigmas};
use crate::{Error, Result};

/// Tolerance on `Σ|a_M|² = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Preparation of both atoms; arrays are ordered `M = -1, 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreparationState {
    #[serde(serialize_with = "ser_triple")]
    pub a: [Complex64; 3],
    #[serde(serialize_with = "ser_triple")]
    pub b: [Complex64; 3],
}

fn ser_triple<S: serde::Serializer>(v: &[Complex64; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.map(|z| [z.re, z.im]).serialize(s)
}

fn norm2(v: &[Complex64; 3]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl PreparationState {
    /// Checked constructor.
    pub fn new(a: [Complex64; 3], b: [Complex64; 3]) -> Result<Self> {
        let p = Self { a, b };
        p.check()?;
        Ok(p)
    }

    /// Scales both triples to unit norm.
    pub fn normalized(a: [Complex64; 3], b: [Complex64; 3]) -> Result<Self> {
        let (na, nb) = (norm2(&a).sqrt(), norm2(&b).sqrt());
        if !(na > 0.0 && nb > 0.0 && na.is_finite() && nb.is_finite()) {
            return Err(Error::validation("preparation", "zero or non-finite coefficients"));
        }
        Ok(Self {
            a: a.map(|z| z / na),
            b: b.map(|z| z / nb),
        })
    }

    /// `|1 M_A⟩|1 M_B⟩`.
    pub fn product(m_a: i32, m_b: i32) -> Result<Self> {
        if m_a.abs() > 1 || m_b.abs() > 1 {
            return Err(Error::validation("sublevel", format!("|M| ≤ 1 required, got {m_a}, {m_b}")));
        }
        let mut p = Self {
            a: [C0; 3],
            b: [C0; 3],
        };
        p.a[(m_a + 1) as usize] = C1;
        p.b[(m_b + 1) as usize] = C1;
        Ok(p)
    }

    pub fn a(&self, m: i32) -> Complex64 {
        self.a[(m + 1) as usize]
    }

    pub fn b(&self, m: i32) -> Complex64 {
        self.b[(m + 1) as usize]
    }

    pub fn norms(&self) -> (f64, f64) {
        (norm2(&self.a), norm2(&self.b))
    }

    pub fn check(&self) -> Result<()> {
        let (na, nb) = self.norms();
        for (field, n) in [("a", na), ("b", nb)] {
            if !((n - 1.0).abs() <= NORM_TOLERANCE) {
                return Err(Error::validation(field, format!("Σ|c_M|² = {n}, expected 1")));
            }
        }
        Ok(())
    }

    /// Atoms interchanged.
    pub fn swapped(&self) -> Self {
        Self { a: self.b, b: self.a }
    }
}

/// Molecular coefficients `c_SM`, stored `S = 0` first, then `S = 1` and
/// `S = 2` with `M` ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MolecularState {
    #[serde(serialize_with = "ser_nine")]
    pub c: [Complex64; 9],
}

fn ser_nine<S: serde::Serializer>(v: &[Complex64; 9], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.map(|z| [z.re, z.im]).serialize(s)
}

impl MolecularState {
    /// Storage index of `(S, M)`.
    pub fn index(s: u32, m: i32) -> usize {
        assert!(s <= 2 && m.unsigned_abs() <= s, "no |S M⟩ = |{s} {m}⟩");
        (s * s) as usize + (m + s as i32) as usize
    }

    pub fn get(&self, s: u32, m: i32) -> Complex64 {
        self.c[Self::index(s, m)]
    }

    /// `Σ_M |c_SM|²` for each `S`.
    pub fn populations(&self) -> [f64; 3] {
        let p = |r: std::ops::Range<usize>| self.c[r].iter().map(|z| z.norm_sqr()).sum();
        [p(0..1), p(1..4), p(4..9)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Global rotation `c'_{SM'} = Σ_M D^S_{M'M}(φ, θ, 0) c_SM`.
    pub fn rotated(&self, phi: f64, theta: f64) -> Self {
        let mut out = [C0; 9];
        for s in 0..=2u32 {
            let si = s as i32;
            for mp in -si..=si {
                out[Self::index(s, mp)] = (-si..=si)
                    .map(|m| {
                        wigner_big_d(s, mp, m, phi, theta).expect("spin ≤ 2 is in range") * self.get(s, m)
                    })
                    .sum();
            }
        }
        Self { c: out }
    }
}

/// Unchecked `c_SM = Σ a_M b_M' ⟨S M|1M, 1M'⟩` for arbitrary triples.
pub fn couple(a: &[Complex64; 3], b: &[Complex64; 3]) -> MolecularState {
    let cg = spin_one_table();
    let mut c = [C0; 9];
    for s in 0..=2u32 {
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                let m = i as i32 + j as i32 - 2;
                if m.unsigned_abs() > s {
                    continue;
                }
                c[MolecularState::index(s, m)] += ai * bj * cg[s as usize][(m + 2) as usize][i][j];
            }
        }
    }
    MolecularState { c }
}

/// Molecular coefficients of a normalized preparation.
pub fn molecular_coefficients(p: &PreparationState) -> Result<MolecularState> {
    p.check()?;
    Ok(couple(&p.a, &p.b))
}

/// The nine coefficients written out term by term.
pub fn closed_form_coefficients(a: &[Complex64; 3], b: &[Complex64; 3]) -> MolecularState {
    let (am, a0, ap) = (a[0], a[1], a[2]);
    let (bm, b0, bp) = (b[0], b[1], b[2]);
    let (r2, r3, r6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
    let mut c = [C0; 9];
    c[MolecularState::index(2, 2)] = ap * bp;
    c[MolecularState::index(2, 1)] = (ap * b0 + a0 * bp) / r2;
    c[MolecularState::index(2, 0)] = (ap * bm + 2.0 * a0 * b0 + am * bp) / r6;
    c[MolecularState::index(2, -1)] = (a0 * bm + am * b0) / r2;
    c[MolecularState::index(2, -2)] = am * bm;
    c[MolecularState::index(1, 1)] = (ap * b0 - a0 * bp) / r2;
    c[MolecularState::index(1, 0)] = (ap * bm - am * bp) / r2;
    c[MolecularState::index(1, -1)] = (a0 * bm - am * b0) / r2;
    c[MolecularState::index(0, 0)] = (ap * bm - a0 * b0 + am * bp) / r3;
    MolecularState { c }
}

/// Controlled AI and PI cross sections, bohr².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlledSigma {
    pub ai: f64,
    pub pi: f64,
}

impl ControlledSigma {
    pub fn total(&self) -> f64 {
        self.ai + self.pi
    }

    pub fn ratio(&self) -> Option<f64> {
        (self.pi > 0.0).then(|| self.ai / self.pi)
    }
}

/// `Σ_S P_S σ_S` from per-spin values.
pub fn sigma_from_populations(pop: &[f64; 3], sigmas: &SpinSigmas) -> ControlledSigma {
    ControlledSigma {
        ai: pop[0] * sigmas.ai[0] + pop[1] * sigmas.ai[1],
        pi: pop[0] * sigmas.pi[0] + pop[1] * sigmas.pi[1],
    }
}

pub fn controlled_sigma(m: &MolecularState, sigmas: &SpinSigmas) -> ControlledSigma {
    sigma_from_populations(&m.populations(), sigmas)
}

/// Controlled cross sections at `E*`, interpolating the table.
pub fn total_sigma(m: &MolecularState, table: &CrossSectionTable, e_star: f64) -> Result<ControlledSigma> {
    Ok(controlled_sigma(m, &table.at(e_star)?))
}

/// `σ^AI/σ^PI`; fails with [`Error::UndefinedRatio`] when `σ^PI = 0`.
pub fn ionization_ratio(sigma: &ControlledSigma) -> Result<f64> {
    sigma.ratio().ok_or(Error::UndefinedRatio)
}

/// Per-channel ratios `σ_S^AI/σ_S^PI` for `S = 0, 1`.
pub fn channel_ratios(sigmas: &SpinSigmas) -> Result<[f64; 2]> {
    if sigmas.pi.iter().any(|v| *v <= 0.0) {
        return Err(Error::UndefinedRatio);
    }
    Ok([sigmas.ai[0] / sigmas.pi[0], sigmas.ai[1] / sigmas.pi[1]])
}

/// Range `[min, max]` that every controlled ratio falls into.
pub fn ratio_bounds(sigmas: &SpinSigmas) -> Result<(f64, f64)> {
    let [r0, r1] = channel_ratios(sigmas)?;
    Ok((r0.min(r1), r0.max(r1)))
}

/// Ratio reached by the `a₁ = b₋₁ = 1` family:
/// `(2σ₀^AI + 3σ₁^AI) / (2σ₀^PI + 3σ₁^PI)`.
pub fn maximal_state_ratio(sigmas: &SpinSigmas) -> Result<f64> {
    let den = 2.0 * sigmas.pi[0] + 3.0 * sigmas.pi[1];
    if den <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok((2.0 * sigmas.ai[0] + 3.0 * sigmas.ai[1]) / den)
}

/// Rotates atom A by `α` and atom B by `β` about the laboratory Y axis.
pub fn rotate_preparation(p: &PreparationState, alpha: f64, beta: f64) -> PreparationState {
    PreparationState {
        a: wigner_d1(alpha).apply(&p.a),
        b: wigner_d1(beta).apply(&p.b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: ControlledSigma,
    /// `None` where `σ^PI = 0`.
    pub ratio: Option<f64>,
}

/// Controlled cross sections over an `(α, β)` grid for one initial product
/// state. Points are stored with `α` as the outer index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSurface {
    pub m_a: i32,
    pub m_b: i32,
    pub energy: f64,
    pub channel: SpinSigmas,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub points: Vec<SurfacePoint>,
}

impl ControlSurface {
    pub fn at(&self, i_alpha: usize, i_beta: usize) -> &SurfacePoint {
        &self.points[i_alpha * self.beta.len() + i_beta]
    }

    /// `σ₁^AI/σ₁^PI`, the limit of the ratio for small rotations away from
    /// a pure `S = 2` state. Opt-in replacement for undefined points.
    pub fn fallback_ratio(&self) -> Option<f64> {
        (self.channel.pi[1] > 0.0).then(|| self.channel.ai[1] / self.channel.pi[1])
    }

    /// CSV with header `alpha,beta,gamma,sigma_AI,sigma_PI,ratio`; an
    /// undefined ratio is an empty field.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,beta,gamma,sigma_AI,sigma_PI,ratio\n");
        for p in &self.points {
            let ratio = p.ratio.map(|r| format!("{r:e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e},{ratio}",
                p.alpha, p.beta, p.gamma, p.sigma.ai, p.sigma.pi
            );
        }
        s
    }
}

/// Scan of `R_Y(α)|1 M_A⟩ R_Y(β)|1 M_B⟩` with per-spin values `sigmas`.
pub fn scan_with(
    m_a: i32,
    m_b: i32,
    alpha: &[f64],
    beta: &[f64],
    sigmas: &SpinSigmas,
    energy: f64,
) -> Result<ControlSurface> {
    if alpha.is_empty() || beta.is_empty() {
        return Err(Error::validation("grid", "angle grids must be non-empty"));
    }
    let start = PreparationState::product(m_a, m_b)?;
    let points = (0..alpha.len() * beta.len())
        .into_par_iter()
        .map(|n| {
            let (al, be) = (alpha[n / beta.len()], beta[n % beta.len()]);
            let p = rotate_preparation(&start, al, be);
            let sigma = controlled_sigma(&couple(&p.a, &p.b), sigmas);
            SurfacePoint {
                alpha: al,
                beta: be,
                gamma: be - al,
                sigma,
                ratio: sigma.ratio(),
            }
        })
        .collect();
    Ok(ControlSurface {
        m_a,
        m_b,
        energy,
        channel: *sigmas,
        alpha: alpha.to_vec(),
        beta: beta.to_vec(),
        points,
    })
}

/// Scan at `E*`, interpolating the table.
pub fn scan(
    m_a: i32,
    m_b: i32,
    alpha: &[f64],
    beta: &[f64],
    table: &CrossSectionTable,
    e_star: f64,
) -> Result<ControlSurface> {
    scan_with(m_a, m_b, alpha, beta, &table.at(e_star)?, e_star)
}

/// `n` equally spaced angles on `[0, 2π)`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect()
}
