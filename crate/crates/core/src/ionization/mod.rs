//! Penning and associative ionization: selection rules, the electronic
//! coupling `V_εℓ(R)`, S-matrix elements and the per-spin cross sections
//! `σ_S^PI(E*)`, `σ_S^AI(E*)`.
//!
//! The entrance wave `ψ_d^{J*}` (optical potential, complex phase `δ^{J*}`)
//! couples to ion-pair continua `ψ_ε^{J₊}` (PI) and bound ion levels
//! `ψ_v^{J₊}` (AI) through `V_εℓ = α_ℓmax √(Γ/2π)`:
//!
//! ```text
//! S_PI = -2i · 2μ√ρ_ε · e^{i(δ^{J*} + δ_f^{J₊})} ⟨ψ_ε^{J₊}|V_εℓ|ψ_d^{J*}⟩
//! S_AI = -2i · √(2μρ_ε) · e^{iδ^{J*}} ⟨ψ_v^{J₊}|V_εℓ|ψ_d^{J*}⟩
//! ```
//!
//! with `ρ_ε = 1`. Integrating `|f|²` over both outgoing directions leaves
//! an incoherent sum over `J*`:
//!
//! ```text
//! σ_S = π/k² Σ_{J*} (2J*+1) Σ_{ℓ,J₊} (2J₊+1) (J₊ ℓ J*; 0 0 0)² [∫|S_PI|² dE₊ or Σ_v |S_AI|²]
//! ```

mod engine;
mod table;

pub use engine::{ChannelSigma, Ionizer, PartialWave};
pub use table::{CrossSectionTable, SpinSigmas, TableRow, CSV_HEADER};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::three_j_zero;
use crate::potentials::{Parity, PotentialCurve};
use crate::radial::RadialGrid;
use crate::{Error, Result};

/// Density of electronic continuum states; the electron continuum is
/// energy normalized and the density is folded into `V_εℓ`.
pub const RHO_EPS: f64 = 1.0;

/// Modulus of the PI prefactor, `2μ√ρ_ε`.
pub fn pi_prefactor(mu: f64) -> f64 {
    2.0 * mu * RHO_EPS.sqrt()
}

/// Modulus of the AI prefactor, `√(2μρ_ε)`.
pub fn ai_prefactor(mu: f64) -> f64 {
    (2.0 * mu * RHO_EPS).sqrt()
}

/// Why a `(J*, J₊, ℓ)` combination cannot contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Forbidden {
    /// Bosonic nuclei: `J*` even for gerade, odd for ungerade entrance.
    EntranceParity,
    /// `ℓ` even for g→g and u→u, odd for g↔u.
    ElectronParity,
    /// `(J₊, ℓ, J*)` violates the triangle rule.
    Triangle,
    /// `J* + ℓ + J₊` odd, so `(J₊ ℓ J*; 0 0 0)` vanishes.
    ThreeJParity,
}

/// Parity selection rules of the homonuclear, bosonic collision.
pub struct SelectionRules;

impl SelectionRules {
    pub fn entrance_allows(entrance: Parity, j_star: u32) -> bool {
        match entrance {
            Parity::Gerade => j_star % 2 == 0,
            Parity::Ungerade => j_star % 2 == 1,
        }
    }

    pub fn electron_allows(entrance: Parity, exit: Parity, ell: u32) -> bool {
        (entrance == exit) == (ell % 2 == 0)
    }

    /// First violated rule, if any.
    pub fn check(entrance: Parity, exit: Parity, j_star: u32, j_plus: u32, ell: u32) -> Option<Forbidden> {
        if !Self::entrance_allows(entrance, j_star) {
            Some(Forbidden::EntranceParity)
        } else if !Self::electron_allows(entrance, exit, ell) {
            Some(Forbidden::ElectronParity)
        } else if j_plus + ell < j_star || j_star + ell < j_plus || j_star + j_plus < ell {
            Some(Forbidden::Triangle)
        } else if (j_star + j_plus + ell) % 2 == 1 {
            Some(Forbidden::ThreeJParity)
        } else {
            None
        }
    }

    pub fn allows(entrance: Parity, exit: Parity, j_star: u32, j_plus: u32, ell: u32) -> bool {
        Self::check(entrance, exit, j_star, j_plus, ell).is_none()
    }
}

/// Angular weight `(2J₊+1)(J₊ ℓ J*; 0 0 0)²` of one exit partial wave.
pub fn angular_weight(j_star: u32, j_plus: u32, ell: u32) -> Result<f64> {
    let w = three_j_zero(j_plus, ell, j_star)?;
    Ok((2 * j_plus + 1) as f64 * w * w)
}

/// Electronic coupling `V_εℓ(R) = α_ℓmax √(Γ(R)/2π)`, independent of `ε`
/// and `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IonizationCoupling {
    pub ell_max: u32,
    pub alpha: f64,
    pub rho_eps: f64,
}

impl IonizationCoupling {
    pub fn new(ell_max: u32) -> Self {
        Self {
            ell_max,
            alpha: 1.0 / ((ell_max + 1) as f64).sqrt(),
            rho_eps: RHO_EPS,
        }
    }

    /// `V_εℓ` for a local width `Γ`; negative widths count as zero.
    pub fn value(&self, gamma: f64) -> f64 {
        self.alpha * (gamma.max(0.0) / std::f64::consts::TAU).sqrt()
    }
}

/// `R ↦ V_εℓ(R)` for a width curve.
pub fn coupling(width: &PotentialCurve, ell_max: u32) -> impl Fn(f64) -> f64 + Sync + '_ {
    let c = IonizationCoupling::new(ell_max);
    move |r| c.value(width.eval(r))
}

/// Final state of the ion pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExitState {
    /// Dissociating ion pair with kinetic energy `E₊ > 0`.
    Continuum { energy: f64 },
    /// Bound He₂⁺ level `v` at `ε_v < 0`.
    Bound { v: usize, energy: f64 },
}

/// One S-matrix element. Forbidden combinations are returned as an exact
/// zero carrying the violated rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SMatrixElement {
    pub spin: u8,
    pub j_star: u32,
    pub j_plus: u32,
    pub ell: u32,
    pub exit_parity: Parity,
    pub exit: ExitState,
    /// Energy carried off by the electron.
    pub electron_energy: f64,
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub forbidden: Option<Forbidden>,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Numerical controls of the cross-section calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IonizationSettings {
    pub grid: RadialGrid,
    pub ell_max: u32,
    /// Gauss–Legendre nodes per panel of the `√E₊` quadrature.
    pub quadrature_order: usize,
    /// Geometric panels `[x/2, x]` of the `√E₊` quadrature, the last one
    /// reaching down to threshold.
    pub quadrature_panels: usize,
    /// Hard cap on the entrance partial-wave sum.
    pub j_star_max: u32,
    /// The `J*` sum stops once two consecutive allowed terms add less than
    /// this fraction of the running total.
    pub j_star_tolerance: f64,
}

impl Default for IonizationSettings {
    fn default() -> Self {
        Self {
            grid: RadialGrid::default(),
            ell_max: 1,
            quadrature_order: 24,
            quadrature_panels: 6,
            j_star_max: 200,
            j_star_tolerance: 1e-6,
        }
    }
}

impl IonizationSettings {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let checks: [(&str, bool); 9] = [
            ("grid.step", g.step > 0.0 && g.step.is_finite()),
            ("grid.r_start", g.r_start > 0.0),
            ("grid.r_end", g.r_end > g.fine_end),
            ("grid.phase_step", g.phase_step > 0.0 && g.phase_step < 1.0),
            ("grid.bound_box", g.bound_box > g.r_start),
            ("quadrature_order", self.quadrature_order >= 2),
            ("quadrature_panels", self.quadrature_panels >= 1),
            ("j_star_max", self.j_star_max <= crate::radial::MAX_PARTIAL_WAVE),
            ("j_star_tolerance", self.j_star_tolerance > 0.0 && self.j_star_tolerance < 1.0),
        ];
        for (field, ok) in checks {
            if !ok {
                return Err(Error::validation(field, "out of range"));
            }
        }
        if self.ell_max > 20 {
            return Err(Error::validation("ell_max", "at most 20"));
        }
        Ok(())
    }
}
