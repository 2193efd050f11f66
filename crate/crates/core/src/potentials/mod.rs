//! Potential curves, autoionization widths and the molecular channels built
//! from them.
//!
//! All values are in atomic units: `R` in bohr, energies in hartree. The
//! entrance and exit asymptotes are both taken as the zero of their own
//! channel; the energy offset between them lives in [`EnergyConstants`].

mod curve;
mod file;
mod presets;
mod spline;

pub use curve::{AnalyticCurve, CurveKind, LongRange, PotentialCurve};
pub use file::{
    load_curve, load_system_dir, parse_channel, system_report, validate_file, ChannelDocument, ChannelRole, CurveReport,
    LoadedChannel, LongRangeBlock, JUNCTION_TOLERANCE,
};
pub use presets::{model_system, PRESETS};
pub use spline::NaturalSpline;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{ev_to_hartree, HE_2S3_EXCITATION_EV, HE_IONIZATION_EV, HE_PAIR_REDUCED_MASS};
use crate::{Error, Result};

/// Inversion symmetry of a homonuclear molecular state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "g")]
    Gerade,
    #[serde(rename = "u")]
    Ungerade,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Gerade, Parity::Ungerade];

    pub fn symbol(self) -> &'static str {
        match self {
            Parity::Gerade => "g",
            Parity::Ungerade => "u",
        }
    }

    /// Parity carried by the total spin of two spin-1 bosons: `S` even is
    /// gerade, odd is ungerade.
    pub fn of_spin(s: u8) -> Parity {
        if s % 2 == 0 {
            Parity::Gerade
        } else {
            Parity::Ungerade
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A He*–He* molecular state: real well plus autoionization width.
#[derive(Debug, Clone, PartialEq)]
pub struct EntranceChannel {
    spin: u8,
    parity: Parity,
    potential: PotentialCurve,
    width: PotentialCurve,
}

impl EntranceChannel {
    /// `S = 0` must be gerade, `S = 1` ungerade, and `S = 2` (gerade) may
    /// not carry a width.
    pub fn new(spin: u8, parity: Parity, potential: PotentialCurve, width: PotentialCurve) -> Result<Self> {
        if spin > 2 {
            return Err(Error::validation("S", format!("entrance spin must be 0, 1 or 2, got {spin}")));
        }
        if parity != Parity::of_spin(spin) {
            return Err(Error::validation(
                "parity",
                format!("S = {spin} requires parity {}, got {parity}", Parity::of_spin(spin)),
            ));
        }
        if potential.kind() != CurveKind::Potential || width.kind() != CurveKind::Width {
            return Err(Error::validation("kind", "entrance needs a potential and a width curve"));
        }
        if spin == 2 && !width.is_identically_zero() {
            return Err(Error::validation("grid", "the S = 2 channel does not autoionize; its width must be zero"));
        }
        Ok(Self {
            spin,
            parity,
            potential,
            width,
        })
    }

    pub fn spin(&self) -> u8 {
        self.spin
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn potential(&self) -> &PotentialCurve {
        &self.potential
    }

    pub fn width(&self) -> &PotentialCurve {
        &self.width
    }

    /// Optical potential `V(R) - iΓ(R)/2`.
    pub fn eval(&self, r: f64) -> Complex64 {
        Complex64::new(self.potential.eval(r), -0.5 * self.width.eval(r))
    }
}

/// Same as [`EntranceChannel::eval`].
pub fn eval_entrance(ch: &EntranceChannel, r: f64) -> Complex64 {
    ch.eval(r)
}

/// A He₂⁺ ionic state, `²Σg⁺` or `²Σu⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitChannel {
    parity: Parity,
    potential: PotentialCurve,
}

impl ExitChannel {
    pub fn new(parity: Parity, potential: PotentialCurve) -> Result<Self> {
        if potential.kind() != CurveKind::Potential {
            return Err(Error::validation("kind", "exit channel needs a real potential"));
        }
        Ok(Self { parity, potential })
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn potential(&self) -> &PotentialCurve {
        &self.potential
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.potential.eval(r)
    }
}

/// Atomic energies entering the energy balance
/// `E* + 2ε₀ = IE + ε + E₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConstants {
    #[serde(rename = "IE_eV")]
    pub ionization_ev: f64,
    #[serde(rename = "excitation_eV")]
    pub excitation_ev: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        Self {
            ionization_ev: HE_IONIZATION_EV,
            excitation_ev: HE_2S3_EXCITATION_EV,
        }
    }
}

impl EnergyConstants {
    /// Energy released into electron plus ion-pair motion at zero collision
    /// energy, in hartree.
    pub fn released_energy(&self) -> f64 {
        ev_to_hartree(2.0 * self.excitation_ev - self.ionization_ev)
    }

    /// Largest heavy-particle exit energy `E₊` for collision energy `E*`,
    /// reached when the electron is emitted at zero energy.
    pub fn exit_energy_max(&self, e_star: f64) -> f64 {
        e_star + self.released_energy()
    }

    /// Electron energy left over for a given heavy-particle exit energy.
    pub fn electron_energy(&self, e_star: f64, e_plus: f64) -> f64 {
        self.exit_energy_max(e_star) - e_plus
    }
}

/// Entrance channels for `S = 0, 1` (and optionally 2), both exit channels,
/// the reduced mass and the energy constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSystem {
    pub name: String,
    entrance: Vec<EntranceChannel>,
    exit: Vec<ExitChannel>,
    pub constants: EnergyConstants,
    pub reduced_mass: f64,
}

impl ReactionSystem {
    pub fn new(
        name: impl Into<String>,
        entrance: Vec<EntranceChannel>,
        exit: Vec<ExitChannel>,
        constants: EnergyConstants,
    ) -> Result<Self> {
        for s in [0u8, 1] {
            if !entrance.iter().any(|c| c.spin == s) {
                return Err(Error::validation("S", format!("missing entrance channel S = {s}")));
            }
        }
        for p in Parity::BOTH {
            if !exit.iter().any(|c| c.parity == p) {
                return Err(Error::validation("parity", format!("missing exit channel {p}")));
            }
        }
        let mut seen = [0usize; 3];
        for c in &entrance {
            seen[c.spin as usize] += 1;
        }
        if seen.iter().any(|&n| n > 1) || exit.iter().filter(|c| c.parity == Parity::Gerade).count() > 1
            || exit.iter().filter(|c| c.parity == Parity::Ungerade).count() > 1
        {
            return Err(Error::validation("channels", "duplicate channel definition"));
        }
        if !(constants.ionization_ev > 0.0 && constants.excitation_ev > 0.0) {
            return Err(Error::validation("constants", "energies must be positive"));
        }
        if constants.released_energy() <= 0.0 {
            return Err(Error::validation("constants", "2·excitation must exceed the ionization energy"));
        }
        let mut entrance = entrance;
        entrance.sort_by_key(|c| c.spin);
        let mut exit = exit;
        exit.sort_by_key(|c| c.parity);
        Ok(Self {
            name: name.into(),
            entrance,
            exit,
            constants,
            reduced_mass: HE_PAIR_REDUCED_MASS,
        })
    }

    pub fn entrance(&self, spin: u8) -> Option<&EntranceChannel> {
        self.entrance.iter().find(|c| c.spin == spin)
    }

    pub fn entrance_channels(&self) -> &[EntranceChannel] {
        &self.entrance
    }

    pub fn exit(&self, parity: Parity) -> &ExitChannel {
        self.exit.iter().find(|c| c.parity == parity).expect("both exit parities are present")
    }

    pub fn exit_channels(&self) -> &[ExitChannel] {
        &self.exit
    }
}
