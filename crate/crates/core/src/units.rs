//! Physical constants in atomic units (CODATA 2018).

/// Hartree energy in electronvolts.
pub const HARTREE_EV: f64 = 27.211_386_245_988;

/// Boltzmann constant in hartree per kelvin.
pub const BOLTZMANN_HARTREE_PER_K: f64 = 3.166_811_563_455_6e-6;

/// Unified atomic mass unit in electron masses.
pub const DALTON_ME: f64 = 1_822.888_486_209;

/// Mass of a ⁴He atom in daltons.
pub const HE4_MASS_DA: f64 = 4.002_603_254_13;

/// Reduced mass of a ⁴He–⁴He pair in electron masses.
pub const HE_PAIR_REDUCED_MASS: f64 = HE4_MASS_DA * DALTON_ME / 2.0;

/// First ionization energy of He, eV.
pub const HE_IONIZATION_EV: f64 = 24.589;

/// Excitation energy of He(2³S), eV.
pub const HE_2S3_EXCITATION_EV: f64 = 19.820;

pub fn ev_to_hartree(ev: f64) -> f64 {
    ev / HARTREE_EV
}

/// Collision energy for a temperature, `E = k_B T`.
pub fn kelvin_to_hartree(t: f64) -> f64 {
    t * BOLTZMANN_HARTREE_PER_K
}

pub fn hartree_to_kelvin(e: f64) -> f64 {
    e / BOLTZMANN_HARTREE_PER_K
}
