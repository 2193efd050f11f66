//! Penning (PI) and associative (AI) ionization in cold collisions of two
//! metastable He(2³S) atoms, and coherent control of both processes through
//! the preparation of the atomic spin sublevels.
//!
//! The crate is layered bottom-up:
//!
//! - [`angular`]: Clebsch–Gordan coefficients, Wigner 3j symbols and reduced
//!   rotation matrices.
//! - [`potentials`]: potential curves and autoionization widths, file
//!   ingestion and bundled analytic model systems.
//! - [`radial`]: renormalized Numerov propagation, phase shifts and bound
//!   states of single-channel radial equations.
//! - [`ionization`]: S-matrix elements and the per-spin cross sections
//!   `σ_S^AI(E)`, `σ_S^PI(E)`.
//! - [`control`]: atomic → molecular coefficient algebra, controlled cross
//!   sections and rotated-state scans.
//! - [`optimizer`]: fixed-point extremization of the controlled cross
//!   sections and of the AI/PI ratio.
//! - [`cli`]: the `hestar` command-line surface.
//!
//! Atomic units (bohr, hartree, electron masses) are used everywhere except
//! at the command-line boundary.

pub mod angular;
pub mod cli;
pub mod control;
pub mod error;
pub mod ionization;
pub mod optimizer;
pub mod potentials;
pub mod radial;
pub mod units;

pub use error::{Error, Result};
