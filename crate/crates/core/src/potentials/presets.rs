//! Bundled analytic stand-in systems.
//!
//! `model-A` uses Morse wells and Gaussian-decay widths with the
//! qualitative geometry of the He*₂ and He₂⁺ curves: entrance wells at
//! 6 bohr, a shallow ²Σg⁺ well near 8 bohr and a deep ²Σu⁺ well near
//! 3 bohr. The numbers are not fitted to any ab initio data. Entrance
//! curves are held constant inside 3 bohr, where the real curves are
//! unreliable.

use super::{
    AnalyticCurve, CurveKind, EnergyConstants, EntranceChannel, ExitChannel, Parity, PotentialCurve, ReactionSystem,
};
use crate::{Error, Result};

pub const PRESETS: [&str; 3] = ["model-A", "model-A-dark", "free"];

/// Inner clamp radius of the model entrance curves.
pub const MODEL_CLAMP_R: f64 = 3.0;

pub const MODEL_A_SINGLET: AnalyticCurve = AnalyticCurve::Morse {
    depth: 3.5e-3,
    r_eq: 6.0,
    a: 0.8,
};
pub const MODEL_A_TRIPLET: AnalyticCurve = AnalyticCurve::Morse {
    depth: 3.3e-3,
    r_eq: 6.0,
    a: 0.82,
};
pub const MODEL_A_QUINTET: AnalyticCurve = AnalyticCurve::Morse {
    depth: 3.1e-3,
    r_eq: 6.0,
    a: 0.84,
};
pub const MODEL_A_SINGLET_WIDTH: AnalyticCurve = AnalyticCurve::GaussianDecay {
    amplitude: 1e-3,
    r_c: 3.0,
    width: 2.5,
};
pub const MODEL_A_TRIPLET_WIDTH: AnalyticCurve = AnalyticCurve::GaussianDecay {
    amplitude: 1e-3,
    r_c: 3.0,
    width: 2.0,
};
pub const MODEL_A_ION_G: AnalyticCurve = AnalyticCurve::Morse {
    depth: 1.5e-3,
    r_eq: 8.0,
    a: 0.6,
};
pub const MODEL_A_ION_U: AnalyticCurve = AnalyticCurve::Morse {
    depth: 0.02,
    r_eq: 3.0,
    a: 1.0,
};

fn pot(c: AnalyticCurve) -> PotentialCurve {
    PotentialCurve::analytic(CurveKind::Potential, c)
}

fn width(c: AnalyticCurve) -> PotentialCurve {
    PotentialCurve::analytic(CurveKind::Width, c)
}

fn model_a(name: &str, with_widths: bool) -> Result<ReactionSystem> {
    let w = |c| {
        if with_widths {
            width(c).with_clamp(MODEL_CLAMP_R)
        } else {
            PotentialCurve::zero(CurveKind::Width)
        }
    };
    let entrance = vec![
        EntranceChannel::new(
            0,
            Parity::Gerade,
            pot(MODEL_A_SINGLET).with_clamp(MODEL_CLAMP_R),
            w(MODEL_A_SINGLET_WIDTH),
        )?,
        EntranceChannel::new(
            1,
            Parity::Ungerade,
            pot(MODEL_A_TRIPLET).with_clamp(MODEL_CLAMP_R),
            w(MODEL_A_TRIPLET_WIDTH),
        )?,
        EntranceChannel::new(
            2,
            Parity::Gerade,
            pot(MODEL_A_QUINTET).with_clamp(MODEL_CLAMP_R),
            PotentialCurve::zero(CurveKind::Width),
        )?,
    ];
    let exit = vec![
        ExitChannel::new(Parity::Gerade, pot(MODEL_A_ION_G))?,
        ExitChannel::new(Parity::Ungerade, pot(MODEL_A_ION_U))?,
    ];
    ReactionSystem::new(name, entrance, exit, EnergyConstants::default())
}

fn free() -> Result<ReactionSystem> {
    let entrance = (0..3u8)
        .map(|s| {
            EntranceChannel::new(
                s,
                Parity::of_spin(s),
                PotentialCurve::zero(CurveKind::Potential),
                PotentialCurve::zero(CurveKind::Width),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let exit = Parity::BOTH
        .iter()
        .map(|&p| ExitChannel::new(p, PotentialCurve::zero(CurveKind::Potential)))
        .collect::<Result<Vec<_>>>()?;
    ReactionSystem::new("free", entrance, exit, EnergyConstants::default())
}

/// Looks up a bundled system by name: `model-A`, `model-A-dark` (same
/// curves, no widths) or `free` (no interaction at all).
pub fn model_system(name: &str) -> Result<ReactionSystem> {
    match name {
        "model-A" => model_a(name, true),
        "model-A-dark" => model_a(name, false),
        "free" => free(),
        _ => Err(Error::UnknownPreset(name.to_string())),
    }
}
