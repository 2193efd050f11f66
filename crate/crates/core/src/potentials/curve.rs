use serde::{Deserialize, Serialize};

use super::spline::NaturalSpline;
use crate::{Error, Result};

/// Whether a curve is a real interaction potential or an autoionization
/// width. Widths are clipped at zero on evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Potential,
    Width,
}

/// Extrapolation beyond the last tabulated sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LongRange {
    /// `-C6/R⁶ - C8/R⁸`.
    Dispersion { c6: f64, c8: f64 },
    /// `value(anchor) · exp(-decay (R - anchor))` for `R ≥ anchor`.
    ExponentialTail { anchor: f64, decay: f64 },
}

/// Closed-form curves used by the bundled model systems and by tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnalyticCurve {
    Zero,
    /// `D [(1 - e^{-a (R - R_e)})² - 1]`, minimum `-D` at `R_e`.
    Morse { depth: f64, r_eq: f64, a: f64 },
    /// Plateau `A` for `R ≤ R_c`, then `A exp(-((R - R_c)/w)²)`.
    GaussianDecay { amplitude: f64, r_c: f64, width: f64 },
    /// `-V0` for `R < radius`, zero outside.
    SquareWell { depth: f64, radius: f64 },
}

impl AnalyticCurve {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            AnalyticCurve::Zero => 0.0,
            AnalyticCurve::Morse { depth, r_eq, a } => {
                let e = (-a * (r - r_eq)).exp();
                depth * e * (e - 2.0)
            }
            AnalyticCurve::GaussianDecay {
                amplitude,
                r_c,
                width,
            } => {
                if r <= r_c {
                    amplitude
                } else {
                    let x = (r - r_c) / width;
                    amplitude * (-x * x).exp()
                }
            }
            AnalyticCurve::SquareWell { depth, radius } => {
                if r < radius {
                    -depth
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Tabulated {
    spline: NaturalSpline,
    long_range: LongRange,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Tabulated(Tabulated),
    Analytic(AnalyticCurve),
}

/// A real potential `V(R)` or width `Γ(R)` in hartree as a function of the
/// internuclear distance in bohr. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve {
    kind: CurveKind,
    shape: Shape,
    /// Values for `R` below the clamp are held at the clamp value.
    short_range_clamp: Option<f64>,
}

impl PotentialCurve {
    pub fn analytic(kind: CurveKind, curve: AnalyticCurve) -> Self {
        Self {
            kind,
            shape: Shape::Analytic(curve),
            short_range_clamp: None,
        }
    }

    pub fn zero(kind: CurveKind) -> Self {
        Self::analytic(kind, AnalyticCurve::Zero)
    }

    pub fn with_clamp(mut self, r_clamp: f64) -> Self {
        self.short_range_clamp = Some(r_clamp);
        self
    }

    /// Builds a spline-interpolated curve from samples.
    ///
    /// For widths with an exponential tail, `long_range` is given as
    /// [`LongRange::ExponentialTail`] whose `decay` is ignored: the decay
    /// constant is recomputed from the log-slope of the last two samples at
    /// or before the anchor, which makes the tail continuous there.
    pub fn tabulated(
        kind: CurveKind,
        samples: &[(f64, f64)],
        long_range: LongRange,
        short_range_clamp: Option<f64>,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::validation("grid", "at least two samples are required"));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::validation(
                    format!("grid[{}]", i + 1),
                    format!("R must be strictly increasing ({} after {})", w[1].0, w[0].0),
                ));
            }
        }
        for (i, (r, v)) in samples.iter().enumerate() {
            if !r.is_finite() || !v.is_finite() || *r <= 0.0 {
                return Err(Error::validation(format!("grid[{i}]"), "non-finite or non-positive entry"));
            }
            if kind == CurveKind::Width && *v < 0.0 {
                return Err(Error::validation(
                    format!("grid[{i}]"),
                    format!("negative width sample {v} at R = {r}"),
                ));
            }
        }

        let (samples, long_range) = match long_range {
            LongRange::Dispersion { c6, c8 } => {
                if !c6.is_finite() || !c8.is_finite() {
                    return Err(Error::validation("long_range", "C6/C8 must be finite"));
                }
                (samples.to_vec(), LongRange::Dispersion { c6, c8 })
            }
            LongRange::ExponentialTail { anchor, .. } => {
                let idx = samples
                    .iter()
                    .position(|(r, _)| (r - anchor).abs() <= 1e-9 * anchor.abs().max(1.0))
                    .ok_or_else(|| {
                        Error::validation("long_range.tail_anchor", format!("anchor {anchor} is not a sample radius"))
                    })?;
                if idx == 0 {
                    return Err(Error::validation(
                        "long_range.tail_anchor",
                        "the tail needs two samples at or before the anchor",
                    ));
                }
                let (r0, v0) = samples[idx - 1];
                let (r1, v1) = samples[idx];
                let decay = if v1 == 0.0 {
                    f64::INFINITY
                } else if v0 <= 0.0 {
                    return Err(Error::validation(
                        "long_range.tail_anchor",
                        "log-slope undefined: sample before the anchor is zero",
                    ));
                } else {
                    (v0 / v1).ln() / (r1 - r0)
                };
                if !(decay > 0.0) {
                    return Err(Error::validation(
                        "long_range.tail_anchor",
                        format!("tail would not decay (log-slope decay constant {decay})"),
                    ));
                }
                (
                    samples[..=idx].to_vec(),
                    LongRange::ExponentialTail { anchor: r1, decay },
                )
            }
        };

        if let Some(c) = short_range_clamp {
            if c < samples[0].0 {
                return Err(Error::validation(
                    "clamp_R",
                    format!("clamp radius {c} lies below the first sample {}", samples[0].0),
                ));
            }
        }

        let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
        Ok(Self {
            kind,
            shape: Shape::Tabulated(Tabulated {
                spline: NaturalSpline::new(x, y),
                long_range,
            }),
            short_range_clamp: Some(short_range_clamp.unwrap_or(samples[0].0)),
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn short_range_clamp(&self) -> Option<f64> {
        self.short_range_clamp
    }

    pub fn long_range(&self) -> Option<LongRange> {
        match &self.shape {
            Shape::Tabulated(t) => Some(t.long_range),
            Shape::Analytic(_) => None,
        }
    }

    pub fn analytic_form(&self) -> Option<AnalyticCurve> {
        match &self.shape {
            Shape::Analytic(a) => Some(*a),
            Shape::Tabulated(_) => None,
        }
    }

    /// Tabulated samples, empty for analytic curves.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        match &self.shape {
            Shape::Tabulated(t) => t.spline.knots().collect(),
            Shape::Analytic(_) => Vec::new(),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        matches!(self.shape, Shape::Analytic(AnalyticCurve::Zero))
    }

    fn eval_unclamped(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Analytic(a) => a.eval(r),
            Shape::Tabulated(t) => match t.long_range {
                LongRange::Dispersion { c6, c8 } => {
                    if r <= t.spline.last_x() {
                        t.spline.eval(r)
                    } else {
                        dispersion(c6, c8, r)
                    }
                }
                LongRange::ExponentialTail { anchor, decay } => {
                    if r <= anchor {
                        t.spline.eval(r)
                    } else {
                        t.spline.eval(anchor) * (-decay * (r - anchor)).exp()
                    }
                }
            },
        }
    }

    /// Value at `R` (bohr) in hartree.
    pub fn eval(&self, r: f64) -> f64 {
        let r = match self.short_range_clamp {
            Some(c) if r < c => c,
            _ => r,
        };
        let v = self.eval_unclamped(r);
        match self.kind {
            CurveKind::Width => v.max(0.0),
            CurveKind::Potential => v,
        }
    }

    /// Difference between the spline and the dispersion tail at the last
    /// sample; zero for continuous tails and analytic curves.
    pub fn junction_mismatch(&self) -> f64 {
        match &self.shape {
            Shape::Tabulated(t) => match t.long_range {
                LongRange::Dispersion { c6, c8 } => {
                    let r = t.spline.last_x();
                    t.spline.eval(r) - dispersion(c6, c8, r)
                }
                LongRange::ExponentialTail { .. } => 0.0,
            },
            Shape::Analytic(_) => 0.0,
        }
    }

    /// Most negative value of the raw spline between samples, for widths
    /// whose interpolant overshoots below zero.
    pub fn spline_undershoot(&self) -> Option<(f64, f64)> {
        let Shape::Tabulated(t) = &self.shape else {
            return None;
        };
        let knots: Vec<(f64, f64)> = t.spline.knots().collect();
        let mut worst: Option<(f64, f64)> = None;
        for w in knots.windows(2) {
            for k in 1..50 {
                let r = w[0].0 + (w[1].0 - w[0].0) * k as f64 / 50.0;
                let v = t.spline.eval(r);
                if v < worst.map_or(0.0, |(_, x)| x) {
                    worst = Some((r, v));
                }
            }
        }
        worst
    }
}

fn dispersion(c6: f64, c8: f64, r: f64) -> f64 {
    let r2 = r * r;
    let r6 = r2 * r2 * r2;
    -c6 / r6 - c8 / (r6 * r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well_samples() -> Vec<(f64, f64)> {
        (0..23)
            .map(|i| {
                let r = 3.0 + 0.5 * i as f64;
                let e = (-0.9 * (r - 6.0)).exp();
                (r, 3.5e-3 * e * (e - 2.0))
            })
            .collect()
    }

    #[test]
    fn dispersion_tail_beyond_last_sample() {
        let c = PotentialCurve::tabulated(
            CurveKind::Potential,
            &well_samples(),
            LongRange::Dispersion { c6: 3276.68, c8: 210_566.0 },
            None,
        )
        .unwrap();
        let r: f64 = 2.0 * 14.0;
        let expect = -3276.68 / r.powi(6) - 210_566.0 / r.powi(8);
        assert!(((c.eval(r) - expect) / expect).abs() < 1e-12);
    }

    #[test]
    fn clamp_holds_value_constant() {
        let c = PotentialCurve::tabulated(
            CurveKind::Potential,
            &well_samples(),
            LongRange::Dispersion { c6: 1.0, c8: 0.0 },
            None,
        )
        .unwrap();
        assert_eq!(c.eval(2.5), c.eval(3.0));
        assert_eq!(c.eval(1.5), c.eval(3.0));
    }

    #[test]
    fn spline_reproduces_samples() {
        let s = well_samples();
        let c = PotentialCurve::tabulated(CurveKind::Potential, &s, LongRange::Dispersion { c6: 1.0, c8: 0.0 }, None)
            .unwrap();
        for (r, v) in s {
            assert!((c.eval(r) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn width_tail_from_log_slope_is_continuous() {
        let s: Vec<(f64, f64)> = (0..13).map(|i| (3.0 + 0.5 * i as f64, 1e-3 * (-0.7 * i as f64).exp())).collect();
        let c = PotentialCurve::tabulated(
            CurveKind::Width,
            &s,
            LongRange::ExponentialTail { anchor: 9.0, decay: 0.0 },
            None,
        )
        .unwrap();
        let LongRange::ExponentialTail { decay, .. } = c.long_range().unwrap() else { panic!() };
        assert!((decay - 1.4).abs() < 1e-12);
        assert!((c.eval(9.0) - c.eval(9.0 + 1e-12)).abs() < 1e-15);
        let expect = c.eval(9.0) * (-1.4f64 * 2.0).exp();
        assert!((c.eval(11.0) - expect).abs() < 1e-18);
    }

    #[test]
    fn two_point_width_table_evaluates_everywhere() {
        let c = PotentialCurve::tabulated(
            CurveKind::Width,
            &[(3.0, 2e-3), (4.0, 1e-3)],
            LongRange::ExponentialTail { anchor: 4.0, decay: 0.0 },
            None,
        )
        .unwrap();
        for r in [0.1, 1.0, 3.0, 3.5, 4.0, 10.0, 100.0] {
            let v = c.eval(r);
            assert!(v.is_finite() && v >= 0.0);
        }
        assert_eq!(c.eval(0.1), 2e-3);
    }

    #[test]
    fn validation_errors_name_the_field() {
        let err = PotentialCurve::tabulated(
            CurveKind::Potential,
            &[(3.0, 0.0), (2.0, 1.0)],
            LongRange::Dispersion { c6: 1.0, c8: 0.0 },
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "grid[1]"));

        let err = PotentialCurve::tabulated(
            CurveKind::Width,
            &[(3.0, 1e-3), (4.0, -1e-4)],
            LongRange::ExponentialTail { anchor: 4.0, decay: 0.0 },
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "grid[1]"));

        let err = PotentialCurve::tabulated(
            CurveKind::Width,
            &[(3.0, 1e-3), (4.0, 1e-4)],
            LongRange::ExponentialTail { anchor: 3.5, decay: 0.0 },
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "long_range.tail_anchor"));
    }

    #[test]
    fn junction_mismatch_is_reported() {
        let c = PotentialCurve::tabulated(
            CurveKind::Potential,
            &[(3.0, -1e-3), (10.0, -1e-4)],
            LongRange::Dispersion { c6: 1.0, c8: 0.0 },
            None,
        )
        .unwrap();
        assert!((c.junction_mismatch() - (-1e-4 + 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn morse_minimum() {
        let c = PotentialCurve::analytic(CurveKind::Potential, AnalyticCurve::Morse { depth: 2e-3, r_eq: 6.0, a: 0.9 });
        assert!((c.eval(6.0) + 2e-3).abs() < 1e-18);
        assert!(c.eval(5.99) > c.eval(6.0) && c.eval(6.01) > c.eval(6.0));
    }
}
