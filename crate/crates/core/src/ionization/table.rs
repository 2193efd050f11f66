use std::fmt::Write as _;

use serde::Serialize;

use super::ChannelSigma;
use crate::units::hartree_to_kelvin;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "E_hartree,T_kelvin,S,sigma_AI_bohr2,sigma_PI_bohr2";

/// Per-spin cross sections at one energy, indexed by `S ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SpinSigmas {
    pub ai: [f64; 2],
    pub pi: [f64; 2],
}

impl SpinSigmas {
    pub fn new(ai: [f64; 2], pi: [f64; 2]) -> Self {
        Self { ai, pi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub energy: f64,
    pub sigmas: SpinSigmas,
    /// Partial-wave diagnostics; empty for tables read back from CSV.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<ChannelSigma>,
}

impl TableRow {
    pub fn new(energy: f64, sigmas: SpinSigmas) -> Self {
        Self {
            energy,
            sigmas,
            channels: Vec::new(),
        }
    }

    pub(crate) fn from_channels(energy: f64, channels: Vec<ChannelSigma>) -> Self {
        let mut sigmas = SpinSigmas::default();
        for c in &channels {
            sigmas.ai[c.spin as usize] = c.sigma_ai;
            sigmas.pi[c.spin as usize] = c.sigma_pi;
        }
        Self {
            energy,
            sigmas,
            channels,
        }
    }
}

/// `σ_S^AI(E)`, `σ_S^PI(E)` on an increasing energy grid. `S = 2` never
/// ionizes and has no entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSectionTable {
    pub system: String,
    pub rows: Vec<TableRow>,
}

impl CrossSectionTable {
    pub fn new(system: impl Into<String>, rows: Vec<TableRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::validation("energies", "table needs at least one energy"));
        }
        for (n, r) in rows.iter().enumerate() {
            if !(r.energy > 0.0 && r.energy.is_finite()) {
                return Err(Error::validation("energies", format!("energy {} is not positive", r.energy)));
            }
            if n > 0 && r.energy <= rows[n - 1].energy {
                return Err(Error::validation("energies", "energies must be strictly increasing"));
            }
            let s = &r.sigmas;
            if s.ai.iter().chain(&s.pi).any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::validation("sigma", format!("negative or non-finite σ at E = {}", r.energy)));
            }
        }
        Ok(Self {
            system: system.into(),
            rows,
        })
    }

    /// Single-energy table from given per-spin values.
    pub fn single(energy: f64, sigmas: SpinSigmas) -> Result<Self> {
        Self::new("given", vec![TableRow::new(energy, sigmas)])
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.energy)
    }

    /// Values at `E`, linear in `ln E` between grid points.
    pub fn at(&self, energy: f64) -> Result<SpinSigmas> {
        let (first, last) = (self.rows[0].energy, self.rows[self.rows.len() - 1].energy);
        let tol = 1e-12 * energy.abs();
        if !(energy >= first - tol && energy <= last + tol) {
            return Err(Error::OutOfRange {
                energy,
                min: first,
                max: last,
            });
        }
        if let Some(r) = self.rows.iter().find(|r| (r.energy - energy).abs() <= tol) {
            return Ok(r.sigmas);
        }
        let m = self.rows.partition_point(|r| r.energy < energy);
        let (a, b) = (&self.rows[m - 1], &self.rows[m]);
        let t = (energy / a.energy).ln() / (b.energy / a.energy).ln();
        let mix = |x: f64, y: f64| x + t * (y - x);
        Ok(SpinSigmas {
            ai: [mix(a.sigmas.ai[0], b.sigmas.ai[0]), mix(a.sigmas.ai[1], b.sigmas.ai[1])],
            pi: [mix(a.sigmas.pi[0], b.sigmas.pi[0]), mix(a.sigmas.pi[1], b.sigmas.pi[1])],
        })
    }

    /// CSV body with [`CSV_HEADER`], one line per `(E, S)`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            for spin in 0..2 {
                let _ = writeln!(
                    s,
                    "{:e},{:e},{},{:e},{:e}",
                    r.energy,
                    hartree_to_kelvin(r.energy),
                    spin,
                    r.sigmas.ai[spin],
                    r.sigmas.pi[spin]
                );
            }
        }
        s
    }

    /// Reads the format written by [`to_csv`](Self::to_csv). Lines starting
    /// with `#` are skipped.
    pub fn from_csv(system: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            _ => return Err(Error::validation("header", format!("expected `{CSV_HEADER}`"))),
        }
        let mut rows: Vec<TableRow> = Vec::new();
        for (n, line) in lines.enumerate() {
            let field = |name: &str| format!("line {}: {name}", n + 2);
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(Error::validation(field("columns"), "expected 5 columns"));
            }
            let num = |i: usize, name: &str| -> Result<f64> {
                cols[i].parse::<f64>().map_err(|_| Error::validation(field(name), cols[i].to_string()))
            };
            let energy = num(0, "E_hartree")?;
            let spin: usize = cols[2]
                .parse()
                .ok()
                .filter(|s| *s < 2)
                .ok_or_else(|| Error::validation(field("S"), cols[2].to_string()))?;
            let (ai, pi) = (num(3, "sigma_AI_bohr2")?, num(4, "sigma_PI_bohr2")?);
            if rows.last().is_none_or(|r| r.energy != energy) {
                rows.push(TableRow::new(energy, SpinSigmas::default()));
            }
            let row = rows.last_mut().expect("just pushed");
            row.sigmas.ai[spin] = ai;
            row.sigmas.pi[spin] = pi;
        }
        Self::new(system, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> CrossSectionTable {
        CrossSectionTable::new(
            "t",
            vec![
                TableRow::new(1e-9, SpinSigmas::new([1.0, 2.0], [3.0, 4.0])),
                TableRow::new(1e-7, SpinSigmas::new([3.0, 2.0], [5.0, 0.0])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let t = table();
        let back = CrossSectionTable::from_csv("t", &format!("# hash\n{}", t.to_csv())).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn log_interpolation_and_range() {
        let t = table();
        let mid = t.at(1e-8).unwrap();
        assert!((mid.ai[0] - 2.0).abs() < 1e-12 && (mid.pi[1] - 2.0).abs() < 1e-12);
        assert_eq!(t.at(1e-7).unwrap(), t.rows[1].sigmas);
        assert!(matches!(t.at(1e-6), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn rejects_unsorted_or_negative() {
        let rows = vec![
            TableRow::new(1e-7, SpinSigmas::default()),
            TableRow::new(1e-9, SpinSigmas::default()),
        ];
        assert!(CrossSectionTable::new("t", rows).is_err());
        let rows = vec![TableRow::new(1e-7, SpinSigmas::new([-1.0, 0.0], [0.0, 0.0]))];
        assert!(CrossSectionTable::new("t", rows).is_err());
    }
}
