//! JSON channel files.
//!
//! ```json
//! {
//!   "name": "a3Su+",
//!   "kind": "entrance",
//!   "S": 1,
//!   "parity": "u",
//!   "grid": [[3.0, 0.012, 0.021], [3.5, -0.001, 0.011], [9.0, -0.0001, 1e-5], [14.0, -5e-6, null]],
//!   "long_range": {"C6": 3276.68, "C8": 210566.0, "tail_anchor": 9.0},
//!   "constants": {"IE_eV": 24.589, "excitation_eV": 19.820},
//!   "clamp_R": 3.0
//! }
//! ```
//!
//! Rows are `[R, V]` or `[R, V, Gamma]` in bohr and hartree; V and Gamma
//! share the grid. A width entry may be `null` past the tail anchor. Exit
//! files use `"kind": "exit"`, omit `S` and the width column.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CurveKind, EnergyConstants, EntranceChannel, ExitChannel, LongRange, Parity, PotentialCurve, ReactionSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelRole {
    Entrance,
    Exit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongRangeBlock {
    #[serde(rename = "C6", default, skip_serializing_if = "Option::is_none")]
    pub c6: Option<f64>,
    #[serde(rename = "C8", default, skip_serializing_if = "Option::is_none")]
    pub c8: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_anchor: Option<f64>,
}

/// Parsed but not yet validated channel file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    pub name: String,
    pub kind: ChannelRole,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<u8>,
    pub parity: Parity,
    pub grid: Vec<Vec<Option<f64>>>,
    pub long_range: Option<LongRangeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<EnergyConstants>,
    #[serde(rename = "clamp_R", default, skip_serializing_if = "Option::is_none")]
    pub clamp_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedChannel {
    Entrance(EntranceChannel),
    Exit(ExitChannel),
}

impl ChannelDocument {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| {
            let msg = e.to_string();
            // serde reports missing fields as "missing field `x`"
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("missing field") || msg.starts_with("unknown field"))
                .unwrap_or("document")
                .to_string();
            Error::Validation { field, message: msg }
        })
    }

    fn rows(&self) -> Result<Vec<(f64, f64, Option<f64>)>> {
        let mut out = Vec::with_capacity(self.grid.len());
        for (i, row) in self.grid.iter().enumerate() {
            let field = format!("grid[{i}]");
            let allowed = match self.kind {
                ChannelRole::Entrance => 2..=3,
                ChannelRole::Exit => 2..=2,
            };
            if !allowed.contains(&row.len()) {
                return Err(Error::validation(field, format!("row has {} entries", row.len())));
            }
            let r = row[0].ok_or_else(|| Error::validation(field.clone(), "R is null"))?;
            let v = row[1].ok_or_else(|| Error::validation(field.clone(), "V is null"))?;
            out.push((r, v, row.get(2).copied().flatten()));
        }
        Ok(out)
    }

    fn long_range(&self) -> Result<&LongRangeBlock> {
        self.long_range
            .as_ref()
            .ok_or_else(|| Error::validation("long_range", "missing long-range block"))
    }

    /// Real potential column with its dispersion tail.
    pub fn potential(&self) -> Result<PotentialCurve> {
        let rows = self.rows()?;
        let lr = self.long_range()?;
        let c6 = lr
            .c6
            .ok_or_else(|| Error::validation("long_range.C6", "potential needs a C6 coefficient"))?;
        let samples: Vec<(f64, f64)> = rows.iter().map(|&(r, v, _)| (r, v)).collect();
        PotentialCurve::tabulated(
            CurveKind::Potential,
            &samples,
            LongRange::Dispersion {
                c6,
                c8: lr.c8.unwrap_or(0.0),
            },
            self.clamp_r,
        )
    }

    /// Width column, or `None` when the file carries no widths.
    pub fn width(&self) -> Result<Option<PotentialCurve>> {
        let rows = self.rows()?;
        if rows.iter().all(|row| row.2.is_none()) {
            return Ok(None);
        }
        let anchor = self
            .long_range()?
            .tail_anchor
            .ok_or_else(|| Error::validation("long_range.tail_anchor", "width column needs a tail anchor"))?;
        let mut samples = Vec::new();
        for (i, &(r, _, g)) in rows.iter().enumerate() {
            match g {
                Some(g) => samples.push((r, g)),
                None if r > anchor => {}
                None => {
                    return Err(Error::validation(
                        format!("grid[{i}]"),
                        "width missing at or before the tail anchor",
                    ))
                }
            }
        }
        PotentialCurve::tabulated(
            CurveKind::Width,
            &samples,
            LongRange::ExponentialTail { anchor, decay: 0.0 },
            self.clamp_r,
        )
        .map(Some)
    }

    pub fn channel(&self) -> Result<LoadedChannel> {
        let v = self.potential()?;
        match self.kind {
            ChannelRole::Entrance => {
                let s = self
                    .spin
                    .ok_or_else(|| Error::validation("S", "entrance file needs a total spin"))?;
                let w = self.width()?.unwrap_or_else(|| PotentialCurve::zero(CurveKind::Width));
                EntranceChannel::new(s, self.parity, v, w).map(LoadedChannel::Entrance)
            }
            ChannelRole::Exit => {
                if self.spin.is_some() {
                    return Err(Error::validation("S", "exit files do not carry a total spin"));
                }
                ExitChannel::new(self.parity, v).map(LoadedChannel::Exit)
            }
        }
    }
}

/// Parses one channel file.
pub fn parse_channel(src: &str) -> Result<(ChannelDocument, LoadedChannel)> {
    let doc = ChannelDocument::from_json(src)?;
    let ch = doc.channel()?;
    Ok((doc, ch))
}

/// Loads one column of a channel file as a curve.
pub fn load_curve(src: &str, kind: CurveKind) -> Result<PotentialCurve> {
    let doc = ChannelDocument::from_json(src)?;
    match kind {
        CurveKind::Potential => doc.potential(),
        CurveKind::Width => doc
            .width()?
            .ok_or_else(|| Error::validation("grid", "file has no width column")),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Builds a system from every `*.json` file in `dir`. Files are read in
/// name order; energy constants, when given in several files, must agree.
pub fn load_system_dir(dir: &Path) -> Result<ReactionSystem> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut entrance = Vec::new();
    let mut exit = Vec::new();
    let mut constants: Option<EnergyConstants> = None;
    for p in &paths {
        let (doc, ch) = parse_channel(&read(p)?).map_err(|e| prefix_field(e, p))?;
        if let Some(c) = doc.constants {
            if constants.is_some_and(|prev| prev != c) {
                return Err(Error::validation(
                    format!("{}: constants", p.display()),
                    "disagrees with constants given in another file",
                ));
            }
            constants = Some(c);
        }
        match ch {
            LoadedChannel::Entrance(c) => entrance.push(c),
            LoadedChannel::Exit(c) => exit.push(c),
        }
    }
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    ReactionSystem::new(name, entrance, exit, constants.unwrap_or_default())
}

fn prefix_field(e: Error, p: &Path) -> Error {
    match e {
        Error::Validation { field, message } => Error::Validation {
            field: format!("{}: {field}", p.display()),
            message,
        },
        other => other,
    }
}

/// Summary of one curve for the validation command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    pub channel: String,
    pub column: &'static str,
    pub samples: usize,
    pub r_first: Option<f64>,
    pub r_last: Option<f64>,
    pub clamp_r: Option<f64>,
    pub min_value: f64,
    pub r_at_min: f64,
    pub max_value: f64,
    pub long_range: String,
    pub junction_mismatch: f64,
    pub warnings: Vec<String>,
}

/// Junction mismatches above this are reported as warnings.
pub const JUNCTION_TOLERANCE: f64 = 1e-9;

impl CurveReport {
    pub fn of(channel: &str, column: &'static str, curve: &PotentialCurve) -> Self {
        let samples = curve.samples();
        let (lo, hi) = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => (a.0, b.0.max(a.0 + 1.0)),
            _ => (1.0, 30.0),
        };
        let mut min_value = f64::INFINITY;
        let mut r_at_min = lo;
        let mut max_value = f64::NEG_INFINITY;
        let n = 2000;
        for i in 0..=n {
            let r = lo + (hi - lo) * i as f64 / n as f64;
            let v = curve.eval(r);
            if v < min_value {
                min_value = v;
                r_at_min = r;
            }
            max_value = max_value.max(v);
        }
        let long_range = match curve.long_range() {
            Some(LongRange::Dispersion { c6, c8 }) => format!("dispersion C6={c6} C8={c8}"),
            Some(LongRange::ExponentialTail { anchor, decay }) => {
                format!("exponential tail from R={anchor} with decay {decay:.6}")
            }
            None => format!("analytic {:?}", curve.analytic_form().unwrap()),
        };
        let junction_mismatch = curve.junction_mismatch();
        let mut warnings = Vec::new();
        if junction_mismatch.abs() > JUNCTION_TOLERANCE {
            warnings.push(format!(
                "spline/long-range junction mismatch {junction_mismatch:.3e} hartree at R={hi}"
            ));
        }
        if curve.kind() == CurveKind::Width {
            if let Some((r, v)) = curve.spline_undershoot() {
                warnings.push(format!("spline undershoots to {v:.3e} at R={r:.3}; clipped to zero"));
            }
        }
        Self {
            channel: channel.to_string(),
            column,
            samples: samples.len(),
            r_first: samples.first().map(|s| s.0),
            r_last: samples.last().map(|s| s.0),
            clamp_r: curve.short_range_clamp(),
            min_value,
            r_at_min,
            max_value,
            long_range,
            junction_mismatch,
            warnings,
        }
    }
}

/// Reports for every curve of a system.
pub fn system_report(sys: &ReactionSystem) -> Vec<CurveReport> {
    let mut out = Vec::new();
    for ch in sys.entrance_channels() {
        let label = format!("entrance S={} {}", ch.spin(), ch.parity());
        out.push(CurveReport::of(&label, "V", ch.potential()));
        out.push(CurveReport::of(&label, "Gamma", ch.width()));
    }
    for ch in sys.exit_channels() {
        let label = format!("exit {}", ch.parity());
        out.push(CurveReport::of(&label, "V", ch.potential()));
    }
    out
}

/// Validates a single channel file and reports its curves.
pub fn validate_file(path: &Path) -> Result<Vec<CurveReport>> {
    let (doc, ch) = parse_channel(&read(path)?).map_err(|e| prefix_field(e, path))?;
    let mut out = Vec::new();
    match ch {
        LoadedChannel::Entrance(c) => {
            out.push(CurveReport::of(&doc.name, "V", c.potential()));
            out.push(CurveReport::of(&doc.name, "Gamma", c.width()));
        }
        LoadedChannel::Exit(c) => out.push(CurveReport::of(&doc.name, "V", c.potential())),
    }
    Ok(out)
}
