//! The `hestar` command line.
//!
//! A run is described by a [`RunConfig`], read from a JSON file and then
//! overridden by flags. Every output starts with the tool version and the
//! SHA-256 of the resolved configuration (output directory excluded), and
//! contains nothing else that depends on the environment, so reruns are
//! byte-identical whatever the thread count.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{angle_grid, channel_ratios, maximal_state_ratio, scan, ControlSurface};
use crate::ionization::{CrossSectionTable, IonizationSettings, Ionizer, SpinSigmas};
use crate::optimizer::{grid_oracle_with, multistart_with, Found, Objective, OptimizerSettings, OracleResult, Sense};
use crate::potentials::{load_system_dir, model_system, system_report, validate_file, CurveReport, ReactionSystem};
use crate::units::{hartree_to_kelvin, kelvin_to_hartree};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSource {
    /// A bundled model system.
    Preset(String),
    /// A directory of channel JSON files.
    Dir(PathBuf),
}

impl SystemSource {
    pub fn load(&self) -> Result<ReactionSystem> {
        match self {
            Self::Preset(name) => model_system(name),
            Self::Dir(dir) => load_system_dir(dir),
        }
    }
}

/// Collision energies, given directly or as temperatures with `E = k_B T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergySpec {
    Hartree(Vec<f64>),
    Kelvin(Vec<f64>),
    /// `n` temperatures spaced evenly in `ln T` from `from` to `to`.
    KelvinLog { from: f64, to: f64, n: usize },
}

impl EnergySpec {
    /// Energies in hartree, sorted and deduplicated.
    pub fn energies(&self) -> Result<Vec<f64>> {
        let mut e = match self {
            Self::Hartree(v) => v.clone(),
            Self::Kelvin(v) => v.iter().map(|t| kelvin_to_hartree(*t)).collect(),
            Self::KelvinLog { from, to, n } => {
                if *n == 0 || !(*from > 0.0 && *to > 0.0) {
                    return Err(Error::validation("temps_k", "need n ≥ 1 and positive bounds"));
                }
                if *n == 1 {
                    vec![kelvin_to_hartree(*from)]
                } else {
                    let step = (to / from).ln() / (*n - 1) as f64;
                    (0..*n).map(|i| kelvin_to_hartree(from * (step * i as f64).exp())).collect()
                }
            }
        };
        if e.is_empty() {
            return Err(Error::validation("energies", "empty energy list"));
        }
        if let Some(bad) = e.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::validation("energies", format!("{bad} is not a positive energy")));
        }
        e.sort_by(f64::total_cmp);
        e.dedup();
        Ok(e)
    }
}

impl FromStr for EnergySpec {
    type Err = Error;

    /// `a:b:n` (log grid in kelvin) or a comma-separated list of kelvin.
    fn from_str(s: &str) -> Result<Self> {
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation("temps_k", format!("`{x}` is not a number")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, b, n] => Ok(Self::KelvinLog {
                from: num(a)?,
                to: num(b)?,
                n: n.trim()
                    .parse()
                    .map_err(|_| Error::validation("temps_k", format!("`{n}` is not a count")))?,
            }),
            [list] => Ok(Self::Kelvin(list.split(',').map(num).collect::<Result<_>>()?)),
            _ => Err(Error::validation("temps_k", "expected a:b:n or a comma-separated list")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub m_a: i32,
    pub m_b: i32,
    /// Points per angle on `[0, 2π)`.
    pub points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            m_a: 1,
            m_b: 0,
            points: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub objective: Objective,
    pub sense: Sense,
    pub seeds: usize,
    /// Points per angle of the exhaustive check; 0 skips it.
    pub oracle_resolution: usize,
    pub settings: OptimizerSettings,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Ratio,
            sense: Sense::Max,
            seeds: 64,
            oracle_resolution: 12,
            settings: OptimizerSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSource,
    /// Required unless a table is given, whose energies are then used.
    pub energies: Option<EnergySpec>,
    /// Cross-section table written by `xs` (CSV); scan and optimize use it
    /// instead of solving the scattering problem.
    pub table: Option<PathBuf>,
    pub ionization: IonizationSettings,
    pub out: PathBuf,
    pub format: Format,
    pub scan: ScanConfig,
    pub optimize: OptimizeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemSource::Preset("model-A".into()),
            energies: None,
            table: None,
            ionization: IonizationSettings::default(),
            out: PathBuf::from("out"),
            format: Format::Csv,
            scan: ScanConfig::default(),
            optimize: OptimizeConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|source| Error::Json {
            context: "run configuration".into(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.ionization.validate()?;
        self.optimize.settings.validate()?;
        if let Some(e) = &self.energies {
            e.energies()?;
        }
        if self.scan.points == 0 {
            return Err(Error::validation("scan.points", "must be positive"));
        }
        if self.optimize.seeds == 0 {
            return Err(Error::validation("optimize.seeds", "must be positive"));
        }
        if self.optimize.oracle_resolution != 0 && self.optimize.oracle_resolution < 8 {
            return Err(Error::validation("optimize.oracle_resolution", "0 or at least 8"));
        }
        Ok(())
    }

    /// SHA-256 (hex) of the canonical JSON of the configuration with the
    /// output directory blanked.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn energies(&self) -> Result<Vec<f64>> {
        match &self.energies {
            Some(e) => e.energies(),
            None => Err(Error::validation("energies", "give --energies-hartree or --temps-k")),
        }
    }

    /// The table from `table` if set, otherwise computed.
    pub fn cross_sections(&self) -> Result<CrossSectionTable> {
        match &self.table {
            Some(path) => {
                let label = path.display().to_string();
                CrossSectionTable::from_csv(label, &read(path)?)
            }
            None => {
                let system = self.system.load()?;
                Ionizer::new(&system, self.ionization)?.table(&self.energies()?)
            }
        }
    }

    /// Energies for scan and optimize: the configured ones, or the table's.
    fn working_energies(&self, table: &CrossSectionTable) -> Result<Vec<f64>> {
        match &self.energies {
            Some(e) => e.energies(),
            None => Ok(table.energies().collect()),
        }
    }

    fn header(&self) -> Header {
        Header {
            tool: "hestar",
            version: VERSION,
            config_sha256: self.hash(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Header {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
}

impl Header {
    fn comment(&self) -> String {
        format!("# {} {} config-sha256 {}\n", self.tool, self.version, self.config_sha256)
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    #[serde(flatten)]
    header: Header,
    config: &'a RunConfig,
    data: T,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(io(&path))?;
    Ok(path)
}

fn json<T: Serialize>(cfg: &RunConfig, data: T) -> String {
    let doc = Document {
        header: cfg.header(),
        config: cfg,
        data,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("outputs serialize");
    s.push('\n');
    s
}

fn emit<T: Serialize>(cfg: &RunConfig, stem: &str, data: T, csv: impl FnOnce() -> String) -> Result<PathBuf> {
    let body = match cfg.format {
        Format::Csv => cfg.header().comment() + &csv(),
        Format::Json => json(cfg, data),
    };
    write(&cfg.out, &format!("{stem}.{}", cfg.format.extension()), &body)
}

/// Curve summaries of the configured system, or of one channel file.
pub fn cmd_validate(cfg: &RunConfig, file: Option<&Path>) -> Result<(PathBuf, Vec<CurveReport>)> {
    let reports = match file {
        Some(f) => validate_file(f)?,
        None => system_report(&cfg.system.load()?),
    };
    let csv = || {
        let mut s = String::from("channel,column,samples,r_first,r_last,clamp_r,min_value,r_at_min,max_value,junction_mismatch,warnings\n");
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &reports {
            s += &format!(
                "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{}\n",
                r.channel,
                r.column,
                r.samples,
                opt(r.r_first),
                opt(r.r_last),
                opt(r.clamp_r),
                r.min_value,
                r.r_at_min,
                r.max_value,
                r.junction_mismatch,
                r.warnings.join("; ").replace(',', ";")
            );
        }
        s
    };
    let path = emit(cfg, "potentials", &reports, csv)?;
    Ok((path, reports))
}

/// Flux bookkeeping for one `(E, S)` entry of a computed table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XsDiagnostics {
    pub energy: f64,
    pub spin: u8,
    pub partial_waves: usize,
    pub j_star_last: u32,
    pub absorption: f64,
    /// Smallest and largest exit-over-absorbed probability among the
    /// partial waves that absorb.
    pub flux_ratio_range: Option<(f64, f64)>,
    pub converged: bool,
}

fn diagnostics(table: &CrossSectionTable) -> Vec<XsDiagnostics> {
    let mut out = Vec::new();
    for row in &table.rows {
        for c in &row.channels {
            let ratios: Vec<f64> = c.partial_waves.iter().filter_map(|w| w.flux_ratio).collect();
            let range = (!ratios.is_empty()).then(|| {
                let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            });
            out.push(XsDiagnostics {
                energy: row.energy,
                spin: c.spin,
                partial_waves: c.partial_waves.len(),
                j_star_last: c.partial_waves.last().map_or(0, |w| w.j_star),
                absorption: c.partial_waves.iter().map(|w| w.absorption).sum(),
                flux_ratio_range: range,
                // a partial-wave sum that fails to converge is an error
                converged: true,
            });
        }
    }
    out
}

/// Per-spin AI/PI table over the configured energies, plus diagnostics.
pub fn cmd_xs(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let system = cfg.system.load()?;
    let table = Ionizer::new(&system, cfg.ionization)?.table(&cfg.energies()?)?;
    let main = emit(cfg, "xs", &table, || table.to_csv())?;
    let diag = write(&cfg.out, "xs_diagnostics.json", &json(cfg, diagnostics(&table)))?;
    Ok(vec![main, diag])
}

/// One rotated-state scan per energy.
pub fn cmd_scan(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let table = cfg.cross_sections()?;
    let grid = angle_grid(cfg.scan.points);
    let mut paths = Vec::new();
    for (i, e) in cfg.working_energies(&table)?.into_iter().enumerate() {
        let surface: ControlSurface = scan(cfg.scan.m_a, cfg.scan.m_b, &grid, &grid, &table, e)?;
        let undefined = surface.points.iter().filter(|p| p.ratio.is_none()).count();
        let stem = format!("scan_{}_{}_e{i:03}", cfg.scan.m_a, cfg.scan.m_b);
        let csv = || {
            format!(
                "# E_hartree {e:e} T_kelvin {:e} M_A {} M_B {} undefined_ratios {undefined}\n{}",
                hartree_to_kelvin(e),
                cfg.scan.m_a,
                cfg.scan.m_b,
                surface.to_csv()
            )
        };
        paths.push(emit(cfg, &stem, &surface, csv)?);
    }
    Ok(paths)
}

/// Optimization results at one energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub energy: f64,
    pub temperature: f64,
    pub channel: SpinSigmas,
    /// `σ_S^AI/σ_S^PI` for `S = 0, 1`; any preparation's ratio lies
    /// between them.
    pub channel_ratios: Option<[f64; 2]>,
    /// Ratio of the `|1 1⟩|1 −1⟩` family.
    pub maximal_state_ratio: Option<f64>,
    pub found: Vec<Found>,
    pub oracle: Option<OracleResult>,
    /// Whether the grid check stays on the right side of the best point.
    pub oracle_consistent: Option<bool>,
}

/// Multistart search (and grid check) at every energy. Reports are written
/// before a non-converged best point is turned into an error.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<(PathBuf, Vec<OptimizeReport>)> {
    let table = cfg.cross_sections()?;
    let o = &cfg.optimize;
    let mut reports = Vec::new();
    for e in cfg.working_energies(&table)? {
        let s = table.at(e)?;
        let found = multistart_with(o.seeds, &s, o.objective, o.sense, &o.settings)?;
        let oracle = match o.oracle_resolution {
            0 => None,
            n => Some(grid_oracle_with(&s, o.objective, n)?),
        };
        let best = found.first().and_then(|f| f.point.value);
        let oracle_consistent = oracle.as_ref().zip(best).map(|(g, v)| {
            let slack = 1e-12 * v.abs().max(1e-300);
            match o.sense {
                Sense::Max => g.max <= v + slack,
                Sense::Min => g.min >= v - slack,
            }
        });
        reports.push(OptimizeReport {
            energy: e,
            temperature: hartree_to_kelvin(e),
            channel: s,
            channel_ratios: channel_ratios(&s).ok(),
            maximal_state_ratio: maximal_state_ratio(&s).ok(),
            found,
            oracle,
            oracle_consistent,
        });
    }
    let csv = || optimize_csv(&reports);
    let path = emit(cfg, "optimize", &reports, csv)?;
    for r in &reports {
        if let Some(f) = r.found.first().filter(|f| !f.point.converged) {
            return Err(Error::NotConverged {
                iterations: f.point.iterations,
                residual: f.point.residual,
            });
        }
    }
    Ok((path, reports))
}

fn optimize_csv(reports: &[OptimizeReport]) -> String {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    let mut s = String::new();
    for r in reports {
        let [r0, r1] = r.channel_ratios.map_or([None, None], |[a, b]| [Some(a), Some(b)]);
        s += &format!(
            "# E_hartree {:e} ratio_S0 {} ratio_S1 {} maximal_state_ratio {} oracle_max {} oracle_min {}\n",
            r.energy,
            opt(r0),
            opt(r1),
            opt(r.maximal_state_ratio),
            opt(r.oracle.map(|g| g.max)),
            opt(r.oracle.map(|g| g.min)),
        );
    }
    s += "E_hartree,T_kelvin,objective,sense,rank,value,sigma_AI,sigma_PI,residual,converged,classification,hits,first_seed";
    for atom in ["a", "b"] {
        for m in ["m1", "0", "p1"] {
            s += &format!(",{atom}_{m}_re,{atom}_{m}_im");
        }
    }
    s.push('\n');
    for r in reports {
        for (rank, f) in r.found.iter().enumerate() {
            let p = &f.point;
            s += &format!(
                "{:e},{:e},{},{},{},{},{:e},{:e},{:e},{},{},{},{}",
                r.energy,
                r.temperature,
                p.objective,
                p.sense,
                rank + 1,
                opt(p.value),
                p.sigma.ai,
                p.sigma.pi,
                p.residual,
                p.converged,
                serde_json::to_value(p.classification).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                f.hits,
                f.first_seed
            );
            for z in p.representative.a.iter().chain(&p.representative.b) {
                s += &format!(",{:e},{:e}", z.re, z.im);
            }
            s.push('\n');
        }
    }
    s
}

// ---------------------------------------------------------------------------
// argument parsing

#[derive(Debug, Parser)]
#[command(name = "hestar", version, about = "He*(2³S) + He*(2³S) Penning and associative ionization with coherent control")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Potential-curve checks.
    #[command(subcommand)]
    Potential(PotentialCommand),
    /// Per-spin AI and PI cross sections over an energy grid.
    Xs(Overrides),
    /// Cross sections of rotated product states over an (α, β) grid.
    Scan(ScanArgs),
    /// Preparations extremizing σ_AI, σ_PI or their ratio.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Subcommand)]
pub enum PotentialCommand {
    /// Load the system (or one channel file) and report on every curve.
    Validate {
        /// Single channel file instead of the configured system.
        #[arg(long)]
        file: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Preset name or directory of channel files.
    #[arg(long)]
    pub system: Option<String>,
    /// Temperatures in kelvin: `a:b:n` on a log grid, or a list.
    #[arg(long, conflicts_with = "energies_hartree")]
    pub temps_k: Option<String>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub energies_hartree: Option<Vec<f64>>,
    #[arg(long)]
    pub ell_max: Option<u32>,
    #[arg(long)]
    pub jstar_max: Option<u32>,
    /// Cross-section CSV written by `xs`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, allow_hyphen_values = true)]
    pub m_a: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub m_b: Option<i32>,
    /// Points per angle.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// ai, pi or ratio.
    #[arg(long)]
    pub objective: Option<Objective>,
    /// max or min.
    #[arg(long)]
    pub sense: Option<Sense>,
    /// Points per angle of the grid check; 0 skips it.
    #[arg(long)]
    pub oracle_resolution: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(s) = &self.system {
            let p = Path::new(s);
            cfg.system = if p.is_dir() {
                SystemSource::Dir(p.to_path_buf())
            } else {
                SystemSource::Preset(s.clone())
            };
        }
        if let Some(t) = &self.temps_k {
            cfg.energies = Some(t.parse()?);
        }
        if let Some(e) = &self.energies_hartree {
            cfg.energies = Some(EnergySpec::Hartree(e.clone()));
        }
        if let Some(l) = self.ell_max {
            cfg.ionization.ell_max = l;
        }
        if let Some(j) = self.jstar_max {
            cfg.ionization.j_star_max = j;
        }
        if let Some(t) = &self.table {
            cfg.table = Some(t.clone());
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        Ok(())
    }
}

impl ScanArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        self.overrides.apply(cfg)?;
        cfg.scan.m_a = self.m_a.unwrap_or(cfg.scan.m_a);
        cfg.scan.m_b = self.m_b.unwrap_or(cfg.scan.m_b);
        cfg.scan.points = self.points.unwrap_or(cfg.scan.points);
        Ok(())
    }
}

impl OptimizeArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        self.overrides.apply(cfg)?;
        let o = &mut cfg.optimize;
        o.seeds = self.seeds.unwrap_or(o.seeds);
        o.objective = self.objective.unwrap_or(o.objective);
        o.sense = self.sense.unwrap_or(o.sense);
        o.oracle_resolution = self.oracle_resolution.unwrap_or(o.oracle_resolution);
        Ok(())
    }
}

/// Process exit code for an error: 2 validation, 3 convergence, 4 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        "validation" => 2,
        "convergence" => 3,
        _ => 4,
    }
}

/// Single-line JSON error block for stderr.
pub fn error_block(e: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": e.kind(),
            "exit_code": exit_code(e),
            "message": e.to_string(),
        }
    })
    .to_string()
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let paths = match &cli.command {
        Command::Potential(PotentialCommand::Validate { file, overrides }) => {
            overrides.apply(&mut cfg)?;
            cfg.validate()?;
            let (path, reports) = cmd_validate(&cfg, file.as_deref())?;
            for r in &reports {
                for w in &r.warnings {
                    eprintln!("warning: {} {}: {w}", r.channel, r.column);
                }
            }
            vec![path]
        }
        Command::Xs(o) => {
            o.apply(&mut cfg)?;
            cfg.validate()?;
            cmd_xs(&cfg)?
        }
        Command::Scan(a) => {
            a.apply(&mut cfg)?;
            cfg.validate()?;
            cmd_scan(&cfg)?
        }
        Command::Optimize(a) => {
            a.apply(&mut cfg)?;
            cfg.validate()?;
            vec![cmd_optimize(&cfg)?.0]
        }
    };
    Ok(paths)
}

/// Parses `args`, runs the command and returns the exit code. Usage errors
/// exit with 2 like validation errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::validation("threads", e.to_string())),
        },
        None => execute(&cli),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_block(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_grid() {
        let e = "1e-6:1:7".parse::<EnergySpec>().unwrap().energies().unwrap();
        assert_eq!(e.len(), 7);
        assert!((hartree_to_kelvin(e[0]) - 1e-6).abs() < 1e-18);
        assert!((hartree_to_kelvin(e[6]) - 1.0).abs() < 1e-12);
        assert!((e[1] / e[0] - 10.0).abs() < 1e-9);
        let list = "0.001, 0.01".parse::<EnergySpec>().unwrap();
        assert_eq!(list, EnergySpec::Kelvin(vec![0.001, 0.01]));
        assert!("1:2".parse::<EnergySpec>().is_err());
        assert!(EnergySpec::Hartree(vec![-1.0]).energies().is_err());
    }

    #[test]
    fn config_round_trip_and_single_source() {
        let cfg = RunConfig {
            energies: Some(EnergySpec::KelvinLog { from: 1e-6, to: 1.0, n: 4 }),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        let both = r#"{"system": {"preset": "model-A", "dir": "x"}}"#;
        assert!(RunConfig::from_json(both).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: "elsewhere".into(),
            ..RunConfig::default()
        };
        let c = RunConfig {
            format: Format::Json,
            ..RunConfig::default()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn flags_override_config() {
        let mut cfg = RunConfig::default();
        let cli = Cli::try_parse_from([
            "hestar",
            "optimize",
            "--system",
            "free",
            "--energies-hartree",
            "1e-9,1e-8",
            "--objective",
            "ai",
            "--sense",
            "min",
            "--seeds",
            "8",
        ])
        .unwrap();
        let Command::Optimize(a) = cli.command else { panic!() };
        a.apply(&mut cfg).unwrap();
        assert_eq!(cfg.system, SystemSource::Preset("free".into()));
        assert_eq!(cfg.energies, Some(EnergySpec::Hartree(vec![1e-9, 1e-8])));
        assert_eq!((cfg.optimize.objective, cfg.optimize.sense, cfg.optimize.seeds), (Objective::Ai, Sense::Min, 8));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::UnknownPreset("x".into())), 2);
        assert_eq!(exit_code(&Error::ZeroObjective), 3);
        let io = Error::Io {
            path: "p".into(),
            source: std::io::Error::other("x"),
        };
        assert_eq!(exit_code(&io), 4);
        assert!(error_block(&io).starts_with(r#"{"error":"#));
        assert_eq!(run(["hestar", "xs", "--system", "no-such-model", "--energies-hartree", "1e-9"]), 2);
        assert_eq!(run(["hestar", "frobnicate"]), 2);
    }
}
