//! Project configuration: operators, the interconnection word, analyses and
//! simulation scenarios, read from a JSON file.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use srgkit::calculus::Mode;
use srgkit::geom::{disk_region, Region};
use srgkit::lang::{linearize, parse_expr, Expr, Operator, OperatorTable};
use srgkit::nonlin::Nonlinearity;
use srgkit::sim::{InputEnsemble, Signal};
use srgkit::{Settings, Tf, C64};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub description: String,
    pub operators: BTreeMap<String, OperatorSpec>,
    #[serde(default)]
    pub word: Option<String>,
    #[serde(default = "incremental")]
    pub mode: Mode,
    #[serde(default)]
    pub kappa: BTreeMap<String, f64>,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub analyses: Vec<AnalysisSpec>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn incremental() -> Mode {
    Mode::Incremental
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Tf(String),
    Nonlinearity(NonlinSpec),
    Region(RegionSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinSpec {
    pub map: NonlinKind,
    /// Declared bound for the SG at zero, replacing the sector disk.
    #[serde(default)]
    pub sg0_region: Option<RegionSpec>,
    /// Declared bound for the SRG, replacing the sector disk.
    #[serde(default)]
    pub srg_region: Option<RegionSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinKind {
    Linear { gain: f64 },
    Sector { lo: f64, hi: f64 },
    Saturation { #[serde(default = "one")] level: f64 },
    Deadzone { width: f64 },
    Sin { #[serde(default = "one")] gain: f64 },
    Cubic { #[serde(default = "one")] beta: f64, #[serde(default)] amplitude: Option<f64> },
    SteepSaturation,
    Tabulated { points: Vec<(f64, f64)> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    /// Disk with diameter `[alpha, beta]` on the real axis.
    Disk { alpha: f64, beta: f64 },
    Point { value: f64 },
    HalfDisk { radius: f64, #[serde(default = "yes")] right: bool },
    HalfPlane { #[serde(default = "yes")] right: bool },
    Plane,
    Polygon { vertices: Vec<[f64; 2]> },
}

fn yes() -> bool {
    true
}

impl RegionSpec {
    pub fn build(&self) -> Result<Region> {
        Ok(match self {
            RegionSpec::Disk { alpha, beta } => disk_region(*alpha, *beta)?,
            RegionSpec::Point { value } => Region::point(*value),
            RegionSpec::HalfDisk { radius, right } => Region::half_disk(*radius, *right)?,
            RegionSpec::HalfPlane { right } => Region::half_plane(*right),
            RegionSpec::Plane => Region::plane(),
            RegionSpec::Polygon { vertices } => {
                Region::polygon(vec![vertices.iter().map(|v| C64::new(v[0], v[1])).collect()], false)?
            }
        })
    }
}

impl NonlinSpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        let n = match &self.map {
            NonlinKind::Linear { gain } => Nonlinearity::linear(*gain),
            NonlinKind::Sector { lo, hi } => Nonlinearity::sector_class(*lo, *hi)?,
            NonlinKind::Saturation { level } => Nonlinearity::saturation(*level),
            NonlinKind::Deadzone { width } => Nonlinearity::deadzone(*width),
            NonlinKind::Sin { gain } => Nonlinearity::sin(*gain),
            NonlinKind::Cubic { beta, amplitude } => Nonlinearity::cubic(*beta, *amplitude)?,
            NonlinKind::SteepSaturation => Nonlinearity::steep_saturation(),
            NonlinKind::Tabulated { points } => Nonlinearity::tabulated(points)?,
        };
        let sg0 = self.sg0_region.as_ref().map(RegionSpec::build).transpose()?;
        let srg = self.srg_region.as_ref().map(RegionSpec::build).transpose()?;
        Ok(match (sg0, srg) {
            (None, None) => n,
            (a, b) => {
                let (keep_sg0, keep_srg) = (n.sg0_region.clone(), n.srg_region.clone());
                n.with_regions(a.or(keep_sg0), b.or(keep_srg))
            }
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    /// Per-name override of the inflatability flag.
    #[serde(default)]
    pub inflatable: BTreeMap<String, bool>,
    #[serde(default)]
    pub tau_continuous: bool,
    /// Accepted for documentation; every operator in the tool is causal.
    #[serde(default)]
    pub causal: BTreeMap<String, bool>,
}

/// A closed-form analysis. Transfer-function fields are words over LTI
/// operators, folded to a single transfer function.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    Lure { g: String, phi: String },
    ControlledLure { g: String, k: String, phi: String, #[serde(default)] kappa: Option<f64> },
    LureController { g: String, k: String, phi: String, #[serde(default)] kappa: Option<f64> },
    FeedbackMargin { g: String, k: String, phi: String },
    GeneralizedCircle { g: String, phi: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub topology: TopologySpec,
    #[serde(default = "zero_signal")]
    pub r: Signal,
    #[serde(default = "zero_signal")]
    pub d: Signal,
    pub t_end: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    /// Empirical gain estimate of the word, compared with its SRG bound.
    #[serde(default)]
    pub gain_check: Option<GainCheck>,
    /// Times at which to report `y`.
    #[serde(default)]
    pub probes: Vec<f64>,
}

fn zero_signal() -> Signal {
    Signal::Zero
}

fn default_h() -> f64 {
    1e-3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainCheck {
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ensemble: InputEnsemble,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Lure { g: String, phi: String },
    ControlledLure { g: String, k: String, phi: String },
    LureController { g: String, k: String, phi: String },
    SaturatedLure { g: String, k: String, phi_in: String, phi_fb: String },
    /// The configured word, driven by `r`.
    Word,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "yes")]
    pub plots: bool,
    #[serde(default = "yes")]
    pub csv: bool,
}

fn default_report() -> String {
    "report.json".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { report: default_report(), plots: true, csv: true }
    }
}

/// Parses `text`, reporting schema errors as `origin:line:column: message`.
pub fn parse_config(text: &str, origin: &str) -> Result<ProjectConfig> {
    serde_json::from_str(text).map_err(|e| anyhow!("{origin}:{}:{}: {e}", e.line(), e.column()))
}

pub fn load_config(path: &Path) -> Result<ProjectConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text, &path.display().to_string())
}

/// A validated configuration with its operators built.
pub struct Project {
    pub config: ProjectConfig,
    pub table: OperatorTable,
    pub word: Option<Expr>,
}

impl Project {
    pub fn new(config: ProjectConfig) -> Result<Project> {
        let mut table = OperatorTable::new();
        for (name, spec) in &config.operators {
            let op = match spec {
                OperatorSpec::Tf(text) => {
                    let f: Tf = text.parse().with_context(|| format!("operator `{name}`"))?;
                    Operator::Lti(f.with_label(name))
                }
                OperatorSpec::Nonlinearity(n) => {
                    let mut phi = n.build().with_context(|| format!("operator `{name}`"))?.with_label(name);
                    if let Some(&flag) = config.assertions.inflatable.get(name) {
                        phi.inflatable = flag;
                    }
                    Operator::Nl(phi)
                }
                OperatorSpec::Region(r) => Operator::Region(r.build().with_context(|| format!("operator `{name}`"))?),
            };
            table.insert(name.clone(), op).with_context(|| format!("operator `{name}`"))?;
        }
        for name in config.assertions.inflatable.keys().chain(config.assertions.causal.keys()).chain(config.kappa.keys()) {
            if !config.operators.contains_key(name) {
                bail!("assertion or gain refers to undefined operator `{name}`");
            }
        }
        let word = config.word.as_deref().map(parse_expr).transpose().context("word")?;
        if let Some(w) = &word {
            table.resolve(w).context("word")?;
        }
        let project = Project { config, table, word };
        for a in &project.config.analyses {
            project.check_analysis(a)?;
        }
        if let Some(sim) = &project.config.simulation {
            project.check_topology(&sim.topology)?;
        }
        Ok(project)
    }

    /// Folds a word over LTI operators into one transfer function.
    pub fn tf(&self, text: &str) -> Result<Tf> {
        let e = parse_expr(text).with_context(|| format!("`{text}`"))?;
        self.table.resolve(&e).with_context(|| format!("`{text}`"))?;
        let f = linearize(&e, &self.table, &BTreeMap::new(), self.config.mode).with_context(|| format!("`{text}`"))?;
        if e.names().iter().any(|n| matches!(self.table.get(n), Ok(Operator::Nl(_) | Operator::Region(_)))) {
            bail!("`{text}` must only involve transfer functions");
        }
        Ok(f.with_label(text))
    }

    pub fn nonlinearity(&self, name: &str) -> Result<&Nonlinearity> {
        match self.table.get(name)? {
            Operator::Nl(phi) => Ok(phi),
            _ => bail!("`{name}` is not a nonlinearity"),
        }
    }

    fn check_analysis(&self, a: &AnalysisSpec) -> Result<()> {
        match a {
            AnalysisSpec::Lure { g, phi } | AnalysisSpec::GeneralizedCircle { g, phi } => {
                self.tf(g)?;
                self.nonlinearity(phi)?;
            }
            AnalysisSpec::ControlledLure { g, k, phi, .. }
            | AnalysisSpec::LureController { g, k, phi, .. }
            | AnalysisSpec::FeedbackMargin { g, k, phi } => {
                self.tf(g)?;
                self.tf(k)?;
                self.nonlinearity(phi)?;
            }
        }
        Ok(())
    }

    fn check_topology(&self, t: &TopologySpec) -> Result<()> {
        match t {
            TopologySpec::Lure { g, phi } => {
                self.tf(g)?;
                self.nonlinearity(phi)?;
            }
            TopologySpec::ControlledLure { g, k, phi } | TopologySpec::LureController { g, k, phi } => {
                self.tf(g)?;
                self.tf(k)?;
                self.nonlinearity(phi)?;
            }
            TopologySpec::SaturatedLure { g, k, phi_in, phi_fb } => {
                self.tf(g)?;
                self.tf(k)?;
                self.nonlinearity(phi_in)?;
                self.nonlinearity(phi_fb)?;
            }
            TopologySpec::Word => {
                if self.word.is_none() {
                    bail!("simulation topology `word` needs a `word`");
                }
            }
        }
        Ok(())
    }
}

/// Configurations shipped with the binary.
pub const BUNDLED: &[(&str, &str)] = &[
    ("duffing", include_str!("../configs/duffing.json")),
    ("duffing_sqrt2", include_str!("../configs/duffing_sqrt2.json")),
    ("pendulum_k1", include_str!("../configs/pendulum_k1.json")),
    ("pendulum_k2", include_str!("../configs/pendulum_k2.json")),
    ("pitfall", include_str!("../configs/pitfall.json")),
    ("lure_saturation", include_str!("../configs/lure_saturation.json")),
];

pub fn bundled(name: &str) -> Result<ProjectConfig> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| anyhow!("no bundled example `{name}`; available: {}", BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")))?;
    parse_config(text, &format!("<bundled {name}>"))
}

pub fn mode_arg(s: &str) -> Result<Mode> {
    s.parse().map_err(|e: String| anyhow!(e))
}
