//! Run configuration documents.

use std::path::PathBuf;

use nifs_atlas::families::{self, SeedMode};
use nifs_atlas::geometry::{ClosedDisk, DiskDomain, Enclosure, RealInterval};
use nifs_atlas::julia::{ModulusLaw, Palette, PolySeqSpec};
use nifs_atlas::nifs::SystemSpec;
use nifs_atlas::seqlang::{ListTail, SeqRule};
use nifs_atlas::Complex64;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Pieces,
    Certify,
    Dichotomy,
    Render,
    Sample,
    Invariance,
}

impl Action {
    pub fn default_file(self) -> &'static str {
        match self {
            Action::Pieces => "pieces.csv",
            Action::Certify => "certificate.json",
            Action::Dichotomy => "dichotomy.csv",
            Action::Render => "julia.ppm",
            Action::Sample => "sample.csv",
            Action::Invariance => "invariance.csv",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub horizon: usize,
    #[serde(default)]
    pub action: Option<Action>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub pieces: PiecesParams,
    #[serde(default)]
    pub certify: CertifyParams,
    #[serde(default)]
    pub dichotomy: DichotomyParams,
    #[serde(default)]
    pub render: RenderParams,
    #[serde(default)]
    pub sample: SampleParams,
    #[serde(default)]
    pub invariance: InvarianceParams,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(x) => Complex64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailConfig {
    #[default]
    RepeatLast,
    Error,
}

/// A sequence rule: a number, an expression in `j`, a list, or an override.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RuleConfig {
    Constant(f64),
    Expr(String),
    List {
        list: Vec<f64>,
        #[serde(default)]
        tail: TailConfig,
    },
    Override {
        base: Box<RuleConfig>,
        when: String,
        value: Box<RuleConfig>,
    },
}

impl RuleConfig {
    pub fn to_rule(&self) -> Result<SeqRule, CliError> {
        Ok(match self {
            RuleConfig::Constant(v) => SeqRule::Constant(*v),
            RuleConfig::Expr(src) => SeqRule::expr(src).map_err(nifs_atlas::Error::from)?,
            RuleConfig::List { list, tail } => SeqRule::List {
                values: list.clone(),
                tail: match tail {
                    TailConfig::RepeatLast => ListTail::RepeatLast,
                    TailConfig::Error => ListTail::Error,
                },
            },
            RuleConfig::Override { base, when, value } => SeqRule::Override {
                base: Box::new(base.to_rule()?),
                indices: nifs_atlas::seqlang::parse(when).map_err(nifs_atlas::Error::from)?,
                value: Box::new(value.to_rule()?),
            },
        })
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    pub center: ComplexValue,
    pub radius: f64,
}

impl DiskConfig {
    fn disk(&self) -> Result<ClosedDisk, CliError> {
        Ok(ClosedDisk::new(self.center.into(), self.radius)?)
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SeedConfig {
    Disk(DiskConfig),
    Interval([f64; 2]),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    pub distribution: ModulusLaw,
    pub count: usize,
}

fn default_m() -> u32 {
    2
}

fn default_seed_mode() -> SeedMode {
    SeedMode::Disk
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    Cantor {
        #[serde(default = "default_m")]
        m: u32,
        a_rule: RuleConfig,
        #[serde(default = "default_seed_mode")]
        seed_mode: SeedMode,
    },
    Gapped {
        l_rule: RuleConfig,
        #[serde(default = "default_seed_mode")]
        seed_mode: SeedMode,
    },
    Julia {
        quad_a: ComplexValue,
        quad_c: ComplexValue,
        #[serde(default)]
        a_rule: Option<RuleConfig>,
        /// Argument of `a_j` in radians; `a_rule` gives the modulus.
        #[serde(default)]
        a_arg_rule: Option<RuleConfig>,
        #[serde(default)]
        random: Option<RandomConfig>,
    },
    Explicit {
        domain: DiskConfig,
        seed: SeedConfig,
        #[serde(default)]
        hull: Option<DiskConfig>,
        stages: Vec<Vec<[ComplexValue; 2]>>,
    },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecesParams {
    /// Columns `j = 1..=columns`; defaults to the horizon.
    pub columns: Option<usize>,
    /// Depths `k = 0..=max_depth`; defaults to the horizon.
    pub max_depth: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum WordConfig {
    #[default]
    #[serde(skip)]
    Smallest,
    Name(String),
    Labels(Vec<u32>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyParams {
    pub subsequence: Option<Vec<usize>>,
    pub c: Option<f64>,
    #[serde(default)]
    pub word: WordConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyParams {
    pub from: Option<usize>,
    pub to: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderParams {
    pub half_width: f64,
    pub size: usize,
    /// Escape stages; defaults to the horizon.
    pub stages: Option<usize>,
    pub palette: Palette,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self { half_width: 1.1, size: 256, stages: None, palette: Palette::Grayscale }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleParams {
    /// Depth of the leaf words for attractor samples.
    pub depth: usize,
    pub streams: usize,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self { depth: 6, streams: 1 }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceParams {
    /// Check every `(j, k)` with `j + k` at most this; defaults to the horizon.
    pub max_total: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub file: Option<String>,
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(src).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.horizon == 0 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        Ok(cfg)
    }

    /// The NIFS described by `system`. Julia systems give their inverse-branch
    /// system.
    pub fn build_system(&self) -> Result<SystemSpec, CliError> {
        match &self.system {
            SystemConfig::Cantor { m, a_rule, seed_mode } => {
                Ok(families::cantor(*m, &a_rule.to_rule()?, *seed_mode, self.horizon)?)
            }
            SystemConfig::Gapped { l_rule, seed_mode } => {
                Ok(families::gapped(&l_rule.to_rule()?, *seed_mode, self.horizon)?)
            }
            SystemConfig::Julia { .. } => {
                let spec = self.poly_spec()?;
                Ok(nifs_atlas::julia::inverse_ifs(&spec, nifs_atlas::julia::DEFAULT_EPS)?)
            }
            SystemConfig::Explicit { domain, seed, hull, stages } => {
                let domain = DiskDomain::new(domain.center.into(), domain.radius)?;
                let seed = match seed {
                    SeedConfig::Disk(d) => Enclosure::Disk(d.disk()?),
                    SeedConfig::Interval([lo, hi]) => Enclosure::Interval(RealInterval::new(*lo, *hi)?),
                };
                let hull = hull.as_ref().map(DiskConfig::disk).transpose()?;
                let stages: Vec<Vec<(Complex64, Complex64)>> =
                    stages.iter().map(|s| s.iter().map(|[a, b]| ((*a).into(), (*b).into())).collect()).collect();
                if stages.len() < self.horizon {
                    return Err(CliError::Config(format!(
                        "explicit system lists {} stages but the horizon is {}",
                        stages.len(),
                        self.horizon
                    )));
                }
                Ok(families::explicit(domain, seed, hull, &stages[..self.horizon])?)
            }
        }
    }

    /// Polynomial sequence of a `julia` system with an explicit `a_rule`.
    pub fn poly_spec(&self) -> Result<PolySeqSpec, CliError> {
        let SystemConfig::Julia { quad_a, quad_c, a_rule, a_arg_rule, .. } = &self.system else {
            return Err(CliError::Config("this action needs a julia system".into()));
        };
        let Some(rule) = a_rule else {
            return Err(CliError::Config("julia system needs `a_rule` for this action".into()));
        };
        let moduli = rule.to_rule()?.materialize(self.horizon).map_err(nifs_atlas::Error::from)?;
        let args = match a_arg_rule {
            Some(r) => r.to_rule()?.materialize(self.horizon).map_err(nifs_atlas::Error::from)?,
            None => vec![0.0; self.horizon],
        };
        let coefficients = moduli.iter().zip(&args).map(|(m, t)| Complex64::from_polar(*m, *t)).collect();
        Ok(PolySeqSpec::new((*quad_a).into(), (*quad_c).into(), coefficients)?)
    }
}
