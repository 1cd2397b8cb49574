//! JSON configuration of the commands, plus command-line overrides.

use std::path::Path;

use qeband_core::estimate::Estimator;
use qeband_core::{BandShaping, DesignSpec, Grid, LinkFunction, ProbGrid, ShapeMode, WeightScheme};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Outcome grid: `"auto"` (observed outcome values), an explicit list of
/// points, or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Keyword(String),
    Points(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::Keyword("auto".into())
    }
}

impl GridSpec {
    /// `auto`, `lo:hi`, `lo:hi:step` or a comma-separated list.
    pub fn parse_flag(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if s == "auto" {
            return Ok(Self::default());
        }
        if s.contains(':') {
            let parts = parse_list(s, ':')?;
            return match parts[..] {
                [from, to] => Ok(Self::Range { from, to, step: 1.0 }),
                [from, to, step] => Ok(Self::Range { from, to, step }),
                _ => Err(CliError::Config(format!("bad grid range `{s}`"))),
            };
        }
        Ok(Self::Points(parse_list(s, ',')?))
    }

    pub fn build(&self, observed: &[f64], domain_sup: Option<f64>) -> CliResult<Grid> {
        let points = match self {
            Self::Keyword(k) if k == "auto" => {
                let mut v = observed.to_vec();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            Self::Keyword(k) => return Err(CliError::Config(format!("unknown grid keyword `{k}`"))),
            Self::Points(p) => p.clone(),
            Self::Range { from, to, step } => {
                if !(*step > 0.0 && to >= from && from.is_finite() && to.is_finite()) {
                    return Err(CliError::Config(format!("bad grid range {from}:{to}:{step}")));
                }
                let count = ((to - from) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|k| from + k as f64 * step).collect()
            }
        };
        let sup = domain_sup.unwrap_or_else(|| points.last().copied().unwrap_or(f64::NAN));
        Grid::with_domain_sup(points, sup).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Support set used to restrict quantile bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportSpec {
    Keyword(String),
    Values(Vec<f64>),
}

impl Default for SupportSpec {
    fn default() -> Self {
        Self::Keyword("none".into())
    }
}

impl SupportSpec {
    /// `none`, `auto` or a comma-separated list.
    pub fn parse_flag(s: &str) -> CliResult<Self> {
        match s.trim() {
            k @ ("none" | "auto") => Ok(Self::Keyword(k.into())),
            list => Ok(Self::Values(parse_list(list, ',')?)),
        }
    }

    pub fn resolve(&self, observed: &[f64]) -> CliResult<Option<Vec<f64>>> {
        match self {
            Self::Keyword(k) if k == "none" => Ok(None),
            Self::Keyword(k) if k == "auto" => {
                let mut v = observed.to_vec();
                v.sort_by(f64::total_cmp);
                v.dedup();
                Ok(Some(v))
            }
            Self::Keyword(k) => Err(CliError::Config(format!("unknown support keyword `{k}`"))),
            Self::Values(v) if v.is_empty() => Err(CliError::Config("support set is empty".into())),
            Self::Values(v) => Ok(Some(v.clone())),
        }
    }
}

/// Upper end of the outcome domain: a number or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Value(f64),
    Keyword(String),
}

impl Bound {
    pub fn value(&self) -> CliResult<f64> {
        match self {
            Self::Value(v) => Ok(*v),
            Self::Keyword(k) if k == "inf" => Ok(f64::INFINITY),
            Self::Keyword(k) => Err(CliError::Config(format!("bad domain bound `{k}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbSpec {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl Default for ProbSpec {
    fn default() -> Self {
        Self {
            from: 0.01,
            to: 0.99,
            step: 0.01,
        }
    }
}

impl ProbSpec {
    pub fn build(&self) -> CliResult<ProbGrid> {
        ProbGrid::range(self.from, self.to, self.step).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    /// `rearrange`, `isotonize` or `mix`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Isotonization weight of the `mix` mode.
    #[serde(default = "default_mix")]
    pub mix: f64,
    #[serde(default)]
    pub intersect: bool,
}

fn default_mode() -> String {
    "rearrange".into()
}

fn default_mix() -> f64 {
    0.5
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            mix: default_mix(),
            intersect: false,
        }
    }
}

impl ShapeConfig {
    pub fn build(&self) -> CliResult<BandShaping> {
        let mode = match self.mode.as_str() {
            "rearrange" => ShapeMode::Rearrange,
            "isotonize" => ShapeMode::Isotonize,
            "mix" if (0.0..=1.0).contains(&self.mix) => ShapeMode::Mix {
                isotonic_weight: self.mix,
            },
            "mix" => return Err(CliError::Config(format!("mix weight {} is not in [0, 1]", self.mix))),
            other => return Err(CliError::Config(format!("unknown shape mode `{other}`"))),
        };
        Ok(BandShaping {
            mode,
            intersect: self.intersect,
        })
    }
}

fn default_outcome() -> String {
    "y".into()
}

fn default_level() -> f64 {
    0.95
}

fn default_draws() -> usize {
    1000
}

fn default_link() -> String {
    "logit".into()
}

fn default_estimator() -> String {
    "edf".into()
}

/// Configuration of `qeband bands`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    #[serde(default = "default_outcome")]
    pub outcome: String,
    /// Group column; without it all rows form one group.
    #[serde(default)]
    pub group: Option<String>,
    /// Groups to report, in order; defaults to order of first appearance.
    #[serde(default)]
    pub groups: Option<Vec<String>>,
    #[serde(default)]
    pub cluster: Option<String>,
    /// Sampling-weight column.
    #[serde(default)]
    pub weight: Option<String>,
    #[serde(default)]
    pub design: DesignSpec,
    /// `edf`, `poisson` or `dr:<link>`.
    #[serde(default = "default_estimator")]
    pub estimator: String,
    /// With `dr:gamma-incomplete`, hold the coefficients fixed across
    /// thresholds at the Poisson regression estimate.
    #[serde(default)]
    pub constant_coefficients: bool,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: WeightScheme,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub domain_sup: Option<Bound>,
    #[serde(default)]
    pub probs: ProbSpec,
    #[serde(default)]
    pub support: SupportSpec,
    #[serde(default)]
    pub shape: ShapeConfig,
    /// One critical value for all groups; otherwise one per group.
    #[serde(default = "default_true")]
    pub joint: bool,
    /// QE contrasts `(j, m)` for `Q_j - Q_m`; defaults to every group against
    /// the first.
    #[serde(default)]
    pub pairs: Option<Vec<(String, String)>>,
    /// Also report ratio bands `Q_j / Q_m`.
    #[serde(default)]
    pub ratio: bool,
}

fn default_true() -> bool {
    true
}

impl Default for BandsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl BandsConfig {
    pub fn estimator(&self) -> CliResult<Estimator> {
        let e: Estimator = self.estimator.parse().map_err(CliError::Config)?;
        Ok(match e {
            Estimator::Dr(LinkFunction::GammaIncomplete) if self.constant_coefficients => Estimator::Poisson,
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        self.estimator()?;
        check_level(self.level)?;
        check_draws(self.draws)?;
        self.shape.build()?;
        self.probs.build()?;
        if let Some(b) = &self.domain_sup {
            b.value()?;
        }
        Ok(())
    }
}

/// Configuration of `qeband decompose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    #[serde(default = "default_outcome")]
    pub outcome: String,
    pub group: String,
    /// Reference group `W`, whose conditional distribution is integrated.
    pub w: String,
    /// Group `B`, whose covariate distribution is used.
    pub b: String,
    #[serde(default)]
    pub cluster: Option<String>,
    #[serde(default)]
    pub weight: Option<String>,
    #[serde(default)]
    pub design: DesignSpec,
    #[serde(default = "default_link")]
    pub link: String,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: WeightScheme,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub domain_sup: Option<Bound>,
    #[serde(default)]
    pub probs: ProbSpec,
    #[serde(default)]
    pub support: SupportSpec,
    #[serde(default)]
    pub shape: ShapeConfig,
}

impl DecomposeConfig {
    pub fn link(&self) -> CliResult<LinkFunction> {
        self.link.parse().map_err(CliError::Config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.link()?;
        check_level(self.level)?;
        check_draws(self.draws)?;
        self.shape.build()?;
        self.probs.build()?;
        if let Some(b) = &self.domain_sup {
            b.value()?;
        }
        Ok(())
    }
}

fn check_level(p: f64) -> CliResult<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("level {p} is not in (0, 1)")))
    }
}

fn check_draws(b: usize) -> CliResult<()> {
    if b >= 2 {
        Ok(())
    } else {
        Err(CliError::Config(format!("at least 2 bootstrap draws are needed, got {b}")))
    }
}

fn parse_list(s: &str, sep: char) -> CliResult<Vec<f64>> {
    s.split(sep)
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("`{t}` is not a number")))
        })
        .collect()
}

/// Reads a JSON config file, or the all-defaults config when `path` is
/// `None`.
pub fn load<T: DeserializeOwned>(path: Option<&Path>, fallback: &str) -> CliResult<T> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => fallback.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
}

/// SHA-256 of the canonical JSON form of a resolved config.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    crate::output::sha256_hex(&serde_json::to_vec(config).expect("serializable config"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flags() {
        assert_eq!(GridSpec::parse_flag("auto").unwrap(), GridSpec::default());
        let g = GridSpec::parse_flag("0:4").unwrap().build(&[], None).unwrap();
        assert_eq!(g.points(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.domain_sup(), 4.0);
        let g = GridSpec::parse_flag("1,2.5,7").unwrap().build(&[], Some(f64::INFINITY)).unwrap();
        assert_eq!(g.points(), &[1.0, 2.5, 7.0]);
        let g = GridSpec::default().build(&[3.0, 1.0, 3.0], None).unwrap();
        assert_eq!(g.points(), &[1.0, 3.0]);
        assert!(GridSpec::parse_flag("1:x").is_err());
        assert!(GridSpec::Keyword("bogus".into()).build(&[1.0], None).is_err());
    }

    #[test]
    fn support_flags() {
        assert_eq!(SupportSpec::parse_flag("none").unwrap().resolve(&[1.0]).unwrap(), None);
        assert_eq!(
            SupportSpec::parse_flag("auto").unwrap().resolve(&[2.0, 1.0, 2.0]).unwrap(),
            Some(vec![1.0, 2.0])
        );
        assert_eq!(SupportSpec::parse_flag("0,1").unwrap().resolve(&[]).unwrap(), Some(vec![0.0, 1.0]));
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = BandsConfig::default();
        assert_eq!(c.level, 0.95);
        assert_eq!(c.draws, 1000);
        assert_eq!(c.estimator().unwrap(), Estimator::Edf);
        assert!(c.validate().is_ok());
        let c: BandsConfig =
            serde_json::from_str(r#"{"estimator": "dr:gamma-incomplete", "constant_coefficients": true}"#).unwrap();
        assert_eq!(c.estimator().unwrap(), Estimator::Poisson);
        let c: BandsConfig = serde_json::from_str(r#"{"level": 1.5}"#).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        assert!(serde_json::from_str::<BandsConfig>(r#"{"lvel": 0.9}"#).is_err());
        let c: BandsConfig = serde_json::from_str(r#"{"domain_sup": "inf", "grid": {"from": 0, "to": 3, "step": 1}}"#).unwrap();
        assert_eq!(c.domain_sup.unwrap().value().unwrap(), f64::INFINITY);
    }

    #[test]
    fn hash_tracks_content() {
        let a = BandsConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
