//! Command-line front end of `qeband`: reads CSV data and JSON configs,
//! runs the band, decomposition and simulation pipelines of `qeband-core`,
//! and writes CSV, JSON and SVG reports.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod svg;

use config::{BandsConfig, Bound, DecomposeConfig, GridSpec, SupportSpec};
use error::{CliError, CliResult};

/// Flag values that override the corresponding config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub level: Option<f64>,
    pub draws: Option<usize>,
    pub seed: Option<u64>,
    pub link: Option<String>,
    pub support: Option<String>,
    pub grid: Option<String>,
    pub domain_sup: Option<String>,
}

impl Overrides {
    fn bound(&self) -> CliResult<Option<Bound>> {
        self.domain_sup
            .as_deref()
            .map(|s| match s.trim() {
                "inf" => Ok(Bound::Keyword("inf".into())),
                v => v
                    .parse()
                    .map(Bound::Value)
                    .map_err(|_| CliError::Config(format!("bad domain bound `{v}`"))),
            })
            .transpose()
    }

    /// `--link` switches the estimator to distribution regression with
    /// that link.
    pub fn apply_bands(&self, c: &mut BandsConfig) -> CliResult<()> {
        if let Some(v) = self.level {
            c.level = v;
        }
        if let Some(v) = self.draws {
            c.draws = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(l) = &self.link {
            c.estimator = format!("dr:{l}");
        }
        if let Some(s) = &self.support {
            c.support = SupportSpec::parse_flag(s)?;
        }
        if let Some(g) = &self.grid {
            c.grid = GridSpec::parse_flag(g)?;
        }
        if let Some(b) = self.bound()? {
            c.domain_sup = Some(b);
        }
        c.validate()
    }

    pub fn apply_decompose(&self, c: &mut DecomposeConfig) -> CliResult<()> {
        if let Some(v) = self.level {
            c.level = v;
        }
        if let Some(v) = self.draws {
            c.draws = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(l) = &self.link {
            c.link = l.clone();
        }
        if let Some(s) = &self.support {
            c.support = SupportSpec::parse_flag(s)?;
        }
        if let Some(g) = &self.grid {
            c.grid = GridSpec::parse_flag(g)?;
        }
        if let Some(b) = self.bound()? {
            c.domain_sup = Some(b);
        }
        c.validate()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
