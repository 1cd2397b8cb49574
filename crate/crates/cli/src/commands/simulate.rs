use std::path::Path;
use std::time::Instant;

use log::info;
use qeband_core::simlab::{run_design, SimDesign, SimFamily, SimReport};
use qeband_core::WeightScheme;
use serde::{Deserialize, Serialize};

use super::write_json;
use crate::config::config_hash;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_g17, write_atomic, Provenance, VERSION};

/// A simulation design: `count:<k>` or `ordered:<k>` for the built-in
/// designs, or an explicit family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignRef {
    Named(String),
    Custom(SimFamily),
}

impl DesignRef {
    pub fn resolve(&self) -> CliResult<(String, SimFamily)> {
        match self {
            Self::Named(name) => {
                let (kind, k) = name
                    .split_once(':')
                    .ok_or_else(|| CliError::Config(format!("design `{name}` is not `count:<k>` or `ordered:<k>`")))?;
                let k: usize = k.parse().map_err(|_| CliError::Config(format!("bad design index in `{name}`")))?;
                let family = match kind {
                    "count" => SimFamily::count_design(k)?,
                    "ordered" => SimFamily::ordered_design(k)?,
                    _ => return Err(CliError::Config(format!("unknown design family `{kind}`"))),
                };
                Ok((name.clone(), family))
            }
            Self::Custom(family) => {
                family.validate()?;
                let label = match family {
                    SimFamily::Poisson { lambda0, lambda1 } => format!("poisson({lambda0},{lambda1})"),
                    SimFamily::Ordered { mu0, mu1, .. } => format!("ordered({mu0},{mu1})"),
                };
                Ok((label, family.clone()))
            }
        }
    }
}

fn default_designs() -> Vec<DesignRef> {
    (1..=3).map(|k| DesignRef::Named(format!("count:{k}"))).collect()
}

fn default_n() -> Vec<usize> {
    vec![400, 1600]
}

fn default_p() -> Vec<f64> {
    vec![0.9, 0.95, 0.99]
}

fn default_nsim() -> usize {
    5000
}

fn default_draws() -> usize {
    500
}

fn default_prob_range() -> (f64, f64) {
    (0.1, 0.9)
}

fn default_prob_step() -> f64 {
    0.01
}

/// Configuration of `qeband simulate`: a sweep over designs, sample sizes
/// and confidence levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_designs")]
    pub designs: Vec<DesignRef>,
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default = "default_nsim")]
    pub nsim: usize,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: WeightScheme,
    #[serde(default)]
    pub competitors: bool,
    #[serde(default = "default_prob_range")]
    pub prob_range: (f64, f64),
    #[serde(default = "default_prob_step")]
    pub prob_step: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl SimulateConfig {
    /// Every `(label, design)` of the sweep, in output order.
    pub fn designs(&self) -> CliResult<Vec<(String, SimDesign)>> {
        if self.designs.is_empty() || self.n.is_empty() || self.p.is_empty() {
            return Err(CliError::Config("designs, n and p must be nonempty".into()));
        }
        let mut out = Vec::new();
        for d in &self.designs {
            let (label, family) = d.resolve()?;
            for &n in &self.n {
                for &p in &self.p {
                    let design = SimDesign {
                        scheme: self.scheme,
                        prob_range: self.prob_range,
                        prob_step: self.prob_step,
                        competitors: self.competitors,
                        ..SimDesign::new(family.clone(), n, p, self.nsim, self.draws, self.seed)
                    };
                    design.validate()?;
                    out.push((label.clone(), design));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateMetadata {
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub config: SimulateConfig,
    pub rows: Vec<SimReport>,
}

const COLUMNS: [&str; 25] = [
    "design",
    "n",
    "p",
    "nsim",
    "draws",
    "cover_f0",
    "cover_f0_se",
    "cover_f1",
    "cover_f1_se",
    "cover_all",
    "cover_all_se",
    "cover_qe",
    "cover_qe_se",
    "reject",
    "reject_se",
    "length",
    "length_se",
    "cover_boot",
    "cover_jitter1",
    "cover_jitter2",
    "length_boot",
    "length_jitter1",
    "length_jitter2",
    "raw_zero_se_share",
    "raw_supt_incomputable",
];

fn row(label: &str, r: &SimReport) -> Vec<String> {
    let d = &r.design;
    let mut v = vec![
        label.to_string(),
        d.n.to_string(),
        fmt_g17(d.p),
        d.nsim.to_string(),
        d.draws.to_string(),
    ];
    for rate in [r.coverage_f0, r.coverage_f1, r.coverage_all, r.coverage_qe, r.reject] {
        v.push(fmt_g17(rate.rate));
        v.push(fmt_g17(rate.mc_se));
    }
    v.push(fmt_g17(r.length_new.mean));
    v.push(fmt_g17(r.length_new.mc_se));
    match &r.competitors {
        Some(c) => v.extend(
            [
                c.coverage_boot.rate,
                c.coverage_jitter1.rate,
                c.coverage_jitter2.rate,
                c.length_boot.mean,
                c.length_jitter1.mean,
                c.length_jitter2.mean,
                c.raw_zero_se_share.mean,
                c.raw_supt_incomputable.rate,
            ]
            .map(fmt_g17),
        ),
        None => v.extend(std::iter::repeat_n(String::new(), 8)),
    }
    v
}

/// Runs the sweep and writes `simulate.csv` and `simulate.json`. Run times
/// go to the log only, so the files depend on the config alone.
pub fn run(config: &SimulateConfig, out: &Path) -> CliResult<Vec<SimReport>> {
    let designs = config.designs()?;
    let mut reports = Vec::with_capacity(designs.len());
    let mut rows = Vec::with_capacity(designs.len());
    for (label, design) in &designs {
        let start = Instant::now();
        let report = run_design(design)?;
        info!(
            "{label} n={} p={}: {:.1}s",
            design.n,
            design.p,
            start.elapsed().as_secs_f64()
        );
        rows.push(row(label, &report));
        reports.push(report);
    }

    let hash = config_hash(config);
    let prov = Provenance {
        seed: config.seed,
        config_hash: hash.clone(),
    };
    std::fs::create_dir_all(out)?;
    let mut bytes = prov.header_line().into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut bytes);
        let werr = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(COLUMNS).map_err(werr)?;
        for r in &rows {
            w.write_record(r).map_err(werr)?;
        }
        w.flush()?;
    }
    write_atomic(&out.join("simulate.csv"), &bytes)?;
    write_json(
        &out.join("simulate.json"),
        &SimulateMetadata {
            version: VERSION,
            seed: config.seed,
            config_hash: hash,
            config: config.clone(),
            rows: reports.clone(),
        },
    )?;
    Ok(reports)
}
