use std::path::Path;

use log::{info, warn};
use qeband_core::estimate::{Estimator, GroupEstimator};
use qeband_core::resample::bootstrap_dfs;
use qeband_core::shape::{clip_unit, shape_values};
use qeband_core::{BootstrapConfig, MonotoneStepFn};
use serde::Serialize;

use super::{
    bound_text, run_pipeline, write_json, Contrast, ContrastSummary, CriticalValueSummary, GroupSummary,
    PipelineInput, ShapingSummary,
};
use crate::config::{config_hash, BandsConfig};
use crate::data::{load, Roles, Table};
use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, Provenance, VERSION};

#[derive(Debug, Clone, Serialize)]
pub struct BandsSummary {
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub data_sha256: String,
    pub config: BandsConfig,
    pub estimator: String,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub grid: Vec<f64>,
    pub domain_sup: String,
    pub level: f64,
    pub draws: usize,
    pub shaping: ShapingSummary,
    pub critical_values: Vec<CriticalValueSummary>,
    pub groups: Vec<GroupSummary>,
    pub contrasts: Vec<ContrastSummary>,
}

/// DF-, QF- and QE-bands for the groups of a dataset.
pub fn run(config: &BandsConfig, data_path: &Path, out: &Path, plots: bool) -> CliResult<BandsSummary> {
    config.validate()?;
    let estimator = config.estimator()?;
    let shaping = config.shape.build()?;
    let prob_grid = config.probs.build()?;

    let bytes = std::fs::read(data_path).map_err(|e| CliError::Data(format!("{}: {e}", data_path.display())))?;
    let table = Table::from_bytes(&bytes)?;
    let uses_covariates = estimator != Estimator::Edf;
    let loaded = load(
        &table,
        &Roles {
            outcome: &config.outcome,
            group: config.group.as_deref(),
            cluster: config.cluster.as_deref(),
            weight: config.weight.as_deref(),
            design: uses_covariates.then_some(&config.design),
        },
    )?;
    if loaded.dropped > 0 {
        warn!("dropped {} rows with missing values", loaded.dropped);
    }
    let data = &loaded.data;

    let labels = match &config.groups {
        Some(g) => g.clone(),
        None => data.groups(),
    };
    let rows: Vec<Vec<usize>> = labels.iter().map(|g| data.group_rows(g)).collect();
    if let Some(k) = rows.iter().position(Vec::is_empty) {
        return Err(CliError::Config(format!("group `{}` has no rows", labels[k])));
    }
    let contrasts = contrasts(config, &labels)?;

    let domain_sup = config.domain_sup.as_ref().map(|b| b.value()).transpose()?;
    let grid = config.grid.build(data.outcome(), domain_sup)?;
    let estimators = rows
        .iter()
        .map(|r| GroupEstimator::new(estimator, data, r, &grid, &config.design))
        .collect::<qeband_core::Result<Vec<_>>>()?;

    let sw = data.weights();
    let evaluate = |w: &[f64]| {
        estimators
            .iter()
            .zip(&rows)
            .map(|(e, r)| e.evaluate(&r.iter().map(|&i| w[i] * sw[i]).collect::<Vec<_>>()))
            .collect::<qeband_core::Result<Vec<_>>>()
    };
    let estimates = evaluate(&vec![1.0; data.len()])?
        .into_iter()
        .map(|v| MonotoneStepFn::new(grid.clone(), shape_values(&clip_unit(&v), shaping.mode)))
        .collect::<qeband_core::Result<Vec<_>>>()?;

    let boot = BootstrapConfig {
        scheme: config.scheme,
        draws: config.draws,
        master_seed: config.seed,
        cluster_by: config.cluster.clone(),
    };
    let clusters = data.cluster_ids();
    info!("{} bootstrap draws over {} groups", config.draws, labels.len());
    let draws = bootstrap_dfs(evaluate, data.len(), clusters.as_deref(), &grid, &boot, shaping.mode)?;

    let support = config.support.resolve(data.outcome())?;
    let output = run_pipeline(PipelineInput {
        labels: &labels,
        estimates,
        draws,
        level: config.level,
        shaping,
        joint: config.joint,
        prob_grid: &prob_grid,
        support,
        contrasts: &contrasts,
        ratios: config.ratio,
    })?;

    let hash = config_hash(config);
    let prov = Provenance {
        seed: config.seed,
        config_hash: hash.clone(),
    };
    output.write(out, &prov, plots)?;
    let summary = BandsSummary {
        version: VERSION,
        seed: config.seed,
        config_hash: hash,
        data_sha256: sha256_hex(&bytes),
        config: config.clone(),
        estimator: estimator.to_string(),
        rows_used: data.len(),
        rows_dropped: loaded.dropped,
        grid: grid.points().to_vec(),
        domain_sup: bound_text(grid.domain_sup()),
        level: config.level,
        draws: config.draws,
        shaping: shaping.into(),
        critical_values: output.critical_values.clone(),
        groups: output.group_summaries(&rows.iter().map(Vec::len).collect::<Vec<_>>()),
        contrasts: output.contrast_summaries(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn contrasts(config: &BandsConfig, labels: &[String]) -> CliResult<Vec<Contrast>> {
    let index = |g: &str| {
        labels
            .iter()
            .position(|l| l == g)
            .ok_or_else(|| CliError::Config(format!("contrast refers to unknown group `{g}`")))
    };
    match &config.pairs {
        Some(pairs) => pairs
            .iter()
            .map(|(j, m)| {
                Ok(Contrast {
                    label: format!("{j}-{m}"),
                    j: index(j)?,
                    m: index(m)?,
                })
            })
            .collect(),
        None => Ok((1..labels.len())
            .map(|j| Contrast {
                label: format!("{}-{}", labels[j], labels[0]),
                j,
                m: 0,
            })
            .collect()),
    }
}
