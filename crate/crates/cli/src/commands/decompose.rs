use std::path::Path;

use log::{info, warn};
use qeband_core::estimate::Decomposition;
use qeband_core::resample::bootstrap_dfs;
use qeband_core::shape::{clip_unit, shape_values};
use qeband_core::{BootstrapConfig, MonotoneStepFn};
use serde::Serialize;

use super::{
    bound_text, run_pipeline, write_json, Contrast, ContrastSummary, CriticalValueSummary, GroupSummary,
    PipelineInput, ShapingSummary,
};
use crate::config::{config_hash, DecomposeConfig};
use crate::data::{load, Roles, Table};
use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, Provenance, VERSION};

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeSummary {
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub data_sha256: String,
    pub config: DecomposeConfig,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub grid: Vec<f64>,
    pub domain_sup: String,
    pub level: f64,
    pub draws: usize,
    pub shaping: ShapingSummary,
    pub critical_values: Vec<CriticalValueSummary>,
    pub functions: Vec<GroupSummary>,
    pub contrasts: Vec<ContrastSummary>,
}

/// Joint bands for `F<W|W>`, `F<B|B>` and the counterfactual `F<W|B>`, and
/// for the raw quantile gap with its composition and unexplained parts.
pub fn run(config: &DecomposeConfig, data_path: &Path, out: &Path, plots: bool) -> CliResult<DecomposeSummary> {
    config.validate()?;
    let link = config.link()?;
    let shaping = config.shape.build()?;
    let prob_grid = config.probs.build()?;

    let bytes = std::fs::read(data_path).map_err(|e| CliError::Data(format!("{}: {e}", data_path.display())))?;
    let table = Table::from_bytes(&bytes)?;
    let loaded = load(
        &table,
        &Roles {
            outcome: &config.outcome,
            group: Some(&config.group),
            cluster: config.cluster.as_deref(),
            weight: config.weight.as_deref(),
            design: Some(&config.design),
        },
    )?;
    if loaded.dropped > 0 {
        warn!("dropped {} rows with missing values", loaded.dropped);
    }
    let data = &loaded.data;
    for g in [&config.w, &config.b] {
        if data.group_rows(g).is_empty() {
            return Err(CliError::Config(format!("group `{g}` has no rows")));
        }
    }

    let domain_sup = config.domain_sup.as_ref().map(|b| b.value()).transpose()?;
    let grid = config.grid.build(data.outcome(), domain_sup)?;
    let decomposition = Decomposition::new(data, &config.w, &config.b, &grid, link, &config.design)?;
    let sw = data.weights();
    let evaluate = |w: &[f64]| {
        let weights: Vec<f64> = w.iter().zip(sw).map(|(a, b)| a * b).collect();
        decomposition.evaluate(&weights).map(|f| f.to_vec())
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
    info!("{} bootstrap draws of the decomposition", config.draws);
    let draws = bootstrap_dfs(evaluate, data.len(), clusters.as_deref(), &grid, &boot, shaping.mode)?;

    let (w, b) = (&config.w, &config.b);
    let labels = vec![format!("{w}|{w}"), format!("{b}|{b}"), format!("{w}|{b}")];
    let contrasts = [
        Contrast {
            label: "raw_gap".into(),
            j: 0,
            m: 1,
        },
        Contrast {
            label: "composition".into(),
            j: 0,
            m: 2,
        },
        Contrast {
            label: "unexplained".into(),
            j: 2,
            m: 1,
        },
    ];
    let support = config.support.resolve(data.outcome())?;
    let output = run_pipeline(PipelineInput {
        labels: &labels,
        estimates,
        draws,
        level: config.level,
        shaping,
        joint: true,
        prob_grid: &prob_grid,
        support,
        contrasts: &contrasts,
        ratios: false,
    })?;

    let hash = config_hash(config);
    let prov = Provenance {
        seed: config.seed,
        config_hash: hash.clone(),
    };
    output.write(out, &prov, plots)?;
    let n_w = data.group_rows(w).len();
    let n_b = data.group_rows(b).len();
    let summary = DecomposeSummary {
        version: VERSION,
        seed: config.seed,
        config_hash: hash,
        data_sha256: sha256_hex(&bytes),
        config: config.clone(),
        rows_used: data.len(),
        rows_dropped: loaded.dropped,
        grid: grid.points().to_vec(),
        domain_sup: bound_text(grid.domain_sup()),
        level: config.level,
        draws: config.draws,
        shaping: shaping.into(),
        critical_values: output.critical_values.clone(),
        functions: output.group_summaries(&[n_w, n_b, n_w]),
        contrasts: output.contrast_summaries(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
