//! Command implementations. `bands` and `decompose` share one pipeline:
//! joint bootstrap, DF-bands, inversion, support restriction and
//! quantile-effect contrasts.

pub mod bands;
pub mod decompose;
pub mod simulate;

use std::path::Path;

use qeband_core::bandcalc::{
    df_band_single, df_bands_joint, invert_bands, qe_band, ratio_band, restrict_support, test_equality,
    BuiltBand,
};
use qeband_core::{
    BandShaping, BootstrapDraws, EqualityTest, MonotoneStepFn, ProbGrid, QEBand, QuantileBand, ShapeMode,
};
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{
    df_bands_csv, fmt_g17, interval_bands_csv, write_atomic, DfBandRecord, Provenance, QE_LAYOUT, QF_LAYOUT,
};
use crate::svg;

/// Quantile contrast `Q_j - Q_m` (or `Q_j / Q_m`) between two estimators.
#[derive(Debug, Clone)]
pub struct Contrast {
    pub label: String,
    pub j: usize,
    pub m: usize,
}

pub struct PipelineInput<'a> {
    pub labels: &'a [String],
    pub estimates: Vec<MonotoneStepFn>,
    pub draws: BootstrapDraws,
    pub level: f64,
    pub shaping: BandShaping,
    pub joint: bool,
    pub prob_grid: &'a ProbGrid,
    pub support: Option<Vec<f64>>,
    pub contrasts: &'a [Contrast],
    pub ratios: bool,
}

pub struct PipelineOutput {
    pub labels: Vec<String>,
    pub estimates: Vec<MonotoneStepFn>,
    pub bands: Vec<BuiltBand>,
    pub critical_values: Vec<CriticalValueSummary>,
    /// `(group, y)` grid points left out of the max-t statistic.
    pub excluded: Vec<(usize, usize)>,
    pub quantile_bands: Vec<QuantileBand>,
    pub effects: Vec<(String, QEBand, EqualityTest)>,
    pub ratios: Vec<(String, QEBand)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalValueSummary {
    /// `joint` or the group label.
    pub scope: String,
    pub value: f64,
}

pub fn run_pipeline(input: PipelineInput) -> CliResult<PipelineOutput> {
    let k = input.estimates.len();
    let mut critical_values = Vec::new();
    let mut excluded = Vec::new();
    let bands: Vec<BuiltBand> = if input.joint {
        let (bands, report) = df_bands_joint(&input.estimates, &input.draws, input.level, input.shaping)?;
        critical_values.push(CriticalValueSummary {
            scope: "joint".into(),
            value: report.critical_value,
        });
        excluded = report.excluded;
        bands
    } else {
        (0..k)
            .map(|g| {
                let (band, report) = df_band_single(&input.estimates, &input.draws, g, input.level, input.shaping)?;
                critical_values.push(CriticalValueSummary {
                    scope: input.labels[g].clone(),
                    value: report.critical_value,
                });
                excluded.extend(report.excluded);
                Ok(band)
            })
            .collect::<CliResult<_>>()?
    };
    let refs: Vec<_> = bands.iter().map(|b| &b.band).collect();
    let mut quantile_bands = invert_bands(&refs, input.prob_grid);
    if let Some(support) = &input.support {
        quantile_bands = quantile_bands
            .iter()
            .map(|q| restrict_support(q, support))
            .collect::<qeband_core::Result<_>>()?;
    }
    let effects = input
        .contrasts
        .iter()
        .map(|c| {
            let qe = qe_band(&quantile_bands[c.j], &quantile_bands[c.m])?;
            let test = test_equality(&qe);
            Ok((c.label.clone(), qe, test))
        })
        .collect::<CliResult<_>>()?;
    let ratios = if input.ratios {
        input
            .contrasts
            .iter()
            .map(|c| Ok((c.label.clone(), ratio_band(&quantile_bands[c.j], &quantile_bands[c.m])?)))
            .collect::<CliResult<_>>()?
    } else {
        vec![]
    };
    Ok(PipelineOutput {
        labels: input.labels.to_vec(),
        estimates: input.estimates,
        bands,
        critical_values,
        excluded,
        quantile_bands,
        effects,
        ratios,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapingSummary {
    pub mode: &'static str,
    pub isotonic_weight: f64,
    pub intersect: bool,
}

impl From<BandShaping> for ShapingSummary {
    fn from(s: BandShaping) -> Self {
        let (mode, isotonic_weight) = match s.mode {
            ShapeMode::Rearrange => ("rearrange", 0.0),
            ShapeMode::Isotonize => ("isotonize", 1.0),
            ShapeMode::Mix { isotonic_weight } => ("mix", isotonic_weight),
        };
        Self {
            mode,
            isotonic_weight,
            intersect: s.intersect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub rows: usize,
    /// Grid points with a zero bootstrap standard error.
    pub excluded_points: Vec<f64>,
    /// The monotone intersection was requested but came out empty, so the
    /// shaped band is reported instead.
    pub intersection_empty: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContrastSummary {
    pub pair: String,
    pub reject_equality: bool,
    /// Probability levels whose band excludes zero.
    pub reject_at: Vec<f64>,
    /// Probability levels with an empty admissible set.
    pub empty_admissible_at: Vec<f64>,
    /// Empty admissible sets whose interval still contains zero.
    pub empty_but_covering_at: Vec<f64>,
}

impl PipelineOutput {
    pub fn group_summaries(&self, rows: &[usize]) -> Vec<GroupSummary> {
        (0..self.labels.len())
            .map(|k| GroupSummary {
                label: self.labels[k].clone(),
                rows: rows[k],
                excluded_points: self
                    .excluded
                    .iter()
                    .filter(|(g, _)| *g == k)
                    .map(|&(_, t)| self.bands[k].band.grid().points()[t])
                    .collect(),
                intersection_empty: self.bands[k].intersection_empty,
            })
            .collect()
    }

    pub fn contrast_summaries(&self) -> Vec<ContrastSummary> {
        self.effects
            .iter()
            .map(|(label, qe, test)| {
                let a = qe.prob_grid().indices();
                ContrastSummary {
                    pair: label.clone(),
                    reject_equality: test.reject,
                    reject_at: test.indices.iter().map(|&i| a[i]).collect(),
                    empty_admissible_at: qe.empty_indices().iter().map(|&i| a[i]).collect(),
                    empty_but_covering_at: test.empty_but_covering.iter().map(|&i| a[i]).collect(),
                }
            })
            .collect()
    }

    /// Writes the band CSVs (and SVG plots when asked) into `out`.
    pub fn write(&self, out: &Path, prov: &Provenance, plots: bool) -> CliResult<()> {
        std::fs::create_dir_all(out)?;
        let records: Vec<DfBandRecord> = (0..self.labels.len())
            .map(|k| DfBandRecord {
                label: &self.labels[k],
                estimate: &self.estimates[k],
                band: &self.bands[k].band,
            })
            .collect();
        write_atomic(&out.join("df_bands.csv"), &df_bands_csv(prov, &records)?)?;
        let qf: Vec<(&str, &QuantileBand)> =
            self.labels.iter().map(String::as_str).zip(&self.quantile_bands).collect();
        write_atomic(&out.join("qf_bands.csv"), &interval_bands_csv(prov, QF_LAYOUT, &qf)?)?;
        let qe: Vec<(&str, &QEBand)> = self.effects.iter().map(|(l, b, _)| (l.as_str(), b)).collect();
        write_atomic(&out.join("qe_bands.csv"), &interval_bands_csv(prov, QE_LAYOUT, &qe)?)?;
        if !self.ratios.is_empty() {
            let r: Vec<(&str, &QEBand)> = self.ratios.iter().map(|(l, b)| (l.as_str(), b)).collect();
            write_atomic(&out.join("ratio_bands.csv"), &interval_bands_csv(prov, QE_LAYOUT, &r)?)?;
        }
        if plots {
            for k in 0..self.labels.len() {
                let name = svg::slug(&self.labels[k]);
                let title = format!("DF band: {}", self.labels[k]);
                let doc = svg::df_band_svg(&title, &self.estimates[k], &self.bands[k].band);
                write_atomic(&out.join(format!("df_{name}.svg")), doc.as_bytes())?;
                let title = format!("Quantile band: {}", self.labels[k]);
                let doc = svg::interval_band_svg(&title, "Q(a)", &self.quantile_bands[k]);
                write_atomic(&out.join(format!("qf_{name}.svg")), doc.as_bytes())?;
            }
            for (label, band, _) in &self.effects {
                let doc = svg::interval_band_svg(&format!("Quantile effect: {label}"), "effect", band);
                write_atomic(&out.join(format!("qe_{}.svg", svg::slug(label))), doc.as_bytes())?;
            }
        }
        Ok(())
    }
}

/// `+inf`, `-inf` and `nan` have no JSON form, so the domain bound is
/// reported as text.
pub fn bound_text(v: f64) -> String {
    fmt_g17(v)
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable summary");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
