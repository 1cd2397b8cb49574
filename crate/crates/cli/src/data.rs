//! CSV ingestion into a [`Dataset`].

use std::path::Path;

use qeband_core::{Dataset, DesignSpec};

use crate::error::{CliError, CliResult};

const MISSING: [&str; 6] = ["", "NA", "NaN", "nan", ".", "null"];

pub fn is_missing(s: &str) -> bool {
    MISSING.contains(&s.trim())
}

/// A CSV file with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = r
            .headers()
            .map_err(|e| CliError::Data(format!("header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .enumerate()
            .map(|(i, rec)| rec.map_err(|e| CliError::Data(format!("line {}: {e}", i + 2))))
            .collect::<CliResult<_>>()?;
        Ok(Self { headers, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("unknown column `{name}`")))
    }
}

/// Which columns play which role.
#[derive(Debug, Clone, Default)]
pub struct Roles<'a> {
    pub outcome: &'a str,
    pub group: Option<&'a str>,
    pub cluster: Option<&'a str>,
    pub weight: Option<&'a str>,
    pub design: Option<&'a DesignSpec>,
}

/// A dataset plus the number of rows dropped for missing values.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub data: Dataset,
    pub dropped: usize,
}

fn number(value: &str, line: usize, column: &str) -> CliResult<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Data(format!("line {line}, column `{column}`: `{value}` is not a finite number")))
}

/// Builds the dataset, dropping rows with a missing value in any used
/// column. Categorical covariates with non-numeric labels are coded by the
/// sorted order of their labels.
pub fn load(table: &Table, roles: &Roles) -> CliResult<Loaded> {
    let y_col = table.column(roles.outcome)?;
    let g_col = roles.group.map(|g| table.column(g)).transpose()?;
    let c_col = roles.cluster.map(|c| table.column(c)).transpose()?;
    let w_col = roles.weight.map(|w| table.column(w)).transpose()?;
    let (cov_names, categorical): (Vec<String>, Vec<bool>) = match roles.design {
        Some(spec) => spec
            .columns()
            .into_iter()
            .map(|c| (c.to_string(), spec.categorical.iter().any(|k| k == c)))
            .unzip(),
        None => (vec![], vec![]),
    };
    let cov_cols = cov_names.iter().map(|c| table.column(c)).collect::<CliResult<Vec<_>>>()?;

    let used: Vec<usize> = [Some(y_col), g_col, c_col, w_col]
        .into_iter()
        .flatten()
        .chain(cov_cols.iter().copied())
        .collect();
    let kept: Vec<(usize, &csv::StringRecord)> = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| used.iter().all(|&k| !is_missing(r.get(k).unwrap_or(""))))
        .collect();
    let dropped = table.len() - kept.len();
    if kept.is_empty() {
        return Err(CliError::Data("no complete rows".into()));
    }

    let line = |i: usize| i + 2;
    let outcome = kept
        .iter()
        .map(|(i, r)| number(&r[y_col], line(*i), roles.outcome))
        .collect::<CliResult<Vec<_>>>()?;
    let group = kept
        .iter()
        .map(|(_, r)| g_col.map_or_else(|| "all".to_string(), |k| r[k].to_string()))
        .collect();
    let cluster = c_col.map(|k| kept.iter().map(|(_, r)| r[k].to_string()).collect());
    let weights = w_col
        .map(|k| {
            kept.iter()
                .map(|(i, r)| number(&r[k], line(*i), roles.weight.unwrap_or_default()))
                .collect::<CliResult<Vec<_>>>()
        })
        .transpose()?;

    let mut covariates = vec![Vec::with_capacity(cov_cols.len()); kept.len()];
    for ((&k, name), &is_cat) in cov_cols.iter().zip(&cov_names).zip(&categorical) {
        let raw: Vec<&str> = kept.iter().map(|(_, r)| &r[k]).collect();
        let numeric = raw.iter().all(|v| v.parse::<f64>().is_ok_and(f64::is_finite));
        let values: Vec<f64> = if numeric || !is_cat {
            kept.iter()
                .zip(&raw)
                .map(|((i, _), v)| number(v, line(*i), name))
                .collect::<CliResult<_>>()?
        } else {
            let mut labels: Vec<&str> = raw.clone();
            labels.sort_unstable();
            labels.dedup();
            raw.iter().map(|v| labels.binary_search(v).expect("label") as f64).collect()
        };
        for (row, v) in covariates.iter_mut().zip(values) {
            row.push(v);
        }
    }

    let data = Dataset::new(outcome, cov_names, covariates, group, cluster, weights)?;
    Ok(Loaded { data, dropped })
}
