//! Estimators of distribution functions: weighted empirical DFs,
//! distribution regression, Poisson regression and the counterfactual
//! constructions built on top of them.

mod binary;
mod design;
mod dr;
mod edf;
mod link;
mod poisson;

pub use binary::{fit_binary, BinaryFit, SolverOptions};
pub use design::{DesignBasis, DesignSpec};
pub use dr::{
    counterfactual, counterfactual_shift, decomposition_triplet, dr_fit, Decomposition, DrFit,
    DrModel, Estimator, GroupEstimator, ThresholdFit,
};
pub use edf::{edf, EdfBinning};
pub use link::LinkFunction;
pub use poisson::{poisson_cdf, poisson_fit, poisson_pmf};

use crate::error::{Error, Result};

/// Observations of an outcome with optional covariates, a group label per
/// row, optional cluster labels and nonnegative sampling weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    outcome: Vec<f64>,
    covariate_names: Vec<String>,
    covariates: Vec<Vec<f64>>,
    group: Vec<String>,
    cluster: Option<Vec<String>>,
    weights: Vec<f64>,
}

impl Dataset {
    /// `covariates` holds one row per observation (possibly of width zero).
    pub fn new(
        outcome: Vec<f64>,
        covariate_names: Vec<String>,
        covariates: Vec<Vec<f64>>,
        group: Vec<String>,
        cluster: Option<Vec<String>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = outcome.len();
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        if covariates.len() != n || group.len() != n || weights.len() != n {
            return Err(Error::InvalidInput("columns have unequal lengths".into()));
        }
        if cluster.as_ref().is_some_and(|c| c.len() != n) {
            return Err(Error::InvalidInput("cluster column has the wrong length".into()));
        }
        if let Some(i) = outcome.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite outcome in row {i}")));
        }
        if let Some(i) = covariates.iter().position(|r| r.len() != covariate_names.len()) {
            return Err(Error::InvalidInput(format!("covariate row {i} has the wrong width")));
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("invalid weight in row {i}")));
        }
        let data = Self {
            outcome,
            covariate_names,
            covariates,
            group,
            cluster,
            weights,
        };
        for g in data.groups() {
            let total: f64 = data.group_rows(&g).iter().map(|&i| data.weights[i]).sum();
            if total <= 0.0 {
                return Err(Error::InvalidInput(format!("group `{g}` has zero total weight")));
            }
        }
        Ok(data)
    }

    /// A single-group dataset without covariates.
    pub fn from_outcomes(outcome: Vec<f64>) -> Result<Self> {
        let n = outcome.len();
        Self::new(outcome, vec![], vec![vec![]; n], vec![String::new(); n], None, None)
    }

    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate_row(&self, i: usize) -> &[f64] {
        &self.covariates[i]
    }

    pub fn covariate_rows(&self) -> &[Vec<f64>] {
        &self.covariates
    }

    pub fn group(&self) -> &[String] {
        &self.group
    }

    pub fn cluster(&self) -> Option<&[String]> {
        self.cluster.as_deref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.covariate_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Group labels in order of first appearance.
    pub fn groups(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for g in &self.group {
            if !seen.contains(g) {
                seen.push(g.clone());
            }
        }
        seen
    }

    pub fn group_rows(&self, label: &str) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.group[i] == label).collect()
    }

    /// Dense cluster ids (in order of first appearance), or `None` when no
    /// cluster column is present.
    pub fn cluster_ids(&self) -> Option<Vec<usize>> {
        let labels = self.cluster.as_ref()?;
        let mut seen: std::collections::HashMap<&str, usize> = Default::default();
        Some(
            labels
                .iter()
                .map(|l| {
                    let next = seen.len();
                    *seen.entry(l.as_str()).or_insert(next)
                })
                .collect(),
        )
    }
}
