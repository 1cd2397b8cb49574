use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::shape::{clip_unit, shape_values, ShapeMode};
use crate::stepfn::MonotoneStepFn;

use super::binary::{fit_binary_with, SolverOptions};
use super::design::{DesignBasis, DesignSpec};
use super::edf::EdfBinning;
use super::link::LinkFunction;
use super::poisson::poisson_fit_with;
use super::Dataset;

/// Outcome of the binary fit at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThresholdFit {
    Fitted {
        coefficients: Vec<f64>,
        separated: bool,
    },
    /// Every weighted indicator was equal; the conditional DF is this
    /// constant (0 or 1) at the threshold.
    Degenerate { value: f64 },
}

/// Distribution regression `F(y | x) = Lambda_y(B(x)'b(y))`, one
/// coefficient vector per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrFit {
    grid: Grid,
    link: LinkFunction,
    basis: DesignBasis,
    thresholds: Vec<ThresholdFit>,
    shape: ShapeMode,
}

impl DrFit {
    /// Fits every threshold of `grid` on a prebuilt design matrix.
    pub fn fit(
        outcome: &[f64],
        design: &DMatrix<f64>,
        weights: &[f64],
        grid: &Grid,
        link: LinkFunction,
        basis: DesignBasis,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let thresholds = grid
            .points()
            .par_iter()
            .map(|&y| {
                let indicator: Vec<bool> = outcome.iter().map(|&v| v <= y).collect();
                match fit_binary_with(&indicator, design, weights, link, y, opts) {
                    Ok(fit) => Ok(ThresholdFit::Fitted {
                        coefficients: fit.coefficients,
                        separated: fit.separated,
                    }),
                    Err(Error::DegenerateIndicators { all_below }) => Ok(ThresholdFit::Degenerate {
                        value: if all_below { 1.0 } else { 0.0 },
                    }),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            link,
            basis,
            thresholds,
            shape: ShapeMode::default(),
        })
    }

    /// Gamma-incomplete fit with the same coefficients at every threshold:
    /// the Poisson regression model `F(y | x) = Q(y + 1, exp(B(x)'b))`.
    pub fn pinned(grid: &Grid, basis: DesignBasis, coefficients: Vec<f64>) -> Self {
        let thresholds = grid
            .points()
            .iter()
            .map(|_| ThresholdFit::Fitted {
                coefficients: coefficients.clone(),
                separated: false,
            })
            .collect();
        Self {
            grid: grid.clone(),
            link: LinkFunction::GammaIncomplete,
            basis,
            thresholds,
            shape: ShapeMode::default(),
        }
    }

    pub fn with_shape(mut self, shape: ShapeMode) -> Self {
        self.shape = shape;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn link(&self) -> LinkFunction {
        self.link
    }

    pub fn basis(&self) -> &DesignBasis {
        &self.basis
    }

    pub fn thresholds(&self) -> &[ThresholdFit] {
        &self.thresholds
    }

    /// Grid indices whose indicators were degenerate.
    pub fn degenerate_points(&self) -> Vec<usize> {
        self.thresholds
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, ThresholdFit::Degenerate { .. }))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn any_separated(&self) -> bool {
        self.thresholds
            .iter()
            .any(|t| matches!(t, ThresholdFit::Fitted { separated: true, .. }))
    }

    /// `Lambda_y(b'beta(y))` at every grid point for an expanded design row,
    /// before any shaping. Linear-link values may leave `[0, 1]`.
    pub fn raw_predict_design(&self, b: &[f64]) -> Vec<f64> {
        self.grid
            .points()
            .iter()
            .zip(&self.thresholds)
            .map(|(&y, t)| match t {
                ThresholdFit::Degenerate { value } => *value,
                ThresholdFit::Fitted { coefficients, .. } => {
                    let eta: f64 = coefficients.iter().zip(b).map(|(c, x)| c * x).sum();
                    self.link.cdf(eta, y)
                }
            })
            .collect()
    }

    /// Shaped prediction for an expanded design row.
    pub fn predict_design(&self, b: &[f64]) -> Vec<f64> {
        shape_values(&clip_unit(&self.raw_predict_design(b)), self.shape)
    }

    /// Predicted conditional DF at a covariate row, shaped into a
    /// nondecreasing `[0, 1]`-valued function.
    pub fn predict(&self, x: &[f64]) -> Result<MonotoneStepFn> {
        let b = self.basis.expand(x)?;
        Ok(MonotoneStepFn::from_parts_unchecked(
            self.grid.clone(),
            self.predict_design(&b),
        ))
    }

    /// Weighted average of shaped predictions over the rows of `design`.
    pub fn average_design(&self, design: &DMatrix<f64>, weights: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = design.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("empty covariate sample".into()));
        }
        if let Some(w) = weights {
            if w.len() != n {
                return Err(Error::InvalidInput("one weight per covariate row required".into()));
            }
        }
        let t = self.grid.len();
        let mut acc = vec![0.0; t];
        let mut total = 0.0;
        let mut row = vec![0.0; design.ncols()];
        for i in 0..n {
            let w = weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            for (j, r) in row.iter_mut().enumerate() {
                *r = design[(i, j)];
            }
            for (a, v) in acc.iter_mut().zip(self.predict_design(&row)) {
                *a += w * v;
            }
            total += w;
        }
        if !(total > 0.0) {
            return Err(Error::ZeroWeight);
        }
        for a in &mut acc {
            *a = (*a / total).min(1.0);
        }
        Ok(acc)
    }
}

/// Fits distribution regression to the rows of `data` listed in `rows`.
pub fn dr_fit(
    data: &Dataset,
    rows: &[usize],
    grid: &Grid,
    link: LinkFunction,
    spec: &DesignSpec,
) -> Result<DrFit> {
    let model = DrModel::new(data, rows, spec)?;
    let weights: Vec<f64> = rows.iter().map(|&i| data.weights()[i]).collect();
    model.fit(&weights, grid, link)
}

/// Plug-in counterfactual DF: the (weighted) average of the fit's shaped
/// predictions over a covariate sample.
pub fn counterfactual<'a, I>(fit: &DrFit, rows: I, weights: Option<&[f64]>) -> Result<MonotoneStepFn>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let design = fit.basis.matrix(rows)?;
    let values = fit.average_design(&design, weights)?;
    Ok(MonotoneStepFn::from_parts_unchecked(fit.grid.clone(), values))
}

/// Counterfactual DF with covariate `column` of every row shifted by `delta`.
pub fn counterfactual_shift<'a, I>(
    fit: &DrFit,
    rows: I,
    weights: Option<&[f64]>,
    column: usize,
    delta: f64,
) -> Result<MonotoneStepFn>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let shifted = rows
        .into_iter()
        .map(|r| {
            if column >= r.len() {
                return Err(Error::UnknownColumn(format!("column {column}")));
            }
            let mut r = r.to_vec();
            r[column] += delta;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    counterfactual(fit, shifted.iter().map(Vec::as_slice), weights)
}

/// A group's sample prepared for repeated weighted DR fits: the design is
/// learned and expanded once.
#[derive(Debug, Clone)]
pub struct DrModel {
    outcome: Vec<f64>,
    basis: DesignBasis,
    design: DMatrix<f64>,
    opts: SolverOptions,
}

impl DrModel {
    pub fn new(data: &Dataset, rows: &[usize], spec: &DesignSpec) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("empty estimation sample".into()));
        }
        let covs = || rows.iter().map(|&i| data.covariate_row(i));
        let basis = DesignBasis::learn(spec, data.covariate_names(), covs())?;
        let design = basis.matrix(covs())?;
        Ok(Self {
            outcome: rows.iter().map(|&i| data.outcome()[i]).collect(),
            basis,
            design,
            opts: SolverOptions::default(),
        })
    }

    pub fn with_options(mut self, opts: SolverOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn basis(&self) -> &DesignBasis {
        &self.basis
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn fit(&self, weights: &[f64], grid: &Grid, link: LinkFunction) -> Result<DrFit> {
        DrFit::fit(
            &self.outcome,
            &self.design,
            weights,
            grid,
            link,
            self.basis.clone(),
            &self.opts,
        )
    }

    /// Poisson regression of the sample, returned as a pinned
    /// gamma-incomplete fit.
    pub fn fit_poisson(&self, weights: &[f64], grid: &Grid) -> Result<DrFit> {
        let beta = poisson_fit_with(&self.outcome, &self.design, weights, &self.opts)?;
        Ok(DrFit::pinned(grid, self.basis.clone(), beta))
    }
}

/// Marginal DF estimator for one group's sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "link")]
pub enum Estimator {
    /// Weighted empirical DF.
    Edf,
    /// Distribution regression averaged over the group's own covariates.
    Dr(LinkFunction),
    /// Poisson regression averaged over the group's own covariates.
    Poisson,
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "edf" => Ok(Self::Edf),
            "poisson" => Ok(Self::Poisson),
            other => match other.strip_prefix("dr:") {
                Some(link) => Ok(Self::Dr(link.parse()?)),
                None => Err(format!("unknown estimator `{other}`")),
            },
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Edf => f.write_str("edf"),
            Self::Dr(link) => write!(f, "dr:{link}"),
            Self::Poisson => f.write_str("poisson"),
        }
    }
}

/// A group's estimator with everything that does not depend on the
/// observation weights precomputed.
#[derive(Debug, Clone)]
pub enum GroupEstimator {
    Edf(EdfBinning),
    Dr {
        model: DrModel,
        link: LinkFunction,
        grid: Grid,
    },
    Poisson {
        model: DrModel,
        grid: Grid,
    },
}

impl GroupEstimator {
    pub fn new(
        estimator: Estimator,
        data: &Dataset,
        rows: &[usize],
        grid: &Grid,
        spec: &DesignSpec,
    ) -> Result<Self> {
        Ok(match estimator {
            Estimator::Edf => {
                let y: Vec<f64> = rows.iter().map(|&i| data.outcome()[i]).collect();
                Self::Edf(EdfBinning::new(&y, grid))
            }
            Estimator::Dr(link) => Self::Dr {
                model: DrModel::new(data, rows, spec)?,
                link,
                grid: grid.clone(),
            },
            Estimator::Poisson => Self::Poisson {
                model: DrModel::new(data, rows, spec)?,
                grid: grid.clone(),
            },
        })
    }

    /// Marginal DF values under `weights` (one per row of the group).
    pub fn evaluate(&self, weights: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Edf(bins) => bins.evaluate(weights),
            Self::Dr { model, link, grid } => {
                model.fit(weights, grid, *link)?.average_design(&model.design, Some(weights))
            }
            Self::Poisson { model, grid } => {
                model.fit_poisson(weights, grid)?.average_design(&model.design, Some(weights))
            }
        }
    }
}

/// Precomputed pieces of the decomposition of group `W` against group `B`:
/// `F<W|W>` and `F<B|B>` are weighted empirical DFs, `F<W|B>` averages the
/// `W` distribution regression over the `B` covariates.
#[derive(Debug, Clone)]
pub struct Decomposition {
    rows_w: Vec<usize>,
    rows_b: Vec<usize>,
    edf_w: EdfBinning,
    edf_b: EdfBinning,
    /// `None` when the design has no covariates.
    model: Option<(DrModel, DMatrix<f64>)>,
    link: LinkFunction,
    grid: Grid,
}

impl Decomposition {
    pub fn new(
        data: &Dataset,
        group_w: &str,
        group_b: &str,
        grid: &Grid,
        link: LinkFunction,
        spec: &DesignSpec,
    ) -> Result<Self> {
        let rows_w = data.group_rows(group_w);
        let rows_b = data.group_rows(group_b);
        for (label, rows) in [(group_w, &rows_w), (group_b, &rows_b)] {
            if rows.is_empty() {
                return Err(Error::InvalidInput(format!("group `{label}` has no rows")));
            }
        }
        let outcomes = |rows: &[usize]| rows.iter().map(|&i| data.outcome()[i]).collect::<Vec<_>>();
        let model = if spec.has_covariates() {
            let model = DrModel::new(data, &rows_w, spec)?;
            let design_b = model.basis().matrix(rows_b.iter().map(|&i| data.covariate_row(i)))?;
            Some((model, design_b))
        } else {
            None
        };
        Ok(Self {
            edf_w: EdfBinning::new(&outcomes(&rows_w), grid),
            edf_b: EdfBinning::new(&outcomes(&rows_b), grid),
            rows_w,
            rows_b,
            model,
            link,
            grid: grid.clone(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `[F<W|W>, F<B|B>, F<W|B>]` under full-sample observation weights.
    pub fn evaluate(&self, weights: &[f64]) -> Result<[Vec<f64>; 3]> {
        let w_w: Vec<f64> = self.rows_w.iter().map(|&i| weights[i]).collect();
        let w_b: Vec<f64> = self.rows_b.iter().map(|&i| weights[i]).collect();
        let f_ww = self.edf_w.evaluate(&w_w)?;
        let f_bb = self.edf_b.evaluate(&w_b)?;
        let f_wb = match &self.model {
            None => f_ww.clone(),
            Some((model, design_b)) => model
                .fit(&w_w, &self.grid, self.link)?
                .average_design(design_b, Some(&w_b))?,
        };
        Ok([f_ww, f_bb, f_wb])
    }
}

/// `(F<W|W>, F<B|B>, F<W|B>)` under the dataset's own weights.
pub fn decomposition_triplet(
    data: &Dataset,
    group_w: &str,
    group_b: &str,
    grid: &Grid,
    link: LinkFunction,
    spec: &DesignSpec,
) -> Result<[MonotoneStepFn; 3]> {
    let values = Decomposition::new(data, group_w, group_b, grid, link, spec)?.evaluate(data.weights())?;
    Ok(values.map(|v| MonotoneStepFn::from_parts_unchecked(grid.clone(), v)))
}
