use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User-declared regressor transformations `B(x)`.
///
/// Numeric columns enter linearly, categorical columns as indicators of every
/// level but the smallest, and each interaction as the products of the two
/// columns' generated features. `saturated` replaces all of this with one
/// indicator per distinct combination of the listed columns (no intercept).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(default = "default_true")]
    pub intercept: bool,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
    #[serde(default)]
    pub saturated: bool,
}

fn default_true() -> bool {
    true
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self::intercept_only()
    }
}

impl DesignSpec {
    pub fn intercept_only() -> Self {
        Self {
            intercept: true,
            numeric: vec![],
            categorical: vec![],
            interactions: vec![],
            saturated: false,
        }
    }

    pub fn saturated(columns: &[&str]) -> Self {
        Self {
            intercept: false,
            numeric: vec![],
            categorical: columns.iter().map(|s| s.to_string()).collect(),
            interactions: vec![],
            saturated: true,
        }
    }

    /// Every covariate column the design refers to.
    pub fn columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self
            .numeric
            .iter()
            .chain(&self.categorical)
            .map(String::as_str)
            .collect();
        for (a, b) in &self.interactions {
            cols.push(a);
            cols.push(b);
        }
        let mut seen = Vec::new();
        cols.retain(|c| {
            if seen.contains(c) {
                false
            } else {
                seen.push(*c);
                true
            }
        });
        cols
    }

    pub fn has_covariates(&self) -> bool {
        !self.columns().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Feature {
    Numeric(usize),
    /// Column index and the non-base levels.
    Categorical(usize, Vec<f64>),
}

impl Feature {
    fn width(&self) -> usize {
        match self {
            Feature::Numeric(_) => 1,
            Feature::Categorical(_, levels) => levels.len(),
        }
    }

    fn expand(&self, x: &[f64], out: &mut Vec<f64>) {
        match self {
            Feature::Numeric(c) => out.push(x[*c]),
            Feature::Categorical(c, levels) => {
                out.extend(levels.iter().map(|l| if x[*c] == *l { 1.0 } else { 0.0 }))
            }
        }
    }

    fn check(&self, x: &[f64], base: Option<f64>) -> Result<()> {
        if let Feature::Categorical(c, levels) = self {
            if Some(x[*c]) != base && !levels.contains(&x[*c]) {
                return Err(Error::NonConformable(format!(
                    "unseen level {} in covariate column {c}",
                    x[*c]
                )));
            }
        }
        Ok(())
    }
}

/// A [`DesignSpec`] resolved against covariate names, with categorical
/// levels (or saturated cells) learned from a reference sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignBasis {
    intercept: bool,
    features: Vec<Feature>,
    bases: Vec<Option<f64>>,
    interactions: Vec<(usize, usize)>,
    /// Features from this index on appear only inside interactions.
    hidden_from: usize,
    /// Saturated mode: covariate columns and the observed cells.
    cells: Option<(Vec<usize>, Vec<Vec<f64>>)>,
}

impl DesignBasis {
    pub fn learn<'a, I>(spec: &DesignSpec, names: &[String], rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let index = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownColumn(name.to_string()))
        };
        let rows: Vec<&[f64]> = rows.into_iter().collect();

        if spec.saturated {
            let cols = spec
                .columns()
                .into_iter()
                .map(index)
                .collect::<Result<Vec<_>>>()?;
            let mut cells: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect();
            cells.sort_by(|a: &Vec<f64>, b| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            cells.dedup();
            if cells.is_empty() {
                cells.push(vec![]);
            }
            return Ok(Self {
                intercept: false,
                features: vec![],
                bases: vec![],
                interactions: vec![],
                hidden_from: 0,
                cells: Some((cols, cells)),
            });
        }

        let mut features = Vec::new();
        let mut bases = Vec::new();
        let mut position = std::collections::HashMap::new();
        for name in &spec.numeric {
            position.insert(name.clone(), features.len());
            features.push(Feature::Numeric(index(name)?));
            bases.push(None);
        }
        for name in &spec.categorical {
            let c = index(name)?;
            let mut levels: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let base = levels.first().copied();
            position.insert(name.clone(), features.len());
            features.push(Feature::Categorical(c, levels.into_iter().skip(1).collect()));
            bases.push(base);
        }
        let mut interactions = Vec::new();
        for (a, b) in &spec.interactions {
            let lookup = |n: &String, features: &mut Vec<Feature>, bases: &mut Vec<Option<f64>>| {
                if let Some(&k) = position.get(n) {
                    Ok(k)
                } else {
                    features.push(Feature::Numeric(index(n)?));
                    bases.push(None);
                    Ok::<usize, Error>(features.len() - 1)
                }
            };
            let ka = lookup(a, &mut features, &mut bases)?;
            let kb = lookup(b, &mut features, &mut bases)?;
            interactions.push((ka, kb));
        }
        Ok(Self {
            intercept: spec.intercept,
            features,
            bases,
            interactions,
            hidden_from: spec.numeric.len() + spec.categorical.len(),
            cells: None,
        })
    }

    pub fn width(&self) -> usize {
        if let Some((_, cells)) = &self.cells {
            return cells.len();
        }
        let main: usize = self.features[..self.hidden_from].iter().map(Feature::width).sum();
        let inter: usize = self
            .interactions
            .iter()
            .map(|&(a, b)| self.features[a].width() * self.features[b].width())
            .sum();
        usize::from(self.intercept) + main + inter
    }

    /// `B(x)` for a full covariate row.
    pub fn expand(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.width());
        if let Some((cols, cells)) = &self.cells {
            let key: Vec<f64> = cols.iter().map(|&c| x[c]).collect();
            let k = cells
                .iter()
                .position(|c| *c == key)
                .ok_or_else(|| Error::NonConformable(format!("unseen cell {key:?}")))?;
            out.resize(cells.len(), 0.0);
            out[k] = 1.0;
            return Ok(out);
        }
        for (f, base) in self.features.iter().zip(&self.bases) {
            f.check(x, *base)?;
        }
        if self.intercept {
            out.push(1.0);
        }
        for f in &self.features[..self.hidden_from] {
            f.expand(x, &mut out);
        }
        let mut fa = Vec::new();
        let mut fb = Vec::new();
        for &(a, b) in &self.interactions {
            fa.clear();
            fb.clear();
            self.features[a].expand(x, &mut fa);
            self.features[b].expand(x, &mut fb);
            for u in &fa {
                for v in &fb {
                    out.push(u * v);
                }
            }
        }
        Ok(out)
    }

    pub fn matrix<'a, I>(&self, rows: I) -> Result<DMatrix<f64>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let expanded = rows
            .into_iter()
            .map(|r| self.expand(r))
            .collect::<Result<Vec<_>>>()?;
        let p = self.width();
        Ok(DMatrix::from_fn(expanded.len(), p, |i, j| expanded[i][j]))
    }

    /// True when `B(x)` does not depend on `x`.
    pub fn is_constant(&self) -> bool {
        match &self.cells {
            Some((_, cells)) => cells.len() == 1,
            None => self.width() == usize::from(self.intercept),
        }
    }
}
