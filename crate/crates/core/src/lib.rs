//! Uniform confidence bands for distribution, quantile and quantile-effect
//! functions of possibly discrete outcomes.
//!
//! Distribution functions are estimated on a finite grid, bootstrapped
//! jointly with exchangeable weights, and turned into DF-bands with a
//! studentized max-t critical value. Left-inverting the band edges gives
//! quantile bands, and pointwise Minkowski differences of quantile bands
//! give bands for quantile effects.

pub mod band;
pub mod bandcalc;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod resample;
pub mod shape;
pub mod simlab;
pub mod stepfn;

pub use band::{covers, DFBand, IntervalBand, QEBand, QuantileBand};
pub use bandcalc::{BandShaping, CriticalValueReport, EqualityTest};
pub use error::{Error, Result};
pub use estimate::{Dataset, DesignSpec, Estimator, LinkFunction};
pub use grid::{Grid, ProbGrid};
pub use resample::{BootstrapConfig, BootstrapDraws, WeightScheme};
pub use shape::ShapeMode;
pub use stepfn::MonotoneStepFn;
