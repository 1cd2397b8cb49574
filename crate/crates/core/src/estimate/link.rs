use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use super::poisson::{poisson_ccdf, poisson_cdf, poisson_pmf};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Link `Lambda_y` mapping a linear index to a probability for the event
/// `{Y <= y}`.
///
/// `GammaIncomplete` is the Poisson link `Lambda_y(u) = Q(y + 1, exp u)`,
/// i.e. the Poisson(`exp u`) CDF at `y`; it is the only link that depends on
/// the threshold, and it is nonincreasing in `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkFunction {
    Logit,
    Probit,
    Linear,
    GammaIncomplete,
}

impl std::str::FromStr for LinkFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logit" => Ok(Self::Logit),
            "probit" => Ok(Self::Probit),
            "linear" => Ok(Self::Linear),
            "gamma-incomplete" | "poisson" => Ok(Self::GammaIncomplete),
            other => Err(format!("unknown link `{other}`")),
        }
    }
}

impl std::fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Logit => "logit",
            Self::Probit => "probit",
            Self::Linear => "linear",
            Self::GammaIncomplete => "gamma-incomplete",
        })
    }
}

impl LinkFunction {
    /// `Lambda_y(eta)`. The linear link is returned unclipped.
    pub fn cdf(self, eta: f64, y: f64) -> f64 {
        match self {
            Self::Logit => logistic(eta),
            Self::Probit => 0.5 * erfc(-eta.clamp(-38.0, 38.0) / SQRT_2),
            Self::Linear => eta,
            Self::GammaIncomplete => poisson_cdf(eta.exp(), y),
        }
    }

    /// `1 - Lambda_y(eta)` without cancellation.
    pub fn ccdf(self, eta: f64, y: f64) -> f64 {
        match self {
            Self::Logit => logistic(-eta),
            Self::Probit => 0.5 * erfc(eta.clamp(-38.0, 38.0) / SQRT_2),
            Self::Linear => 1.0 - eta,
            Self::GammaIncomplete => poisson_ccdf(eta.exp(), y),
        }
    }

    /// `d Lambda_y / d eta`.
    pub fn density(self, eta: f64, y: f64) -> f64 {
        match self {
            Self::Logit => logistic(eta) * logistic(-eta),
            Self::Probit => {
                let e = eta.clamp(-38.0, 38.0);
                INV_SQRT_2PI * (-0.5 * e * e).exp()
            }
            Self::Linear => 1.0,
            Self::GammaIncomplete => {
                let lambda = eta.exp();
                -lambda * poisson_pmf(lambda, y.floor())
            }
        }
    }

    /// Index at which the link equals `p`, used for starting values.
    pub fn inverse(self, p: f64, y: f64) -> f64 {
        let p = p.clamp(1e-300, 1.0 - 1e-16);
        match self {
            Self::Logit => (p / (1.0 - p)).ln(),
            Self::Probit => Normal::standard().inverse_cdf(p),
            Self::Linear => p,
            Self::GammaIncomplete => {
                // The Poisson CDF decreases in log(lambda); bisect.
                let (mut lo, mut hi) = (-40.0f64, 40.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if poisson_cdf(mid.exp(), y) > p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
