//! Monte Carlo study of band coverage, power and length for two
//! independent discrete samples, with competing QE bands as benchmarks.

mod competitors;
mod generate;

pub use competitors::{
    competitor_constant_width, competitor_jitter, constant_width_band, jitter, qe_estimate,
    sup_t_band, zero_se_share, JitterCenter, SortedSample,
};
pub use generate::{default_cutoffs, gen_ordered, gen_poisson, ordered_cdf, ORDERED_CUMULATIVE};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::IntervalBand;
use crate::bandcalc::{
    build_band, critical_value_with, invert_band_exact, qe_band, robust_ses, test_equality,
    BandShaping,
};
use crate::error::{Error, Result};
use crate::estimate::{poisson_cdf, EdfBinning};
use crate::grid::{Grid, ProbGrid};
use crate::resample::{draw_weights, stream_rng, BootstrapConfig, BootstrapDraws, WeightScheme};
use crate::stepfn::MonotoneStepFn;

/// Population pair: group 0 is the control, group 1 the treated outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SimFamily {
    Poisson { lambda0: f64, lambda1: f64 },
    /// Latent N(mu, 1) variables discretized at `cutoffs`.
    Ordered { mu0: f64, mu1: f64, cutoffs: Vec<f64> },
}

impl SimFamily {
    /// Count design `k` (1, 2 or 3): Poisson(3) control against a treated
    /// rate of 3, 2.75 or 2.5.
    pub fn count_design(k: usize) -> Result<Self> {
        let lambda1 = match k {
            1 => 3.0,
            2 => 2.75,
            3 => 2.5,
            _ => return Err(Error::InvalidDesign(format!("no count design {k}"))),
        };
        Ok(Self::Poisson {
            lambda0: 3.0,
            lambda1,
        })
    }

    /// Ordered design `k` (1, 2 or 3): latent N(0, 1) control against a
    /// treated mean of 0, 0.2 or 0.4.
    pub fn ordered_design(k: usize) -> Result<Self> {
        let mu1 = match k {
            1 => 0.0,
            2 => 0.2,
            3 => 0.4,
            _ => return Err(Error::InvalidDesign(format!("no ordered design {k}"))),
        };
        Ok(Self::Ordered {
            mu0: 0.0,
            mu1,
            cutoffs: default_cutoffs(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Poisson { lambda0, lambda1 } => {
                for l in [lambda0, lambda1] {
                    if !(*l > 0.0 && l.is_finite()) {
                        return Err(Error::InvalidDesign(format!("Poisson rate must be positive, got {l}")));
                    }
                }
            }
            Self::Ordered { mu0, mu1, cutoffs } => {
                if !(mu0.is_finite() && mu1.is_finite()) {
                    return Err(Error::InvalidDesign("latent means must be finite".into()));
                }
                if cutoffs.is_empty()
                    || cutoffs.iter().any(|c| !c.is_finite())
                    || cutoffs.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::InvalidDesign("cutoffs must be finite and strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    /// Outcome grid and the two population DFs on it, for quantile levels up
    /// to `upper`.
    ///
    /// Count designs use `{0, ..., y_max}` with `y_max` the largest of the two
    /// population `upper`-quantiles, and treat `y_max` as the top of the
    /// outcome domain. Ordered designs use their full support.
    pub fn population(&self, upper: f64) -> Result<(Grid, [MonotoneStepFn; 2])> {
        self.validate()?;
        if !(upper > 0.0 && upper < 1.0) {
            return Err(Error::InvalidDesign(format!("upper level {upper} is not in (0, 1)")));
        }
        match self {
            Self::Poisson { lambda0, lambda1 } => {
                let quantile = |l: f64| {
                    let mut y = 0i64;
                    while poisson_cdf(l, y as f64) < upper {
                        y += 1;
                    }
                    y
                };
                let y_max = quantile(*lambda0).max(quantile(*lambda1));
                let grid = Grid::with_domain_sup((0..=y_max).map(|v| v as f64).collect(), y_max as f64)?;
                let truth = |l: f64| {
                    let v = grid.points().iter().map(|&y| poisson_cdf(l, y)).collect();
                    MonotoneStepFn::new(grid.clone(), v)
                };
                Ok((grid.clone(), [truth(*lambda0)?, truth(*lambda1)?]))
            }
            Self::Ordered { mu0, mu1, cutoffs } => {
                let grid = Grid::integers(0, cutoffs.len() as i64)?;
                Ok((
                    grid.clone(),
                    [
                        MonotoneStepFn::new(grid.clone(), ordered_cdf(*mu0, cutoffs))?,
                        MonotoneStepFn::new(grid, ordered_cdf(*mu1, cutoffs))?,
                    ],
                ))
            }
        }
    }

    fn sample(&self, group: usize, n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<f64>> {
        match self {
            Self::Poisson { lambda0, lambda1 } => gen_poisson([*lambda0, *lambda1][group], n, rng),
            Self::Ordered { mu0, mu1, cutoffs } => Ok(gen_ordered([*mu0, *mu1][group], cutoffs, n, rng)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub family: SimFamily,
    /// Observations per group.
    pub n: usize,
    /// Confidence level.
    pub p: f64,
    pub nsim: usize,
    /// Bootstrap draws per replication.
    pub draws: usize,
    #[serde(default)]
    pub scheme: WeightScheme,
    /// Probability range `[from, to]` for quantile and QE bands.
    #[serde(default = "default_prob_range")]
    pub prob_range: (f64, f64),
    #[serde(default = "default_prob_step")]
    pub prob_step: f64,
    pub seed: u64,
    /// Also compute the constant-width and jittered competitor bands.
    #[serde(default)]
    pub competitors: bool,
}

fn default_prob_range() -> (f64, f64) {
    (0.1, 0.9)
}

fn default_prob_step() -> f64 {
    0.01
}

impl SimDesign {
    pub fn new(family: SimFamily, n: usize, p: f64, nsim: usize, draws: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            p,
            nsim,
            draws,
            scheme: WeightScheme::default(),
            prob_range: default_prob_range(),
            prob_step: default_prob_step(),
            seed,
            competitors: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if self.n == 0 || self.nsim == 0 {
            return Err(Error::InvalidDesign("n and nsim must be positive".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidDesign(format!("level {} is not in (0, 1)", self.p)));
        }
        if self.draws < 2 {
            return Err(Error::InvalidDesign("at least 2 bootstrap draws are needed".into()));
        }
        let (a, b) = self.prob_range;
        if !(a > 0.0 && a < b && b < 1.0) {
            return Err(Error::InvalidDesign(format!("probability range ({a}, {b}) is not inside (0, 1)")));
        }
        Ok(())
    }

    pub fn prob_grid(&self) -> Result<ProbGrid> {
        ProbGrid::range(self.prob_range.0, self.prob_range.1, self.prob_step)
    }
}

/// Seed of replication `rep`, mixed from the design seed.
pub fn replication_seed(seed: u64, rep: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(rep))
}

// Streams of a replication's generator. Bootstrap draw b uses stream b, so
// sample and noise streams count down from the top.
const SAMPLE_STREAM: u64 = u64::MAX;
const NOISE_STREAM: u64 = u64::MAX - 2;

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Replication {
    pub cover_single: [bool; 2],
    pub cover_joint: bool,
    pub cover_qe: bool,
    pub reject: bool,
    pub length_new: f64,
    pub competitors: Option<CompetitorOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CompetitorOutcome {
    pub cover_boot: bool,
    pub length_boot: f64,
    pub cover_jitter1: bool,
    pub cover_jitter2: bool,
    pub length_jitter: f64,
    /// Share of probability indices with a zero bootstrap standard error of
    /// the raw QE function.
    pub raw_zero_se_share: f64,
}

struct Context {
    grid: Grid,
    truth: [MonotoneStepFn; 2],
    prob_grid: ProbGrid,
    /// Population QE function on `prob_grid`.
    true_qe: Vec<f64>,
}

impl Context {
    fn new(design: &SimDesign) -> Result<Self> {
        design.validate()?;
        let (grid, truth) = design.family.population(design.prob_range.1)?;
        let prob_grid = design.prob_grid()?;
        let true_qe = prob_grid
            .indices()
            .iter()
            .map(|&a| truth[1].left_inverse(a) - truth[0].left_inverse(a))
            .collect();
        Ok(Self {
            grid,
            truth,
            prob_grid,
            true_qe,
        })
    }
}

/// Runs replication `rep` of `design`.
pub fn run_replication(design: &SimDesign, rep: u64) -> Result<Replication> {
    let ctx = Context::new(design)?;
    replicate(design, &ctx, rep)
}

fn replicate(design: &SimDesign, ctx: &Context, rep: u64) -> Result<Replication> {
    let n = design.n;
    let seed = replication_seed(design.seed, rep);
    let mut sample_rng = stream_rng(seed, SAMPLE_STREAM);
    let y0 = design.family.sample(0, n, &mut sample_rng)?;
    let y1 = design.family.sample(1, n, &mut sample_rng)?;
    let bins = [EdfBinning::new(&y0, &ctx.grid), EdfBinning::new(&y1, &ctx.grid)];
    let ones = vec![1.0; n];
    let estimates = [bins[0].evaluate(&ones)?, bins[1].evaluate(&ones)?];

    let config = BootstrapConfig {
        scheme: design.scheme,
        draws: design.draws,
        master_seed: seed,
        cluster_by: None,
    };
    let probs = ctx.prob_grid.indices();
    let sorted = design.competitors.then(|| {
        let mut noise = stream_rng(seed, NOISE_STREAM);
        let z0 = jitter(&y0, &mut noise);
        let z1 = jitter(&y1, &mut noise);
        [
            SortedSample::new(&y0),
            SortedSample::new(&y1),
            SortedSample::new(&z0),
            SortedSample::new(&z1),
        ]
    });

    // One pass over the draws feeds the DF bootstrap and, when requested,
    // the raw and jittered QE bootstraps from the same weights.
    let per_draw: Vec<Result<(Vec<Vec<f64>>, Option<[Vec<f64>; 2]>)>> = (0..design.draws)
        .into_par_iter()
        .map(|b| {
            let w = draw_weights(&config, 2 * n, None, b);
            let (w0, w1) = w.split_at(n);
            let dfs = vec![bins[0].evaluate(w0)?, bins[1].evaluate(w1)?];
            let qe = sorted.as_ref().map(|s| {
                [
                    qe_estimate(&s[1], &s[0], w1, w0, probs),
                    qe_estimate(&s[3], &s[2], w1, w0, probs),
                ]
            });
            Ok((dfs, qe))
        })
        .collect();
    let mut slices = Vec::with_capacity(design.draws);
    let mut raw_draws = Vec::new();
    let mut jitter_draws = Vec::new();
    for r in per_draw {
        let (dfs, qe) = r?;
        slices.push(dfs);
        if let Some([raw, jit]) = qe {
            raw_draws.push(raw);
            jitter_draws.push(jit);
        }
    }
    let draws = BootstrapDraws::from_slices(config, slices)?;
    let ses = robust_ses(&draws);
    let est_vec = estimates.to_vec();
    let est_fns = estimates.map(|v| MonotoneStepFn::from_parts_unchecked(ctx.grid.clone(), v));
    let shaping = BandShaping::default();

    let mut cover_single = [false; 2];
    for k in 0..2 {
        let report = critical_value_with(&draws, &est_vec, ses.clone(), &[k], design.p)?;
        let band = build_band(&est_fns[k], &ses[k], report.critical_value, design.p, shaping)?.band;
        let qgrid = ctx
            .prob_grid
            .augmented_with(band.levels().chain(ctx.truth[k].levels()));
        let q = invert_band_exact(&band, &qgrid);
        cover_single[k] = q.contains_fn(|a| ctx.truth[k].left_inverse(a));
    }

    let report = critical_value_with(&draws, &est_vec, ses.clone(), &[0, 1], design.p)?;
    let joint: Vec<_> = (0..2)
        .map(|k| build_band(&est_fns[k], &ses[k], report.critical_value, design.p, shaping).map(|b| b.band))
        .collect::<Result<_>>()?;
    let qgrid = ctx.prob_grid.augmented_with(
        joint
            .iter()
            .flat_map(|b| b.levels())
            .chain(ctx.truth.iter().flat_map(|t| t.levels()))
            .collect::<Vec<_>>(),
    );
    let q0 = invert_band_exact(&joint[0], &qgrid);
    let q1 = invert_band_exact(&joint[1], &qgrid);
    let cover_q = [
        q0.contains_fn(|a| ctx.truth[0].left_inverse(a)),
        q1.contains_fn(|a| ctx.truth[1].left_inverse(a)),
    ];
    let qe = qe_band(&q1, &q0)?;
    let cover_qe = qe.contains_fn(|a| ctx.truth[1].left_inverse(a) - ctx.truth[0].left_inverse(a));
    let reject = test_equality(&qe).reject;
    let base_qe = qe_band(
        &invert_band_exact(&joint[1], &ctx.prob_grid),
        &invert_band_exact(&joint[0], &ctx.prob_grid),
    )?;
    let length_new = base_qe.mean_length();

    let competitors = match &sorted {
        None => None,
        Some(s) => {
            let raw_est = qe_estimate(&s[1], &s[0], &ones, &ones, probs);
            let smooth_est = qe_estimate(&s[3], &s[2], &ones, &ones, probs);
            let boot = constant_width_band(&ctx.prob_grid, &raw_est, &raw_draws, design.p)?;
            let j1 = sup_t_band(&ctx.prob_grid, &smooth_est, &smooth_est, &jitter_draws, design.p)?;
            let j2 = sup_t_band(&ctx.prob_grid, &raw_est, &smooth_est, &jitter_draws, design.p)?;
            let covered = |band: &IntervalBand| {
                (0..band.len()).all(|i| band.contains_at(i, ctx.true_qe[i]))
            };
            Some(CompetitorOutcome {
                cover_boot: covered(&boot),
                length_boot: boot.mean_length(),
                cover_jitter1: covered(&j1),
                cover_jitter2: covered(&j2),
                length_jitter: j1.mean_length(),
                raw_zero_se_share: zero_se_share(&raw_draws, probs.len()),
            })
        }
    };

    Ok(Replication {
        cover_single,
        cover_joint: cover_q[0] && cover_q[1] && cover_qe,
        cover_qe,
        reject,
        length_new,
        competitors,
    })
}

/// A rate with its Monte Carlo standard error `sqrt(r (1 - r) / nsim)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub rate: f64,
    pub mc_se: f64,
}

impl Rate {
    fn from_count(count: usize, nsim: usize) -> Self {
        let r = count as f64 / nsim as f64;
        Self {
            rate: r,
            mc_se: (r * (1.0 - r) / nsim as f64).sqrt(),
        }
    }
}

/// A mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mean {
    pub mean: f64,
    pub mc_se: f64,
}

impl Mean {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            mean,
            mc_se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorReport {
    pub coverage_boot: Rate,
    pub coverage_jitter1: Rate,
    pub coverage_jitter2: Rate,
    pub length_boot: Mean,
    pub length_jitter1: Mean,
    pub length_jitter2: Mean,
    /// Average share of probability indices where the raw QE bootstrap has
    /// a zero standard error, so that a sup-t band cannot be formed.
    pub raw_zero_se_share: Mean,
    /// Share of replications with at least one such index.
    pub raw_supt_incomputable: Rate,
    /// The jittered bands add Uniform[0, 1) noise to both kinds of outcomes.
    pub jitter_noise: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub design: SimDesign,
    /// Single-function coverage of `(F_0, F_0^-)` and `(F_1, F_1^-)`.
    pub coverage_f0: Rate,
    pub coverage_f1: Rate,
    /// Joint coverage of both DFs, both QFs and the QE function.
    pub coverage_all: Rate,
    /// Coverage of the QE function by the joint QE band.
    pub coverage_qe: Rate,
    /// Rejection rate of `F_1^- = F_0^-`.
    pub reject: Rate,
    /// Average length of the QE band over the probability grid.
    pub length_new: Mean,
    pub competitors: Option<CompetitorReport>,
}

/// Runs every replication of `design` (in parallel) and aggregates them.
/// The report depends only on the design, not on the thread count.
pub fn run_design(design: &SimDesign) -> Result<SimReport> {
    let ctx = Context::new(design)?;
    let reps = (0..design.nsim as u64)
        .into_par_iter()
        .map(|r| replicate(design, &ctx, r))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(design, &reps))
}

pub fn aggregate(design: &SimDesign, reps: &[Replication]) -> SimReport {
    let nsim = reps.len();
    let count = |f: &dyn Fn(&Replication) -> bool| Rate::from_count(reps.iter().filter(|r| f(r)).count(), nsim);
    let competitors = if reps.iter().all(|r| r.competitors.is_some()) && !reps.is_empty() {
        let c: Vec<CompetitorOutcome> = reps.iter().filter_map(|r| r.competitors).collect();
        let rate = |f: &dyn Fn(&CompetitorOutcome) -> bool| Rate::from_count(c.iter().filter(|x| f(x)).count(), nsim);
        let length_jitter = Mean::of(c.iter().map(|x| x.length_jitter));
        Some(CompetitorReport {
            coverage_boot: rate(&|x| x.cover_boot),
            coverage_jitter1: rate(&|x| x.cover_jitter1),
            coverage_jitter2: rate(&|x| x.cover_jitter2),
            length_boot: Mean::of(c.iter().map(|x| x.length_boot)),
            length_jitter1: length_jitter,
            length_jitter2: length_jitter,
            raw_zero_se_share: Mean::of(c.iter().map(|x| x.raw_zero_se_share)),
            raw_supt_incomputable: rate(&|x| x.raw_zero_se_share > 0.0),
            jitter_noise: "uniform[0,1) per observation, fixed within a replication".into(),
        })
    } else {
        None
    };
    SimReport {
        design: design.clone(),
        coverage_f0: count(&|r| r.cover_single[0]),
        coverage_f1: count(&|r| r.cover_single[1]),
        coverage_all: count(&|r| r.cover_joint),
        coverage_qe: count(&|r| r.cover_qe),
        reject: count(&|r| r.reject),
        length_new: Mean::of(reps.iter().map(|r| r.length_new)),
        competitors,
    }
}
