//! Monte Carlo estimates of the extremal function and the indices read off it.
//!
//! Every grid point is evaluated on the same replicates: each replicate
//! contributes one maximum, compared against every level `u_n(s)`. Replicate
//! `i` always draws from substream `i`, so results do not depend on how the
//! replicates are spread over worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::normalizer::{NormalizingCurve, Normalizer};
use crate::numeric;
use crate::sampling::{derive_seed, RandomStream};
use crate::systems::{Evaluation, PowerMean, Replicate, SeriesSystem};

pub const DEFAULT_REPLICATES: usize = 100_000;
pub const MIN_REPLICATES: usize = 1_000;
/// Search range for the Definition-2 index.
pub const DEF2_RANGE: (f64, f64) = (0.01, 10.0);

const REPLICATE_DOMAIN: u64 = 0x5245;
const NORMALIZER_DOMAIN: u64 = 0x4e4f;
const DEF2_DOMAIN: u64 = 0x4432;

/// `s ∈ {0.05, 0.10, …, 0.95}`.
pub fn default_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

/// Requires a nonempty, strictly ascending grid inside `(0, 1)`.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    ensure(!grid.is_empty(), "s_grid", || "must not be empty".into())?;
    ensure(grid.iter().all(|s| *s > 0.0 && *s < 1.0), "s_grid", || {
        "points must lie strictly inside (0,1)".into()
    })?;
    ensure(grid.windows(2).all(|w| w[0] < w[1]), "s_grid", || "must be strictly ascending".into())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiEstimate {
    pub n: u64,
    pub s_grid: Vec<f64>,
    pub u: Vec<f64>,
    pub psi_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicates: usize,
    #[serde(skip)]
    pub curve: NormalizingCurve,
}

impl PsiEstimate {
    /// Nondecreasing fit of `ψ̂`.
    pub fn isotonic(&self) -> Vec<f64> {
        numeric::isotonic_increasing(&self.psi_hat)
    }

    /// `log_s ψ̂(s)` at every grid point (`+∞` where `ψ̂ = 0`).
    pub fn log_slopes(&self) -> Vec<f64> {
        self.s_grid.iter().zip(&self.psi_hat).map(|(&s, &p)| numeric::log_base(s, p)).collect()
    }
}

/// Binomial standard error `√(p(1−p)/R)`.
pub fn binomial_stderr(p: f64, replicates: usize) -> f64 {
    (p * (1.0 - p) / replicates as f64).sqrt()
}

fn replicate_stream(seed: u64, i: u64) -> RandomStream {
    RandomStream::new(derive_seed(seed, REPLICATE_DOMAIN), i)
}

/// Draws `R` independent replicates `(ν_n, M_n)` in replicate order.
pub fn simulate_replicates(sys: &SeriesSystem, n: u64, replicates: usize, seed: u64) -> Result<Vec<Replicate>> {
    let sampler = sys.replicate_sampler(n)?;
    Ok((0..replicates as u64)
        .into_par_iter()
        .map_init(|| sampler.clone(), |s, i| s.sample(&mut replicate_stream(seed, i)))
        .collect())
}

/// Fraction of `sorted` maxima at or below each level.
pub fn empirical_cdf_at(sorted: &[f64], levels: &[f64]) -> Vec<f64> {
    let r = sorted.len() as f64;
    levels
        .iter()
        .map(|&u| sorted.partition_point(|&m| m <= u) as f64 / r)
        .collect()
}

/// `ψ̂(s) = #{M ≤ u_n(s)}/R` over the grid.
pub fn estimate_psi(sys: &SeriesSystem, n: u64, s_grid: &[f64], replicates: usize, seed: u64) -> Result<PsiEstimate> {
    validate_grid(s_grid)?;
    ensure(replicates >= MIN_REPLICATES, "replicates", || {
        format!("replicates below minimum {MIN_REPLICATES}, got {replicates}")
    })?;
    let curve = Normalizer::new(sys, n, derive_seed(seed, NORMALIZER_DOMAIN))?.solve_curve(s_grid)?;
    let u = curve.levels();
    let mut maxima: Vec<f64> = simulate_replicates(sys, n, replicates, seed)?.into_iter().map(|r| r.max).collect();
    maxima.par_sort_unstable_by(f64::total_cmp);
    let psi_hat = empirical_cdf_at(&maxima, &u);
    let stderr = psi_hat.iter().map(|&p| binomial_stderr(p, replicates)).collect();
    Ok(PsiEstimate {
        n,
        s_grid: s_grid.to_vec(),
        u,
        psi_hat,
        stderr,
        replicates,
        curve,
    })
}

/// Grid extrema of `log_s ψ(s)`: inner approximations of `(θ⁻, θ⁺)`.
///
/// Points with `ψ = 1` carry no information and are skipped; a zero makes
/// `θ⁺ = +∞`.
pub fn partial_indices_of(s_grid: &[f64], psi: &[f64]) -> Result<(f64, f64)> {
    let slopes: Vec<f64> = s_grid
        .iter()
        .zip(psi)
        .filter(|(_, &p)| p < 1.0)
        .map(|(&s, &p)| numeric::log_base(s, p))
        .collect();
    if slopes.iter().all(|x| x.is_infinite()) {
        return Err(Error::Undefined("every estimate is 0 or 1".into()));
    }
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

pub fn partial_indices(est: &PsiEstimate) -> Result<(f64, f64)> {
    partial_indices_of(&est.s_grid, &est.psi_hat)
}

/// `(θ̂₀, θ̂₁)`: `log_s ψ` at the smallest grid point and at the largest.
/// `θ̂₁` is `None` when `ψ = 1` there.
pub fn tail_indices_of(s_grid: &[f64], psi: &[f64]) -> Result<(f64, Option<f64>)> {
    let (first, last) = match (s_grid.first(), s_grid.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Undefined("empty grid".into())),
    };
    ensure(first <= 0.05 + 1e-12 && last >= 0.95 - 1e-12, "s_grid", || {
        format!("tail indices need s_min <= 0.05 and s_max >= 0.95, got [{first}, {last}]")
    })?;
    let theta0 = numeric::log_base(first, psi[0]);
    let p1 = psi[psi.len() - 1];
    let theta1 = (p1 < 1.0).then(|| numeric::log_base(last, p1));
    Ok((theta0, theta1))
}

pub fn tail_indices(est: &PsiEstimate) -> Result<(f64, Option<f64>)> {
    tail_indices_of(&est.s_grid, &est.psi_hat)
}

/// Result of fitting the Definition-2 index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Def2Fit {
    pub theta: f64,
    pub discrepancy: f64,
}

/// `D(θ) = max_s |ψ̂(s) − Ê F_n(u_n(s))^{θν_n}|`, with the comparator frozen
/// on pools independent of the ones used for the estimate.
pub struct Def2Objective {
    power_mean: PowerMean,
    neg_log_f: Vec<Evaluation>,
    psi_hat: Vec<f64>,
}

impl Def2Objective {
    pub fn new(sys: &SeriesSystem, est: &PsiEstimate, seed: u64) -> Result<Self> {
        let power_mean = sys.power_mean(est.n, derive_seed(seed, DEF2_DOMAIN))?;
        let neg_log_f = est.u.iter().map(|&u| power_mean.marginal.neg_log_cdf(u)).collect();
        Ok(Self {
            power_mean,
            neg_log_f,
            psi_hat: est.psi_hat.clone(),
        })
    }

    /// `Ê F_n(u_n(s))^{θν_n}` on the grid.
    pub fn comparator(&self, theta: f64) -> Vec<f64> {
        self.neg_log_f
            .iter()
            .map(|&nl| self.power_mean.eval_neg_log(nl, theta).value)
            .collect()
    }

    pub fn discrepancy(&self, theta: f64) -> f64 {
        self.comparator(theta)
            .iter()
            .zip(&self.psi_hat)
            .map(|(c, p)| (c - p).abs())
            .fold(0.0, f64::max)
    }

    /// Log-spaced scan, then golden-section refinement around the best point.
    pub fn fit(&self, range: (f64, f64)) -> Result<Def2Fit> {
        let (lo, hi) = range;
        ensure(lo > 0.0 && lo < hi && hi.is_finite(), "theta_range", || {
            format!("must satisfy 0 < lo < hi < inf, got ({lo}, {hi})")
        })?;
        const SCAN: usize = 61;
        let ratio = (hi / lo).ln();
        let thetas: Vec<f64> = (0..SCAN)
            .map(|k| lo * (ratio * k as f64 / (SCAN - 1) as f64).exp())
            .collect();
        let values: Vec<f64> = thetas.iter().map(|&t| self.discrepancy(t)).collect();
        let best = (0..SCAN).fold(0, |b, k| if values[k] < values[b] { k } else { b });
        let a = thetas[best.saturating_sub(1)];
        let b = thetas[(best + 1).min(SCAN - 1)];
        let (theta, discrepancy) = numeric::golden_section_min(|t| self.discrepancy(t), a, b, 1e-6 * b);
        Ok(if discrepancy <= values[best] {
            Def2Fit { theta, discrepancy }
        } else {
            Def2Fit {
                theta: thetas[best],
                discrepancy: values[best],
            }
        })
    }
}

pub fn def2_discrepancy(sys: &SeriesSystem, est: &PsiEstimate, theta: f64, seed: u64) -> Result<f64> {
    Ok(Def2Objective::new(sys, est, seed)?.discrepancy(theta))
}

/// Minimizes `D(θ)` over `theta_range`; a large minimum signals that no
/// Definition-2 index exists.
pub fn def2_fit(sys: &SeriesSystem, est: &PsiEstimate, theta_range: (f64, f64), seed: u64) -> Result<Def2Fit> {
    Def2Objective::new(sys, est, seed)?.fit(theta_range)
}

/// Index summaries of one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub theta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
    pub theta_def2: Option<f64>,
    pub def2_discrepancy: Option<f64>,
    pub theta0: Option<f64>,
    pub theta1: Option<f64>,
}
