use serde::Serialize;

use super::{DistributionSpec, RandomStream};
use crate::error::Result;
use crate::numeric;

/// One comparison of an empirical statistic against its analytic value.
#[derive(Clone, Debug, Serialize)]
pub struct SamplerCheck {
    /// What was compared: `"mean"`, `"lst"` (with `probe` = u), or `"ks_closure"`.
    pub statistic: &'static str,
    pub probe: f64,
    pub empirical: f64,
    pub target: f64,
    /// Standardized deviation; for the closure check this is `sqrt(n_e)·D`.
    pub z: f64,
    pub p_value: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplerReport {
    pub dist: DistributionSpec,
    pub n_draws: usize,
    pub checks: Vec<SamplerCheck>,
}

impl SamplerReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }

    pub fn min_p_value(&self) -> Option<f64> {
        self.checks.iter().filter_map(|c| c.p_value).reduce(f64::min)
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn z_score(empirical: f64, target: f64, se: f64) -> f64 {
    // a constant sample leaves only summation rounding in the gap and in se
    if (empirical - target).abs() <= 1e-9 * target.abs().max(1.0) {
        0.0
    } else if se > 0.0 {
        (empirical - target) / se
    } else if empirical == target {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Checks a sampler against analytic identities.
///
/// Positive stable laws are checked through `E e^{-uS} = e^{-u^β}` at each
/// probe `u`; symmetric stable laws through the closure `(X₁+X₂)/2^{1/γ} =ᵈ X`
/// (two-sample KS); other laws through the mean and, for nonnegative laws,
/// the Laplace transform at the probes.
pub fn validate_sampler(
    dist: &DistributionSpec,
    probes: &[f64],
    n_draws: usize,
    stream: &mut RandomStream,
) -> Result<SamplerReport> {
    crate::error::ensure(n_draws >= 10_000, "n_draws", || format!("must be at least 10000, got {n_draws}"))?;
    let sampler = dist.sampler()?;
    let mut checks = Vec::new();
    match *dist {
        DistributionSpec::SymmetricStable { gamma } => {
            let scale = 2f64.powf(-1.0 / gamma);
            let sums: Vec<f64> = (0..n_draws)
                .map(|_| (sampler.sample(stream) + sampler.sample(stream)) * scale)
                .collect();
            let singles: Vec<f64> = (0..n_draws).map(|_| sampler.sample(stream)).collect();
            let d = numeric::ks_two_sample(&sums, &singles);
            let ne = n_draws as f64 / 2.0;
            checks.push(SamplerCheck {
                statistic: "ks_closure",
                probe: f64::NAN,
                empirical: d,
                target: 0.0,
                z: d * ne.sqrt(),
                p_value: Some(numeric::ks_two_sample_pvalue(d, n_draws, n_draws)),
            });
        }
        _ => {
            let xs: Vec<f64> = (0..n_draws).map(|_| sampler.sample(stream)).collect();
            if dist.variance().is_some() {
                let (m, se) = mean_and_se(&xs);
                let target = dist.mean();
                let exact_se = (dist.variance().unwrap_or(0.0) / n_draws as f64).sqrt();
                checks.push(SamplerCheck {
                    statistic: "mean",
                    probe: f64::NAN,
                    empirical: m,
                    target,
                    z: z_score(m, target, if exact_se > 0.0 { exact_se } else { se }),
                    p_value: None,
                });
            }
            for &u in probes {
                if let Some(target) = dist.laplace_transform(u) {
                    let ys: Vec<f64> = xs.iter().map(|x| (-u * x).exp()).collect();
                    let (m, se) = mean_and_se(&ys);
                    checks.push(SamplerCheck {
                        statistic: "lst",
                        probe: u,
                        empirical: m,
                        target,
                        z: z_score(m, target, se),
                        p_value: None,
                    });
                }
            }
        }
    }
    Ok(SamplerReport {
        dist: *dist,
        n_draws,
        checks,
    })
}
