//! Random-threshold stopping: `ζ_n = 1 − ζ/n`, the series runs until a
//! uniform exceeds `ζ_n`, so `ν` is geometric with parameter `ζ/n` and the
//! maximum is the stopping value, uniform on `(ζ_n, 1)`.

use crate::error::{ensure, Error, Result};
use crate::numeric;
use crate::sampling::{DistributionSpec, RandomStream, Sampler};

const QUADRATURE_NODES: usize = 256;

/// Checks that `ζ` is a positive law with unit mean and a tractable form.
pub(crate) fn validate_zeta(zeta: &DistributionSpec) -> Result<()> {
    zeta.validate()?;
    match *zeta {
        DistributionSpec::Degenerate { c } => ensure(c > 0.0, "zeta", || "must be positive".into())?,
        DistributionSpec::TwoPoint { x1, x2, .. } => {
            ensure(x1 > 0.0 && x2 > 0.0, "zeta", || "support points must be positive".into())?
        }
        DistributionSpec::Exponential { .. } | DistributionSpec::Pareto { .. } => {}
        other => {
            return Err(Error::Unsupported(format!(
                "threshold law {other:?}; use degenerate, two_point, exponential or pareto"
            )))
        }
    }
    let mean = zeta.mean();
    ensure((mean - 1.0).abs() <= 1e-9, "zeta", || format!("must have mean 1, got {mean}"))
}

/// Nodes `(ζ_k/n, w_k)` of the law of `ζ` conditioned on `ζ < n`.
pub(crate) fn threshold_nodes(zeta: &DistributionSpec, n: f64) -> Result<Vec<(f64, f64)>> {
    let mut nodes: Vec<(f64, f64)> = match *zeta {
        DistributionSpec::Degenerate { c } => vec![(c, 1.0)],
        DistributionSpec::TwoPoint { x1, x2, p } => vec![(x1, p), (x2, 1.0 - p)],
        DistributionSpec::Exponential { .. } | DistributionSpec::Pareto { .. } => {
            let top = zeta.cdf(n).expect("continuous law with closed-form cdf");
            numeric::gauss_legendre_on(QUADRATURE_NODES, 0.0, top)
                .into_iter()
                .map(|(v, w)| (zeta.quantile(v).expect("closed-form quantile"), w))
                .collect()
        }
        _ => unreachable!("validated threshold law"),
    };
    nodes.retain(|&(z, w)| z < n && w > 0.0);
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    if nodes.is_empty() || total <= 0.0 {
        return Err(Error::Solver(format!("threshold law has no mass below n = {n}")));
    }
    Ok(nodes.into_iter().map(|(z, w)| (z / n, w / total)).collect())
}

/// Draws `ζ` conditioned on `ζ < n` by rejection.
pub(crate) fn sample_zeta_below(sampler: &Sampler, n: f64, stream: &mut RandomStream) -> f64 {
    loop {
        let z = sampler.sample(stream);
        if z < n {
            return z;
        }
    }
}

/// Geometric variate on `{1, 2, …}` with success probability `eps`, by inversion.
pub(crate) fn geometric1(eps: f64, stream: &mut RandomStream) -> u64 {
    if eps >= 1.0 {
        return 1;
    }
    let k = (stream.open_uniform().ln() / (-eps).ln_1p()).floor();
    if k >= u64::MAX as f64 - 1.0 {
        u64::MAX
    } else {
        1 + k as u64
    }
}
