//! Seedable random streams and exact samplers for every law the series
//! constructions need.

mod stable;
mod stream;
mod validate;

use rand_distr::{Distribution, Gamma, Geometric, Zeta};
use serde::{Deserialize, Serialize};

pub use stable::{positive_stable, symmetric_stable, symmetric_stable_cdf, symmetric_stable_sf};
pub use stream::{derive_seed, RandomStream};
pub use validate::{validate_sampler, SamplerCheck, SamplerReport};

use crate::error::{ensure, Result};
use crate::numeric;

/// A probability law with validated parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform01,
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Laplace transform `e^{-u^β}`.
    PositiveStable { beta: f64 },
    /// Characteristic function `e^{-|t|^γ}`.
    SymmetricStable { gamma: f64 },
    /// `P(k) = p^k / (-k ln(1-p))`, `k ≥ 1`.
    Logarithmic { p: f64 },
    /// `P(k) = k^{-β} / ζ(β)`, `k ≥ 1`.
    Zipf { beta: f64 },
    /// `P(X > x) = (x / x_min)^{-a}`, `x ≥ x_min`.
    Pareto { a: f64, x_min: f64 },
    /// `P(k) = ε (1-ε)^{k-1}`, `k ≥ 1`.
    Geometric1 { eps: f64 },
    /// `P(X = x1) = p`, `P(X = x2) = 1 - p`.
    TwoPoint { x1: f64, x2: f64, p: f64 },
    Degenerate { c: f64 },
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn unit_open(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        use DistributionSpec::*;
        match *self {
            Uniform01 => Ok(()),
            Exponential { rate } => ensure(positive_finite(rate), "rate", || format!("must be > 0, got {rate}")),
            Gamma { shape, scale } => {
                ensure(positive_finite(shape), "shape", || format!("must be > 0, got {shape}"))?;
                ensure(positive_finite(scale), "scale", || format!("must be > 0, got {scale}"))
            }
            PositiveStable { beta } => ensure(unit_open(beta), "beta", || format!("must lie in (0,1), got {beta}")),
            SymmetricStable { gamma } => ensure(gamma > 0.0 && gamma <= 2.0, "gamma", || {
                format!("must lie in (0,2], got {gamma}")
            }),
            Logarithmic { p } => ensure(unit_open(p), "p", || format!("must lie in (0,1), got {p}")),
            Zipf { beta } => ensure(beta.is_finite() && beta > 2.0, "beta", || format!("must be > 2, got {beta}")),
            Pareto { a, x_min } => {
                ensure(positive_finite(a), "a", || format!("must be > 0, got {a}"))?;
                ensure(positive_finite(x_min), "x_min", || format!("must be > 0, got {x_min}"))
            }
            Geometric1 { eps } => ensure(unit_open(eps), "eps", || format!("must lie in (0,1), got {eps}")),
            TwoPoint { x1, x2, p } => {
                ensure(x1.is_finite() && x2.is_finite(), "x1/x2", || "must be finite".into())?;
                ensure((0.0..=1.0).contains(&p), "p", || format!("must lie in [0,1], got {p}"))
            }
            Degenerate { c } => ensure(c.is_finite(), "c", || format!("must be finite, got {c}")),
        }
    }

    /// Builds a sampler; rejects out-of-range parameters.
    pub fn sampler(&self) -> Result<Sampler> {
        Sampler::new(*self)
    }

    /// Mean of the law (`+∞` when it does not exist).
    pub fn mean(&self) -> f64 {
        use DistributionSpec::*;
        match *self {
            Uniform01 => 0.5,
            Exponential { rate } => 1.0 / rate,
            Gamma { shape, scale } => shape * scale,
            PositiveStable { .. } => f64::INFINITY,
            SymmetricStable { gamma } => {
                if gamma > 1.0 {
                    0.0
                } else {
                    f64::NAN
                }
            }
            Logarithmic { p } => -p / ((1.0 - p) * (-p).ln_1p()),
            Zipf { beta } => numeric::riemann_zeta(beta - 1.0) / numeric::riemann_zeta(beta),
            Pareto { a, x_min } => {
                if a > 1.0 {
                    a * x_min / (a - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Geometric1 { eps } => 1.0 / eps,
            TwoPoint { x1, x2, p } => p * x1 + (1.0 - p) * x2,
            Degenerate { c } => c,
        }
    }

    /// Variance, where finite; used for z-scores of empirical means.
    pub fn variance(&self) -> Option<f64> {
        use DistributionSpec::*;
        match *self {
            Uniform01 => Some(1.0 / 12.0),
            Exponential { rate } => Some(1.0 / (rate * rate)),
            Gamma { shape, scale } => Some(shape * scale * scale),
            Logarithmic { p } => {
                let l = (-p).ln_1p();
                Some(-p * (p + l) / ((1.0 - p).powi(2) * l * l))
            }
            Zipf { beta } if beta > 3.0 => {
                let z = numeric::riemann_zeta(beta);
                let m = numeric::riemann_zeta(beta - 1.0) / z;
                Some(numeric::riemann_zeta(beta - 2.0) / z - m * m)
            }
            Pareto { a, x_min } if a > 2.0 => Some(x_min * x_min * a / ((a - 1.0).powi(2) * (a - 2.0))),
            Geometric1 { eps } => Some((1.0 - eps) / (eps * eps)),
            TwoPoint { x1, x2, p } => Some(p * (1.0 - p) * (x1 - x2).powi(2)),
            Degenerate { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Essential infimum of the support.
    pub fn infimum(&self) -> f64 {
        use DistributionSpec::*;
        match *self {
            Uniform01 | Exponential { .. } | Gamma { .. } | PositiveStable { .. } => 0.0,
            SymmetricStable { .. } => f64::NEG_INFINITY,
            Logarithmic { .. } | Zipf { .. } | Geometric1 { .. } => 1.0,
            Pareto { x_min, .. } => x_min,
            TwoPoint { x1, x2, p } => {
                if p == 0.0 {
                    x2
                } else if p == 1.0 {
                    x1
                } else {
                    x1.min(x2)
                }
            }
            Degenerate { c } => c,
        }
    }

    /// Laplace–Stieltjes transform `E e^{-tX}` for nonnegative laws.
    pub fn laplace_transform(&self, t: f64) -> Option<f64> {
        use DistributionSpec::*;
        if t == 0.0 {
            return Some(1.0);
        }
        Some(match *self {
            Uniform01 => -(-t).exp_m1() / t,
            Exponential { rate } => rate / (rate + t),
            Gamma { shape, scale } => (-shape * (scale * t).ln_1p()).exp(),
            PositiveStable { beta } => (-t.powf(beta)).exp(),
            SymmetricStable { .. } => return None,
            Logarithmic { p } => (-p * (-t).exp()).ln_1p() / (-p).ln_1p(),
            Geometric1 { eps } => eps * (-t).exp() / (1.0 - (1.0 - eps) * (-t).exp()),
            TwoPoint { x1, x2, p } => {
                if x1 < 0.0 || x2 < 0.0 {
                    return None;
                }
                p * (-t * x1).exp() + (1.0 - p) * (-t * x2).exp()
            }
            Degenerate { c } => {
                if c < 0.0 {
                    return None;
                }
                (-t * c).exp()
            }
            Zipf { beta } => {
                let z = numeric::riemann_zeta(beta);
                let mut sum = 0.0;
                for k in 1..1_000_000u64 {
                    let term = (k as f64).powf(-beta) * (-t * k as f64).exp();
                    sum += term;
                    if term < 1e-18 * sum {
                        break;
                    }
                }
                sum / z
            }
            Pareto { a, x_min } => {
                // E e^{-tX} = ∫_0^1 exp(-t x_min v^{-1/a}) dv
                numeric::integrate(|v| if v <= 0.0 { 0.0 } else { (-t * x_min * v.powf(-1.0 / a)).exp() }, 0.0, 1.0, 1e-13, 1e-12)
            }
        })
    }

    /// Quantile function for continuous laws with a closed-form inverse.
    pub fn quantile(&self, v: f64) -> Option<f64> {
        use DistributionSpec::*;
        match *self {
            Uniform01 => Some(v),
            Exponential { rate } => Some(-(-v).ln_1p() / rate),
            Pareto { a, x_min } => Some(x_min * (1.0 - v).powf(-1.0 / a)),
            _ => None,
        }
    }

    /// Distribution function for the laws where it is needed in closed form.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        use DistributionSpec::*;
        Some(match *self {
            Uniform01 => x.clamp(0.0, 1.0),
            Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Pareto { a, x_min } => {
                if x <= x_min {
                    0.0
                } else {
                    1.0 - (x / x_min).powf(-a)
                }
            }
            SymmetricStable { gamma } => {
                if gamma == 2.0 {
                    return None;
                }
                symmetric_stable_cdf(gamma, x)
            }
            TwoPoint { x1, x2, p } => {
                let mut c = 0.0;
                if x >= x1 {
                    c += p;
                }
                if x >= x2 {
                    c += 1.0 - p;
                }
                c
            }
            Degenerate { c } => {
                if x >= c {
                    1.0
                } else {
                    0.0
                }
            }
            _ => return None,
        })
    }
}

/// A ready-to-draw sampler for a [`DistributionSpec`].
#[derive(Clone, Debug)]
pub struct Sampler {
    spec: DistributionSpec,
    kind: SamplerKind,
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Direct,
    Gamma(Gamma<f64>),
    Zipf(Zeta<f64>),
    Geometric(Geometric),
}

impl Sampler {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let kind = match spec {
            DistributionSpec::Gamma { shape, scale } => {
                SamplerKind::Gamma(Gamma::new(shape, scale).expect("validated gamma parameters"))
            }
            DistributionSpec::Zipf { beta } => SamplerKind::Zipf(Zeta::new(beta).expect("validated zipf exponent")),
            DistributionSpec::Geometric1 { eps } => {
                SamplerKind::Geometric(Geometric::new(eps).expect("validated geometric parameter"))
            }
            _ => SamplerKind::Direct,
        };
        Ok(Self { spec, kind })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// One draw from the exact law.
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        use DistributionSpec::*;
        match (&self.kind, self.spec) {
            (SamplerKind::Gamma(g), _) => g.sample(stream),
            (SamplerKind::Zipf(z), _) => z.sample(stream),
            (SamplerKind::Geometric(g), _) => (g.sample(stream) + 1) as f64,
            (_, Uniform01) => stream.uniform(),
            (_, Exponential { rate }) => stream.exponential() / rate,
            (_, PositiveStable { beta }) => positive_stable(beta, stream),
            (_, SymmetricStable { gamma }) => symmetric_stable(gamma, stream),
            (_, Logarithmic { p }) => logarithmic(p, stream),
            (_, Pareto { a, x_min }) => x_min * stream.open_uniform().powf(-1.0 / a),
            (_, TwoPoint { x1, x2, p }) => {
                if stream.uniform() < p {
                    x1
                } else {
                    x2
                }
            }
            (_, Degenerate { c }) => c,
            (_, Gamma { .. } | Zipf { .. } | Geometric1 { .. }) => unreachable!("handled by sampler kind"),
        }
    }
}

/// Draws one value from `dist` (validating it first).
pub fn sample(dist: &DistributionSpec, stream: &mut RandomStream) -> Result<f64> {
    Ok(dist.sampler()?.sample(stream))
}

/// Kemp's LS algorithm for the logarithmic series law.
fn logarithmic(p: f64, stream: &mut RandomStream) -> f64 {
    let r = (-p).ln_1p();
    loop {
        let v = stream.open_uniform();
        if v >= p {
            return 1.0;
        }
        let u = stream.open_uniform();
        let q = -(r * u).exp_m1();
        if v <= q * q {
            let k = (1.0 + v.ln() / q.ln()).floor();
            if k >= 1.0 {
                return k;
            }
            continue;
        }
        return if v >= q { 1.0 } else { 2.0 };
    }
}
