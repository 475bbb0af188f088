//! The two ingredients of the normalization `E F_n(u)^{ν_n} = s`: the law of
//! the series size (through its Laplace transform) and the marginal law of
//! the series members.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Transform;
use crate::error::Result;
use crate::numeric;
use crate::sampling::{symmetric_stable_cdf, symmetric_stable_sf};

/// How a value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Exact,
    /// Limit form of a finite-size quantity.
    Asymptotic,
    Quadrature,
    MonteCarlo,
}

/// A value with its Monte Carlo standard error (zero for deterministic methods).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub stderr: f64,
    pub method: EvalMethod,
}

/// The law of `ν_n`, exposed through `L(t) = E e^{-tν}`.
#[derive(Clone, Debug)]
pub enum SizeLaw {
    Deterministic(u64),
    /// Geometric on `{1, 2, …}` with success probability `eps`.
    Geometric { eps: f64 },
    /// `ν ≈ n·S` with `S` positive `β`-stable, evaluated in its limit form.
    StableScaled { n: f64, beta: f64 },
    /// Mixture of geometric laws with success probabilities `eps` and weights `w`.
    GeometricMixture { nodes: Vec<(f64, f64)> },
    /// Frozen sample of sizes, stored as `(value, multiplicity)`.
    Pool { values: Vec<(u64, u64)>, total: u64 },
}

impl SizeLaw {
    pub fn pool(mut sizes: Vec<u64>) -> Self {
        sizes.sort_unstable();
        let total = sizes.len() as u64;
        let mut values: Vec<(u64, u64)> = Vec::new();
        for v in sizes {
            match values.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => values.push((v, 1)),
            }
        }
        SizeLaw::Pool { values, total }
    }

    pub fn is_deterministic(&self) -> Option<u64> {
        match self {
            SizeLaw::Deterministic(l) => Some(*l),
            _ => None,
        }
    }

    pub fn method(&self) -> EvalMethod {
        match self {
            SizeLaw::Deterministic(_) | SizeLaw::Geometric { .. } => EvalMethod::Exact,
            SizeLaw::StableScaled { .. } => EvalMethod::Asymptotic,
            SizeLaw::GeometricMixture { .. } => EvalMethod::Quadrature,
            SizeLaw::Pool { .. } => EvalMethod::MonteCarlo,
        }
    }

    /// `E e^{-tν}` for `t ≥ 0`.
    pub fn laplace(&self, t: f64) -> Evaluation {
        let method = self.method();
        let exact = |value| Evaluation {
            value,
            stderr: 0.0,
            method,
        };
        if t <= 0.0 {
            return exact(1.0);
        }
        match self {
            SizeLaw::Deterministic(l) => exact((-t * *l as f64).exp()),
            SizeLaw::Geometric { eps } => exact(geometric_laplace(*eps, t)),
            SizeLaw::StableScaled { n, beta } => exact((-(t * n).powf(*beta)).exp()),
            SizeLaw::GeometricMixture { nodes } => {
                exact(nodes.iter().map(|&(eps, w)| w * geometric_laplace(eps, t)).sum())
            }
            SizeLaw::Pool { values, total } => {
                let n = *total as f64;
                let (mut s1, mut s2) = (0.0, 0.0);
                for &(v, c) in values {
                    let e = (-t * v as f64).exp();
                    s1 += c as f64 * e;
                    s2 += c as f64 * e * e;
                }
                let mean = s1 / n;
                let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
                Evaluation {
                    value: mean,
                    stderr: (var / n).sqrt(),
                    method,
                }
            }
        }
    }

    /// Solves `E e^{-tν} = s` for `t`.
    pub fn solve_laplace(&self, s: f64) -> Result<f64> {
        match self {
            SizeLaw::Deterministic(l) => Ok(-s.ln() / *l as f64),
            // ε x / (1 − (1−ε) x) = s  ⇔  x = s / (ε + (1−ε) s)
            SizeLaw::Geometric { eps } => Ok((eps * (1.0 - s) / s).ln_1p()),
            SizeLaw::StableScaled { n, beta } => Ok((-s.ln()).powf(1.0 / beta) / n),
            _ => {
                // L is decreasing in t; search in y = ln t for relative accuracy.
                let y = numeric::bisect_increasing(|y| -self.laplace(y.exp()).value, -60.0, 40.0, -s, 1e-13)?;
                Ok(y.exp())
            }
        }
    }

    pub fn has_closed_inverse(&self) -> bool {
        matches!(
            self,
            SizeLaw::Deterministic(_) | SizeLaw::Geometric { .. } | SizeLaw::StableScaled { .. }
        )
    }
}

/// `E e^{-tν}` for `ν` geometric on `{1,2,…}`: `ε e^{-t} / (1 − (1−ε) e^{-t})`.
pub fn geometric_laplace(eps: f64, t: f64) -> f64 {
    let x = (-t).exp();
    eps * x / (-(-t).exp_m1() + eps * x)
}

/// Conditional Monte Carlo sample for the tail of `X₀ + X₁ + … + X_D`
/// with iid Pareto(`a`, 1) terms and random `D`.
///
/// Each entry `(k, s, m)` holds the number of terms `k = D + 1` and the sum
/// and maximum of `k − 1` of them; the tail estimate is the average of
/// `k·Ā(max(m, x − s))`, which keeps its relative accuracy far in the tail.
#[derive(Clone, Debug)]
pub struct AggregateTailPool {
    pub a: f64,
    pub entries: Vec<(u32, f64, f64)>,
}

impl AggregateTailPool {
    fn pareto_sf(&self, y: f64) -> f64 {
        if y <= 1.0 {
            1.0
        } else {
            y.powf(-self.a)
        }
    }

    pub fn sf(&self, x: f64) -> Evaluation {
        let n = self.entries.len() as f64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for &(k, s, m) in &self.entries {
            let v = (k as f64 * self.pareto_sf(m.max(x - s))).min(1.0);
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        Evaluation {
            value: mean,
            stderr: (var / n).sqrt(),
            method: EvalMethod::MonteCarlo,
        }
    }
}

/// Marginal law `F_n` of the series members.
#[derive(Clone, Debug)]
pub enum Marginal {
    Uniform,
    /// `F(x) = x (1 + (x^{γn−1} − 1)/n)` on `[0, 1]`.
    MixtureSpike { n: f64, gamma: f64 },
    SymmetricStable { gamma: f64 },
    AggregateTail(Arc<AggregateTailPool>),
    Transformed { base: Box<Marginal>, transform: Transform },
}

impl Marginal {
    pub fn is_closed_form(&self) -> bool {
        match self {
            Marginal::Uniform => true,
            Marginal::SymmetricStable { gamma } => *gamma == 1.0,
            Marginal::Transformed { base, .. } => base.is_closed_form(),
            _ => false,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        match self {
            Marginal::AggregateTail(_) => true,
            Marginal::Transformed { base, .. } => base.is_stochastic(),
            _ => false,
        }
    }

    /// `P(ξ > x)` with the standard error of its estimate.
    pub fn sf(&self, x: f64) -> Evaluation {
        let exact = |value| Evaluation {
            value,
            stderr: 0.0,
            method: EvalMethod::Exact,
        };
        match self {
            Marginal::Uniform => exact((1.0 - x).clamp(0.0, 1.0)),
            Marginal::MixtureSpike { n, gamma } => {
                if x <= 0.0 {
                    return exact(1.0);
                }
                if x >= 1.0 {
                    return exact(0.0);
                }
                let spike = -((gamma * n - 1.0) * x.ln()).exp_m1();
                exact(((1.0 - x) + x * spike / n).clamp(0.0, 1.0))
            }
            Marginal::SymmetricStable { gamma } => exact(symmetric_stable_sf(*gamma, x)),
            Marginal::AggregateTail(pool) => pool.sf(x),
            Marginal::Transformed { base, transform } => base.sf(transform.invert(x)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Uniform => x.clamp(0.0, 1.0),
            Marginal::SymmetricStable { gamma } => symmetric_stable_cdf(*gamma, x),
            Marginal::Transformed { base, transform } => base.cdf(transform.invert(x)),
            _ => 1.0 - self.sf(x).value,
        }
    }

    /// `−ln F(x)`, accurate both where `F` is small and where it is near 1.
    pub fn neg_log_cdf(&self, x: f64) -> Evaluation {
        if let Marginal::Uniform = self {
            return Evaluation {
                value: if x <= 0.0 { f64::INFINITY } else { -x.min(1.0).ln() },
                stderr: 0.0,
                method: EvalMethod::Exact,
            };
        }
        let sf = self.sf(x);
        let value = if sf.value < 0.5 {
            -(-sf.value).ln_1p()
        } else {
            -self.cdf(x).ln()
        };
        // d(−ln(1−p))/dp = 1/(1−p)
        Evaluation {
            value,
            stderr: sf.stderr / (1.0 - sf.value).max(f64::MIN_POSITIVE),
            method: sf.method,
        }
    }

    /// Smallest `x` with `F(x) ≥ e^{-t}`, i.e. `u` with `−ln F(u) = t`.
    pub fn level_for(&self, t: f64) -> Result<f64> {
        let p = -(-t).exp_m1();
        match self {
            Marginal::Uniform => Ok((-t).exp()),
            Marginal::SymmetricStable { gamma } if *gamma == 1.0 => {
                // Cauchy: P(X > x) = atan(1/x)/π
                Ok(1.0 / (std::f64::consts::PI * p).tan())
            }
            Marginal::SymmetricStable { gamma } => {
                // sf(x) = p, searched on x = sinh(y) to cover both tails
                let gamma = *gamma;
                let y = numeric::bisect_increasing_unbounded(
                    |y| -symmetric_stable_sf(gamma, y.sinh()),
                    -750.0,
                    750.0,
                    -p,
                    1e-14,
                )?;
                Ok(y.sinh())
            }
            Marginal::MixtureSpike { .. } => {
                numeric::bisect_increasing(|x| -self.sf(x).value, 0.0, 1.0, -p, 1e-16)
            }
            Marginal::AggregateTail(pool) => {
                // sf ≤ 1 at x = 1; search on ln x
                let y = numeric::bisect_increasing_unbounded(|y| -pool.sf(y.exp()).value, 0.0, 700.0, -p, 1e-13)?;
                Ok(y.exp())
            }
            Marginal::Transformed { base, transform } => Ok(transform.apply(base.level_for(t)?)),
        }
    }

    /// Smallest and largest possible values.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Marginal::Uniform | Marginal::MixtureSpike { .. } => (0.0, 1.0),
            Marginal::SymmetricStable { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Marginal::AggregateTail(_) => (1.0, f64::INFINITY),
            Marginal::Transformed { base, transform } => {
                let (lo, hi) = base.support();
                (transform.apply(lo), transform.apply(hi))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_laplace_matches_series() {
        let (eps, t) = (0.3f64, 0.2f64);
        let series: f64 = (1..2000).map(|k| eps * (1.0 - eps).powi(k - 1) * (-t * k as f64).exp()).sum();
        assert!((geometric_laplace(eps, t) - series).abs() < 1e-14);
    }

    #[test]
    fn closed_form_inverses_roundtrip() {
        for law in [
            SizeLaw::Deterministic(100),
            SizeLaw::Geometric { eps: 0.01 },
            SizeLaw::StableScaled { n: 1e4, beta: 0.5 },
        ] {
            for &s in &[0.05, 0.5, 0.95] {
                let t = law.solve_laplace(s).unwrap();
                assert!((law.laplace(t).value - s).abs() < 1e-12, "{law:?} {s}");
            }
        }
        // ε u / (1 − (1−ε) u) = 0.5 at ε = 0.01 ⇒ u = 0.5/0.505
        let t = SizeLaw::Geometric { eps: 0.01 }.solve_laplace(0.5).unwrap();
        assert!(((-t).exp() - 0.990_099_009_900_990_1).abs() < 1e-15);
    }

    #[test]
    fn pool_inverse_is_found_by_search() {
        let law = SizeLaw::pool(vec![1, 2, 2, 5, 10, 10, 10, 40]);
        if let SizeLaw::Pool { values, total } = &law {
            assert_eq!(*total, 8);
            assert_eq!(values[1], (2, 2));
        }
        let t = law.solve_laplace(0.3).unwrap();
        assert!((law.laplace(t).value - 0.3).abs() < 1e-10);
        assert!(law.laplace(t).stderr > 0.0);
    }

    #[test]
    fn mixture_spike_marginal_inverts() {
        let m = Marginal::MixtureSpike { n: 10.0, gamma: 1.0 };
        let x: f64 = 0.93;
        let f = x * (1.0 + (x.powi(9) - 1.0) / 10.0);
        assert!((m.cdf(x) - f).abs() < 1e-14);
        let u = m.level_for(-(f.ln())).unwrap();
        assert!((u - x).abs() < 1e-12);
    }

    #[test]
    fn cauchy_level_roundtrip() {
        let m = Marginal::SymmetricStable { gamma: 1.0 };
        let u = m.level_for(1e-4).unwrap();
        assert!((m.neg_log_cdf(u).value - 1e-4).abs() < 1e-12);
        let g = Marginal::SymmetricStable { gamma: 1.5 };
        let u = g.level_for(1e-3).unwrap();
        assert!((g.neg_log_cdf(u).value / 1e-3 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn transformed_marginal_commutes_with_levels() {
        let m = Marginal::Transformed {
            base: Box::new(Marginal::Uniform),
            transform: Transform::Cube,
        };
        let u = m.level_for(0.2).unwrap();
        assert!((u - (-0.2f64).exp().powi(3)).abs() < 1e-15);
        assert!((m.cdf(u) - (-0.2f64).exp()).abs() < 1e-14);
    }
}
