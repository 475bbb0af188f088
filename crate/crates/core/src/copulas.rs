//! Strict Archimedean copulas: generators, diagonals, frailty sampling and
//! the closed-form extremal functions of exchangeable series.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::sampling::{positive_stable, DistributionSpec, RandomStream};

/// A strict generator `φ` together with its inverse `f = φ⁻¹`, which is the
/// Laplace transform of a positive frailty `ζ`.
pub trait Generator {
    fn phi(&self, t: f64) -> f64;
    fn inverse(&self, u: f64) -> f64;
    fn sample_frailty(&self, stream: &mut RandomStream) -> f64;
}

/// The built-in one-parameter families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArchimedeanGenerator {
    Independence,
    Clayton { alpha: f64 },
    Frank { alpha: f64 },
    GumbelHougaard { alpha: f64 },
}

impl ArchimedeanGenerator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Independence => Ok(()),
            Self::Clayton { alpha } | Self::Frank { alpha } => {
                ensure(alpha.is_finite() && alpha > 0.0, "alpha", || format!("must be > 0, got {alpha}"))
            }
            Self::GumbelHougaard { alpha } => {
                ensure(alpha.is_finite() && alpha >= 1.0, "alpha", || format!("must be >= 1, got {alpha}"))
            }
        }
    }

    /// Law of the frailty `ζ` with `f(u) = E e^{-uζ}`.
    pub fn frailty(&self) -> DistributionSpec {
        match *self {
            Self::Independence => DistributionSpec::Degenerate { c: 1.0 },
            Self::Clayton { alpha } => DistributionSpec::Gamma {
                shape: 1.0 / alpha,
                scale: 1.0,
            },
            Self::Frank { alpha } => DistributionSpec::Logarithmic { p: -(-alpha).exp_m1() },
            Self::GumbelHougaard { alpha: 1.0 } => DistributionSpec::Degenerate { c: 1.0 },
            Self::GumbelHougaard { alpha } => DistributionSpec::PositiveStable { beta: 1.0 / alpha },
        }
    }

    /// `μ = E ζ`; infinite for Gumbel–Hougaard with `α > 1`.
    pub fn mu(&self) -> f64 {
        match *self {
            Self::Independence => 1.0,
            Self::Clayton { alpha } => 1.0 / alpha,
            Self::Frank { alpha } => alpha.exp_m1() / alpha,
            Self::GumbelHougaard { alpha: 1.0 } => 1.0,
            Self::GumbelHougaard { .. } => f64::INFINITY,
        }
    }

    /// Essential infimum of `ζ`.
    pub fn x0(&self) -> f64 {
        match *self {
            Self::Independence | Self::Frank { .. } => 1.0,
            Self::GumbelHougaard { alpha: 1.0 } => 1.0,
            Self::Clayton { .. } | Self::GumbelHougaard { .. } => 0.0,
        }
    }
}

impl Generator for ArchimedeanGenerator {
    fn phi(&self, t: f64) -> f64 {
        match *self {
            Self::Independence => -t.ln(),
            Self::Clayton { alpha } => (-alpha * t.ln()).exp_m1(),
            Self::Frank { alpha } => {
                // -ln((1 - e^{-αt}) / (1 - e^{-α})), arranged to stay accurate near t = 1
                let num = (-alpha).exp() * (alpha * (1.0 - t)).exp_m1();
                -(num / (-alpha).exp_m1()).ln_1p()
            }
            Self::GumbelHougaard { alpha } => (-t.ln()).powf(alpha),
        }
    }

    fn inverse(&self, u: f64) -> f64 {
        match *self {
            Self::Independence => (-u).exp(),
            Self::Clayton { alpha } => (-u.ln_1p() / alpha).exp(),
            // -ln(1 - (1 - e^{-α}) e^{-u}) / α, exact at u = 0
            Self::Frank { alpha } => 1.0 - (alpha.exp_m1() * -(-u).exp_m1()).ln_1p() / alpha,
            Self::GumbelHougaard { alpha } => (-u.powf(1.0 / alpha)).exp(),
        }
    }

    fn sample_frailty(&self, stream: &mut RandomStream) -> f64 {
        self.frailty()
            .sampler()
            .expect("frailty of a validated generator")
            .sample(stream)
    }
}

/// The generator `φ^β` (`β ≥ 1`) built on a base family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltedGenerator {
    pub base: ArchimedeanGenerator,
    pub beta: f64,
}

impl TiltedGenerator {
    pub fn new(base: ArchimedeanGenerator, beta: f64) -> Result<Self> {
        base.validate()?;
        ensure(beta.is_finite() && beta >= 1.0, "beta", || format!("must be >= 1, got {beta}"))?;
        Ok(Self { base, beta })
    }

    /// Uses the schedule `β_n = 1 + γ / ln n`, for which `(β_n − 1) ln n = γ`.
    pub fn for_size(base: ArchimedeanGenerator, gamma: f64, n: u64) -> Result<Self> {
        ensure(gamma.is_finite() && gamma >= 0.0, "gamma", || format!("must be >= 0, got {gamma}"))?;
        ensure(n >= 3, "n", || format!("a tilted generator needs n >= 3, got {n}"))?;
        Self::new(base, tilt_exponent(gamma, n))
    }
}

/// `β_n = 1 + γ / ln n`.
pub fn tilt_exponent(gamma: f64, n: u64) -> f64 {
    1.0 + gamma / (n as f64).ln()
}

impl Generator for TiltedGenerator {
    fn phi(&self, t: f64) -> f64 {
        self.base.phi(t).powf(self.beta)
    }

    fn inverse(&self, u: f64) -> f64 {
        self.base.inverse(u.powf(1.0 / self.beta))
    }

    // ζ^β · S with S positive (1/β)-stable has Laplace transform f(u^{1/β}).
    fn sample_frailty(&self, stream: &mut RandomStream) -> f64 {
        let zeta = self.base.sample_frailty(stream);
        if self.beta == 1.0 {
            return zeta;
        }
        zeta.powf(self.beta) * positive_stable(1.0 / self.beta, stream)
    }
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&x), name, || format!("must lie in [0,1], got {x}"))
}

/// `C(y, …, y) = f(d·φ(y))`, the distribution function of the maximum of
/// `d` exchangeable uniforms.
pub fn diag_cdf<G: Generator + ?Sized>(gen: &G, d: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    gen.inverse(d * gen.phi(y))
}

/// Solves `diag_cdf(gen, d, y) = v` for `y`.
///
/// The diagonal of a strict generator inverts in closed form as
/// `f(φ(v)/d)`; [`diag_inverse_bisect`] is the root-search counterpart.
pub fn diag_inverse<G: Generator + ?Sized>(gen: &G, d: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if v >= 1.0 {
        return 1.0;
    }
    gen.inverse(gen.phi(v) / d)
}

/// Bisection on the monotone diagonal with absolute tolerance `1e-12` in `y`.
pub fn diag_inverse_bisect<G: Generator + ?Sized>(gen: &G, d: f64, v: f64) -> Result<f64> {
    check_unit("v", v)?;
    crate::numeric::bisect_increasing(|y| diag_cdf(gen, d, y), 0.0, 1.0, v, 1e-12)
}

/// `d` coupled uniforms: `ζ` once, then `U_i = f(E_i / ζ)`.
pub fn sample_exchangeable<G: Generator + ?Sized>(gen: &G, d: usize, stream: &mut RandomStream) -> Vec<f64> {
    let zeta = gen.sample_frailty(stream);
    (0..d).map(|_| gen.inverse(stream.exponential() / zeta)).collect()
}

fn finite_mu(gen: &ArchimedeanGenerator) -> Result<f64> {
    gen.validate()?;
    let mu = gen.mu();
    if mu.is_finite() {
        Ok(mu)
    } else {
        Err(Error::Unsupported(format!(
            "{gen:?} has an infinite frailty mean; use the tilted independence construction"
        )))
    }
}

/// `ψ(s) = f(−ln s / μ) = E s^{ζ/μ}` for a finite frailty mean.
pub fn psi_archimedean(gen: &ArchimedeanGenerator, s: f64) -> Result<f64> {
    psi_tilted(gen, 0.0, s)
}

/// `ψ(s) = f(−e^{−γ} ln s / μ)` for the tilted generators `φ^{β_n}` with
/// `(β_n − 1) ln n → γ`.
pub fn psi_tilted(base: &ArchimedeanGenerator, gamma: f64, s: f64) -> Result<f64> {
    let mu = finite_mu(base)?;
    ensure(gamma >= 0.0, "gamma", || format!("must be >= 0, got {gamma}"))?;
    check_unit("s", s)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(base.inverse(-(-gamma).exp() * s.ln() / mu))
}

/// `(θ⁻, θ⁺) = ((x₀/μ) e^{−γ}, e^{−γ})`.
pub fn partial_indices_archimedean(gen: &ArchimedeanGenerator, gamma: f64) -> Result<(f64, f64)> {
    let mu = finite_mu(gen)?;
    ensure(gamma >= 0.0, "gamma", || format!("must be >= 0, got {gamma}"))?;
    let t = (-gamma).exp();
    Ok((gen.x0() / mu * t, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn builtins() -> Vec<ArchimedeanGenerator> {
        vec![
            ArchimedeanGenerator::Independence,
            ArchimedeanGenerator::Clayton { alpha: 1.0 },
            ArchimedeanGenerator::Clayton { alpha: 0.3 },
            ArchimedeanGenerator::Frank { alpha: 2.0 },
            ArchimedeanGenerator::Frank { alpha: 8.0 },
            ArchimedeanGenerator::GumbelHougaard { alpha: 2.0 },
            ArchimedeanGenerator::GumbelHougaard { alpha: 1.0 },
        ]
    }

    #[test]
    fn generator_roundtrip_on_grid() {
        for g in builtins() {
            for i in 1..=100 {
                let t = i as f64 / 100.0;
                assert!((g.inverse(g.phi(t)) - t).abs() < 1e-9, "{g:?} at {t}");
            }
            assert_eq!(g.inverse(0.0), 1.0);
            assert!(g.phi(1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_examples() {
        assert!((ArchimedeanGenerator::Independence.inverse(1.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((ArchimedeanGenerator::Clayton { alpha: 1.0 }.inverse(1.0) - 0.5).abs() < 1e-15);
        let frank = ArchimedeanGenerator::Frank { alpha: 2.0 };
        assert!((frank.mu() - 3.194_528_049_465_325).abs() < 1e-12);
        assert_eq!(frank.x0(), 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ArchimedeanGenerator::Clayton { alpha: 0.0 }.validate().is_err());
        assert!(ArchimedeanGenerator::GumbelHougaard { alpha: 0.5 }.validate().is_err());
        assert!(TiltedGenerator::new(ArchimedeanGenerator::Independence, 0.9).is_err());
        assert!(TiltedGenerator::for_size(ArchimedeanGenerator::Independence, 1.0, 2).is_err());
    }

    #[test]
    fn diagonal_examples() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(diag_cdf(&ArchimedeanGenerator::Independence, 5.0, 0.9), 0.59049));
        assert!(close(diag_cdf(&ArchimedeanGenerator::GumbelHougaard { alpha: 2.0 }, 4.0, 0.9), 0.81));
        assert!(close(diag_cdf(&ArchimedeanGenerator::Clayton { alpha: 1.0 }, 2.0, 0.5), 1.0 / 3.0));
        assert!(close(diag_cdf(&ArchimedeanGenerator::Clayton { alpha: 1.0 }, 100.0, 0.99), 0.497_487_437_185_929_6));
        assert!(close(diag_inverse(&ArchimedeanGenerator::Independence, 10.0, 0.5), 0.933_032_991_536_807_4));
        assert!(close(diag_inverse(&ArchimedeanGenerator::GumbelHougaard { alpha: 2.0 }, 4.0, 0.81), 0.9));
    }

    #[test]
    fn closed_form_inverse_agrees_with_bisection() {
        for g in builtins() {
            for &d in &[1.0, 2.0, 37.0, 1e4] {
                for &v in &[0.01, 0.3, 0.77, 0.999] {
                    let y = diag_inverse(&g, d, v);
                    let yb = diag_inverse_bisect(&g, d, v).unwrap();
                    assert!((y - yb).abs() < 1e-10, "{g:?} d={d} v={v}");
                    assert!((diag_cdf(&g, d, y) - v).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn tilted_generator_roundtrip_and_frailty() {
        let t = TiltedGenerator::new(ArchimedeanGenerator::Clayton { alpha: 1.0 }, 1.7).unwrap();
        for i in 1..=100 {
            let x = i as f64 / 100.0;
            assert!((t.inverse(t.phi(x)) - x).abs() < 1e-9);
        }
        // E e^{-uζ} = f(u) for the composed frailty
        let mut st = RandomStream::new(31, 0);
        let n = 200_000;
        let u = 0.8;
        let ys: Vec<f64> = (0..n).map(|_| (-u * t.sample_frailty(&mut st)).exp()).collect();
        let m = ys.iter().sum::<f64>() / n as f64;
        let sd = (ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((m - t.inverse(u)).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn exchangeable_sampler_matches_product_copula() {
        let mut st = RandomStream::new(32, 0);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let u = sample_exchangeable(&ArchimedeanGenerator::Independence, 2, &mut st);
                u[0] <= 0.3 && u[1] <= 0.7
            })
            .count() as f64
            / n as f64;
        assert!((hits - 0.21).abs() < 3.0 * (0.21f64 * 0.79 / n as f64).sqrt());
    }

    #[test]
    fn exchangeable_max_follows_diagonal() {
        let n = 100_000;
        for g in [
            ArchimedeanGenerator::Clayton { alpha: 1.0 },
            ArchimedeanGenerator::Frank { alpha: 2.0 },
            ArchimedeanGenerator::GumbelHougaard { alpha: 2.0 },
        ] {
            for (k, &d) in [2usize, 10, 100].iter().enumerate() {
                let mut st = RandomStream::new(33, k as u64);
                let y = diag_inverse(&g, d as f64, 0.4);
                let hits = (0..n)
                    .filter(|_| sample_exchangeable(&g, d, &mut st).into_iter().fold(0.0, f64::max) <= y)
                    .count() as f64
                    / n as f64;
                let sigma = (0.4f64 * 0.6 / n as f64).sqrt();
                assert!((hits - 0.4).abs() < 3.0 * sigma, "{g:?} d={d}: {hits}");
            }
        }
    }

    #[test]
    fn exchangeable_marginal_is_uniform() {
        for (k, g) in builtins().into_iter().enumerate() {
            let mut st = RandomStream::new(34, k as u64);
            let xs: Vec<f64> = (0..20_000).map(|_| sample_exchangeable(&g, 3, &mut st)[0]).collect();
            let d = crate::numeric::ks_statistic(&xs, |x| x);
            assert!(crate::numeric::ks_pvalue(d, xs.len()) > 0.01, "{g:?}");
        }
    }

    #[test]
    fn closed_form_extremal_functions() {
        let s = (-1f64).exp();
        assert!((psi_archimedean(&ArchimedeanGenerator::Clayton { alpha: 1.0 }, s).unwrap() - 0.5).abs() < 1e-15);
        assert!((psi_archimedean(&ArchimedeanGenerator::Independence, 0.3).unwrap() - 0.3).abs() < 1e-15);
        let frank = ArchimedeanGenerator::Frank { alpha: 2.0 };
        assert!((psi_archimedean(&frank, 0.5).unwrap() - 0.595_378_253_1).abs() < 1e-9);
        assert!((psi_tilted(&ArchimedeanGenerator::Independence, LN_2, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((psi_tilted(&frank, LN_2, 0.5).unwrap() - 0.747_534_519_5).abs() < 1e-9);
        assert_eq!(psi_tilted(&frank, 0.0, 0.4).unwrap(), psi_archimedean(&frank, 0.4).unwrap());
        assert!(psi_archimedean(&ArchimedeanGenerator::GumbelHougaard { alpha: 2.0 }, 0.5).is_err());
    }

    #[test]
    fn partial_index_examples() {
        for alpha in [0.5, 1.0, 4.0] {
            assert_eq!(
                partial_indices_archimedean(&ArchimedeanGenerator::Clayton { alpha }, 0.0).unwrap(),
                (0.0, 1.0)
            );
        }
        let (lo, hi) = partial_indices_archimedean(&ArchimedeanGenerator::Frank { alpha: 2.0 }, 0.0).unwrap();
        assert!((lo - 0.313_035_285_499_331_3).abs() < 1e-12 && hi == 1.0);
        let (lo, hi) = partial_indices_archimedean(&ArchimedeanGenerator::Independence, LN_2).unwrap();
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 0.5).abs() < 1e-15);
        assert!(partial_indices_archimedean(&ArchimedeanGenerator::GumbelHougaard { alpha: 3.0 }, 0.0).is_err());
    }

    fn finite_mean_generator() -> impl Strategy<Value = ArchimedeanGenerator> {
        prop_oneof![
            Just(ArchimedeanGenerator::Independence),
            (0.05f64..10.0).prop_map(|alpha| ArchimedeanGenerator::Clayton { alpha }),
            (0.05f64..20.0).prop_map(|alpha| ArchimedeanGenerator::Frank { alpha }),
        ]
    }

    proptest! {
        #[test]
        fn psi_sits_between_jensen_bounds(g in finite_mean_generator(), s in 0.001f64..0.999) {
            let psi = psi_archimedean(&g, s).unwrap();
            let upper = s.powf(g.x0() / g.mu());
            prop_assert!(psi >= s - 1e-12);
            prop_assert!(psi <= upper + 1e-12);
        }

        #[test]
        fn diagonal_is_monotone(g in finite_mean_generator(), y in 0.01f64..0.98, d in 1u32..500) {
            let d = d as f64;
            prop_assert!(diag_cdf(&g, d, y) <= diag_cdf(&g, d, y + 0.01) + 1e-15);
            prop_assert!(diag_cdf(&g, d + 1.0, y) <= diag_cdf(&g, d, y) + 1e-15);
        }
    }
}
