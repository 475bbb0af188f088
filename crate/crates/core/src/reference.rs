//! Closed-form extremal functions, indices and limit laws, used as oracles
//! for the Monte Carlo estimates. Everything here is deterministic.

use serde::{Deserialize, Serialize};

use crate::copulas::{partial_indices_archimedean, psi_archimedean, psi_tilted, ArchimedeanGenerator};
use crate::error::{Error, Result};
use crate::numeric;
use crate::sampling::DistributionSpec;
use crate::systems::{EpsilonSchedule, SystemSpec};

/// One printed result per variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceModel {
    /// Gumbel–Hougaard copula with `α_n = 1 + γ/ln n`: `ψ(s) = s^{e^{−γ}}`.
    GumbelHougaardTilt { gamma: f64 },
    /// `ψ(s) = (1 − α ln s)^{−1/α}`.
    Clayton { alpha: f64 },
    /// `ψ(s) = −(1/α) ln(1 − (1 − e^{−α}) s^{α/(e^α − 1)})`.
    Frank { alpha: f64 },
    /// `ψ(s) = f(−ln s / μ)`.
    Archimedean { generator: ArchimedeanGenerator },
    /// `ψ(s) = f(−e^{−γ} ln s / μ)`.
    TiltedArchimedean { generator: ArchimedeanGenerator, gamma: f64 },
    /// Stable series size with a Gumbel–Hougaard copula: `ψ(s) = s^{e^{−γβ}}`,
    /// Definition-2 index `e^{−γ}`.
    StableSizeGumbel { beta: f64, gamma: f64 },
    /// Inverse extremal function `u^{1/(1+γ)} exp(u^{γ/(1+γ)} − 1)`.
    MixtureSpike { gamma: f64 },
    /// `ψ(s) = 0 ∨ (2 − 1/s)`.
    GeometricThreshold,
    /// `ψ(s) = g(f^{−1}(s))`, `f(t) = E ζ/(t+ζ)`, `g(t) = E(ζ − t)₊`.
    RandomThreshold { zeta: DistributionSpec },
    /// `ζ = 1 ± δ` with equal probabilities, in explicit form.
    TwoPointThreshold { delta: f64 },
    /// `θ = 1/(1 + E K)` with `K` Zipf(`β`).
    PowerLawGraph { beta: f64 },
    /// `θ = (1 − a^γ)/(1 − a^γ/μ)`.
    Branching { a: f64, gamma: f64, mu: f64 },
    /// `ψ(s) = s^{1/m}`.
    DuplicatedIid { m: u64 },
}

/// Indices known for a model; `None` where the model has none (or none in
/// closed form).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct IndexSet {
    pub theta_def1: Option<f64>,
    pub theta_def2: Option<f64>,
    pub theta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
    pub theta0: Option<f64>,
    pub theta1: Option<f64>,
}

impl IndexSet {
    fn power(theta: f64) -> Self {
        Self {
            theta_def1: Some(theta),
            theta_def2: Some(theta),
            theta_minus: Some(theta),
            theta_plus: Some(theta),
            theta0: Some(theta),
            theta1: Some(theta),
        }
    }
}

/// `E K = ζ(β−1)/ζ(β)` for `P(K = k) = k^{−β}/ζ(β)`.
pub fn zipf_mean(beta: f64) -> f64 {
    numeric::riemann_zeta(beta - 1.0) / numeric::riemann_zeta(beta)
}

/// Scale `1 + E K` in `F̄(x) ∼ (1 + E K) Ā(x)` for the graph aggregate activity.
pub fn graph_frechet_scale(beta: f64) -> f64 {
    1.0 + zipf_mean(beta)
}

/// `ψ` of the spiked mixture, solving its printed inverse on `y = ln ψ`.
fn mixture_spike_psi(gamma: f64, s: f64) -> f64 {
    let k = 1.0 + gamma;
    let ln_s = s.ln();
    // ln ψ⁻¹(e^y) = y/k + e^{yγ/k} − 1 is increasing in y
    let h = |y: f64| y / k + (y * gamma / k).exp_m1();
    let lo = (k * (ln_s - 1.0)).min(-1.0);
    let y = numeric::bisect_increasing(h, lo, 0.0, ln_s, 1e-15 * lo.abs()).expect("bracketed by construction");
    y.exp()
}

fn threshold_f(zeta: &DistributionSpec, t: f64) -> Option<f64> {
    match *zeta {
        DistributionSpec::Degenerate { c } => Some(c / (t + c)),
        DistributionSpec::TwoPoint { x1, x2, p } => Some(p * x1 / (t + x1) + (1.0 - p) * x2 / (t + x2)),
        DistributionSpec::Exponential { .. } | DistributionSpec::Pareto { .. } => {
            let q = |v: f64| zeta.quantile(v).expect("closed-form quantile");
            Some(numeric::integrate(
                |v| {
                    let x = q(v);
                    if x.is_finite() {
                        x / (t + x)
                    } else {
                        1.0
                    }
                },
                0.0,
                1.0,
                1e-13,
                1e-12,
            ))
        }
        _ => None,
    }
}

/// `E(ζ − t)₊ = ∫_t^∞ F̄_ζ(x) dx`.
fn threshold_g(zeta: &DistributionSpec, t: f64) -> Option<f64> {
    let plus = |x: f64| x.max(0.0);
    match *zeta {
        DistributionSpec::Degenerate { c } => Some(plus(c - t)),
        DistributionSpec::TwoPoint { x1, x2, p } => Some(p * plus(x1 - t) + (1.0 - p) * plus(x2 - t)),
        DistributionSpec::Exponential { rate } => Some((-rate * t.max(0.0)).exp() / rate + plus(-t)),
        DistributionSpec::Pareto { a, x_min } => Some(if t < x_min {
            zeta.mean() - t
        } else {
            x_min.powf(a) * t.powf(1.0 - a) / (a - 1.0)
        }),
        _ => None,
    }
}

/// `f^{−1}(s)` for the decreasing `f(t) = E ζ/(t+ζ)`, searched on `ln t`.
fn threshold_f_inverse(zeta: &DistributionSpec, s: f64) -> Option<f64> {
    threshold_f(zeta, 1.0)?;
    let y = numeric::bisect_increasing_unbounded(
        |y| -threshold_f(zeta, y.exp()).expect("supported law"),
        -700.0,
        700.0,
        -s,
        1e-13,
    )
    .ok()?;
    Some(y.exp())
}

/// Explicit `f^{−1}(s) = (1 + √(1 − 4s(1−s)δ²))/(2s) − 1` for `ζ = 1 ± δ`.
pub fn two_point_f_inverse(delta: f64, s: f64) -> f64 {
    (1.0 + (1.0 - 4.0 * s * (1.0 - s) * delta * delta).sqrt()) / (2.0 * s) - 1.0
}

/// Exact limit extremal function, where the model provides one.
pub fn psi_reference(model: &ReferenceModel, s: f64) -> Option<f64> {
    if !(s > 0.0 && s < 1.0) {
        return None;
    }
    match model {
        ReferenceModel::GumbelHougaardTilt { gamma } => Some(s.powf((-gamma).exp())),
        ReferenceModel::Clayton { alpha } => Some((1.0 - alpha * s.ln()).powf(-1.0 / alpha)),
        ReferenceModel::Frank { alpha } => {
            let e = alpha / alpha.exp_m1();
            Some(-(-(-(-alpha).exp_m1()) * s.powf(e)).ln_1p() / alpha)
        }
        ReferenceModel::Archimedean { generator } => psi_archimedean(generator, s).ok(),
        ReferenceModel::TiltedArchimedean { generator, gamma } => psi_tilted(generator, *gamma, s).ok(),
        ReferenceModel::StableSizeGumbel { beta, gamma } => Some(s.powf((-gamma * beta).exp())),
        ReferenceModel::MixtureSpike { gamma } => Some(mixture_spike_psi(*gamma, s)),
        ReferenceModel::GeometricThreshold => Some((2.0 - 1.0 / s).max(0.0)),
        ReferenceModel::RandomThreshold { zeta } => threshold_g(zeta, threshold_f_inverse(zeta, s)?),
        ReferenceModel::TwoPointThreshold { delta } => {
            let t = two_point_f_inverse(*delta, s);
            Some(0.5 * (1.0 - delta - t).max(0.0) + 0.5 * (1.0 + delta - t).max(0.0))
        }
        ReferenceModel::PowerLawGraph { beta } => Some(s.powf(1.0 / graph_frechet_scale(*beta))),
        ReferenceModel::Branching { .. } => None,
        ReferenceModel::DuplicatedIid { m } => Some(s.powf(1.0 / *m as f64)),
    }
}

/// `θ₁ = 1/E ζ^{−1}` (zero when the moment is infinite).
fn threshold_theta1(zeta: &DistributionSpec) -> Option<f64> {
    Some(match *zeta {
        DistributionSpec::Degenerate { c } => c,
        DistributionSpec::TwoPoint { x1, x2, p } => 1.0 / (p / x1 + (1.0 - p) / x2),
        DistributionSpec::Exponential { .. } => 0.0,
        DistributionSpec::Pareto { a, x_min } => (a + 1.0) * x_min / a,
        _ => return None,
    })
}

/// `θ₀ = α − 1` for a Pareto tail, `+∞` for lighter tails.
fn threshold_theta0(zeta: &DistributionSpec) -> Option<f64> {
    match *zeta {
        DistributionSpec::Pareto { a, .. } => Some(a - 1.0),
        DistributionSpec::Degenerate { .. } | DistributionSpec::TwoPoint { .. } | DistributionSpec::Exponential { .. } => {
            Some(f64::INFINITY)
        }
        _ => None,
    }
}

/// Extrema of `log_s ψ(s)` over a dense grid, joined with the tail limits.
fn scanned_partial_indices(model: &ReferenceModel, theta0: f64, theta1: f64) -> (f64, f64) {
    let mut lo = theta0.min(theta1);
    let mut hi = theta0.max(theta1);
    for k in 1..2000 {
        let s = k as f64 / 2000.0;
        if let Some(p) = psi_reference(model, s) {
            let v = numeric::log_base(s, p);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// The indices the model is known to have.
pub fn theta_reference(model: &ReferenceModel) -> IndexSet {
    match model {
        ReferenceModel::GumbelHougaardTilt { gamma } => IndexSet::power((-gamma).exp()),
        ReferenceModel::Clayton { alpha } => {
            archimedean_indices(&ArchimedeanGenerator::Clayton { alpha: *alpha }, 0.0)
        }
        ReferenceModel::Frank { alpha } => archimedean_indices(&ArchimedeanGenerator::Frank { alpha: *alpha }, 0.0),
        ReferenceModel::Archimedean { generator } => archimedean_indices(generator, 0.0),
        ReferenceModel::TiltedArchimedean { generator, gamma } => archimedean_indices(generator, *gamma),
        ReferenceModel::StableSizeGumbel { beta, gamma } => IndexSet {
            theta_def2: Some((-gamma).exp()),
            ..IndexSet::power((-gamma * beta).exp())
        },
        ReferenceModel::MixtureSpike { gamma } => IndexSet {
            theta_minus: Some(1.0),
            theta_plus: Some(1.0 + gamma),
            theta0: Some(1.0 + gamma),
            theta1: Some(1.0),
            ..IndexSet::default()
        },
        ReferenceModel::GeometricThreshold => IndexSet {
            theta_minus: Some(1.0),
            theta_plus: Some(f64::INFINITY),
            theta0: Some(f64::INFINITY),
            theta1: Some(1.0),
            ..IndexSet::default()
        },
        ReferenceModel::RandomThreshold { zeta } => match (threshold_theta0(zeta), threshold_theta1(zeta)) {
            (Some(t0), Some(t1)) => {
                let (lo, hi) = scanned_partial_indices(model, t0, t1);
                IndexSet {
                    theta_minus: Some(lo),
                    theta_plus: Some(hi),
                    theta0: Some(t0),
                    theta1: Some(t1),
                    ..IndexSet::default()
                }
            }
            _ => IndexSet::default(),
        },
        ReferenceModel::TwoPointThreshold { delta } => {
            let t1 = 1.0 - delta * delta;
            let (lo, hi) = scanned_partial_indices(model, f64::INFINITY, t1);
            IndexSet {
                theta_minus: Some(lo),
                theta_plus: Some(hi),
                theta0: Some(f64::INFINITY),
                theta1: Some(t1),
                ..IndexSet::default()
            }
        }
        ReferenceModel::PowerLawGraph { beta } => IndexSet::power(1.0 / graph_frechet_scale(*beta)),
        ReferenceModel::Branching { a, gamma, mu } => {
            let ag = a.powf(*gamma);
            IndexSet {
                theta_def2: Some((1.0 - ag) / (1.0 - ag / mu)),
                ..IndexSet::default()
            }
        }
        ReferenceModel::DuplicatedIid { m } => IndexSet::power(1.0 / *m as f64),
    }
}

fn archimedean_indices(gen: &ArchimedeanGenerator, gamma: f64) -> IndexSet {
    let Ok((lo, hi)) = partial_indices_archimedean(gen, gamma) else {
        return IndexSet::default();
    };
    let power = (lo == hi).then_some(hi);
    IndexSet {
        theta_def1: power,
        theta_def2: power,
        theta_minus: Some(lo),
        theta_plus: Some(hi),
        theta0: Some(lo),
        theta1: Some(hi),
    }
}

fn is_independence(gen: &ArchimedeanGenerator) -> bool {
    matches!(gen, ArchimedeanGenerator::Independence)
        || matches!(gen, ArchimedeanGenerator::GumbelHougaard { alpha } if *alpha == 1.0)
}

/// The limit model of a system, if one is known in closed form.
pub fn for_system(spec: &SystemSpec) -> Option<ReferenceModel> {
    Some(match spec {
        SystemSpec::ExchangeableCopula { generator, tilt } => match (generator, tilt) {
            (g, Some(gamma)) if is_independence(g) => ReferenceModel::GumbelHougaardTilt { gamma: *gamma },
            (g, None) if is_independence(g) => ReferenceModel::GumbelHougaardTilt { gamma: 0.0 },
            (ArchimedeanGenerator::GumbelHougaard { .. }, _) => return None,
            (ArchimedeanGenerator::Clayton { alpha }, None) => ReferenceModel::Clayton { alpha: *alpha },
            (ArchimedeanGenerator::Frank { alpha }, None) => ReferenceModel::Frank { alpha: *alpha },
            (g, None) => ReferenceModel::Archimedean { generator: *g },
            (g, Some(gamma)) => ReferenceModel::TiltedArchimedean {
                generator: *g,
                gamma: *gamma,
            },
        },
        SystemSpec::StableSizeGumbel { beta, gamma } => ReferenceModel::StableSizeGumbel {
            beta: *beta,
            gamma: *gamma,
        },
        SystemSpec::MixtureSpike { gamma } => ReferenceModel::MixtureSpike { gamma: *gamma },
        // the limit needs ε_n → 0
        SystemSpec::GeometricThreshold { epsilon } => match epsilon {
            EpsilonSchedule::Power { .. } => ReferenceModel::GeometricThreshold,
            EpsilonSchedule::Fixed(_) => return None,
        },
        SystemSpec::RandomThreshold { zeta } => match *zeta {
            DistributionSpec::TwoPoint { x1, x2, p } if p == 0.5 && x1 + x2 == 2.0 && x1 < x2 => {
                ReferenceModel::TwoPointThreshold { delta: 1.0 - x1 }
            }
            _ => ReferenceModel::RandomThreshold { zeta: *zeta },
        },
        SystemSpec::BranchingHeredity {
            offspring, gamma, a, ..
        } => ReferenceModel::Branching {
            a: *a,
            gamma: *gamma,
            mu: offspring.iter().enumerate().map(|(k, p)| (k + 1) as f64 * p).sum(),
        },
        SystemSpec::PowerLawGraph { beta, .. } => ReferenceModel::PowerLawGraph { beta: *beta },
        SystemSpec::DuplicatedIid { m } => ReferenceModel::DuplicatedIid { m: *m },
        SystemSpec::MonotoneTransform { base, .. } | SystemSpec::SizeJitter { base } => return for_system(base),
    })
}

/// Max-stable family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaxStableFamily {
    Gumbel,
    Frechet { alpha: f64 },
    Weibull { alpha: f64 },
}

/// `G((x − location)/scale)` for a max-stable family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxStableLaw {
    pub family: MaxStableFamily,
    pub location: f64,
    pub scale: f64,
}

impl MaxStableLaw {
    pub fn standard(family: MaxStableFamily) -> Self {
        Self {
            family,
            location: 0.0,
            scale: 1.0,
        }
    }

    /// `−ln G(x)`.
    pub fn neg_log_cdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        match self.family {
            MaxStableFamily::Gumbel => (-z).exp(),
            MaxStableFamily::Frechet { alpha } => {
                if z <= 0.0 {
                    f64::INFINITY
                } else {
                    z.powf(-alpha)
                }
            }
            MaxStableFamily::Weibull { alpha } => {
                if z >= 0.0 {
                    0.0
                } else {
                    (-z).powf(alpha)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (-self.neg_log_cdf(x)).exp()
    }
}

/// Mixed max-stable law `H(x) = E G(x)^{θζ} = L_ζ(−θ ln G(x))`.
pub fn mixed_max_stable_cdf(g: &MaxStableLaw, zeta: &DistributionSpec, theta: f64, x: f64) -> Result<f64> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(crate::error::invalid("theta", format!("must be > 0, got {theta}")));
    }
    zeta.validate()?;
    let t = theta * g.neg_log_cdf(x);
    if t.is_infinite() {
        return Ok(0.0);
    }
    zeta.laplace_transform(t)
        .ok_or_else(|| Error::Unsupported(format!("mixing law {zeta:?} must be nonnegative")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::Generator;
    use std::f64::consts::LN_2;

    fn grid() -> Vec<f64> {
        (1..20).map(|k| k as f64 / 20.0).collect()
    }

    #[test]
    fn clayton_and_geometric_threshold_values() {
        let e = (-1.0f64).exp();
        assert!((psi_reference(&ReferenceModel::Clayton { alpha: 1.0 }, e).unwrap() - 0.5).abs() < 1e-15);
        let g = ReferenceModel::GeometricThreshold;
        assert!((psi_reference(&g, 0.8).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(psi_reference(&g, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn frank_closed_form_matches_generator_route() {
        let f = ReferenceModel::Frank { alpha: 2.0 };
        let a = ReferenceModel::Archimedean {
            generator: ArchimedeanGenerator::Frank { alpha: 2.0 },
        };
        for s in grid() {
            assert!((psi_reference(&f, s).unwrap() - psi_reference(&a, s).unwrap()).abs() < 1e-12);
        }
        // mpmath, 30 digits
        assert!((psi_reference(&f, 0.5).unwrap() - 0.5953782531).abs() < 1e-9);
    }

    #[test]
    fn degenerate_threshold_reduces_to_geometric() {
        let m = ReferenceModel::RandomThreshold {
            zeta: DistributionSpec::Degenerate { c: 1.0 },
        };
        for s in grid() {
            let want = (2.0 - 1.0 / s).max(0.0);
            assert!((psi_reference(&m, s).unwrap() - want).abs() < 1e-10, "{s}");
        }
    }

    #[test]
    fn two_point_threshold_explicit_form_agrees() {
        let general = ReferenceModel::RandomThreshold {
            zeta: DistributionSpec::TwoPoint { x1: 0.5, x2: 1.5, p: 0.5 },
        };
        let explicit = ReferenceModel::TwoPointThreshold { delta: 0.5 };
        for k in 1..200 {
            let s = k as f64 / 200.0;
            let a = psi_reference(&general, s).unwrap();
            let b = psi_reference(&explicit, s).unwrap();
            assert!((a - b).abs() < 1e-9, "{s}: {a} vs {b}");
        }
        assert_eq!(psi_reference(&explicit, 0.37).unwrap(), 0.0);
        assert!(psi_reference(&explicit, 0.38).unwrap() > 0.0);
        // mpmath
        assert!((psi_reference(&explicit, 0.95).unwrap() - 0.9600204922).abs() < 1e-9);
        assert!((psi_reference(&explicit, 0.4).unwrap() - 0.0801376).abs() < 1e-6);
    }

    #[test]
    fn mixture_spike_values() {
        let m = ReferenceModel::MixtureSpike { gamma: 1.0 };
        // mpmath bisection on the printed inverse
        for (s, want) in [
            (0.01, 0.000700801632824784),
            (0.05, 0.0145169653798304),
            (0.5, 0.469330416671889),
            (0.9, 0.898741149229851),
            (0.95, 0.949686289270221),
        ] {
            let got = psi_reference(&m, s).unwrap();
            assert!((got - want).abs() < 1e-12 * want, "{s}: {got}");
        }
    }

    #[test]
    fn jensen_bound_and_its_violation() {
        let above = [
            ReferenceModel::Clayton { alpha: 1.0 },
            ReferenceModel::Frank { alpha: 2.0 },
            ReferenceModel::Archimedean {
                generator: ArchimedeanGenerator::Clayton { alpha: 3.0 },
            },
            ReferenceModel::TiltedArchimedean {
                generator: ArchimedeanGenerator::Frank { alpha: 2.0 },
                gamma: LN_2,
            },
            ReferenceModel::GumbelHougaardTilt { gamma: 0.3 },
        ];
        let below = [ReferenceModel::MixtureSpike { gamma: 1.0 }, ReferenceModel::GeometricThreshold];
        for s in grid() {
            for m in &above {
                assert!(psi_reference(m, s).unwrap() >= s - 1e-15, "{m:?} at {s}");
            }
            for m in &below {
                assert!(psi_reference(m, s).unwrap() < s, "{m:?} at {s}");
            }
        }
    }

    #[test]
    fn printed_indices() {
        let t = theta_reference(&ReferenceModel::StableSizeGumbel { beta: 0.5, gamma: LN_2 });
        assert!((t.theta_def1.unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((t.theta_def2.unwrap() - 0.5).abs() < 1e-15);
        let b = theta_reference(&ReferenceModel::Branching { a: 0.5, gamma: 1.0, mu: 2.0 });
        assert!((b.theta_def2.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let g = theta_reference(&ReferenceModel::GeometricThreshold);
        assert_eq!(g.theta_minus, Some(1.0));
        assert_eq!(g.theta_plus, Some(f64::INFINITY));
        assert_eq!(g.theta_def2, None);
        let c = theta_reference(&ReferenceModel::Clayton { alpha: 2.0 });
        assert_eq!((c.theta_minus, c.theta_plus), (Some(0.0), Some(1.0)));
        let f = theta_reference(&ReferenceModel::Frank { alpha: 2.0 });
        assert!((f.theta_minus.unwrap() - 0.3130352854993313).abs() < 1e-15);
    }

    #[test]
    fn graph_index() {
        // mpmath: ζ(2.5)/ζ(3.5) and 1/(1 + E K)
        assert!((zipf_mean(3.5) - 1.1905981494).abs() < 1e-9);
        let t = theta_reference(&ReferenceModel::PowerLawGraph { beta: 3.5 });
        assert!((t.theta_def2.unwrap() - 0.4564963228).abs() < 1e-9);
    }

    #[test]
    fn threshold_tail_exponents() {
        let t = theta_reference(&ReferenceModel::TwoPointThreshold { delta: 0.5 });
        assert_eq!(t.theta0, Some(f64::INFINITY));
        assert_eq!(t.theta1, Some(0.75));
        assert_eq!(t.theta_plus, Some(f64::INFINITY));
        let pareto = ReferenceModel::RandomThreshold {
            zeta: DistributionSpec::Pareto { a: 3.0, x_min: 2.0 / 3.0 },
        };
        let t = theta_reference(&pareto);
        assert_eq!(t.theta0, Some(2.0));
        assert!((t.theta1.unwrap() - 8.0 / 9.0).abs() < 1e-15);
        // the tails of ψ itself approach the exponents
        let near0 = numeric::log_base(1e-6, psi_reference(&pareto, 1e-6).unwrap());
        let near1 = numeric::log_base(1.0 - 1e-6, psi_reference(&pareto, 1.0 - 1e-6).unwrap());
        assert!((near0 - 2.0).abs() < 0.15, "{near0}");
        assert!((near1 - 8.0 / 9.0).abs() < 1e-3, "{near1}");
    }

    #[test]
    fn mixed_law_identities() {
        let frechet = MaxStableLaw::standard(MaxStableFamily::Frechet { alpha: 1.0 });
        let gumbel = MaxStableLaw {
            family: MaxStableFamily::Gumbel,
            location: 0.3,
            scale: 2.0,
        };
        for x in [0.2, 0.7, 1.0, 3.0, 25.0] {
            let h = mixed_max_stable_cdf(&gumbel, &DistributionSpec::Degenerate { c: 2.5 }, 0.4, x).unwrap();
            assert!((h - gumbel.cdf(x).powf(0.4 * 2.5)).abs() < 1e-12);
            let one = mixed_max_stable_cdf(&gumbel, &DistributionSpec::Degenerate { c: 1.0 }, 1.0, x).unwrap();
            assert!((one - gumbel.cdf(x)).abs() < 1e-15);
            let st = mixed_max_stable_cdf(&frechet, &DistributionSpec::PositiveStable { beta: 0.6 }, 1.0, x).unwrap();
            assert!((st - (-x.powf(-0.6)).exp()).abs() < 1e-12);
        }
        assert_eq!(mixed_max_stable_cdf(&frechet, &DistributionSpec::Degenerate { c: 1.0 }, 1.0, -1.0).unwrap(), 0.0);
        assert!(mixed_max_stable_cdf(&frechet, &DistributionSpec::SymmetricStable { gamma: 1.0 }, 1.0, 2.0).is_err());
        assert!(mixed_max_stable_cdf(&frechet, &DistributionSpec::Degenerate { c: 1.0 }, 0.0, 2.0).is_err());
    }

    #[test]
    fn systems_map_to_models() {
        let tilted = SystemSpec::ExchangeableCopula {
            generator: ArchimedeanGenerator::Independence,
            tilt: Some(LN_2),
        };
        assert_eq!(for_system(&tilted), Some(ReferenceModel::GumbelHougaardTilt { gamma: LN_2 }));
        let jitter = SystemSpec::SizeJitter {
            base: Box::new(SystemSpec::ExchangeableCopula {
                generator: ArchimedeanGenerator::Clayton { alpha: 1.0 },
                tilt: None,
            }),
        };
        assert_eq!(for_system(&jitter), Some(ReferenceModel::Clayton { alpha: 1.0 }));
        let two = SystemSpec::RandomThreshold {
            zeta: DistributionSpec::TwoPoint { x1: 0.5, x2: 1.5, p: 0.5 },
        };
        assert_eq!(for_system(&two), Some(ReferenceModel::TwoPointThreshold { delta: 0.5 }));
        let gh = SystemSpec::ExchangeableCopula {
            generator: ArchimedeanGenerator::GumbelHougaard { alpha: 2.0 },
            tilt: None,
        };
        assert_eq!(for_system(&gh), None);
        let fixed = SystemSpec::GeometricThreshold {
            epsilon: EpsilonSchedule::Fixed(0.1),
        };
        assert_eq!(for_system(&fixed), None);
    }

    #[test]
    fn generator_inverse_is_used_for_tilted_models() {
        let m = ReferenceModel::TiltedArchimedean {
            generator: ArchimedeanGenerator::Independence,
            gamma: LN_2,
        };
        assert!((psi_reference(&m, 0.25).unwrap() - 0.5).abs() < 1e-15);
        let g = ArchimedeanGenerator::Clayton { alpha: 1.0 };
        assert!((g.inverse(1.0) - 0.5).abs() < 1e-15);
    }
}
