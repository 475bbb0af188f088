//! Series-scheme models behind one simulation contract: each system yields
//! replicates `(ν_n, M_n)`, the law of `ν_n`, the marginal law `F_n`, and
//! where available the exact law of `M_n`.

mod branching;
mod graph;
pub mod laws;
mod threshold;

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use laws::{geometric_laplace, AggregateTailPool, EvalMethod, Evaluation, Marginal, SizeLaw};

use crate::copulas::{diag_cdf, diag_inverse, tilt_exponent, ArchimedeanGenerator, Generator, TiltedGenerator};
use crate::error::{ensure, Error, Result};
use crate::sampling::{derive_seed, positive_stable, DistributionSpec, RandomStream, Sampler};
use branching::{Offspring, TreeWalker};
use graph::GraphBuilder;

/// Draws used for frozen size and marginal pools.
pub const POOL_SIZE: usize = 100_000;

const SIZE_POOL_DOMAIN: u64 = 0x5153;
const MARGINAL_POOL_DOMAIN: u64 = 0x4d41;

/// Threshold schedule `ε_n = 1 − a_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonSchedule {
    Fixed(f64),
    /// `ε_n = c·n^{−p}`.
    Power { c: f64, p: f64 },
}

impl EpsilonSchedule {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            EpsilonSchedule::Fixed(e) => e,
            EpsilonSchedule::Power { c, p } => c * (n as f64).powf(-p),
        }
    }
}

/// Strictly increasing map applied to every series member.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Transform {
    Cube,
    Exp,
    Affine { scale: f64, shift: f64 },
}

impl Transform {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Transform::Cube => x * x * x,
            Transform::Exp => x.exp(),
            Transform::Affine { scale, shift } => scale * x + shift,
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        match *self {
            Transform::Cube => y.cbrt(),
            Transform::Exp => y.ln(),
            Transform::Affine { scale, shift } => (y - shift) / scale,
        }
    }
}

fn default_offspring() -> Vec<f64> {
    vec![0.5, 0.0, 0.5]
}

fn default_particle_budget() -> f64 {
    1e6
}

/// Declarative description of a series system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `n` exchangeable uniforms coupled by an Archimedean copula; with
    /// `tilt = γ` the generator is `φ^{β_n}`, `β_n = 1 + γ/ln n`.
    ExchangeableCopula {
        generator: ArchimedeanGenerator,
        #[serde(default)]
        tilt: Option<f64>,
    },
    /// `ν = max(1, round(n·S))`, `S` positive `β`-stable; given `ν` the series
    /// is Gumbel–Hougaard with `α_n = 1 + γ/ln n`.
    StableSizeGumbel { beta: f64, gamma: f64 },
    /// `n` iid uniforms with one member replaced by `η^{1/(γn)}`.
    MixtureSpike { gamma: f64 },
    /// Uniforms observed until one exceeds `a_n = 1 − ε_n`.
    GeometricThreshold { epsilon: EpsilonSchedule },
    /// Uniforms observed until one exceeds the random level `1 − ζ/n`, `E ζ = 1`.
    RandomThreshold { zeta: DistributionSpec },
    /// Scores on a Galton–Watson tree, observed in generation `n`.
    BranchingHeredity {
        #[serde(default = "default_offspring")]
        offspring: Vec<f64>,
        gamma: f64,
        a: f64,
        #[serde(default = "default_particle_budget")]
        particle_budget: f64,
    },
    /// Aggregate Pareto(`a`) activities on a random graph with Zipf(`β`) in-degrees.
    PowerLawGraph { beta: f64, a: f64 },
    /// Each of `⌈n/m⌉` iid uniforms repeated `m` times.
    DuplicatedIid { m: u64 },
    MonotoneTransform { base: Box<SystemSpec>, transform: Transform },
    /// Replaces the deterministic size `l` by `max(1, l + round(√l·Z))`.
    SizeJitter { base: Box<SystemSpec> },
}

impl SystemSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SystemSpec::ExchangeableCopula { .. } => "exchangeable_copula",
            SystemSpec::StableSizeGumbel { .. } => "stable_size_gumbel",
            SystemSpec::MixtureSpike { .. } => "mixture_spike",
            SystemSpec::GeometricThreshold { .. } => "geometric_threshold",
            SystemSpec::RandomThreshold { .. } => "random_threshold",
            SystemSpec::BranchingHeredity { .. } => "branching_heredity",
            SystemSpec::PowerLawGraph { .. } => "power_law_graph",
            SystemSpec::DuplicatedIid { .. } => "duplicated_iid",
            SystemSpec::MonotoneTransform { .. } => "monotone_transform",
            SystemSpec::SizeJitter { .. } => "size_jitter",
        }
    }

    /// One example of every system kind, for discovery.
    pub fn catalog() -> Vec<(SystemSpec, &'static str)> {
        let clayton = SystemSpec::ExchangeableCopula {
            generator: ArchimedeanGenerator::Clayton { alpha: 1.0 },
            tilt: None,
        };
        vec![
            (clayton.clone(), "exchangeable uniforms under an Archimedean copula"),
            (
                SystemSpec::StableSizeGumbel { beta: 0.5, gamma: std::f64::consts::LN_2 },
                "stable random size with a Gumbel-Hougaard copula",
            ),
            (SystemSpec::MixtureSpike { gamma: 1.0 }, "iid uniforms with one spiked member"),
            (
                SystemSpec::GeometricThreshold { epsilon: EpsilonSchedule::Power { c: 1.0, p: 0.5 } },
                "stop at the first uniform above a fixed threshold",
            ),
            (
                SystemSpec::RandomThreshold { zeta: DistributionSpec::TwoPoint { x1: 0.5, x2: 1.5, p: 0.5 } },
                "stop at the first uniform above a random threshold",
            ),
            (
                SystemSpec::BranchingHeredity {
                    offspring: default_offspring(),
                    gamma: 1.0,
                    a: 0.5,
                    particle_budget: default_particle_budget(),
                },
                "hereditary stable scores on a Galton-Watson tree",
            ),
            (SystemSpec::PowerLawGraph { beta: 3.5, a: 1.0 }, "aggregate activity on a power-law graph"),
            (SystemSpec::DuplicatedIid { m: 2 }, "iid uniforms each repeated m times"),
            (
                SystemSpec::MonotoneTransform { base: Box::new(clayton.clone()), transform: Transform::Cube },
                "a base system with every member mapped by an increasing function",
            ),
            (SystemSpec::SizeJitter { base: Box::new(clayton) }, "a base system with a jittered series size"),
        ]
    }
}

/// Which quantities a system provides without simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Capabilities {
    pub has_exact_mean_f_pow_nu: bool,
    pub has_exact_max_cdf: bool,
}

/// One simulated series: its size and its maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Replicate {
    pub nu: u64,
    pub max: f64,
}

/// A validated, simulatable series system.
#[derive(Clone, Debug)]
pub struct SeriesSystem {
    spec: SystemSpec,
    base: Option<Box<SeriesSystem>>,
    offspring: Option<Offspring>,
    warnings: Vec<String>,
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    ensure(x.is_finite() && x > 0.0, name, || format!("must be > 0, got {x}"))
}

/// Validates a specification and builds the system.
pub fn build_system(spec: &SystemSpec) -> Result<SeriesSystem> {
    let mut warnings = Vec::new();
    let mut offspring = None;
    let mut base = None;
    match spec {
        SystemSpec::ExchangeableCopula { generator, tilt } => {
            generator.validate()?;
            if let Some(g) = tilt {
                ensure(g.is_finite() && *g >= 0.0, "tilt", || format!("must be >= 0, got {g}"))?;
            }
        }
        SystemSpec::StableSizeGumbel { beta, gamma } => {
            ensure(*beta > 0.0 && *beta < 1.0, "beta", || format!("must lie in (0,1), got {beta}"))?;
            positive("gamma", *gamma)?;
        }
        SystemSpec::MixtureSpike { gamma } => positive("gamma", *gamma)?,
        SystemSpec::GeometricThreshold { epsilon } => match *epsilon {
            EpsilonSchedule::Fixed(e) => {
                ensure(e > 0.0 && e < 1.0, "epsilon", || format!("must lie in (0,1), got {e}"))?
            }
            EpsilonSchedule::Power { c, p } => {
                positive("epsilon.c", c)?;
                positive("epsilon.p", p)?;
            }
        },
        SystemSpec::RandomThreshold { zeta } => threshold::validate_zeta(zeta)?,
        SystemSpec::BranchingHeredity { offspring: probs, gamma, a, particle_budget } => {
            ensure(*gamma > 0.0 && *gamma < 2.0, "gamma", || format!("must lie in (0,2), got {gamma}"))?;
            ensure(*a > 0.0 && *a < 1.0, "a", || format!("must lie in (0,1), got {a}"))?;
            positive("particle_budget", *particle_budget)?;
            offspring = Some(Offspring::new(probs)?);
        }
        SystemSpec::PowerLawGraph { beta, a } => {
            ensure(beta.is_finite() && *beta > 2.0, "beta", || format!("must be > 2, got {beta}"))?;
            positive("a", *a)?;
            let bound = if *beta < 3.0 { beta - 2.0 } else { (beta - 1.0) / 2.0 };
            if *a >= bound {
                warnings.push(format!(
                    "activity index a = {a} is not below {bound}; the max-stable limit of the aggregate maximum may fail"
                ));
            }
        }
        SystemSpec::DuplicatedIid { m } => ensure(*m >= 2, "m", || format!("must be >= 2, got {m}"))?,
        SystemSpec::MonotoneTransform { base: b, transform } => {
            if let Transform::Affine { scale, shift } = transform {
                positive("transform.scale", *scale)?;
                ensure(shift.is_finite(), "transform.shift", || "must be finite".into())?;
            }
            let built = build_system(b)?;
            warnings.extend(built.warnings.iter().cloned());
            base = Some(Box::new(built));
        }
        SystemSpec::SizeJitter { base: b } => {
            let built = build_system(b)?;
            ensure(built.deterministic_size(), "base", || {
                format!("size jitter needs a base with deterministic size, got {}", b.kind_name())
            })?;
            ensure(built.supports_given_size(), "base", || {
                format!("{} cannot be simulated at an arbitrary size", b.kind_name())
            })?;
            warnings.extend(built.warnings.iter().cloned());
            base = Some(Box::new(built));
        }
    }
    Ok(SeriesSystem {
        spec: spec.clone(),
        base,
        offspring,
        warnings,
    })
}

impl SeriesSystem {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// Non-fatal remarks raised during validation.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn base(&self) -> &SeriesSystem {
        self.base.as_deref().expect("wrapper systems carry a base")
    }

    fn deterministic_size(&self) -> bool {
        match &self.spec {
            SystemSpec::ExchangeableCopula { .. }
            | SystemSpec::MixtureSpike { .. }
            | SystemSpec::PowerLawGraph { .. }
            | SystemSpec::DuplicatedIid { .. } => true,
            SystemSpec::MonotoneTransform { .. } => self.base().deterministic_size(),
            _ => false,
        }
    }

    fn supports_given_size(&self) -> bool {
        match &self.spec {
            SystemSpec::ExchangeableCopula { .. } | SystemSpec::MixtureSpike { .. } | SystemSpec::DuplicatedIid { .. } => {
                true
            }
            SystemSpec::MonotoneTransform { .. } => self.base().supports_given_size(),
            _ => false,
        }
    }

    pub fn capabilities(&self) -> Capabilities {
        let exact_max = match &self.spec {
            SystemSpec::ExchangeableCopula { .. }
            | SystemSpec::MixtureSpike { .. }
            | SystemSpec::GeometricThreshold { .. }
            | SystemSpec::DuplicatedIid { .. } => true,
            SystemSpec::MonotoneTransform { .. } => self.base().capabilities().has_exact_max_cdf,
            _ => false,
        };
        let exact_mean = match &self.spec {
            SystemSpec::StableSizeGumbel { .. } | SystemSpec::RandomThreshold { .. } => true,
            SystemSpec::MonotoneTransform { .. } => self.base().capabilities().has_exact_mean_f_pow_nu,
            _ => exact_max,
        };
        Capabilities {
            has_exact_mean_f_pow_nu: exact_mean,
            has_exact_max_cdf: exact_max,
        }
    }

    /// Smallest admissible `n`.
    pub fn min_n(&self) -> u64 {
        match &self.spec {
            SystemSpec::ExchangeableCopula { tilt: Some(_), .. } | SystemSpec::StableSizeGumbel { .. } => 3,
            SystemSpec::MonotoneTransform { .. } | SystemSpec::SizeJitter { .. } => self.base().min_n(),
            _ => 2,
        }
    }

    /// Rejects `n` outside the model's range or resource budget.
    pub fn check_n(&self, n: u64) -> Result<()> {
        let min = self.min_n();
        ensure(n >= min, "n", || format!("must be >= {min} for {}, got {n}", self.spec.kind_name()))?;
        match &self.spec {
            SystemSpec::GeometricThreshold { epsilon } => {
                let e = epsilon.at(n);
                ensure(e > 0.0 && e < 1.0, "epsilon", || format!("ε_n = {e} at n = {n} must lie in (0,1)"))
            }
            SystemSpec::BranchingHeredity { particle_budget, .. } => {
                let mu = self.offspring.as_ref().expect("branching offspring").mean();
                let expected = mu.powf(n as f64);
                if expected > *particle_budget {
                    Err(Error::Budget(format!(
                        "expected generation size {expected:.3e} at n = {n} exceeds the particle budget {particle_budget:.3e}"
                    )))
                } else {
                    Ok(())
                }
            }
            SystemSpec::PowerLawGraph { .. } => {
                ensure(n <= u32::MAX as u64, "n", || "graph size must fit in 32 bits".into())
            }
            SystemSpec::MonotoneTransform { .. } | SystemSpec::SizeJitter { .. } => self.base().check_n(n),
            _ => Ok(()),
        }
    }

    fn copula_generator(&self, n: u64) -> Result<CopulaGenerator> {
        match &self.spec {
            SystemSpec::ExchangeableCopula { generator, tilt: None } => Ok(CopulaGenerator::Plain(*generator)),
            SystemSpec::ExchangeableCopula { generator, tilt: Some(g) } => {
                Ok(CopulaGenerator::Tilted(TiltedGenerator::for_size(*generator, *g, n)?))
            }
            _ => unreachable!("copula systems only"),
        }
    }

    /// Law of the series size `ν_n`. Pools are drawn from streams derived from `seed`.
    pub fn size_law(&self, n: u64, seed: u64) -> Result<SizeLaw> {
        self.check_n(n)?;
        Ok(match &self.spec {
            SystemSpec::ExchangeableCopula { .. }
            | SystemSpec::MixtureSpike { .. }
            | SystemSpec::PowerLawGraph { .. }
            | SystemSpec::DuplicatedIid { .. } => SizeLaw::Deterministic(n),
            SystemSpec::StableSizeGumbel { beta, .. } => SizeLaw::StableScaled {
                n: n as f64,
                beta: *beta,
            },
            SystemSpec::GeometricThreshold { epsilon } => SizeLaw::Geometric { eps: epsilon.at(n) },
            SystemSpec::RandomThreshold { zeta } => SizeLaw::GeometricMixture {
                nodes: threshold::threshold_nodes(zeta, n as f64)?,
            },
            SystemSpec::BranchingHeredity { .. } => {
                let law = self.offspring.as_ref().expect("branching offspring");
                let mut stream = RandomStream::new(derive_seed(seed, SIZE_POOL_DOMAIN), 0);
                SizeLaw::pool((0..POOL_SIZE).map(|_| law.generation_size(n, &mut stream)).collect())
            }
            SystemSpec::MonotoneTransform { .. } => self.base().size_law(n, seed)?,
            SystemSpec::SizeJitter { .. } => {
                let l = self.base().size_law(n, seed)?.is_deterministic().expect("validated deterministic base");
                let mut stream = RandomStream::new(derive_seed(seed, SIZE_POOL_DOMAIN), 0);
                SizeLaw::pool((0..POOL_SIZE).map(|_| jittered_size(l, &mut stream)).collect())
            }
        })
    }

    /// Marginal law `F_n`. The graph tail is a conditional Monte Carlo pool
    /// drawn from a stream derived from `seed`.
    pub fn marginal(&self, n: u64, seed: u64) -> Result<Marginal> {
        self.check_n(n)?;
        Ok(match &self.spec {
            SystemSpec::MixtureSpike { gamma } => Marginal::MixtureSpike {
                n: n as f64,
                gamma: *gamma,
            },
            SystemSpec::BranchingHeredity { gamma, .. } => Marginal::SymmetricStable { gamma: *gamma },
            SystemSpec::PowerLawGraph { beta, a } => {
                let mut stream = RandomStream::new(derive_seed(seed, MARGINAL_POOL_DOMAIN), 0);
                Marginal::AggregateTail(Arc::new(graph::aggregate_tail_pool(
                    n as usize,
                    *beta,
                    *a,
                    POOL_SIZE,
                    &mut stream,
                )))
            }
            SystemSpec::MonotoneTransform { transform, .. } => Marginal::Transformed {
                base: Box::new(self.base().marginal(n, seed)?),
                transform: *transform,
            },
            SystemSpec::SizeJitter { .. } => self.base().marginal(n, seed)?,
            _ => Marginal::Uniform,
        })
    }

    /// Evaluator of `E F_n(u)^{r·ν_n}` with its size and marginal laws built once.
    pub fn power_mean(&self, n: u64, seed: u64) -> Result<PowerMean> {
        Ok(PowerMean {
            size: self.size_law(n, seed)?,
            marginal: self.marginal(n, seed)?,
        })
    }

    /// `E F_n(u)^{r·ν_n}`.
    pub fn mean_f_pow_nu(&self, n: u64, u: f64, r: f64, seed: u64) -> Result<Evaluation> {
        ensure(r >= 0.0, "r", || format!("must be >= 0, got {r}"))?;
        Ok(self.power_mean(n, seed)?.eval(u, r))
    }

    /// Exact finite-`n` law of the maximum, `P(M_n ≤ u)`.
    pub fn exact_max_cdf(&self, n: u64, u: f64) -> Result<f64> {
        self.check_n(n)?;
        if !self.capabilities().has_exact_max_cdf {
            return Err(Error::Unsupported(format!(
                "{} has no exact law for the maximum",
                self.spec.kind_name()
            )));
        }
        Ok(match &self.spec {
            SystemSpec::ExchangeableCopula { .. } => diag_cdf(&self.copula_generator(n)?, n as f64, u),
            SystemSpec::MixtureSpike { gamma } => {
                if u <= 0.0 {
                    0.0
                } else {
                    u.min(1.0).powf((1.0 + gamma) * n as f64 - 1.0)
                }
            }
            SystemSpec::GeometricThreshold { epsilon } => {
                let e = epsilon.at(n);
                (1.0 - (1.0 - u) / e).clamp(0.0, 1.0)
            }
            SystemSpec::DuplicatedIid { m } => {
                if u <= 0.0 {
                    0.0
                } else {
                    u.min(1.0).powf(n.div_ceil(*m) as f64)
                }
            }
            SystemSpec::MonotoneTransform { transform, .. } => self.base().exact_max_cdf(n, transform.invert(u))?,
            _ => unreachable!("capability checked"),
        })
    }

    /// Range of values the series members can take.
    pub fn support(&self) -> (f64, f64) {
        match &self.spec {
            SystemSpec::BranchingHeredity { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            SystemSpec::PowerLawGraph { .. } => (1.0, f64::INFINITY),
            SystemSpec::MonotoneTransform { transform, .. } => {
                let (lo, hi) = self.base().support();
                (transform.apply(lo), transform.apply(hi))
            }
            SystemSpec::SizeJitter { .. } => self.base().support(),
            _ => (0.0, 1.0),
        }
    }

    /// A sampler of independent replicates at size index `n`.
    pub fn replicate_sampler(&self, n: u64) -> Result<ReplicateSampler> {
        self.check_n(n)?;
        Ok(ReplicateSampler {
            kind: self.sampler_kind(n)?,
        })
    }

    fn sampler_kind(&self, n: u64) -> Result<SamplerKind> {
        Ok(match &self.spec {
            SystemSpec::ExchangeableCopula { .. } => SamplerKind::Copula {
                gen: self.copula_generator(n)?,
                n,
            },
            SystemSpec::StableSizeGumbel { beta, gamma } => SamplerKind::StableSize {
                beta: *beta,
                alpha: tilt_exponent(*gamma, n),
                n,
            },
            SystemSpec::MixtureSpike { gamma } => SamplerKind::Spike { gamma: *gamma, n },
            SystemSpec::GeometricThreshold { epsilon } => SamplerKind::Geometric { eps: epsilon.at(n) },
            SystemSpec::RandomThreshold { zeta } => SamplerKind::Threshold {
                zeta: zeta.sampler()?,
                n: n as f64,
            },
            SystemSpec::BranchingHeredity { gamma, a, .. } => SamplerKind::Branching(TreeWalker::new(
                self.offspring.clone().expect("branching offspring"),
                *a,
                *gamma,
                n,
            )),
            SystemSpec::PowerLawGraph { beta, a } => SamplerKind::Graph(GraphBuilder::new(n as usize, *beta, *a)),
            SystemSpec::DuplicatedIid { m } => SamplerKind::Duplicated { m: *m, n },
            SystemSpec::MonotoneTransform { transform, .. } => SamplerKind::Transform {
                inner: Box::new(self.base().sampler_kind(n)?),
                transform: *transform,
            },
            SystemSpec::SizeJitter { .. } => SamplerKind::Jitter {
                inner: Box::new(self.base().sampler_kind(n)?),
                l: n,
            },
        })
    }

    /// Offspring mean for the branching system.
    pub fn offspring_mean(&self) -> Option<f64> {
        self.offspring.as_ref().map(Offspring::mean)
    }
}

fn jittered_size(l: u64, stream: &mut RandomStream) -> u64 {
    let z: f64 = StandardNormal.sample(stream);
    let v = l as f64 + ((l as f64).sqrt() * z).round();
    if v < 1.0 {
        1
    } else {
        v as u64
    }
}

/// `E F_n(u)^{r·ν_n}` with frozen laws.
#[derive(Clone, Debug)]
pub struct PowerMean {
    pub size: SizeLaw,
    pub marginal: Marginal,
}

impl PowerMean {
    pub fn method(&self) -> EvalMethod {
        if self.marginal.is_stochastic() {
            EvalMethod::MonteCarlo
        } else {
            self.size.method()
        }
    }

    pub fn eval(&self, u: f64, r: f64) -> Evaluation {
        self.eval_neg_log(self.marginal.neg_log_cdf(u), r)
    }

    /// Same as [`PowerMean::eval`] from a precomputed `−ln F(u)`.
    pub fn eval_neg_log(&self, neg_log_f: Evaluation, r: f64) -> Evaluation {
        let t = r * neg_log_f.value;
        let base = self.size.laplace(t);
        let mut stderr = base.stderr;
        if neg_log_f.stderr > 0.0 {
            let h = (1e-6 * t).max(1e-300);
            let slope = (self.size.laplace(t + h).value - base.value) / h;
            stderr = stderr.hypot(slope * r * neg_log_f.stderr);
        }
        Evaluation {
            value: base.value,
            stderr,
            method: self.method(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum CopulaGenerator {
    Plain(ArchimedeanGenerator),
    Tilted(TiltedGenerator),
}

impl Generator for CopulaGenerator {
    fn phi(&self, t: f64) -> f64 {
        match self {
            CopulaGenerator::Plain(g) => g.phi(t),
            CopulaGenerator::Tilted(g) => g.phi(t),
        }
    }

    fn inverse(&self, u: f64) -> f64 {
        match self {
            CopulaGenerator::Plain(g) => g.inverse(u),
            CopulaGenerator::Tilted(g) => g.inverse(u),
        }
    }

    fn sample_frailty(&self, stream: &mut RandomStream) -> f64 {
        match self {
            CopulaGenerator::Plain(g) => g.sample_frailty(stream),
            CopulaGenerator::Tilted(g) => g.sample_frailty(stream),
        }
    }
}

/// Draws replicates `(ν_n, M_n)`; holds scratch buffers, so keep one per worker.
#[derive(Clone, Debug)]
pub struct ReplicateSampler {
    kind: SamplerKind,
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Copula { gen: CopulaGenerator, n: u64 },
    StableSize { beta: f64, alpha: f64, n: u64 },
    Spike { gamma: f64, n: u64 },
    Geometric { eps: f64 },
    Threshold { zeta: Sampler, n: f64 },
    Branching(TreeWalker),
    Graph(GraphBuilder),
    Duplicated { m: u64, n: u64 },
    Transform { inner: Box<SamplerKind>, transform: Transform },
    Jitter { inner: Box<SamplerKind>, l: u64 },
}

/// `V^{1/k}`: the maximum of `k` iid uniforms.
#[inline]
fn max_of_uniforms(k: f64, stream: &mut RandomStream) -> f64 {
    (stream.open_uniform().ln() / k).exp()
}

impl SamplerKind {
    fn sample(&mut self, stream: &mut RandomStream) -> Replicate {
        match self {
            SamplerKind::Copula { gen, n } => Replicate {
                nu: *n,
                max: diag_inverse(gen, *n as f64, stream.open_uniform()),
            },
            SamplerKind::StableSize { beta, alpha, n } => {
                let s = positive_stable(*beta, stream);
                let scaled = (*n as f64 * s).round();
                let nu = if scaled < 1.0 {
                    1
                } else if scaled >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    scaled as u64
                };
                // Gumbel–Hougaard diagonal inverse: v^{ν^{-1/α}}
                let max = (stream.open_uniform().ln() * (nu as f64).powf(-1.0 / *alpha)).exp();
                Replicate { nu, max }
            }
            SamplerKind::Spike { gamma, n } => Replicate {
                nu: *n,
                max: Self::spike_max(*gamma, *n, *n, stream),
            },
            SamplerKind::Geometric { eps } => {
                let nu = threshold::geometric1(*eps, stream);
                Replicate {
                    nu,
                    max: 1.0 - *eps * stream.open_uniform(),
                }
            }
            SamplerKind::Threshold { zeta, n } => {
                let eps = threshold::sample_zeta_below(zeta, *n, stream) / *n;
                let nu = threshold::geometric1(eps, stream);
                Replicate {
                    nu,
                    max: 1.0 - eps * stream.open_uniform(),
                }
            }
            SamplerKind::Branching(walker) => {
                let (nu, max) = walker.sample(stream);
                Replicate { nu, max }
            }
            SamplerKind::Graph(builder) => {
                let max = builder.sample_max(stream);
                Replicate {
                    nu: builder.size() as u64,
                    max,
                }
            }
            SamplerKind::Duplicated { m, n } => Replicate {
                nu: *n,
                max: max_of_uniforms(n.div_ceil(*m) as f64, stream),
            },
            SamplerKind::Transform { inner, transform } => {
                let r = inner.sample(stream);
                Replicate {
                    nu: r.nu,
                    max: transform.apply(r.max),
                }
            }
            SamplerKind::Jitter { inner, l } => {
                let nu = jittered_size(*l, stream);
                let max = inner.sample_with_size(nu, stream).expect("validated base");
                Replicate { nu, max }
            }
        }
    }

    /// Largest of `d − 1` uniforms and one spike `η^{1/(γn)}`.
    fn spike_max(gamma: f64, n: u64, d: u64, stream: &mut RandomStream) -> f64 {
        let rest = if d > 1 {
            max_of_uniforms((d - 1) as f64, stream)
        } else {
            0.0
        };
        rest.max(max_of_uniforms(gamma * n as f64, stream))
    }

    /// The maximum when the series has `d` members instead of its usual size.
    fn sample_with_size(&mut self, d: u64, stream: &mut RandomStream) -> Option<f64> {
        match self {
            SamplerKind::Copula { gen, .. } => Some(diag_inverse(gen, d as f64, stream.open_uniform())),
            SamplerKind::Spike { gamma, n } => Some(Self::spike_max(*gamma, *n, d, stream)),
            SamplerKind::Duplicated { m, .. } => Some(max_of_uniforms(d.div_ceil(*m) as f64, stream)),
            SamplerKind::Transform { inner, transform } => inner.sample_with_size(d, stream).map(|x| transform.apply(x)),
            _ => None,
        }
    }
}

impl ReplicateSampler {
    pub fn sample(&mut self, stream: &mut RandomStream) -> Replicate {
        self.kind.sample(stream)
    }
}

/// One replicate drawn from a fresh sampler (convenience for tests and tools).
pub fn sample_replicate(sys: &SeriesSystem, n: u64, stream: &mut RandomStream) -> Result<Replicate> {
    Ok(sys.replicate_sampler(n)?.sample(stream))
}
