//! Galton–Watson trees carrying autoregressive scores: a child scores
//! `a·(parent score) + b·ξ*` with symmetric strictly `γ`-stable `ξ*` and
//! `a^γ + b^γ = 1`, so every generation has the innovation law as marginal.

use rand_distr::{Binomial, Distribution};

use crate::error::{ensure, Result};
use crate::sampling::{symmetric_stable, RandomStream};

/// Validated offspring law on `{1, 2, …}`.
#[derive(Clone, Debug)]
pub(crate) struct Offspring {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Offspring {
    pub(crate) fn new(probs: &[f64]) -> Result<Self> {
        ensure(!probs.is_empty(), "offspring", || "must list P(1), P(2), …".into())?;
        ensure(probs.iter().all(|p| p.is_finite() && *p >= 0.0), "offspring", || {
            "probabilities must be nonnegative".into()
        })?;
        let total: f64 = probs.iter().sum();
        ensure((total - 1.0).abs() <= 1e-9, "offspring", || format!("probabilities sum to {total}, not 1"))?;
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        let law = Self {
            probs: probs.iter().map(|p| p / total).collect(),
            cumulative,
        };
        let mu = law.mean();
        ensure(mu > 1.0, "offspring", || format!("mean must exceed 1, got {mu}"))?;
        Ok(law)
    }

    pub(crate) fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| (k + 1) as f64 * p).sum()
    }

    #[inline]
    fn sample(&self, stream: &mut RandomStream) -> usize {
        let u = stream.uniform();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1) + 1
    }

    /// Size of the next generation from `z` parents (multinomial split by
    /// sequential binomials).
    fn next_generation(&self, z: u64, stream: &mut RandomStream) -> u64 {
        let mut remaining = z;
        let mut rest = 1.0;
        let mut total = 0u64;
        for (k, &p) in self.probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let count = if k + 1 == self.probs.len() || p >= rest {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                Binomial::new(remaining, (p / rest).min(1.0))
                    .expect("valid binomial")
                    .sample(stream)
            };
            total = total.saturating_add((k as u64 + 1).saturating_mul(count));
            remaining -= count;
            rest -= p;
        }
        total
    }

    /// `Z_n` started from a single ancestor.
    pub(crate) fn generation_size(&self, n: u64, stream: &mut RandomStream) -> u64 {
        (0..n).fold(1u64, |z, _| self.next_generation(z, stream))
    }
}

/// Reusable buffers for walking one tree.
#[derive(Clone, Debug)]
pub(crate) struct TreeWalker {
    offspring: Offspring,
    a: f64,
    b: f64,
    gamma: f64,
    generations: u64,
    current: Vec<f64>,
    next: Vec<f64>,
}

impl TreeWalker {
    pub(crate) fn new(offspring: Offspring, a: f64, gamma: f64, generations: u64) -> Self {
        Self {
            offspring,
            a,
            b: (1.0 - a.powf(gamma)).powf(1.0 / gamma),
            gamma,
            generations,
            current: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Returns `(Z_n, max score in generation n)`.
    pub(crate) fn sample(&mut self, stream: &mut RandomStream) -> (u64, f64) {
        self.current.clear();
        self.current.push(symmetric_stable(self.gamma, stream));
        for g in 1..=self.generations {
            let last = g == self.generations;
            self.next.clear();
            let mut count = 0u64;
            let mut max = f64::NEG_INFINITY;
            for &parent in &self.current {
                for _ in 0..self.offspring.sample(stream) {
                    let score = self.a * parent + self.b * symmetric_stable(self.gamma, stream);
                    if last {
                        count += 1;
                        max = max.max(score);
                    } else {
                        self.next.push(score);
                    }
                }
            }
            if last {
                return (count, max);
            }
            std::mem::swap(&mut self.current, &mut self.next);
        }
        // zero generations: the root alone
        (1, self.current[0])
    }

    /// Scores of the final generation (used to check the stationary marginal).
    #[cfg(test)]
    fn last_generation(&mut self, stream: &mut RandomStream) -> Vec<f64> {
        self.current.clear();
        self.current.push(symmetric_stable(self.gamma, stream));
        for _ in 0..self.generations {
            self.next.clear();
            for &parent in &self.current {
                for _ in 0..self.offspring.sample(stream) {
                    self.next.push(self.a * parent + self.b * symmetric_stable(self.gamma, stream));
                }
            }
            std::mem::swap(&mut self.current, &mut self.next);
        }
        self.current.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric;
    use crate::sampling::symmetric_stable_cdf;

    fn binary_or_ternary() -> Offspring {
        Offspring::new(&[0.5, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn offspring_validation() {
        assert!(Offspring::new(&[1.0]).is_err());
        assert!(Offspring::new(&[0.5, 0.6]).is_err());
        assert!((binary_or_ternary().mean() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn generation_sizes_have_mean_mu_to_the_n() {
        let law = binary_or_ternary();
        let mut st = RandomStream::new(51, 0);
        let reps = 20_000;
        let zs: Vec<f64> = (0..reps).map(|_| law.generation_size(6, &mut st) as f64).collect();
        let m = zs.iter().sum::<f64>() / reps as f64;
        let v = zs.iter().map(|z| (z - m).powi(2)).sum::<f64>() / reps as f64;
        assert!((m - 64.0).abs() < 4.0 * (v / reps as f64).sqrt(), "{m}");
    }

    #[test]
    fn tree_walk_agrees_with_binomial_recursion() {
        let mut walker = TreeWalker::new(binary_or_ternary(), 0.5, 1.0, 5);
        let law = binary_or_ternary();
        let reps = 10_000;
        let mut st = RandomStream::new(52, 0);
        let walked: Vec<f64> = (0..reps).map(|_| walker.sample(&mut st).0 as f64).collect();
        let recursed: Vec<f64> = (0..reps).map(|_| law.generation_size(5, &mut st) as f64).collect();
        let d = numeric::ks_two_sample(&walked, &recursed);
        assert!(numeric::ks_two_sample_pvalue(d, reps, reps) > 0.001);
    }

    #[test]
    fn scores_keep_the_cauchy_marginal() {
        let mut walker = TreeWalker::new(binary_or_ternary(), 0.5, 1.0, 8);
        let mut st = RandomStream::new(53, 0);
        // one score per tree keeps the sample independent
        let xs: Vec<f64> = (0..5_000)
            .map(|_| {
                let g = walker.last_generation(&mut st);
                g[st.below(g.len() as u64) as usize]
            })
            .collect();
        let d = numeric::ks_statistic(&xs, |x| symmetric_stable_cdf(1.0, x));
        assert!(numeric::ks_pvalue(d, xs.len()) > 0.01);
    }
}
