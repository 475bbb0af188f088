//! Directed random graph with power-law in-degrees: vertex `i` receives edges
//! from `D_i = min(K_i, n−1)` distinct other vertices chosen uniformly, and
//! its aggregate activity is its own Pareto activity plus those of its
//! in-neighbours.

use rand_distr::{Distribution, Zeta};

use super::laws::AggregateTailPool;
use crate::sampling::RandomStream;

/// Reusable state for building graphs on `n` vertices.
#[derive(Clone, Debug)]
pub(crate) struct GraphBuilder {
    n: usize,
    a: f64,
    degrees: Zeta<f64>,
    activity: Vec<f64>,
    perm: Vec<u32>,
    swaps: Vec<usize>,
}

impl GraphBuilder {
    pub(crate) fn new(n: usize, beta: f64, a: f64) -> Self {
        Self {
            n,
            a,
            degrees: Zeta::new(beta).expect("validated degree exponent"),
            activity: vec![0.0; n],
            perm: (0..n as u32).collect(),
            swaps: Vec::new(),
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn pareto(&self, stream: &mut RandomStream) -> f64 {
        stream.open_uniform().powf(-1.0 / self.a)
    }

    /// Builds one graph and returns the largest aggregate activity.
    pub(crate) fn sample_max(&mut self, stream: &mut RandomStream) -> f64 {
        let n = self.n;
        for v in 0..n {
            self.activity[v] = self.pareto(stream);
        }
        let pool = n - 1;
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            let k = self.degrees.sample(stream);
            let d = if k >= pool as f64 { pool } else { k as usize };
            // park i at the end so the first n−1 slots hold the other vertices
            self.perm.swap(i, pool);
            let mut total = self.activity[i];
            self.swaps.clear();
            for t in 0..d {
                let j = t + stream.below((pool - t) as u64) as usize;
                self.perm.swap(t, j);
                self.swaps.push(j);
                total += self.activity[self.perm[t] as usize];
            }
            for (t, &j) in self.swaps.iter().enumerate().rev() {
                self.perm.swap(t, j);
            }
            self.perm.swap(i, pool);
            max = max.max(total);
        }
        max
    }

    /// In-neighbour lists, for structural checks.
    #[cfg(test)]
    fn sample_in_neighbours(&mut self, stream: &mut RandomStream) -> Vec<Vec<u32>> {
        let n = self.n;
        let pool = n - 1;
        (0..n)
            .map(|i| {
                let k = self.degrees.sample(stream);
                let d = if k >= pool as f64 { pool } else { k as usize };
                self.perm.swap(i, pool);
                self.swaps.clear();
                let mut out = Vec::with_capacity(d);
                for t in 0..d {
                    let j = t + stream.below((pool - t) as u64) as usize;
                    self.perm.swap(t, j);
                    self.swaps.push(j);
                    out.push(self.perm[t]);
                }
                for (t, &j) in self.swaps.iter().enumerate().rev() {
                    self.perm.swap(t, j);
                }
                self.perm.swap(i, pool);
                out
            })
            .collect()
    }
}

/// Conditional Monte Carlo sample for the aggregate-activity tail.
pub(crate) fn aggregate_tail_pool(
    n: usize,
    beta: f64,
    a: f64,
    size: usize,
    stream: &mut RandomStream,
) -> AggregateTailPool {
    let degrees = Zeta::new(beta).expect("validated degree exponent");
    let entries = (0..size)
        .map(|_| {
            let k = degrees.sample(stream);
            let d = if k >= (n - 1) as f64 { n - 1 } else { k as usize };
            let (mut sum, mut max) = (0.0, f64::NEG_INFINITY);
            for _ in 0..d {
                let x = stream.open_uniform().powf(-1.0 / a);
                sum += x;
                max = max.max(x);
            }
            ((d + 1) as u32, sum, max)
        })
        .collect();
    AggregateTailPool { a, entries }
}
