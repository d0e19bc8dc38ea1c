//! Test-only helpers: a projected-gradient UOT oracle that shares no code with
//! the Sinkhorn solvers, plus random instance builders.
#![allow(dead_code, clippy::needless_range_loop)]

use ot_select::feature_store::CentroidSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const FLOOR: f64 = 1e-300;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, k: usize, dims: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            (0..dims)
                .map(|_| StandardNormal.sample(&mut *rng))
                .collect()
        })
        .collect()
}

pub fn centroids(rng: &mut ChaCha8Rng, k: usize, dims: usize) -> CentroidSet<f64> {
    CentroidSet::from_rows(&gaussian_rows(rng, k, dims)).unwrap()
}

pub fn positive_masses(rng: &mut ChaCha8Rng, n: usize, total: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x * total / s).collect()
}

/// Plain problem data for the oracle: row-major `rows × cols` cost.
pub struct Problem<'a> {
    pub rows: usize,
    pub cols: usize,
    pub cost: &'a [f64],
    pub w_g: &'a [f64],
    pub w_f: &'a [f64],
    pub epsilon: f64,
    pub tau1: f64,
    pub tau2: f64,
}

fn xlogy_term(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        y
    } else {
        x * (x / y).ln() - x + y
    }
}

impl Problem<'_> {
    fn marginals(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r = vec![0.0; self.rows];
        let mut c = vec![0.0; self.cols];
        for j in 0..self.rows {
            for i in 0..self.cols {
                r[j] += p[j * self.cols + i];
                c[i] += p[j * self.cols + i];
            }
        }
        (r, c)
    }

    pub fn objective(&self, p: &[f64]) -> f64 {
        let (r, c) = self.marginals(p);
        let mut v = 0.0;
        for (x, cost) in p.iter().zip(self.cost) {
            v += x * cost;
            if *x > 0.0 {
                v += self.epsilon * (x * x.ln() - x);
            }
        }
        v += self.tau1
            * r.iter()
                .zip(self.w_g)
                .map(|(&x, &y)| xlogy_term(x, y))
                .sum::<f64>();
        v += self.tau2
            * c.iter()
                .zip(self.w_f)
                .map(|(&x, &y)| xlogy_term(x, y))
                .sum::<f64>();
        v
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let (r, c) = self.marginals(p);
        let mut g = vec![0.0; p.len()];
        for j in 0..self.rows {
            for i in 0..self.cols {
                let k = j * self.cols + i;
                g[k] = self.cost[k]
                    + self.epsilon * p[k].ln()
                    + self.tau1 * (r[j] / self.w_g[j]).ln()
                    + self.tau2 * (c[i] / self.w_f[i]).ln();
            }
        }
        g
    }

    /// Scaled projected gradient onto `P ≥ FLOOR`: the direction is
    /// `-P ⊙ ∇`, step chosen by Armijo backtracking.
    fn descend(&self, mut p: Vec<f64>) -> (Vec<f64>, f64) {
        let mut f = self.objective(&p);
        let mut step = 1e-2;
        let mut stalled = 0;
        for _ in 0..50_000 {
            let g = self.gradient(&p);
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = p
                    .iter()
                    .zip(&g)
                    .map(|(x, d)| (x - step * x * d).max(FLOOR))
                    .collect();
                let decrease: f64 = g
                    .iter()
                    .zip(cand.iter().zip(&p))
                    .map(|(d, (a, b))| d * (a - b))
                    .sum();
                let fc = self.objective(&cand);
                if fc <= f + 1e-4 * decrease {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            stalled = if f - fc <= 1e-15 * f.abs().max(1.0) {
                stalled + 1
            } else {
                0
            };
            p = cand;
            f = fc;
            step = (step * 2.0).min(1.0);
            if stalled >= 20 {
                break;
            }
        }
        (p, f)
    }
}

/// Best of `restarts` projected-gradient runs from random positive starts.
pub fn oracle_uot(problem: &Problem, restarts: usize, seed: u64) -> (Vec<f64>, f64) {
    let mut rng = rng(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..restarts {
        let start: Vec<f64> = (0..problem.rows * problem.cols)
            .map(|_| rng.random_range(0.01..1.0))
            .collect();
        let (p, f) = problem.descend(start);
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((p, f));
        }
    }
    best.expect("at least one restart")
}

pub fn kl(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| xlogy_term(a, b)).sum()
}
