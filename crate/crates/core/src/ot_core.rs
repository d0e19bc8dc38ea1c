//! Cost matrices and entropic optimal transport between centroid measures.
//!
//! Rows of every matrix index pre-training units, columns index target
//! classes. The unbalanced solver minimizes
//!
//! ```text
//! <P, C> - ε·h(P) + τ₁·KL(P·1 | w_g) + τ₂·KL(Pᵀ·1 | w_f)
//! h(P)    = -Σ P_ji (log P_ji - 1)
//! KL(x|y) =  Σ x log(x / y) - x + y
//! ```
//!
//! by alternating scaling updates `u ← (w_g / K v)^{τ₁/(τ₁+ε)}` and
//! `v ← (w_f / Kᵀ u)^{τ₂/(τ₂+ε)}` with `K = exp(-C/ε)`. The production
//! solvers keep `log u`, `log v` and reduce with log-sum-exp; cosine costs
//! scaled by a small `ε_c` reach the hundreds and `exp(-C/ε)` underflows in
//! the plain form.

use std::fmt;

use crate::error::{Error, Result};
use crate::feature_store::CentroidSet;
use crate::scalar::{dot, log_sum_exp, norm, Scalar};

/// Ground metric between centroids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMetric {
    /// `(1 - cos(b_j, a_i)) / ε_c`
    Cosine,
    /// `‖b_j - a_i‖₂`, unscaled.
    L2,
    /// Entries supplied directly by the caller.
    Precomputed,
}

impl fmt::Display for CostMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMetric::Cosine => "cosine",
            CostMetric::L2 => "l2",
            CostMetric::Precomputed => "precomputed",
        })
    }
}

impl std::str::FromStr for CostMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" | "cos" => Ok(CostMetric::Cosine),
            "l2" | "euclidean" => Ok(CostMetric::L2),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

/// Nonnegative `K_g × K_f` cost matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
    metric: CostMetric,
    epsilon_c: T,
}

impl<T: Scalar> CostMatrix<T> {
    /// Wraps caller-supplied costs. Entries must be finite and nonnegative.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("cost matrix must be at least 1×1"));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if let Some(pos) = entries
            .iter()
            .position(|c| !c.is_finite() || *c < T::zero())
        {
            return Err(Error::invalid(format!(
                "cost entry ({}, {}) must be finite and ≥ 0",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            metric: CostMetric::Precomputed,
            epsilon_c: T::one(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.entries[row * self.cols + col]
    }

    pub fn metric(&self) -> CostMetric {
        self.metric
    }

    pub fn epsilon_c(&self) -> T {
        self.epsilon_c
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            entries: self.entries.iter().map(|&c| c * factor).collect(),
            ..self.clone()
        }
    }
}

/// Builds the `K_g × K_f` cost between pre-training centroids (rows) and
/// target centroids (columns).
pub fn build_cost<T: Scalar>(
    pre: &CentroidSet<T>,
    target: &CentroidSet<T>,
    metric: CostMetric,
    epsilon_c: T,
) -> Result<CostMatrix<T>> {
    if pre.dims() != target.dims() {
        return Err(Error::DimensionMismatch {
            expected: pre.dims(),
            found: target.dims(),
        });
    }
    let (rows, cols) = (pre.k(), target.k());
    let mut entries = Vec::with_capacity(rows * cols);
    match metric {
        CostMetric::Cosine => {
            if !(epsilon_c > T::zero() && epsilon_c.is_finite()) {
                return Err(Error::invalid("epsilon_c must be positive and finite"));
            }
            let pre_norms = nonzero_norms(pre, "pre-training centroid")?;
            let tgt_norms = nonzero_norms(target, "target centroid")?;
            let two = T::of(2.0);
            for j in 0..rows {
                for i in 0..cols {
                    let cos =
                        dot(pre.centroid(j), target.centroid(i)) / (pre_norms[j] * tgt_norms[i]);
                    let d = (T::one() - cos).max(T::zero()).min(two);
                    entries.push(d / epsilon_c);
                }
            }
        }
        CostMetric::L2 => {
            for j in 0..rows {
                for i in 0..cols {
                    entries.push(l2_distance(pre.centroid(j), target.centroid(i)));
                }
            }
        }
        CostMetric::Precomputed => {
            return Err(Error::invalid(
                "precomputed costs are built with CostMatrix::from_entries",
            ))
        }
    }
    Ok(CostMatrix {
        rows,
        cols,
        entries,
        metric,
        epsilon_c,
    })
}

fn nonzero_norms<T: Scalar>(cs: &CentroidSet<T>, what: &'static str) -> Result<Vec<T>> {
    (0..cs.k())
        .map(|i| {
            let n = norm(cs.centroid(i));
            if n > T::zero() {
                Ok(n)
            } else {
                Err(Error::ZeroNorm { what, index: i })
            }
        })
        .collect()
}

pub(crate) fn l2_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Parameters of the unbalanced solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UotParams<T> {
    /// Entropy weight ε.
    pub epsilon: T,
    /// KL weight on the pre-training (row) marginal.
    pub tau1: T,
    /// KL weight on the target (column) marginal.
    pub tau2: T,
    pub max_iters: usize,
    /// Stop once the sup-norm change of `(log u, log v)` drops below this.
    pub tol: T,
}

impl<T: Scalar> Default for UotParams<T> {
    fn default() -> Self {
        Self {
            epsilon: T::one(),
            tau1: T::one(),
            tau2: T::of(100.0),
            max_iters: 10_000,
            tol: T::of(1e-9),
        }
    }
}

impl<T: Scalar> UotParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive(self.epsilon, "epsilon")?;
        positive(self.tau1, "tau1")?;
        positive(self.tau2, "tau2")?;
        positive(self.tol, "tol")?;
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be ≥ 1"));
        }
        Ok(())
    }
}

/// Solved coupling with its marginals and objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    rows: usize,
    cols: usize,
    plan: Vec<T>,
    row_marginal: Vec<T>,
    col_marginal: Vec<T>,
    pub objective: T,
    pub iterations_used: usize,
    pub converged: bool,
}

impl<T: Scalar> TransportPlan<T> {
    fn from_plan(rows: usize, cols: usize, plan: Vec<T>) -> Self {
        let (row_marginal, col_marginal) = marginals(rows, cols, &plan);
        Self {
            rows,
            cols,
            plan,
            row_marginal,
            col_marginal,
            objective: T::zero(),
            iterations_used: 0,
            converged: false,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major plan entries.
    pub fn plan(&self) -> &[T] {
        &self.plan
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.plan[row * self.cols + col]
    }

    /// `P·1`, one entry per pre-training unit.
    pub fn row_marginal(&self) -> &[T] {
        &self.row_marginal
    }

    /// `Pᵀ·1`, one entry per target class.
    pub fn col_marginal(&self) -> &[T] {
        &self.col_marginal
    }

    /// `row,col,value` listing preceded by a `#` line with convergence info.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# converged={} objective={} iterations={}\nrow,col,value\n",
            self.converged,
            self.objective.to_f64_lossy(),
            self.iterations_used
        );
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push_str(&format!("{r},{c},{}\n", self.get(r, c).to_f64_lossy()));
            }
        }
        out
    }
}

fn marginals<T: Scalar>(rows: usize, cols: usize, plan: &[T]) -> (Vec<T>, Vec<T>) {
    let mut row_m = vec![T::zero(); rows];
    let mut col_m = vec![T::zero(); cols];
    for r in 0..rows {
        for c in 0..cols {
            let p = plan[r * cols + c];
            row_m[r] = row_m[r] + p;
            col_m[c] = col_m[c] + p;
        }
    }
    (row_m, col_m)
}

/// Generalized KL divergence `Σ x log(x/y) - x + y`, with `0·log 0 = 0`.
pub fn kl_divergence<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&xi, &yi)| {
        let xlogx = if xi > T::zero() {
            xi * (xi / yi).ln()
        } else {
            T::zero()
        };
        acc + xlogx - xi + yi
    })
}

/// `h(P) = -Σ P (log P - 1)`, with `0·log 0 = 0`.
pub fn entropy<T: Scalar>(plan: &[T]) -> T {
    plan.iter().fold(T::zero(), |acc, &p| {
        if p > T::zero() {
            acc - p * (p.ln() - T::one())
        } else {
            acc
        }
    })
}

fn check_masses<T: Scalar>(cost: &CostMatrix<T>, w_g: &[T], w_f: &[T]) -> Result<()> {
    if w_g.len() != cost.rows {
        return Err(Error::DimensionMismatch {
            expected: cost.rows,
            found: w_g.len(),
        });
    }
    if w_f.len() != cost.cols {
        return Err(Error::DimensionMismatch {
            expected: cost.cols,
            found: w_f.len(),
        });
    }
    if w_g
        .iter()
        .chain(w_f)
        .any(|&w| !(w > T::zero() && w.is_finite()))
    {
        return Err(Error::invalid("all masses must be positive and finite"));
    }
    Ok(())
}

/// Evaluates the unbalanced objective on a dense row-major plan.
pub fn uot_objective_dense<T: Scalar>(
    plan: &[T],
    cost: &CostMatrix<T>,
    w_g: &[T],
    w_f: &[T],
    params: &UotParams<T>,
) -> Result<T> {
    if plan.len() != cost.rows * cost.cols {
        return Err(Error::DimensionMismatch {
            expected: cost.rows * cost.cols,
            found: plan.len(),
        });
    }
    if w_g.len() != cost.rows || w_f.len() != cost.cols {
        return Err(Error::DimensionMismatch {
            expected: cost.rows + cost.cols,
            found: w_g.len() + w_f.len(),
        });
    }
    let (row_m, col_m) = marginals(cost.rows, cost.cols, plan);
    let transport = dot(plan, &cost.entries);
    Ok(transport - params.epsilon * entropy(plan)
        + params.tau1 * kl_divergence(&row_m, w_g)
        + params.tau2 * kl_divergence(&col_m, w_f))
}

/// Evaluates the unbalanced objective for a solved plan.
pub fn uot_objective<T: Scalar>(
    plan: &TransportPlan<T>,
    cost: &CostMatrix<T>,
    w_g: &[T],
    w_f: &[T],
    params: &UotParams<T>,
) -> Result<T> {
    if plan.rows != cost.rows || plan.cols != cost.cols {
        return Err(Error::DimensionMismatch {
            expected: cost.rows * cost.cols,
            found: plan.rows * plan.cols,
        });
    }
    uot_objective_dense(&plan.plan, cost, w_g, w_f, params)
}

/// Log-domain generalized Sinkhorn for the two-sided KL-relaxed problem.
///
/// Hitting `max_iters` is not an error: the plan comes back with
/// `converged == false`.
pub fn sinkhorn_unbalanced<T: Scalar>(
    cost: &CostMatrix<T>,
    w_g: &[T],
    w_f: &[T],
    params: &UotParams<T>,
) -> Result<TransportPlan<T>> {
    params.validate()?;
    check_masses(cost, w_g, w_f)?;
    let (rows, cols) = (cost.rows, cost.cols);
    let eps = params.epsilon;
    let lambda_g = params.tau1 / (params.tau1 + eps);
    let lambda_f = params.tau2 / (params.tau2 + eps);
    let log_kernel: Vec<T> = cost.entries.iter().map(|&c| -c / eps).collect();
    let log_wg: Vec<T> = w_g.iter().map(|w| w.ln()).collect();
    let log_wf: Vec<T> = w_f.iter().map(|w| w.ln()).collect();

    let mut f = vec![T::zero(); rows];
    let mut g = vec![T::zero(); cols];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        iterations += 1;
        let mut change = T::zero();
        for j in 0..rows {
            let lk = &log_kernel[j * cols..(j + 1) * cols];
            let next = lambda_g * (log_wg[j] - log_sum_exp(cols, |i| lk[i] + g[i]));
            change = change.max((next - f[j]).abs());
            f[j] = next;
        }
        for i in 0..cols {
            let next =
                lambda_f * (log_wf[i] - log_sum_exp(rows, |j| log_kernel[j * cols + i] + f[j]));
            change = change.max((next - g[i]).abs());
            g[i] = next;
        }
        if !change.is_finite() || f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::Overflow(format!(
                "log-scalings became non-finite at iteration {iterations}"
            )));
        }
        if change < params.tol {
            converged = true;
            break;
        }
    }
    finish_plan(cost, &log_kernel, &f, &g, iterations, converged, |p| {
        uot_objective_dense(p, cost, w_g, w_f, params)
    })
}

fn finish_plan<T: Scalar>(
    cost: &CostMatrix<T>,
    log_kernel: &[T],
    f: &[T],
    g: &[T],
    iterations: usize,
    converged: bool,
    objective: impl FnOnce(&[T]) -> Result<T>,
) -> Result<TransportPlan<T>> {
    let (rows, cols) = (cost.rows, cost.cols);
    let mut plan = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        for i in 0..cols {
            plan.push((f[j] + g[i] + log_kernel[j * cols + i]).exp());
        }
    }
    if plan.iter().any(|p| !p.is_finite()) {
        return Err(Error::Overflow("transport plan entry overflowed".into()));
    }
    let mut out = TransportPlan::from_plan(rows, cols, plan);
    out.objective = objective(&out.plan)?;
    out.iterations_used = iterations;
    out.converged = converged;
    Ok(out)
}

/// Plain-domain scaling iteration for the same problem.
///
/// Kept alongside the log-domain solver as a cross-check; it fails with
/// [`Error::Overflow`] once the kernel under- or overflows.
pub fn sinkhorn_unbalanced_scaling<T: Scalar>(
    cost: &CostMatrix<T>,
    w_g: &[T],
    w_f: &[T],
    params: &UotParams<T>,
) -> Result<TransportPlan<T>> {
    params.validate()?;
    check_masses(cost, w_g, w_f)?;
    let (rows, cols) = (cost.rows, cost.cols);
    let eps = params.epsilon;
    let lambda_g = params.tau1 / (params.tau1 + eps);
    let lambda_f = params.tau2 / (params.tau2 + eps);
    let kernel: Vec<T> = cost.entries.iter().map(|&c| (-c / eps).exp()).collect();
    let mut u = vec![T::one(); rows];
    let mut v = vec![T::one(); cols];
    let mut iterations = 0;
    let mut converged = false;
    let overflow =
        |it: usize| Error::Overflow(format!("scaling vectors degenerate at iteration {it}"));
    while iterations < params.max_iters {
        iterations += 1;
        let mut change = T::zero();
        for j in 0..rows {
            let kv = dot(&kernel[j * cols..(j + 1) * cols], &v);
            let next = (w_g[j] / kv).powf(lambda_g);
            if !(next.is_finite() && next > T::zero()) {
                return Err(overflow(iterations));
            }
            change = change.max((next.ln() - u[j].ln()).abs());
            u[j] = next;
        }
        for i in 0..cols {
            let ktu = (0..rows).fold(T::zero(), |acc, j| acc + kernel[j * cols + i] * u[j]);
            let next = (w_f[i] / ktu).powf(lambda_f);
            if !(next.is_finite() && next > T::zero()) {
                return Err(overflow(iterations));
            }
            change = change.max((next.ln() - v[i].ln()).abs());
            v[i] = next;
        }
        if change < params.tol {
            converged = true;
            break;
        }
    }
    let mut plan = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        for i in 0..cols {
            plan.push(u[j] * kernel[j * cols + i] * v[i]);
        }
    }
    let mut out = TransportPlan::from_plan(rows, cols, plan);
    out.objective = uot_objective_dense(&out.plan, cost, w_g, w_f, params)?;
    out.iterations_used = iterations;
    out.converged = converged;
    Ok(out)
}

/// Standard log-domain entropic OT with hard marginal constraints.
///
/// Total masses must agree to within `1e-12` relative. The reported objective
/// is `<P, C> - ε·h(P)`.
pub fn sinkhorn_balanced<T: Scalar>(
    cost: &CostMatrix<T>,
    w_g: &[T],
    w_f: &[T],
    epsilon: T,
    max_iters: usize,
    tol: T,
) -> Result<TransportPlan<T>> {
    check_masses(cost, w_g, w_f)?;
    if !(epsilon > T::zero() && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon must be positive and finite"));
    }
    if max_iters == 0 || !(tol > T::zero()) {
        return Err(Error::invalid("max_iters must be ≥ 1 and tol > 0"));
    }
    let total_g: T = w_g.iter().copied().sum();
    let total_f: T = w_f.iter().copied().sum();
    if (total_g - total_f).abs() > T::of(1e-12) * total_g.max(total_f) {
        return Err(Error::invalid(format!(
            "balanced transport needs equal total mass, got {total_g} and {total_f}"
        )));
    }
    let (rows, cols) = (cost.rows, cost.cols);
    let log_kernel: Vec<T> = cost.entries.iter().map(|&c| -c / epsilon).collect();
    let log_wg: Vec<T> = w_g.iter().map(|w| w.ln()).collect();
    let log_wf: Vec<T> = w_f.iter().map(|w| w.ln()).collect();
    let mut f = vec![T::zero(); rows];
    let mut g = vec![T::zero(); cols];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut change = T::zero();
        for j in 0..rows {
            let lk = &log_kernel[j * cols..(j + 1) * cols];
            let next = log_wg[j] - log_sum_exp(cols, |i| lk[i] + g[i]);
            change = change.max((next - f[j]).abs());
            f[j] = next;
        }
        for i in 0..cols {
            let next = log_wf[i] - log_sum_exp(rows, |j| log_kernel[j * cols + i] + f[j]);
            change = change.max((next - g[i]).abs());
            g[i] = next;
        }
        if !change.is_finite() {
            return Err(Error::Overflow(format!(
                "log-scalings became non-finite at iteration {iterations}"
            )));
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    finish_plan(cost, &log_kernel, &f, &g, iterations, converged, |p| {
        Ok(dot(p, &cost.entries) - epsilon * entropy(p))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = norm(v);
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn cosine_cost_identical_and_orthogonal() {
        let pre = CentroidSet::from_rows(&[unit(&[1.0, 1.0]), vec![0.0, 2.0]]).unwrap();
        let tgt = CentroidSet::from_rows(&[unit(&[1.0, 1.0]), vec![3.0, 0.0]]).unwrap();
        let c = build_cost(&pre, &tgt, CostMetric::Cosine, 0.01).unwrap();
        assert!(c.get(0, 0).abs() < 1e-12);
        assert!((c.get(1, 1) - 100.0).abs() < 1e-12);
        assert!(c.entries().iter().all(|&e| (0.0..=200.0).contains(&e)));
    }

    #[test]
    fn l2_cost_is_unscaled() {
        let pre = CentroidSet::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let tgt = CentroidSet::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let c = build_cost(&pre, &tgt, CostMetric::L2, 0.01).unwrap();
        assert_eq!(c.get(0, 0), 5.0);
    }

    #[test]
    fn cost_errors() {
        let a = CentroidSet::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let b = CentroidSet::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            build_cost(&a, &b, CostMetric::L2, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let z = CentroidSet::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            build_cost(&a, &z, CostMetric::Cosine, 0.01),
            Err(Error::ZeroNorm { index: 0, .. })
        ));
    }

    #[test]
    fn single_cell_balanced_limit() {
        let c = CostMatrix::from_entries(1, 1, vec![0.0_f64]).unwrap();
        let params = UotParams {
            tau1: 1e9,
            tau2: 1e9,
            ..UotParams::default()
        };
        let plan = sinkhorn_unbalanced(&c, &[1.0], &[1.0], &params).unwrap();
        assert!(plan.converged);
        assert!((plan.get(0, 0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_cost_gives_independent_coupling() {
        // Unequal totals (3 vs 2): the relaxed problem settles in between, but
        // the plan must stay rank one because the cost carries no information.
        let c = CostMatrix::from_entries(3, 2, vec![0.7_f64; 6]).unwrap();
        let params = UotParams {
            tau1: 1e9,
            tau2: 1e9,
            ..UotParams::default()
        };
        let plan = sinkhorn_unbalanced(&c, &[1.0; 3], &[1.0; 2], &params).unwrap();
        let p00 = plan.get(0, 0);
        for v in plan.plan() {
            assert!((v - p00).abs() < 1e-9);
        }
        // equal totals: balanced and unbalanced both give w_g w_fᵀ / total
        let w_g = [0.5, 1.0, 0.5];
        let w_f = [1.5, 0.5];
        let plan = sinkhorn_unbalanced(&c, &w_g, &w_f, &params).unwrap();
        let bal = sinkhorn_balanced(&c, &w_g, &w_f, 1.0, 10_000, 1e-12).unwrap();
        for j in 0..3 {
            for i in 0..2 {
                let want = w_g[j] * w_f[i] / 2.0;
                assert!((plan.get(j, i) - want).abs() < 1e-4);
                assert!((bal.get(j, i) - want).abs() < 1e-9);
            }
        }
        for (m, w) in plan.row_marginal().iter().zip(&w_g) {
            assert!((m - w).abs() < 1e-4);
        }
        for (m, w) in plan.col_marginal().iter().zip(&w_f) {
            assert!((m - w).abs() < 1e-4);
        }
    }

    #[test]
    fn balanced_concentrates_on_zero_cost_diagonal() {
        let c = CostMatrix::from_entries(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let plan = sinkhorn_balanced(&c, &[0.5, 0.5], &[0.5, 0.5], 0.01, 10_000, 1e-12).unwrap();
        assert!(plan.converged);
        assert!(plan.get(0, 1) < 1e-3 && plan.get(1, 0) < 1e-3);
    }

    #[test]
    fn balanced_rejects_unequal_mass() {
        let c = CostMatrix::from_entries(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(sinkhorn_balanced(&c, &[1.0], &[1.0, 1.0], 1.0, 10, 1e-9).is_err());
    }

    #[test]
    fn objective_at_zero_plan() {
        let c = CostMatrix::from_entries(2, 3, vec![1.0; 6]).unwrap();
        let params = UotParams::<f64>::default();
        let w_g = [1.0, 2.0];
        let w_f = [0.5, 0.5, 1.0];
        let v = uot_objective_dense(&[0.0; 6], &c, &w_g, &w_f, &params).unwrap();
        assert_eq!(v, 1.0 * 3.0 + 100.0 * 2.0);
        assert!(uot_objective_dense(&[0.0; 5], &c, &w_g, &w_f, &params).is_err());
    }

    #[test]
    fn reported_objective_is_recomputable() {
        let c = CostMatrix::from_entries(2, 2, vec![0.3_f64, 1.2, 0.9, 0.1]).unwrap();
        let params = UotParams::default();
        let plan = sinkhorn_unbalanced(&c, &[1.0; 2], &[1.0; 2], &params).unwrap();
        let again = uot_objective(&plan, &c, &[1.0; 2], &[1.0; 2], &params).unwrap();
        assert_eq!(plan.objective.to_bits(), again.to_bits());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let c = CostMatrix::from_entries(2, 2, vec![0.3, 1.2, 0.9, 0.1]).unwrap();
        let params = UotParams {
            max_iters: 1,
            ..UotParams::default()
        };
        let plan = sinkhorn_unbalanced(&c, &[1.0; 2], &[1.0; 2], &params).unwrap();
        assert!(!plan.converged);
        assert_eq!(plan.iterations_used, 1);
    }

    #[test]
    fn invalid_params_rejected() {
        let c = CostMatrix::from_entries(1, 1, vec![0.0_f64]).unwrap();
        for bad in [
            UotParams {
                epsilon: 0.0,
                ..UotParams::default()
            },
            UotParams {
                tau1: -1.0,
                ..UotParams::default()
            },
            UotParams {
                max_iters: 0,
                ..UotParams::default()
            },
        ] {
            assert!(sinkhorn_unbalanced(&c, &[1.0], &[1.0], &bad).is_err());
        }
        assert!(sinkhorn_unbalanced(&c, &[0.0], &[1.0], &UotParams::default()).is_err());
    }

    #[test]
    fn naive_solver_overflows_on_hostile_costs() {
        let c = CostMatrix::from_entries(1, 2, vec![200.0, 200.0]).unwrap();
        let params = UotParams {
            epsilon: 0.1,
            ..UotParams::default()
        };
        assert!(matches!(
            sinkhorn_unbalanced_scaling(&c, &[1.0], &[1.0, 1.0], &params),
            Err(Error::Overflow(_))
        ));
        let plan = sinkhorn_unbalanced(&c, &[1.0], &[1.0, 1.0], &params).unwrap();
        assert!(plan.converged);
    }

    #[test]
    fn f32_solver_runs() {
        let c = CostMatrix::<f32>::from_entries(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let params = UotParams {
            tol: 1e-5,
            ..UotParams::default()
        };
        let plan = sinkhorn_unbalanced(&c, &[1.0; 2], &[1.0; 2], &params).unwrap();
        assert!(plan.converged);
        assert!(plan.get(0, 0) > plan.get(0, 1));
    }

    #[test]
    fn csv_export_header() {
        let c = CostMatrix::from_entries(1, 2, vec![0.0, 1.0]).unwrap();
        let plan = sinkhorn_unbalanced(&c, &[1.0], &[1.0, 1.0], &UotParams::default()).unwrap();
        let csv = plan.to_csv();
        let mut lines = csv.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# converged=true objective="));
        assert_eq!(lines.next(), Some("row,col,value"));
        assert_eq!(lines.count(), 2);
    }
}
