//! SGD simulator for fine-tuning with a mixed gradient estimator, and the
//! closed-form excess-risk bounds it is checked against.
//!
//! The target objective is a strongly convex quadratic
//! `F(θ) = ½ θᵀAθ + bᵀθ`, which is `L`-smooth and satisfies the PL inequality
//! with `μ = λ_min(A)`, `L = λ_max(A)`. Pre-training follows `∇F + Δ-vector`,
//! and the reused-data gradient `∇h` is `∇F` plus a fixed bias plus noise
//! shrunk by `1/√m̃`. Stochastic noise is isotropic Gaussian with variance
//! `σ²/d` per coordinate, so `E‖noise‖² = σ²`.
//!
//! Each seed owns two ChaCha streams: stream 0 drives the target-data noise
//! and stream 1 the reused-data noise. With `α = 1` stream 1 is never
//! touched, so the trajectory matches plain SGD bit for bit.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, matvec, orthonormalize_rows, symmetric_eigen};
use crate::scalar::{dot, norm, Scalar};

const DIVERGENCE_NORM: f64 = 1e12;

/// Quadratic objective with its curvature constants and minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct PlObjective<T> {
    dims: usize,
    a: Vec<T>,
    b: Vec<T>,
    mu: T,
    l: T,
    theta_star: Vec<T>,
    f_star: T,
    eigenvalues: Vec<T>,
    /// Unit eigenvectors, ascending eigenvalue order.
    eigenvectors: Vec<Vec<T>>,
}

impl<T: Scalar> PlObjective<T> {
    /// Validates `A` (symmetric, positive definite) and derives `μ`, `L`, `θ*`.
    pub fn new(dims: usize, a: Vec<T>, b: Vec<T>) -> Result<Self> {
        if dims == 0 || a.len() != dims * dims || b.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims * dims + dims,
                found: a.len() + b.len(),
            });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("objective coefficients must be finite"));
        }
        let scale = a
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
            .max(T::one());
        // a few thousand ulps: about 1e-12 in f64, 1e-3 in f32
        let rel_tol = T::epsilon() * T::of(4096.0);
        for i in 0..dims {
            for j in i + 1..dims {
                if (a[i * dims + j] - a[j * dims + i]).abs() > rel_tol * scale {
                    return Err(Error::invalid(format!("A is not symmetric at ({i}, {j})")));
                }
            }
        }
        let (eigenvalues, eigenvectors) = symmetric_eigen(&a, dims);
        let mu = eigenvalues[0];
        let l = eigenvalues[dims - 1];
        if !(mu > T::zero()) {
            return Err(Error::invalid(format!(
                "A must be positive definite (λ_min = {mu})"
            )));
        }
        let neg_b: Vec<T> = b.iter().map(|&v| -v).collect();
        let theta_star = cholesky_solve(&a, &neg_b)?;
        let residual = matvec(&a, &theta_star)
            .iter()
            .zip(&b)
            .fold(T::zero(), |m, (&r, &bb)| m.max((r + bb).abs()));
        let bscale = b.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let tscale = theta_star.iter().fold(T::one(), |m, v| m.max(v.abs()));
        if residual > rel_tol * T::of_usize(dims) * bscale.max(scale * tscale) {
            return Err(Error::invalid(format!(
                "minimizer residual {residual} too large"
            )));
        }
        let mut obj = Self {
            dims,
            a,
            b,
            mu,
            l,
            theta_star,
            f_star: T::zero(),
            eigenvalues,
            eigenvectors,
        };
        obj.f_star = obj.value(&obj.theta_star.clone());
        Ok(obj)
    }

    /// Random rotation of `diag(linspace(μ, L))` with a random minimizer.
    pub fn with_spectrum(dims: usize, mu: T, l: T, seed: u64) -> Result<Self> {
        if dims == 0 {
            return Err(Error::invalid("dims must be ≥ 1"));
        }
        if !(mu > T::zero() && l >= mu && l.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < μ ≤ L, got μ = {mu}, L = {l}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut basis: Vec<Vec<T>> = (0..dims)
            .map(|_| (0..dims).map(|_| standard_normal(&mut rng)).collect())
            .collect();
        orthonormalize_rows(&mut basis)?;
        let spectrum: Vec<T> = (0..dims)
            .map(|i| {
                if dims == 1 {
                    mu
                } else {
                    mu + (l - mu) * T::of_usize(i) / T::of_usize(dims - 1)
                }
            })
            .collect();
        let mut a = vec![T::zero(); dims * dims];
        for i in 0..dims {
            for j in 0..=i {
                let v = (0..dims).fold(T::zero(), |acc, k| {
                    acc + basis[k][i] * spectrum[k] * basis[k][j]
                });
                a[i * dims + j] = v;
                a[j * dims + i] = v;
            }
        }
        let theta_star: Vec<T> = (0..dims).map(|_| standard_normal(&mut rng)).collect();
        let b = matvec(&a, &theta_star).into_iter().map(|v| -v).collect();
        Self::new(dims, a, b)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn l(&self) -> T {
        self.l
    }

    pub fn theta_star(&self) -> &[T] {
        &self.theta_star
    }

    pub fn f_star(&self) -> T {
        self.f_star
    }

    pub fn matrix(&self) -> &[T] {
        &self.a
    }

    pub fn linear(&self) -> &[T] {
        &self.b
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Unit eigenvector of the smallest eigenvalue `μ`.
    pub fn weakest_direction(&self) -> &[T] {
        &self.eigenvectors[0]
    }

    pub fn value(&self, theta: &[T]) -> T {
        let at = matvec(&self.a, theta);
        T::of(0.5) * dot(theta, &at) + dot(&self.b, theta)
    }

    pub fn gradient(&self, theta: &[T]) -> Vec<T> {
        matvec(&self.a, theta)
            .into_iter()
            .zip(&self.b)
            .map(|(v, &b)| v + b)
            .collect()
    }

    /// `F(θ) - F(θ*)` as `½ (θ-θ*)ᵀ A (θ-θ*)`, which stays nonnegative.
    pub fn excess_risk(&self, theta: &[T]) -> T {
        let d: Vec<T> = theta
            .iter()
            .zip(&self.theta_star)
            .map(|(&x, &s)| x - s)
            .collect();
        (T::of(0.5) * dot(&d, &matvec(&self.a, &d))).max(T::zero())
    }
}

fn standard_normal<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::of(z)
}

/// Isotropic Gaussian vector with `E‖z‖² = scale²`.
pub fn isotropic_noise<T: Scalar>(dims: usize, scale: T, rng: &mut ChaCha8Rng) -> Vec<T> {
    let per = scale / T::of_usize(dims).sqrt();
    (0..dims).map(|_| standard_normal::<T>(rng) * per).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate<T> {
    Fixed(T),
    /// Step size prescribed by the bounds, see [`finetune_learning_rate`].
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind<T> {
    /// `θ* + scale·u` for a seeded random unit vector `u`.
    Random { scale: T, seed: u64 },
    /// Random start, then `steps` of biased pre-training SGD.
    Pretrained { steps: usize, scale: T, seed: u64 },
}

/// One simulated fine-tuning configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    /// Weight on the target-data gradient, in `(0, 1]`.
    pub alpha: T,
    /// Pre-training gradient bias; its norm is `Δ`.
    pub delta_vec: Vec<T>,
    pub sigma: T,
    /// Fixed bias of the reused-data gradient; its norm is `δ`.
    pub bias_h: Vec<T>,
    pub m_tilde: usize,
    /// Fine-tuning steps.
    pub n: usize,
    pub eta: LearningRate<T>,
    pub seeds: Vec<u64>,
    pub init: InitKind<T>,
}

impl<T: Scalar> SimConfig<T> {
    /// Both bias vectors aligned with the objective's weakest direction.
    #[allow(clippy::too_many_arguments)]
    pub fn aligned(
        obj: &PlObjective<T>,
        alpha: T,
        delta: T,
        sigma: T,
        delta_h: T,
        m_tilde: usize,
        n: usize,
        seeds: Vec<u64>,
    ) -> Self {
        let dir = obj.weakest_direction();
        Self {
            alpha,
            delta_vec: dir.iter().map(|&v| v * delta).collect(),
            sigma,
            bias_h: dir.iter().map(|&v| v * delta_h).collect(),
            m_tilde,
            n,
            eta: LearningRate::Auto,
            seeds,
            init: InitKind::Pretrained {
                steps: 2000,
                scale: T::of(10.0),
                seed: 0,
            },
        }
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.sigma >= T::zero() && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be ≥ 0"));
        }
        if self.delta_vec.len() != dims || self.bias_h.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: self.delta_vec.len().min(self.bias_h.len()),
            });
        }
        if self.n == 0 || self.m_tilde == 0 {
            return Err(Error::invalid("n and m_tilde must be ≥ 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if let LearningRate::Fixed(eta) = self.eta {
            if !(eta > T::zero() && eta.is_finite()) {
                return Err(Error::invalid("learning rate must be positive"));
            }
        }
        Ok(())
    }

    /// `Δ`
    pub fn delta(&self) -> T {
        norm(&self.delta_vec)
    }

    /// `δ`, the norm of the reused-data bias.
    pub fn delta_h(&self) -> T {
        norm(&self.bias_h)
    }

    /// `E‖∇F - ∇h‖² = δ² + σ²/m̃` for this noise model; the quantity the
    /// mixed-gradient bound is stated in.
    pub fn delta_sq_effective(&self) -> T {
        let d = self.delta_h();
        d * d + self.sigma * self.sigma / T::of_usize(self.m_tilde)
    }
}

/// Per-seed generators: stream 0 for target data, stream 1 for reused data.
#[derive(Debug, Clone)]
pub struct SeedStreams {
    pub target: ChaCha8Rng,
    pub reused: ChaCha8Rng,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        let mut target = ChaCha8Rng::seed_from_u64(seed);
        target.set_stream(0);
        let mut reused = ChaCha8Rng::seed_from_u64(seed);
        reused.set_stream(1);
        Self { target, reused }
    }
}

/// `∇F(θ) + noise(σ)`
pub fn stochastic_gradient<T: Scalar>(
    obj: &PlObjective<T>,
    theta: &[T],
    sigma: T,
    rng: &mut ChaCha8Rng,
) -> Vec<T> {
    let noise = isotropic_noise(obj.dims, sigma, rng);
    obj.gradient(theta)
        .into_iter()
        .zip(noise)
        .map(|(g, z)| g + z)
        .collect()
}

/// `α(∇F + ζ-noise) + (1-α)(∇F + bias_h + ξ-noise/√m̃)`
pub fn mixed_gradient<T: Scalar>(
    obj: &PlObjective<T>,
    theta: &[T],
    cfg: &SimConfig<T>,
    streams: &mut SeedStreams,
) -> Vec<T> {
    if cfg.alpha == T::one() {
        return stochastic_gradient(obj, theta, cfg.sigma, &mut streams.target);
    }
    let grad = obj.gradient(theta);
    let n1 = isotropic_noise(obj.dims, cfg.sigma, &mut streams.target);
    let reused_scale = cfg.sigma / T::of_usize(cfg.m_tilde).sqrt();
    let n2 = isotropic_noise(obj.dims, reused_scale, &mut streams.reused);
    let (a, rest) = (cfg.alpha, T::one() - cfg.alpha);
    (0..obj.dims)
        .map(|k| a * (grad[k] + n1[k]) + rest * (grad[k] + cfg.bias_h[k] + n2[k]))
        .collect()
}

/// `min(1, Δ²/(2σ²)) / L`, floored at `1e-6/L` when `Δ = 0`.
pub fn pretrain_learning_rate<T: Scalar>(l: T, delta_sq: T, sigma_sq: T) -> T {
    let ratio = if sigma_sq > T::zero() {
        (delta_sq / (T::of(2.0) * sigma_sq)).min(T::one())
    } else {
        T::one()
    };
    ratio.max(T::of(1e-6)) / l
}

/// `(2/(nμ)) log(nμΔ²/(2αLσ²))`, clipped to `1/L`. When the log argument is
/// not above one the formula is meaningless and `2/(nμ)` (clipped) is used.
pub fn finetune_learning_rate<T: Scalar>(
    mu: T,
    l: T,
    sigma_sq: T,
    delta_sq: T,
    n: usize,
    alpha: T,
) -> T {
    let n = T::of_usize(n);
    let arg = n * mu * delta_sq / (T::of(2.0) * alpha * l * sigma_sq);
    let base = T::of(2.0) / (n * mu);
    let eta = if arg > T::one() {
        base * arg.ln()
    } else {
        base
    };
    eta.min(T::one() / l)
}

fn check_divergence<T: Scalar>(theta: &[T], step: usize) -> Result<()> {
    let n = norm(theta).to_f64_lossy();
    if !n.is_finite() || n > DIVERGENCE_NORM {
        return Err(Error::Divergence { step, norm: n });
    }
    Ok(())
}

fn check_pl<T: Scalar>(obj: &PlObjective<T>, excess: T, grad: &[T], step: usize) -> Result<()> {
    let g2 = dot(grad, grad);
    if T::of(2.0) * obj.mu * excess > g2 + T::of(1e-10) * g2.max(T::one()) {
        return Err(Error::invalid(format!(
            "PL inequality violated at step {step}"
        )));
    }
    Ok(())
}

/// SGD on the pre-training objective, whose gradient is
/// `∇F + delta_vec + noise(σ)`. `eta = None` uses [`pretrain_learning_rate`].
pub fn sgd_pretrain<T: Scalar>(
    obj: &PlObjective<T>,
    cfg: &SimConfig<T>,
    start: &[T],
    steps: usize,
    eta: Option<T>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<T>> {
    if steps == 0 {
        return Err(Error::invalid("pre-training needs at least one step"));
    }
    if start.len() != obj.dims || cfg.delta_vec.len() != obj.dims {
        return Err(Error::DimensionMismatch {
            expected: obj.dims,
            found: start.len(),
        });
    }
    let eta = eta.unwrap_or_else(|| {
        let d = cfg.delta();
        pretrain_learning_rate(obj.l, d * d, cfg.sigma * cfg.sigma)
    });
    let mut theta = start.to_vec();
    for step in 1..=steps {
        let g = stochastic_gradient(obj, &theta, cfg.sigma, rng);
        for k in 0..obj.dims {
            theta[k] = theta[k] - eta * (g[k] + cfg.delta_vec[k]);
        }
        check_divergence(&theta, step)?;
    }
    Ok(theta)
}

/// Starting point for fine-tuning according to `cfg.init`.
pub fn initial_point<T: Scalar>(obj: &PlObjective<T>, cfg: &SimConfig<T>) -> Result<Vec<T>> {
    let random_start = |scale: T, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let mut dir: Vec<T> = (0..obj.dims).map(|_| standard_normal(&mut rng)).collect();
        let n = norm(&dir);
        dir.iter_mut().for_each(|v| *v = *v / n);
        let theta: Vec<T> = obj
            .theta_star
            .iter()
            .zip(&dir)
            .map(|(&s, &u)| s + scale * u)
            .collect();
        (theta, rng)
    };
    match cfg.init {
        InitKind::Random { scale, seed } => Ok(random_start(scale, seed).0),
        InitKind::Pretrained { steps, scale, seed } => {
            let (start, mut rng) = random_start(scale, seed);
            sgd_pretrain(obj, cfg, &start, steps, None, &mut rng)
        }
    }
}

/// A bound value, or the log argument when it does not exceed one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound<T> {
    Value(T),
    NotApplicable { log_argument: T },
}

impl<T: Scalar> Bound<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Bound::Value(v) => Some(*v),
            Bound::NotApplicable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaBounds<T> {
    /// `Δ²/μ`
    pub pretrain: T,
    /// `(4Lσ²/(nμ²)) log(nμΔ²/(2Lσ²))`
    pub finetune: Bound<T>,
}

fn require_positive<T: Scalar>(v: T, name: &str) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Excess-risk bounds for the pre-trained model and for plain fine-tuning.
pub fn bound_lemma2<T: Scalar>(
    mu: T,
    l: T,
    sigma_sq: T,
    delta_sq: T,
    n: usize,
) -> Result<LemmaBounds<T>> {
    require_positive(mu, "mu")?;
    require_positive(l, "L")?;
    require_positive(sigma_sq, "sigma²")?;
    require_positive(delta_sq, "Delta²")?;
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let nf = T::of_usize(n);
    let arg = nf * mu * delta_sq / (T::of(2.0) * l * sigma_sq);
    let finetune = if arg > T::one() {
        Bound::Value(T::of(4.0) * l * sigma_sq / (nf * mu * mu) * arg.ln())
    } else {
        Bound::NotApplicable { log_argument: arg }
    };
    Ok(LemmaBounds {
        pretrain: delta_sq / mu,
        finetune,
    })
}

/// Excess-risk bound for fine-tuning with the mixed gradient:
/// `(4αLσ²/(nμ²)) log(nμΔ²/(2αLσ²)) + 2(1-α)δ²/μ`.
pub fn bound_theorem2<T: Scalar>(
    mu: T,
    l: T,
    sigma_sq: T,
    delta_sq: T,
    n: usize,
    alpha: T,
    bias_sq: T,
) -> Result<Bound<T>> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if !(bias_sq >= T::zero() && bias_sq.is_finite()) {
        return Err(Error::invalid("delta² must be ≥ 0"));
    }
    require_positive(mu, "mu")?;
    require_positive(l, "L")?;
    require_positive(sigma_sq, "sigma²")?;
    require_positive(delta_sq, "Delta²")?;
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let nf = T::of_usize(n);
    let arg = nf * mu * delta_sq / (T::of(2.0) * alpha * l * sigma_sq);
    if !(arg > T::one()) {
        return Ok(Bound::NotApplicable { log_argument: arg });
    }
    let variance = T::of(4.0) * alpha * l * sigma_sq / (nf * mu * mu) * arg.ln();
    let bias = T::of(2.0) * (T::one() - alpha) * bias_sq / mu;
    Ok(Bound::Value(variance + bias))
}

/// Aggregated fine-tuning runs over all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    /// Excess risk at steps `0..=n`, one vector per seed.
    pub trajectories: Vec<Vec<T>>,
    pub final_excess: Vec<T>,
    pub mean_final: T,
    pub std_error: T,
    pub eta: T,
    /// `None` when a bound parameter is zero (e.g. `σ = 0`).
    pub lemma2: Option<LemmaBounds<T>>,
    pub theorem2: Option<Bound<T>>,
}

/// `n` steps of `θ ← θ - η·mixed_gradient` from `theta0`, once per seed.
pub fn sgd_finetune<T: Scalar>(
    obj: &PlObjective<T>,
    cfg: &SimConfig<T>,
    theta0: &[T],
) -> Result<SimResult<T>> {
    cfg.validate(obj.dims)?;
    if theta0.len() != obj.dims {
        return Err(Error::DimensionMismatch {
            expected: obj.dims,
            found: theta0.len(),
        });
    }
    let sigma_sq = cfg.sigma * cfg.sigma;
    let delta = cfg.delta();
    let delta_sq = delta * delta;
    let eta = match cfg.eta {
        LearningRate::Fixed(eta) => eta,
        LearningRate::Auto => {
            finetune_learning_rate(obj.mu, obj.l, sigma_sq, delta_sq, cfg.n, cfg.alpha)
        }
    };
    let mut trajectories = Vec::with_capacity(cfg.seeds.len());
    let mut final_excess = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mut streams = SeedStreams::new(seed);
        let mut theta = theta0.to_vec();
        let mut traj = Vec::with_capacity(cfg.n + 1);
        traj.push(obj.excess_risk(&theta));
        for step in 1..=cfg.n {
            check_pl(obj, traj[step - 1], &obj.gradient(&theta), step - 1)?;
            let g = mixed_gradient(obj, &theta, cfg, &mut streams);
            for (t, gk) in theta.iter_mut().zip(&g) {
                *t = *t - eta * *gk;
            }
            check_divergence(&theta, step)?;
            traj.push(obj.excess_risk(&theta));
        }
        check_pl(obj, traj[cfg.n], &obj.gradient(&theta), cfg.n)?;
        final_excess.push(traj[cfg.n]);
        trajectories.push(traj);
    }
    let count = T::of_usize(final_excess.len());
    let mean_final = final_excess.iter().copied().sum::<T>() / count;
    let std_error = if final_excess.len() > 1 {
        let var = final_excess.iter().fold(T::zero(), |acc, &x| {
            acc + (x - mean_final) * (x - mean_final)
        }) / (count - T::one());
        (var / count).sqrt()
    } else {
        T::zero()
    };
    let lemma2 = bound_lemma2(obj.mu, obj.l, sigma_sq, delta_sq, cfg.n).ok();
    let theorem2 = bound_theorem2(
        obj.mu,
        obj.l,
        sigma_sq,
        delta_sq,
        cfg.n,
        cfg.alpha,
        cfg.delta_sq_effective(),
    )
    .ok();
    Ok(SimResult {
        trajectories,
        final_excess,
        mean_final,
        std_error,
        eta,
        lemma2,
        theorem2,
    })
}

/// Parameter grid read from a flat `key = value` file.
///
/// Recognised keys: `dims`, `mu`, `l`, `objective_seed`, `sigma`, `delta`
/// (pre-training bias norm Δ), `alpha`, `delta2` (squared reused-data bias
/// δ²), `n`, `m_tilde`, `seeds` (count), `seed_base`, `init`
/// (`pretrained`/`random`), `init_scale`, `init_seed`, `pretrain_steps`,
/// `eta` (`auto` or a number). `alpha`, `delta2` and `n` take
/// comma-separated lists. `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dims: usize,
    pub mu: f64,
    pub l: f64,
    pub objective_seed: u64,
    pub sigma: f64,
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub delta2s: Vec<f64>,
    pub ns: Vec<usize>,
    pub m_tilde: usize,
    pub seeds: usize,
    pub seed_base: u64,
    pub pretrained: bool,
    pub init_scale: f64,
    pub init_seed: u64,
    pub pretrain_steps: usize,
    pub eta: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dims: 10,
            mu: 0.5,
            l: 5.0,
            objective_seed: 1,
            sigma: 1.0,
            delta: 1.0,
            alphas: vec![1.0],
            delta2s: vec![0.0],
            ns: vec![1000],
            m_tilde: 256,
            seeds: 50,
            seed_base: 0,
            pretrained: true,
            init_scale: 10.0,
            init_seed: 0,
            pretrain_steps: 2000,
            eta: None,
        }
    }
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_one<V: std::str::FromStr>(key: &str, raw: &str) -> Result<V> {
    raw.trim()
        .parse()
        .map_err(|_| config_err(key, format!("cannot parse `{}`", raw.trim())))
}

fn parse_list<V: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<V>> {
    let items: Vec<V> = raw
        .split(',')
        .map(|s| parse_one(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(config_err(key, "empty list"));
    }
    Ok(items)
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: line_no,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            if seen.insert(key.to_string(), line_no).is_some() {
                return Err(config_err(key, "given twice"));
            }
            match key {
                "dims" => cfg.dims = parse_one(key, value)?,
                "mu" => cfg.mu = parse_one(key, value)?,
                "l" | "L" => cfg.l = parse_one(key, value)?,
                "objective_seed" => cfg.objective_seed = parse_one(key, value)?,
                "sigma" => cfg.sigma = parse_one(key, value)?,
                "delta" => cfg.delta = parse_one(key, value)?,
                "alpha" => cfg.alphas = parse_list(key, value)?,
                "delta2" => cfg.delta2s = parse_list(key, value)?,
                "n" => cfg.ns = parse_list(key, value)?,
                "m_tilde" => cfg.m_tilde = parse_one(key, value)?,
                "seeds" => cfg.seeds = parse_one(key, value)?,
                "seed_base" => cfg.seed_base = parse_one(key, value)?,
                "init" => {
                    cfg.pretrained = match value.trim() {
                        "pretrained" => true,
                        "random" => false,
                        other => return Err(config_err(key, format!("unknown init `{other}`"))),
                    }
                }
                "init_scale" => cfg.init_scale = parse_one(key, value)?,
                "init_seed" => cfg.init_seed = parse_one(key, value)?,
                "pretrain_steps" => cfg.pretrain_steps = parse_one(key, value)?,
                "eta" => {
                    cfg.eta = match value.trim() {
                        "auto" => None,
                        v => Some(parse_one(key, v)?),
                    }
                }
                other => return Err(config_err(other, "unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(config_err("dims", "must be ≥ 1"));
        }
        if !(self.mu > 0.0 && self.l >= self.mu && self.l.is_finite()) {
            return Err(config_err("mu", "need 0 < mu ≤ l"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(config_err("sigma", "must be ≥ 0"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(config_err("delta", "must be ≥ 0"));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(config_err("alpha", format!("{a} is outside (0, 1]")));
        }
        if let Some(d) = self.delta2s.iter().find(|&&d| !(d >= 0.0 && d.is_finite())) {
            return Err(config_err("delta2", format!("{d} must be ≥ 0")));
        }
        if self.ns.contains(&0) {
            return Err(config_err("n", "steps must be ≥ 1"));
        }
        if self.m_tilde == 0 {
            return Err(config_err("m_tilde", "must be ≥ 1"));
        }
        if self.seeds == 0 {
            return Err(config_err("seeds", "must be ≥ 1"));
        }
        if self.pretrained && self.pretrain_steps == 0 {
            return Err(config_err("pretrain_steps", "must be ≥ 1"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(config_err("eta", "must be positive or `auto`"));
            }
        }
        Ok(())
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub delta2: f64,
    pub n: usize,
    pub result: SimResult<f64>,
}

impl SweepPoint {
    pub fn bound(&self) -> Option<f64> {
        self.result.theorem2.and_then(|b| b.value())
    }
}

/// Runs every `(alpha, delta2, n)` combination from a shared start point.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let obj = PlObjective::<f64>::with_spectrum(cfg.dims, cfg.mu, cfg.l, cfg.objective_seed)?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|s| cfg.seed_base + s).collect();
    let base = |alpha: f64, delta2: f64, n: usize| {
        let mut sc = SimConfig::aligned(
            &obj,
            alpha,
            cfg.delta,
            cfg.sigma,
            delta2.sqrt(),
            cfg.m_tilde,
            n,
            seeds.clone(),
        );
        sc.eta = cfg.eta.map_or(LearningRate::Auto, LearningRate::Fixed);
        sc.init = if cfg.pretrained {
            InitKind::Pretrained {
                steps: cfg.pretrain_steps,
                scale: cfg.init_scale,
                seed: cfg.init_seed,
            }
        } else {
            InitKind::Random {
                scale: cfg.init_scale,
                seed: cfg.init_seed,
            }
        };
        sc
    };
    let theta0 = initial_point(&obj, &base(1.0, 0.0, 1))?;
    let mut points = Vec::new();
    for &alpha in &cfg.alphas {
        for &delta2 in &cfg.delta2s {
            for &n in &cfg.ns {
                let result = sgd_finetune(&obj, &base(alpha, delta2, n), &theta0)?;
                points.push(SweepPoint {
                    alpha,
                    delta2,
                    n,
                    result,
                });
            }
        }
    }
    Ok(points)
}

/// `alpha,delta2,n,seed,final_excess_risk,bound`, one row per seed. Bounds
/// that do not apply are written as `NA`.
pub fn sweep_csv(points: &[SweepPoint], seeds: &[u64]) -> String {
    let mut out = String::from("alpha,delta2,n,seed,final_excess_risk,bound\n");
    for p in points {
        let bound = p
            .bound()
            .map_or_else(|| "NA".to_string(), |b| b.to_string());
        for (seed, er) in seeds.iter().zip(&p.result.final_excess) {
            out.push_str(&format!(
                "{},{},{},{seed},{er},{bound}\n",
                p.alpha, p.delta2, p.n
            ));
        }
    }
    out
}
