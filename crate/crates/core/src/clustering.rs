//! Spherical k-means: Lloyd iterations under cosine distance on unit-normalized
//! rows, with k-means++ seeding and deterministic empty-cluster repair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature_store::{FeatureMatrix, LabelMap};
use crate::scalar::{dot, norm, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Independent restarts; the lowest-inertia run wins.
    pub n_init: usize,
    pub min_cluster_size: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2000,
            max_iters: 100,
            seed: 0,
            n_init: 4,
            min_cluster_size: 1,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self, rows: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("K must be ≥ 1"));
        }
        if self.k > rows {
            return Err(Error::invalid(format!(
                "K = {} exceeds the {rows} rows",
                self.k
            )));
        }
        if self.max_iters == 0 || self.n_init == 0 || self.min_cluster_size == 0 {
            return Err(Error::invalid(
                "max_iters, n_init and min_cluster_size must be ≥ 1",
            ));
        }
        if self.k.saturating_mul(self.min_cluster_size) > rows {
            return Err(Error::invalid(format!(
                "cannot give {} clusters at least {} members from {rows} rows",
                self.k, self.min_cluster_size
            )));
        }
        Ok(())
    }
}

/// Result of the best restart.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome<T> {
    pub labels: LabelMap,
    /// `Σ (1 - cos(x_i, c_{a(i)}))`
    pub inertia: T,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning restart.
    pub restart: usize,
    /// Unit-norm centroids, `K × dims` row-major.
    pub centroids: Vec<T>,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_history: Vec<T>,
    pub seed: u64,
}

impl<T: Scalar> KMeansOutcome<T> {
    /// Run report as `key = value` lines.
    pub fn report(&self) -> String {
        format!(
            "k = {}\ninertia = {}\niterations = {}\nconverged = {}\nrestart = {}\nseed = {}\n",
            self.labels.k(),
            self.inertia.to_f64_lossy(),
            self.iterations,
            self.converged,
            self.restart,
            self.seed
        )
    }
}

/// Rows scaled to unit length; zero rows are rejected.
pub fn normalize_rows<T: Scalar>(features: &FeatureMatrix<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(features.data().len());
    for (i, row) in features.iter_rows().enumerate() {
        let n = norm(row);
        if !(n > T::zero()) {
            return Err(Error::ZeroNorm {
                what: "row",
                index: i,
            });
        }
        out.extend(row.iter().map(|&v| v / n));
    }
    Ok(out)
}

/// Nearest centroid by cosine similarity for every unit row. Ties go to the
/// lowest cluster index. Returns the assignment and per-row distances.
pub fn assign_nearest<T: Scalar>(
    units: &[T],
    centroids: &[T],
    dims: usize,
) -> (Vec<usize>, Vec<T>) {
    let rows = units.len() / dims;
    let mut labels = Vec::with_capacity(rows);
    let mut dists = Vec::with_capacity(rows);
    for x in units.chunks_exact(dims) {
        let mut best = 0;
        let mut best_sim = T::neg_infinity();
        for (c, cent) in centroids.chunks_exact(dims).enumerate() {
            let s = dot(x, cent);
            if s > best_sim {
                best_sim = s;
                best = c;
            }
        }
        labels.push(best);
        dists.push((T::one() - best_sim).max(T::zero()));
    }
    (labels, dists)
}

/// Normalized member means in ascending row order. A cluster whose mean
/// vanishes keeps its previous centroid.
fn update_centroids<T: Scalar>(units: &[T], labels: &[usize], centroids: &mut [T], dims: usize) {
    let k = centroids.len() / dims;
    let mut sums = vec![T::zero(); k * dims];
    for (x, &l) in units.chunks_exact(dims).zip(labels) {
        for (s, &v) in sums[l * dims..(l + 1) * dims].iter_mut().zip(x) {
            *s = *s + v;
        }
    }
    for (c, sum) in sums.chunks_exact(dims).enumerate() {
        let n = norm(sum);
        if n > T::zero() {
            for (dst, &v) in centroids[c * dims..(c + 1) * dims].iter_mut().zip(sum) {
                *dst = v / n;
            }
        }
    }
}

fn seed_plus_plus<T: Scalar>(units: &[T], dims: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let rows = units.len() / dims;
    let row = |i: usize| &units[i * dims..(i + 1) * dims];
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; rows];
    let first = rng.random_range(0..rows);
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = (0..rows)
        .map(|i| (1.0 - dot(row(i), row(first)).to_f64_lossy()).max(0.0))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just past the final partial sum
            pick.unwrap_or_else(|| {
                nearest
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("positive total")
            })
        } else {
            taken.iter().position(|t| !t).expect("k ≤ rows")
        };
        chosen.push(pick);
        taken[pick] = true;
        for i in 0..rows {
            let d = (1.0 - dot(row(i), row(pick)).to_f64_lossy()).max(0.0);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
    }
    chosen
        .iter()
        .flat_map(|&i| row(i).iter().copied())
        .collect()
}

/// Moves the farthest donor points into clusters below `min_size`. A donor
/// is any point whose own cluster stays at or above `min_size` without it.
/// Returns whether anything moved.
fn repair_small_clusters<T: Scalar>(
    units: &[T],
    dims: usize,
    labels: &mut [usize],
    dists: &mut [T],
    centroids: &mut [T],
    min_size: usize,
) -> bool {
    let k = centroids.len() / dims;
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut moved = false;
    while let Some(small) = counts.iter().position(|&c| c < min_size) {
        let mut donor: Option<usize> = None;
        for (p, &l) in labels.iter().enumerate() {
            if counts[l] > min_size && donor.is_none_or(|d| dists[p] > dists[d]) {
                donor = Some(p);
            }
        }
        let p = donor.expect("validated: K·min_cluster_size ≤ rows");
        counts[labels[p]] -= 1;
        labels[p] = small;
        counts[small] += 1;
        let x = &units[p * dims..(p + 1) * dims];
        if counts[small] == 1 {
            centroids[small * dims..(small + 1) * dims].copy_from_slice(x);
        }
        let c = &centroids[small * dims..(small + 1) * dims];
        dists[p] = (T::one() - dot(x, c)).max(T::zero());
        moved = true;
    }
    moved
}

struct Run<T> {
    labels: Vec<usize>,
    inertia: T,
    iterations: usize,
    converged: bool,
    centroids: Vec<T>,
    history: Vec<T>,
}

fn lloyd<T: Scalar>(units: &[T], dims: usize, cfg: &KMeansConfig, rng: &mut ChaCha8Rng) -> Run<T> {
    let mut centroids = seed_plus_plus(units, dims, cfg.k, rng);
    let mut previous: Option<Vec<usize>> = None;
    let mut history: Vec<T> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut labels = Vec::new();
    let mut inertia = T::zero();
    while iterations < cfg.max_iters {
        iterations += 1;
        let (mut next, mut dists) = assign_nearest(units, &centroids, dims);
        let repaired = repair_small_clusters(
            units,
            dims,
            &mut next,
            &mut dists,
            &mut centroids,
            cfg.min_cluster_size,
        );
        inertia = dists.iter().copied().sum();
        if let Some(&last) = history.last() {
            debug_assert!(
                cfg.min_cluster_size > 1 || inertia <= last + T::of(1e-12) * last.max(T::one()),
                "inertia increased from {last} to {inertia}"
            );
        }
        history.push(inertia);
        let stable = !repaired && previous.as_ref() == Some(&next);
        labels = next;
        if stable {
            converged = true;
            break;
        }
        update_centroids(units, &labels, &mut centroids, dims);
        previous = Some(labels.clone());
    }
    Run {
        labels,
        inertia,
        iterations,
        converged,
        centroids,
        history,
    }
}

/// Clusters rows by cosine similarity. Deterministic for a given seed;
/// restart `r` draws from ChaCha stream `r` of that seed.
pub fn spherical_kmeans<T: Scalar>(
    features: &FeatureMatrix<T>,
    cfg: &KMeansConfig,
) -> Result<KMeansOutcome<T>> {
    cfg.validate(features.rows())?;
    let units = normalize_rows(features)?;
    let dims = features.dims();
    let mut best: Option<(usize, Run<T>)> = None;
    for restart in 0..cfg.n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let run = lloyd(&units, dims, cfg, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| run.inertia < b.inertia) {
            best = Some((restart, run));
        }
    }
    let (restart, run) = best.expect("n_init ≥ 1");
    Ok(KMeansOutcome {
        labels: LabelMap::new(run.labels, Some(cfg.k))?,
        inertia: run.inertia,
        iterations: run.iterations,
        converged: run.converged,
        restart,
        centroids: run.centroids,
        inertia_history: run.history,
        seed: cfg.seed,
    })
}

/// One update-then-assign step from a finished assignment. At a converged
/// fixed point this reproduces the same labels and centroids.
pub fn refine_once<T: Scalar>(
    features: &FeatureMatrix<T>,
    labels: &[usize],
    centroids: &[T],
) -> Result<(Vec<usize>, Vec<T>)> {
    let units = normalize_rows(features)?;
    let mut next = centroids.to_vec();
    update_centroids(&units, labels, &mut next, features.dims());
    let (assigned, _) = assign_nearest(&units, &next, features.dims());
    Ok((assigned, next))
}
