//! Choosing which pre-training classes or clusters to reuse, and scoring a
//! choice against a known set of relevant classes.
//!
//! Every ranking orders by score descending and breaks ties by ascending
//! class index.

use std::collections::BTreeSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature_store::CentroidSet;
use crate::ot_core::{
    build_cost, l2_distance, sinkhorn_unbalanced, CostMetric, TransportPlan, UotParams,
};
use crate::scalar::{dot, norm, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    Random,
    Label,
    GreedyOt,
    Uot,
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMethod::Random => "random",
            SelectionMethod::Label => "label",
            SelectionMethod::GreedyOt => "greedy-ot",
            SelectionMethod::Uot => "uot",
        })
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SelectionMethod::Random),
            "label" => Ok(SelectionMethod::Label),
            "greedy-ot" | "greedy_ot" | "greedy" => Ok(SelectionMethod::GreedyOt),
            "uot" => Ok(SelectionMethod::Uot),
            other => Err(Error::invalid(format!(
                "unknown selection method `{other}`"
            ))),
        }
    }
}

/// Ordered pre-training units picked by one method.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    pub method: SelectionMethod,
    pub selected: Vec<usize>,
    /// Similarity of each selected unit; absent for random and label selection.
    pub scores: Option<Vec<T>>,
    pub k_requested: usize,
    /// Number of pre-training units the selection was drawn from (`K_g`).
    pub universe: usize,
}

impl<T: Scalar> SelectionResult<T> {
    pub fn covers_all(&self) -> bool {
        self.selected.len() == self.universe
    }

    /// `rank,class_index,score` rows after a `#` header line. Scores are
    /// blank for methods without them.
    pub fn to_csv(&self, header_comment: &str) -> String {
        let mut out = format!("# {header_comment}\nrank,class_index,score\n");
        for (rank, &class) in self.selected.iter().enumerate() {
            let score = self
                .scores
                .as_ref()
                .map(|s| s[rank].to_f64_lossy().to_string())
                .unwrap_or_default();
            out.push_str(&format!("{rank},{class},{score}\n"));
        }
        out
    }
}

/// Reads back the `class_index` column (in rank order) and the `#` header
/// of a selection CSV.
pub fn parse_selection_csv(text: &str) -> Result<(Vec<usize>, String)> {
    let mut header = String::new();
    let mut classes = Vec::new();
    let mut seen_columns = false;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            header = comment.trim().to_string();
            continue;
        }
        if !seen_columns {
            if line != "rank,class_index,score" {
                return Err(Error::Parse {
                    row: line_no,
                    msg: "missing `rank,class_index,score` header".into(),
                });
            }
            seen_columns = true;
            continue;
        }
        let mut fields = line.split(',');
        let rank = fields.next().unwrap_or_default();
        let class = fields.next().ok_or_else(|| Error::Parse {
            row: line_no,
            msg: "missing class_index".into(),
        })?;
        if rank.trim().parse::<usize>().ok() != Some(classes.len()) {
            return Err(Error::Parse {
                row: line_no,
                msg: format!("expected rank {}, found `{rank}`", classes.len()),
            });
        }
        classes.push(class.trim().parse().map_err(|_| Error::Parse {
            row: line_no,
            msg: format!("bad class index `{class}`"),
        })?);
    }
    if !seen_columns {
        return Err(Error::invalid("selection file has no column header"));
    }
    Ok((classes, header))
}

/// Indices sorted by score descending, ties by ascending index.
pub fn rank_descending<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn top_k<T: Scalar>(method: SelectionMethod, scores: &[T], k: usize) -> SelectionResult<T> {
    let order = rank_descending(scores);
    let take = k.min(scores.len());
    let selected: Vec<usize> = order[..take].to_vec();
    let picked = selected.iter().map(|&j| scores[j]).collect();
    SelectionResult {
        method,
        selected,
        scores: Some(picked),
        k_requested: k,
        universe: scores.len(),
    }
}

/// Ranks pre-training units by the row marginal `P·1` of the unbalanced plan
/// against the target, both sides carrying unit mass per class.
pub fn select_uot<T: Scalar>(
    pre: &CentroidSet<T>,
    target: &CentroidSet<T>,
    params: &UotParams<T>,
    metric: CostMetric,
    epsilon_c: T,
    k: usize,
) -> Result<(SelectionResult<T>, TransportPlan<T>)> {
    if k == 0 {
        return Err(Error::invalid("k must be ≥ 1"));
    }
    let cost = build_cost(pre, target, metric, epsilon_c)?;
    let plan = sinkhorn_unbalanced(&cost, pre.masses(), target.masses(), params)?;
    let result = top_k(SelectionMethod::Uot, plan.row_marginal(), k);
    Ok((result, plan))
}

fn distance<T: Scalar>(metric: CostMetric, a: &[T], b: &[T]) -> Result<T> {
    match metric {
        CostMetric::L2 => Ok(l2_distance(a, b)),
        CostMetric::Cosine => {
            let n = norm(a) * norm(b);
            if !(n > T::zero()) {
                return Err(Error::ZeroNorm {
                    what: "centroid",
                    index: 0,
                });
            }
            Ok((T::one() - dot(a, b) / n).max(T::zero()))
        }
        CostMetric::Precomputed => Err(Error::invalid(
            "greedy selection needs a cosine or l2 metric",
        )),
    }
}

/// Per-class baseline: `s_j = Σ_i exp(-d(b_j, a_i) / γ)` over target centroids,
/// with no coupling between pre-training classes. `gamma = None` uses the
/// mean pre-training/target distance (or 1 when that is zero).
pub fn select_greedy_ot<T: Scalar>(
    pre: &CentroidSet<T>,
    target: &CentroidSet<T>,
    metric: CostMetric,
    gamma: Option<T>,
    k: usize,
) -> Result<SelectionResult<T>> {
    if k == 0 {
        return Err(Error::invalid("k must be ≥ 1"));
    }
    if pre.dims() != target.dims() {
        return Err(Error::DimensionMismatch {
            expected: pre.dims(),
            found: target.dims(),
        });
    }
    let (kg, kf) = (pre.k(), target.k());
    let mut dist = Vec::with_capacity(kg * kf);
    for j in 0..kg {
        for i in 0..kf {
            dist.push(distance(metric, pre.centroid(j), target.centroid(i))?);
        }
    }
    let gamma = match gamma {
        Some(g) if g > T::zero() && g.is_finite() => g,
        Some(g) => return Err(Error::invalid(format!("gamma must be positive, got {g}"))),
        None => {
            let mean = dist.iter().copied().sum::<T>() / T::of_usize(dist.len());
            if mean > T::zero() {
                mean
            } else {
                T::one()
            }
        }
    };
    let scores: Vec<T> = dist
        .chunks_exact(kf)
        .map(|row| {
            row.iter()
                .fold(T::zero(), |acc, &d| acc + (-d / gamma).exp())
        })
        .collect();
    Ok(top_k(SelectionMethod::GreedyOt, &scores, k))
}

/// Uniform sample of `k` of `universe` units without replacement, sorted.
pub fn select_random<T: Scalar>(
    universe: usize,
    k: usize,
    seed: u64,
) -> Result<SelectionResult<T>> {
    if k == 0 {
        return Err(Error::invalid("k must be ≥ 1"));
    }
    if k > universe {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {universe} available units"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = rand::seq::index::sample(&mut rng, universe, k).into_vec();
    selected.sort_unstable();
    Ok(SelectionResult {
        method: SelectionMethod::Random,
        selected,
        scores: None,
        k_requested: k,
        universe,
    })
}

/// Wraps an explicit list of overlapping classes, order preserved.
pub fn select_by_label<T: Scalar>(
    overlap: &[usize],
    universe: usize,
) -> Result<SelectionResult<T>> {
    if overlap.is_empty() {
        return Err(Error::invalid("label selection needs at least one class"));
    }
    let mut seen = BTreeSet::new();
    for &c in overlap {
        if c >= universe {
            return Err(Error::invalid(format!(
                "class index {c} out of range [0, {universe})"
            )));
        }
        if !seen.insert(c) {
            return Err(Error::invalid(format!("class index {c} listed twice")));
        }
    }
    Ok(SelectionResult {
        method: SelectionMethod::Label,
        selected: overlap.to_vec(),
        scores: None,
        k_requested: overlap.len(),
        universe,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecallSpec {
    pub relevant: BTreeSet<usize>,
    pub top_k: usize,
}

/// `|relevant ∩ first top_k selected| / |relevant|`.
pub fn recall_rate<T: Scalar>(result: &SelectionResult<T>, spec: &RecallSpec) -> Result<f64> {
    recall_of_ranking(&result.selected, result.covers_all(), spec)
}

/// Same metric over a bare ranking, e.g. one read back from a selection file.
/// `exhaustive` states the ranking lists every unit.
pub fn recall_of_ranking(ranking: &[usize], exhaustive: bool, spec: &RecallSpec) -> Result<f64> {
    if spec.relevant.is_empty() {
        return Err(Error::invalid("relevant set is empty"));
    }
    if spec.top_k == 0 {
        return Err(Error::invalid("top_k must be ≥ 1"));
    }
    if spec.top_k > ranking.len() && !exhaustive {
        return Err(Error::invalid(format!(
            "top_k = {} exceeds the {} selected units",
            spec.top_k,
            ranking.len()
        )));
    }
    let hits = ranking
        .iter()
        .take(spec.top_k)
        .filter(|c| spec.relevant.contains(c))
        .count();
    Ok(hits as f64 / spec.relevant.len() as f64)
}

/// `recall=<value> top_k=<k> relevant=<n>`
pub fn recall_line(recall: f64, spec: &RecallSpec) -> String {
    format!(
        "recall={recall:.6} top_k={} relevant={}",
        spec.top_k,
        spec.relevant.len()
    )
}
