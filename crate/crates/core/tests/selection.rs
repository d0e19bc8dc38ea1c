mod common;

use std::collections::BTreeSet;

use common::{centroids, rng};
use ot_select::feature_store::CentroidSet;
use ot_select::ot_core::{CostMetric, UotParams};
use ot_select::selection::{
    parse_selection_csv, rank_descending, recall_rate, select_by_label, select_greedy_ot,
    select_random, select_uot, RecallSpec,
};
use proptest::prelude::*;

#[test]
fn random_selection_is_uniform() {
    let draws = 10_000;
    let mut hits = 0usize;
    for seed in 0..draws {
        let res = select_random::<f64>(10, 3, seed).unwrap();
        hits += usize::from(res.selected.contains(&4));
    }
    let freq = hits as f64 / draws as f64;
    assert!((freq - 0.3).abs() < 0.02, "{freq}");
}

#[test]
fn selection_csv_round_trip() {
    let mut r = rng(3);
    let pre = centroids(&mut r, 6, 4);
    let tgt = centroids(&mut r, 2, 4);
    let (res, _) = select_uot(
        &pre,
        &tgt,
        &UotParams::default(),
        CostMetric::Cosine,
        0.01,
        4,
    )
    .unwrap();
    let text = res.to_csv("method=uot universe=6");
    let (ranking, header) = parse_selection_csv(&text).unwrap();
    assert_eq!(ranking, res.selected);
    assert!(header.contains("universe=6"));
}

#[test]
fn label_selection_passes_through() {
    let res = select_by_label::<f64>(&[4, 1, 7], 10).unwrap();
    assert_eq!(res.selected, vec![4, 1, 7]);
    assert!(select_by_label::<f64>(&[4, 4], 10).is_err());
    assert!(select_by_label::<f64>(&[10], 10).is_err());
}

#[test]
fn recall_needs_enough_ranked_units() {
    let res = select_random::<f64>(10, 3, 0).unwrap();
    let spec = RecallSpec {
        relevant: BTreeSet::from([1]),
        top_k: 5,
    };
    assert!(recall_rate(&res, &spec).is_err());
}

#[test]
fn rejects_k_too_large_or_zero() {
    assert!(select_random::<f64>(5, 6, 0).is_err());
    assert!(select_random::<f64>(5, 0, 0).is_err());
    let pre = CentroidSet::from_rows(&[vec![1.0, 0.0]]).unwrap();
    assert!(select_greedy_ot(&pre, &pre, CostMetric::L2, None, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn uot_selection_invariants(kg in 1usize..9, kf in 1usize..4, k in 1usize..12, seed in any::<u64>()) {
        let mut r = rng(seed);
        let pre = centroids(&mut r, kg, 3);
        let tgt = centroids(&mut r, kf, 3);
        let (res, plan) = select_uot(&pre, &tgt, &UotParams::default(), CostMetric::Cosine, 0.01, k).unwrap();
        prop_assert_eq!(res.selected.len(), k.min(kg));
        let distinct: BTreeSet<_> = res.selected.iter().collect();
        prop_assert_eq!(distinct.len(), res.selected.len());
        let scores = res.scores.clone().unwrap();
        prop_assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        for (&j, &s) in res.selected.iter().zip(&scores) {
            prop_assert_eq!(plan.row_marginal()[j], s);
        }
        // the chosen set dominates everything left out
        let worst = scores.last().copied().unwrap();
        for j in (0..kg).filter(|j| !res.selected.contains(j)) {
            prop_assert!(plan.row_marginal()[j] <= worst);
        }
    }

    #[test]
    fn uot_selection_is_permutation_equivariant(kg in 2usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let rows = common::gaussian_rows(&mut r, kg, 3);
        let tgt = centroids(&mut r, 2, 3);
        let mut perm: Vec<usize> = (0..kg).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&j| rows[j].clone()).collect();
        let pre = CentroidSet::from_rows(&rows).unwrap();
        let pre_p = CentroidSet::from_rows(&shuffled).unwrap();
        let params = UotParams { tol: 1e-12, ..UotParams::default() };
        let (a, _) = select_uot(&pre, &tgt, &params, CostMetric::Cosine, 0.01, kg).unwrap();
        let (b, _) = select_uot(&pre_p, &tgt, &params, CostMetric::Cosine, 0.01, kg).unwrap();
        let sa = a.scores.unwrap();
        let sb = b.scores.unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        // mapped back, the orderings agree up to near-ties
        let mapped: Vec<usize> = b.selected.iter().map(|&j| perm[j]).collect();
        for (pos, (&x, &y)) in a.selected.iter().zip(&mapped).enumerate() {
            if x != y {
                prop_assert!((sa[pos] - sb[pos]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn greedy_is_deterministic_and_sorted(kg in 1usize..9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let pre = centroids(&mut r, kg, 3);
        let tgt = centroids(&mut r, 3, 3);
        let a = select_greedy_ot(&pre, &tgt, CostMetric::L2, None, kg).unwrap();
        let b = select_greedy_ot(&pre, &tgt, CostMetric::L2, None, kg).unwrap();
        prop_assert_eq!(&a, &b);
        let s = a.scores.unwrap();
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ranking_breaks_ties_by_index(scores in prop::collection::vec(0u8..4, 1..20)) {
        let s: Vec<f64> = scores.iter().map(|&x| f64::from(x)).collect();
        let order = rank_descending(&s);
        for w in order.windows(2) {
            prop_assert!(s[w[0]] > s[w[1]] || (s[w[0]] == s[w[1]] && w[0] < w[1]));
        }
    }

    #[test]
    fn recall_is_monotone_in_top_k(universe in 2usize..30, seed in any::<u64>(), rel in prop::collection::btree_set(0usize..30, 1..6)) {
        let relevant: BTreeSet<usize> = rel.into_iter().filter(|&c| c < universe).collect();
        prop_assume!(!relevant.is_empty());
        let res = select_random::<f64>(universe, universe, seed).unwrap();
        let mut last = 0.0;
        for top_k in 1..=universe {
            let r = recall_rate(&res, &RecallSpec { relevant: relevant.clone(), top_k }).unwrap();
            prop_assert!(r >= last && (0.0..=1.0).contains(&r));
            last = r;
        }
        prop_assert_eq!(last, 1.0);
    }
}
