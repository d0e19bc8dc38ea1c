//! Regenerates the files under `fixtures/`.
//!
//!     cargo run --example make_fixtures -- crates/core/fixtures

use std::path::PathBuf;

use ot_select::feature_store::{
    save_centroids, save_features, CentroidSet, FeatureFormat, FeatureMatrix, LabelMap,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DIMS: usize = 8;
const PRE_CLASSES: usize = 10;
const PER_CLASS: usize = 20;
const PLANTED: [usize; 3] = [2, 5, 7];
const TARGET_PER_CLASS: usize = 10;

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn around(rng: &mut ChaCha8Rng, center: &[f64], noise: f64) -> Vec<f64> {
    let jitter = gaussian(rng, center.len());
    center
        .iter()
        .zip(jitter)
        .map(|(c, j)| c + noise * j)
        .collect()
}

fn main() -> ot_select::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).map_err(|e| ot_select::Error::io(&dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);

    let directions: Vec<Vec<f64>> = (0..PRE_CLASSES)
        .map(|_| unit(gaussian(&mut rng, DIMS)))
        .collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, d) in directions.iter().enumerate() {
        for _ in 0..PER_CLASS {
            rows.push(around(&mut rng, d, 0.15));
            labels.push(c);
        }
    }
    save_features(
        &FeatureMatrix::from_rows(&rows)?,
        &dir.join("pre_features.bin"),
        FeatureFormat::Binary,
    )?;
    LabelMap::new(labels, Some(PRE_CLASSES))?.save(&dir.join("pre_labels.csv"))?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (t, &c) in PLANTED.iter().enumerate() {
        let shifted = around(&mut rng, &directions[c], 0.05);
        for _ in 0..TARGET_PER_CLASS {
            rows.push(around(&mut rng, &shifted, 0.15));
            labels.push(t);
        }
    }
    save_features(
        &FeatureMatrix::from_rows(&rows)?,
        &dir.join("target_features.csv"),
        FeatureFormat::Csv,
    )?;
    LabelMap::new(labels, Some(PLANTED.len()))?.save(&dir.join("target_labels.csv"))?;

    let relevant: Vec<String> = PLANTED.iter().map(usize::to_string).collect();
    let path = dir.join("relevant.txt");
    std::fs::write(&path, relevant.join(",") + "\n").map_err(|e| ot_select::Error::io(&path, e))?;

    // Planted copies: 5 target centroids duplicated among 20 pre-training
    // centroids, the other 15 orthogonal to every target.
    let basis = |i: usize| {
        (0..20)
            .map(|k| if k == i { 1.0 } else { 0.0 })
            .collect::<Vec<f64>>()
    };
    let target: Vec<Vec<f64>> = (0..5).map(basis).collect();
    let mut slots: Vec<usize> = (0..20).collect();
    slots.shuffle(&mut rng);
    let copies = &slots[..5];
    let mut pre = vec![Vec::new(); 20];
    for (t, &slot) in copies.iter().enumerate() {
        pre[slot] = target[t].clone();
    }
    for (other, &slot) in slots[5..].iter().enumerate() {
        pre[slot] = basis(5 + other);
    }
    save_centroids(
        &CentroidSet::from_rows(&pre)?,
        &dir.join("planted_pre.cent"),
    )?;
    save_centroids(
        &CentroidSet::from_rows(&target)?,
        &dir.join("planted_target.cent"),
    )?;
    let mut copies = copies.to_vec();
    copies.sort_unstable();
    let relevant: Vec<String> = copies.iter().map(usize::to_string).collect();
    let path = dir.join("planted_relevant.txt");
    std::fs::write(&path, relevant.join(",") + "\n").map_err(|e| ot_select::Error::io(&path, e))?;
    Ok(())
}
