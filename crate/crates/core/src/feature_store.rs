//! Feature matrices, label maps, and class/cluster centroid measures.
//!
//! Binary feature file layout (little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `FSEL` |
//! | 4 | `u32` version, always 1 |
//! | 4 | `u32` rows |
//! | 4 | `u32` dims |
//! | 4·rows·dims | `f32` values, row-major |
//!
//! Centroid files use magic `CSEL`, the same version/K/dims header, then
//! `K·dims` `f64` values followed by `K` `u32` member counts.
//!
//! Values are widened to the in-memory scalar on load, so a file written as
//! `f32` is still computed on in 64-bit precision when loaded as `f64`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const FEATURE_MAGIC: &[u8; 4] = b"FSEL";
const CENTROID_MAGIC: &[u8; 4] = b"CSEL";
const FORMAT_VERSION: u32 = 1;

/// On-disk encoding of a feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Binary,
    Csv,
}

impl std::str::FromStr for FeatureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" | "binary" => Ok(FeatureFormat::Binary),
            "csv" => Ok(FeatureFormat::Csv),
            other => Err(Error::invalid(format!("unknown feature format `{other}`"))),
        }
    }
}

impl FeatureFormat {
    /// Guesses the format from a file extension; anything but `.csv` is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureFormat::Csv,
            _ => FeatureFormat::Binary,
        }
    }
}

/// Dense row-major matrix of embedding vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    rows: usize,
    dims: usize,
    data: Vec<T>,
    ids: Option<Vec<String>>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(rows: usize, dims: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::invalid("rows must be ≥ 1"));
        }
        if dims == 0 {
            return Err(Error::invalid("dims must be ≥ 1"));
        }
        if data.len() != rows * dims {
            return Err(Error::DimensionMismatch {
                expected: rows * dims,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims,
                col: pos % dims,
            });
        }
        Ok(Self {
            rows,
            dims,
            data,
            ids: None,
        })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dims = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dims);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dims {
                return Err(Error::Parse {
                    row: r,
                    msg: format!("expected {dims} columns, found {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), dims, data)
    }

    /// Attaches per-row identifiers; they must be distinct and one per row.
    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: ids.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate row id `{id}`")));
            }
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dims)
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            rows: self.rows,
            dims: self.dims,
            data: self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
            ids: self.ids.clone(),
        }
    }
}

/// Per-row class or cluster assignment over a contiguous index space `[0, K)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    assignments: Vec<usize>,
    k: usize,
    names: Option<Vec<String>>,
}

impl LabelMap {
    /// Validates that every label is below `k` and every class is populated.
    /// When `k` is `None` it is inferred as `max(label) + 1`.
    pub fn new(assignments: Vec<usize>, k: Option<usize>) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::invalid("label map has no rows"));
        }
        let k = k.unwrap_or_else(|| assignments.iter().max().map_or(0, |m| m + 1));
        let mut counts = vec![0usize; k];
        for (row, &label) in assignments.iter().enumerate() {
            if label >= k {
                return Err(Error::LabelOutOfRange { row, label, k });
            }
            counts[label] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass(empty));
        }
        Ok(Self {
            assignments,
            k,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.assignments {
            counts[l] += 1;
        }
        counts
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,label\n");
        for (row, label) in self.assignments.iter().enumerate() {
            out.push_str(&format!("{row},{label}\n"));
        }
        out
    }

    /// Parses a `row,label` CSV. Rows must start at 0 and increase by one.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("row,label") => {}
            _ => {
                return Err(Error::Parse {
                    row: 0,
                    msg: "missing `row,label` header".into(),
                })
            }
        }
        let mut assignments = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let next = assignments.len();
            let (row, label) = line.split_once(',').ok_or_else(|| Error::Parse {
                row: next,
                msg: format!("expected `row,label`, found `{line}`"),
            })?;
            let row: usize = row.trim().parse().map_err(|_| Error::Parse {
                row: next,
                msg: format!("bad row index `{row}`"),
            })?;
            let label: usize = label.trim().parse().map_err(|_| Error::Parse {
                row,
                msg: format!("bad label `{label}`"),
            })?;
            if row < next {
                return Err(Error::Parse {
                    row,
                    msg: "row indices must be strictly increasing".into(),
                });
            }
            if row > next {
                return Err(Error::Parse {
                    row: next,
                    msg: "row missing from label file".into(),
                });
            }
            assignments.push(label);
        }
        Self::new(assignments, None)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Class/cluster means carrying unit mass each.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet<T> {
    k: usize,
    dims: usize,
    centroids: Vec<T>,
    masses: Vec<T>,
    member_counts: Vec<u32>,
}

impl<T: Scalar> CentroidSet<T> {
    pub fn new(k: usize, dims: usize, centroids: Vec<T>, member_counts: Vec<u32>) -> Result<Self> {
        if k == 0 || dims == 0 {
            return Err(Error::invalid("centroid set needs K ≥ 1 and dims ≥ 1"));
        }
        if centroids.len() != k * dims {
            return Err(Error::DimensionMismatch {
                expected: k * dims,
                found: centroids.len(),
            });
        }
        if member_counts.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: member_counts.len(),
            });
        }
        if let Some(pos) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims,
                col: pos % dims,
            });
        }
        if let Some(empty) = member_counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass(empty));
        }
        Ok(Self {
            k,
            dims,
            centroids,
            masses: vec![T::one(); k],
            member_counts,
        })
    }

    /// One centroid per row, each standing for a single member.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let fm = FeatureMatrix::from_rows(rows)?;
        Self::new(fm.rows, fm.dims, fm.data, vec![1; rows.len()])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn centroids(&self) -> &[T] {
        &self.centroids
    }

    #[inline]
    pub fn centroid(&self, i: usize) -> &[T] {
        &self.centroids[i * self.dims..(i + 1) * self.dims]
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn member_counts(&self) -> &[u32] {
        &self.member_counts
    }

    pub fn cast<U: Scalar>(&self) -> CentroidSet<U> {
        CentroidSet {
            k: self.k,
            dims: self.dims,
            centroids: self
                .centroids
                .iter()
                .map(|v| U::of(v.to_f64_lossy()))
                .collect(),
            masses: vec![U::one(); self.k],
            member_counts: self.member_counts.clone(),
        }
    }
}

/// Arithmetic mean of each class, accumulated in ascending row order.
pub fn compute_centroids<T: Scalar>(
    features: &FeatureMatrix<T>,
    labels: &LabelMap,
) -> Result<CentroidSet<T>> {
    if labels.assignments.len() != features.rows {
        return Err(Error::DimensionMismatch {
            expected: features.rows,
            found: labels.assignments.len(),
        });
    }
    let (k, dims) = (labels.k, features.dims);
    let mut sums = vec![T::zero(); k * dims];
    let mut counts = vec![0u32; k];
    for (row, &label) in labels.assignments.iter().enumerate() {
        if label >= k {
            return Err(Error::LabelOutOfRange { row, label, k });
        }
        counts[label] += 1;
        let acc = &mut sums[label * dims..(label + 1) * dims];
        for (a, &x) in acc.iter_mut().zip(features.row(row)) {
            *a = *a + x;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty));
    }
    for (class, chunk) in sums.chunks_exact_mut(dims).enumerate() {
        let n = T::of(counts[class] as f64);
        chunk.iter_mut().for_each(|v| *v = *v / n);
    }
    CentroidSet::new(k, dims, sums, counts)
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let b = bytes.get(at..at + 4).ok_or(Error::UnexpectedEof)?;
    Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
}

fn read_header(bytes: &[u8], magic: &[u8; 4], kind: &'static str) -> Result<(usize, usize)> {
    let head = bytes.get(..4).ok_or(Error::UnexpectedEof)?;
    if head != magic {
        return Err(Error::BadMagic(kind));
    }
    let version = read_u32(bytes, 4)?;
    if version != FORMAT_VERSION {
        return Err(Error::BadVersion {
            kind,
            found: version,
        });
    }
    Ok((read_u32(bytes, 8)? as usize, read_u32(bytes, 12)? as usize))
}

fn write_header(out: &mut Vec<u8>, magic: &[u8; 4], a: usize, b: usize) -> Result<()> {
    let to_u32 = |v: usize| {
        u32::try_from(v)
            .map_err(|_| Error::invalid(format!("{v} does not fit in a u32 header field")))
    };
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(a)?.to_le_bytes());
    out.extend_from_slice(&to_u32(b)?.to_le_bytes());
    Ok(())
}

/// Decodes the binary feature layout from memory.
pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix<f64>> {
    let (rows, dims) = read_header(bytes, FEATURE_MAGIC, "feature")?;
    if rows == 0 {
        return Err(Error::invalid("rows must be ≥ 1"));
    }
    if dims == 0 {
        return Err(Error::invalid("dims must be ≥ 1"));
    }
    let body = &bytes[16..];
    let need = rows
        .checked_mul(dims)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::invalid("feature header sizes overflow"))?;
    if body.len() < need {
        return Err(Error::UnexpectedEof);
    }
    if body.len() > need {
        return Err(Error::invalid(format!(
            "{} trailing bytes after feature data",
            body.len() - need
        )));
    }
    let mut data = Vec::with_capacity(rows * dims);
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: i / dims,
                col: i % dims,
            });
        }
        data.push(f64::from(v));
    }
    FeatureMatrix::new(rows, dims, data)
}

/// Parses comma-separated rows without a header. Errors name the 0-based row.
pub fn parse_features_csv(text: &str) -> Result<FeatureMatrix<f64>> {
    let mut lines: Vec<&str> = text.lines().collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(Error::invalid("rows must be ≥ 1"));
    }
    let mut dims = None;
    let mut data = Vec::new();
    for (row, line) in lines.iter().enumerate() {
        let mut n = 0;
        for (col, field) in line.split(',').enumerate() {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                msg: format!("column {col}: cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            data.push(v);
            n += 1;
        }
        match dims {
            None => dims = Some(n),
            Some(d) if d != n => {
                return Err(Error::Parse {
                    row,
                    msg: format!("expected {d} columns, found {n}"),
                })
            }
            Some(_) => {}
        }
    }
    FeatureMatrix::new(lines.len(), dims.unwrap_or(0), data)
}

pub fn load_features(path: &Path, format: FeatureFormat) -> Result<FeatureMatrix<f64>> {
    match format {
        FeatureFormat::Binary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_features(&bytes)
        }
        FeatureFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_features_csv(&text)
        }
    }
}

/// Encodes features in the binary layout. Values are narrowed to `f32`.
pub fn encode_features<T: Scalar>(fm: &FeatureMatrix<T>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + fm.data.len() * 4);
    write_header(&mut out, FEATURE_MAGIC, fm.rows, fm.dims)?;
    for v in &fm.data {
        out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn save_features<T: Scalar>(
    fm: &FeatureMatrix<T>,
    path: &Path,
    format: FeatureFormat,
) -> Result<()> {
    let bytes = match format {
        FeatureFormat::Binary => encode_features(fm)?,
        FeatureFormat::Csv => {
            let mut out = String::new();
            for row in fm.iter_rows() {
                let fields: Vec<String> =
                    row.iter().map(|v| v.to_f64_lossy().to_string()).collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_centroids(cs: &CentroidSet<f64>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + cs.centroids.len() * 8 + cs.k * 4);
    write_header(&mut out, CENTROID_MAGIC, cs.k, cs.dims)?;
    for v in &cs.centroids {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in &cs.member_counts {
        out.extend_from_slice(&c.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_centroids(bytes: &[u8]) -> Result<CentroidSet<f64>> {
    let (k, dims) = read_header(bytes, CENTROID_MAGIC, "centroid")?;
    let n = k
        .checked_mul(dims)
        .ok_or_else(|| Error::invalid("centroid header sizes overflow"))?;
    let need = n * 8 + k * 4;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::UnexpectedEof);
    }
    if body.len() > need {
        return Err(Error::invalid(format!(
            "{} trailing bytes after centroid data",
            body.len() - need
        )));
    }
    let (values, counts) = body.split_at(n * 8);
    let centroids = values
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let member_counts = counts
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    CentroidSet::new(k, dims, centroids, member_counts)
}

pub fn save_centroids(cs: &CentroidSet<f64>, path: &Path) -> Result<()> {
    fs::write(path, encode_centroids(cs)?).map_err(|e| Error::io(path, e))
}

pub fn load_centroids(path: &Path) -> Result<CentroidSet<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_centroids(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn csv_features_parse() {
        let fm = parse_features_csv("1,0\n0,1\n1,1\n").unwrap();
        assert_eq!((fm.rows(), fm.dims()), (3, 2));
        assert_eq!(fm.row(2), &[1.0, 1.0]);
    }

    #[test]
    fn csv_parse_error_names_row() {
        let err = parse_features_csv("0,0\n1,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }), "{err}");
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn csv_ragged_rows_rejected() {
        let err = parse_features_csv("1,2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn csv_rejects_nan() {
        let err = parse_features_csv("1,2\nNaN,3\n").unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn binary_zero_rows_rejected() {
        let mut bytes = b"FSEL".to_vec();
        for v in [1u32, 0, 4] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let err = decode_features(&bytes).unwrap_err();
        assert_eq!(err.to_string(), "invalid input: rows must be ≥ 1");
    }

    #[test]
    fn binary_roundtrip_and_errors() {
        let fm = FeatureMatrix::new(2, 3, vec![0.5, -1.0, 2.0, 3.25, 0.0, 1.0]).unwrap();
        let bytes = encode_features(&fm).unwrap();
        assert_eq!(decode_features(&bytes).unwrap(), fm);
        assert!(matches!(
            decode_features(&bytes[..bytes.len() - 1]),
            Err(Error::UnexpectedEof)
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_features(&bad),
            Err(Error::BadMagic("feature"))
        ));
        let mut inf = bytes;
        inf[16 + 4 * 4..16 + 5 * 4].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            decode_features(&inf),
            Err(Error::NonFinite { row: 1, col: 1 })
        ));
    }

    #[test]
    fn ids_must_be_distinct() {
        let fm = FeatureMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(fm.clone().with_ids(vec!["a".into(), "a".into()]).is_err());
        assert!(fm.clone().with_ids(vec!["a".into()]).is_err());
        assert_eq!(
            fm.with_ids(vec!["a".into(), "b".into()])
                .unwrap()
                .ids()
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn label_csv_rules() {
        let lm = LabelMap::parse_csv("row,label\n0,1\n1,0\n2,1\n").unwrap();
        assert_eq!(lm.k(), 2);
        assert_eq!(lm.counts(), vec![1, 2]);
        assert_eq!(LabelMap::parse_csv(&lm.to_csv()).unwrap(), lm);
        assert!(LabelMap::parse_csv("0,1\n").is_err());
        assert!(LabelMap::parse_csv("row,label\n0,0\n0,1\n").is_err());
        assert!(LabelMap::parse_csv("row,label\n0,0\n2,0\n").is_err());
        // label 1 never used while 2 is
        assert!(matches!(
            LabelMap::parse_csv("row,label\n0,0\n1,2\n"),
            Err(Error::EmptyClass(1))
        ));
    }

    #[test]
    fn label_out_of_range() {
        let err = LabelMap::new(vec![0, 3], Some(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::LabelOutOfRange {
                row: 1,
                label: 3,
                k: 2
            }
        ));
    }

    #[test]
    fn centroid_of_singletons_is_the_row() {
        let fm = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let cs = compute_centroids(&fm, &LabelMap::new(vec![0, 1], None).unwrap()).unwrap();
        assert_eq!(cs.centroid(0), fm.row(0));
        assert_eq!(cs.centroid(1), fm.row(1));
        assert_eq!(cs.masses(), &[1.0, 1.0]);
    }

    #[test]
    fn two_point_mean() {
        let fm =
            FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![5.0, 5.0], vec![2.0, 2.0]]).unwrap();
        let cs = compute_centroids(&fm, &LabelMap::new(vec![0, 1, 0], None).unwrap()).unwrap();
        assert_eq!(cs.centroid(0), &[1.0, 1.0]);
        assert_eq!(cs.member_counts(), &[2, 1]);
    }

    #[test]
    fn centroids_match_naive_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (rows, dims, k) = (50, 8, 5);
        let data: Vec<f64> = (0..rows * dims)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mut labels: Vec<usize> = (0..rows).map(|i| i % k).collect();
        labels.swap(3, 17);
        let fm = FeatureMatrix::new(rows, dims, data).unwrap();
        let cs = compute_centroids(&fm, &LabelMap::new(labels.clone(), None).unwrap()).unwrap();
        for class in 0..k {
            let members: Vec<usize> = (0..rows).filter(|&r| labels[r] == class).collect();
            for d in 0..dims {
                let mut s = 0.0;
                for &r in &members {
                    s += fm.data()[r * dims + d];
                }
                let mean = s / members.len() as f64;
                assert!((cs.centroid(class)[d] - mean).abs() < 1e-15);
            }
        }
        assert_eq!(cs.member_counts().iter().sum::<u32>() as usize, rows);
    }

    #[test]
    fn centroid_label_count_mismatch() {
        let fm = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let lm = LabelMap::new(vec![0], None).unwrap();
        assert!(matches!(
            compute_centroids(&fm, &lm),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn centroid_file_errors() {
        let cs = CentroidSet::new(2, 2, vec![0.1, 0.2, 0.3, 0.4], vec![3, 1]).unwrap();
        let bytes = encode_centroids(&cs).unwrap();
        assert_eq!(decode_centroids(&bytes).unwrap(), cs);
        let err = decode_centroids(&bytes[..bytes.len() - 2]).unwrap_err();
        assert_eq!(err.to_string(), "unexpected end of file");
        let err = decode_centroids(b"FSEL\x01\x00\x00\x00").unwrap_err();
        assert_eq!(err.to_string(), "not a centroid file");
        let mut v2 = bytes;
        v2[4] = 2;
        assert!(matches!(
            decode_centroids(&v2),
            Err(Error::BadVersion { found: 2, .. })
        ));
    }
}
