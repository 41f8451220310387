//! Multi-domain fairness datasets: examples, splits, and the tabular on-disk
//! format.
//!
//! An example is a `(features, sensitive, label)` triple with `sensitive` in
//! `{-1, +1}` and `label` in `{0, 1}`. A domain is an ordered collection of
//! examples sharing one feature dimension. The on-disk format is
//! delimiter-separated text with header `domain,z,y,x0,...,x{d-1}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One observation: feature vector, sensitive attribute in {-1,+1}, label in {0,1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub sensitive: i8,
    pub label: u8,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, sensitive: i8, label: u8) -> Result<Self> {
        if sensitive != -1 && sensitive != 1 {
            return Err(Error::InvalidSpec(format!(
                "sensitive attribute must be -1 or +1, got {sensitive}"
            )));
        }
        if label > 1 {
            return Err(Error::InvalidSpec(format!(
                "label must be 0 or 1, got {label}"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(
                "features contain a non-finite value".into(),
            ));
        }
        Ok(Self {
            features,
            sensitive,
            label,
        })
    }
}

/// A named domain: examples drawn from one joint distribution.
///
/// `declared_rho` is generator metadata; metrics always recompute the
/// dependence score from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDataset {
    pub domain_id: String,
    pub examples: Vec<LabeledExample>,
    pub declared_rho: Option<f64>,
}

impl DomainDataset {
    pub fn new(
        domain_id: impl Into<String>,
        examples: Vec<LabeledExample>,
        declared_rho: Option<f64>,
    ) -> Result<Self> {
        let ds = Self {
            domain_id: domain_id.into(),
            examples,
            declared_rho,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if let Some(first) = self.examples.first() {
            let d = first.features.len();
            if let Some(bad) = self.examples.iter().position(|e| e.features.len() != d) {
                return Err(Error::DimensionMismatch(format!(
                    "example {bad} in domain {} has dimension {} != {d}",
                    self.domain_id,
                    self.examples[bad].features.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Feature dimension, or 0 for an empty dataset.
    pub fn feature_dim(&self) -> usize {
        self.examples.first().map_or(0, |e| e.features.len())
    }

    /// Counts per (sensitive, label) cell.
    pub fn cell_counts(&self) -> BTreeMap<(i8, u8), usize> {
        let mut counts = BTreeMap::new();
        for e in &self.examples {
            *counts.entry((e.sensitive, e.label)).or_insert(0) += 1;
        }
        counts
    }
}

/// Fractions and seed for a stratified train/validation/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(train_fraction: f64, validation_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "train_fraction must be in (0,1), got {train_fraction}"
            )));
        }
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "validation_fraction must be in (0,1), got {validation_fraction}"
            )));
        }
        if train_fraction + validation_fraction > 1.0 + 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "train + validation fractions exceed 1: {}",
                train_fraction + validation_fraction
            )));
        }
        Ok(Self {
            train_fraction,
            validation_fraction,
            seed,
        })
    }

    fn test_fraction(&self) -> f64 {
        (1.0 - self.train_fraction - self.validation_fraction).max(0.0)
    }
}

/// Empirical dependence score |P(Y=1|Z=1) - P(Y=1|Z=-1)| of a labeled dataset.
///
/// Computed directly from the conditional rates; the algebraic identity with
/// the mean linear gap is covered by tests against `metrics::rho`.
pub fn dependence_score(dataset: &DomainDataset) -> Result<f64> {
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    let mut y1_pos = 0usize;
    let mut y1_neg = 0usize;
    for e in &dataset.examples {
        if e.sensitive == 1 {
            n_pos += 1;
            y1_pos += e.label as usize;
        } else {
            n_neg += 1;
            y1_neg += e.label as usize;
        }
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::EmptyGroup(format!(
            "domain {}: z=+1 count {n_pos}, z=-1 count {n_neg}",
            dataset.domain_id
        )));
    }
    let rate_pos = y1_pos as f64 / n_pos as f64;
    let rate_neg = y1_neg as f64 / n_neg as f64;
    Ok((rate_pos - rate_neg).abs())
}

/// Deterministic stratified split on (z, y) cells.
///
/// Every nonempty cell is shuffled with a seed derived from the plan seed and
/// the cell identity, then cut by cumulative rounded fractions, so each cell's
/// train count stays within one example of `train_fraction * cell_size`.
pub fn split(
    dataset: &DomainDataset,
    plan: &SplitPlan,
) -> Result<(DomainDataset, DomainDataset, DomainDataset)> {
    if dataset.is_empty() {
        return Err(Error::TooSmall(format!(
            "domain {} is empty",
            dataset.domain_id
        )));
    }
    // Train and validation fractions are strictly positive by construction.
    let n_splits = if plan.test_fraction() > 1e-12 { 3 } else { 2 };

    let mut cells: BTreeMap<(i8, u8), Vec<usize>> = BTreeMap::new();
    for (i, e) in dataset.examples.iter().enumerate() {
        cells.entry((e.sensitive, e.label)).or_default().push(i);
    }
    for (&(z, y), members) in &cells {
        if members.len() < n_splits {
            return Err(Error::TooSmall(format!(
                "cell (z={z}, y={y}) has {} examples but the split needs {n_splits}",
                members.len()
            )));
        }
    }

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for ((z, y), mut members) in cells {
        let cell_seed = plan
            .seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(fnv1a(&[b'c', z as u8, y]));
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
        members.shuffle(&mut rng);
        let n = members.len() as f64;
        let n_train = (plan.train_fraction * n).round() as usize;
        let n_train_val =
            ((plan.train_fraction + plan.validation_fraction) * n).round() as usize;
        let n_train = n_train.min(members.len());
        let n_train_val = n_train_val.clamp(n_train, members.len());
        train.extend(members[..n_train].iter().copied());
        val.extend(members[n_train..n_train_val].iter().copied());
        test.extend(members[n_train_val..].iter().copied());
    }
    // Keep the original example order inside each part.
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();

    let pick = |idx: &[usize]| -> DomainDataset {
        DomainDataset {
            domain_id: dataset.domain_id.clone(),
            examples: idx.iter().map(|&i| dataset.examples[i].clone()).collect(),
            declared_rho: dataset.declared_rho,
        }
    };
    Ok((pick(&train), pick(&val), pick(&test)))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stable 64-bit seed derived from a base seed and a string tag.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    fnv1a(tag.as_bytes()) ^ base.wrapping_mul(0x9e3779b97f4a7c15)
}

/// Write datasets in the tabular text format, one row per example.
pub fn save_tabular(datasets: &[DomainDataset], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let d = datasets
        .iter()
        .find(|ds| !ds.is_empty())
        .map_or(0, |ds| ds.feature_dim());
    for ds in datasets {
        if !ds.is_empty() && ds.feature_dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "domain {} has dimension {} but the file carries {d}",
                ds.domain_id,
                ds.feature_dim()
            )));
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut header = String::from("domain,z,y");
    for i in 0..d {
        header.push_str(&format!(",x{i}"));
    }
    writeln!(w, "{header}").map_err(|e| Error::io(path.display().to_string(), e))?;
    for ds in datasets {
        for e in &ds.examples {
            let mut row = format!("{},{},{}", ds.domain_id, e.sensitive, e.label);
            for v in &e.features {
                row.push(',');
                row.push_str(&v.to_string());
            }
            writeln!(w, "{row}").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Load datasets from the tabular text format, grouped by domain in order of
/// first appearance. Errors carry 1-based file line numbers.
pub fn load_tabular(path: impl AsRef<Path>) -> Result<Vec<DomainDataset>> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path_str.clone(), e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::Format {
        path: path_str.clone(),
        row: 1,
        msg: "missing header row".into(),
    })?;
    let header = header.map_err(|e| Error::io(path_str.clone(), e))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "domain" || cols[1] != "z" || cols[2] != "y" {
        return Err(Error::Format {
            path: path_str,
            row: 1,
            msg: format!("header must start with domain,z,y — got `{header}`"),
        });
    }
    for (i, c) in cols[3..].iter().enumerate() {
        if *c != format!("x{i}") {
            return Err(Error::Format {
                path: path_str,
                row: 1,
                msg: format!("feature column {} named `{c}`, expected `x{i}`", i + 3),
            });
        }
    }
    let d = cols.len() - 3;

    let mut order: Vec<String> = Vec::new();
    let mut by_domain: BTreeMap<String, Vec<LabeledExample>> = BTreeMap::new();
    for (idx, line) in lines {
        let row = idx + 1; // 1-based line number
        let line = line.map_err(|e| Error::io(path_str.clone(), e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 3 {
            return Err(Error::Format {
                path: path_str,
                row,
                msg: format!("expected {} fields, got {}", d + 3, fields.len()),
            });
        }
        let domain = fields[0].to_string();
        let z: i64 = fields[1].parse().map_err(|_| Error::Format {
            path: path_str.clone(),
            row,
            msg: format!("cannot parse z `{}`", fields[1]),
        })?;
        if z != -1 && z != 1 {
            return Err(Error::Value {
                path: path_str,
                row,
                msg: format!("z must be -1 or 1, got {z}"),
            });
        }
        let y: i64 = fields[2].parse().map_err(|_| Error::Format {
            path: path_str.clone(),
            row,
            msg: format!("cannot parse y `{}`", fields[2]),
        })?;
        if y != 0 && y != 1 {
            return Err(Error::Value {
                path: path_str,
                row,
                msg: format!("y must be 0 or 1, got {y}"),
            });
        }
        let mut features = Vec::with_capacity(d);
        for (j, f) in fields[3..].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::Format {
                path: path_str.clone(),
                row,
                msg: format!("cannot parse x{j} `{f}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Value {
                    path: path_str.clone(),
                    row,
                    msg: format!("x{j} is not finite"),
                });
            }
            features.push(v);
        }
        if !by_domain.contains_key(&domain) {
            order.push(domain.clone());
        }
        by_domain.entry(domain).or_default().push(LabeledExample {
            features,
            sensitive: z as i8,
            label: y as u8,
        });
    }

    Ok(order
        .into_iter()
        .map(|id| {
            let examples = by_domain.remove(&id).unwrap_or_default();
            DomainDataset {
                domain_id: id,
                examples,
                declared_rho: None,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(features: Vec<f64>, z: i8, y: u8) -> LabeledExample {
        LabeledExample::new(features, z, y).unwrap()
    }

    fn dataset(pairs: &[(i8, u8)]) -> DomainDataset {
        let examples = pairs
            .iter()
            .map(|&(z, y)| ex(vec![z as f64, y as f64], z, y))
            .collect();
        DomainDataset::new("t", examples, None).unwrap()
    }

    #[test]
    fn dependence_perfect() {
        let ds = dataset(&[(1, 1), (1, 1), (-1, 0), (-1, 0)]);
        assert_eq!(dependence_score(&ds).unwrap(), 1.0);
    }

    #[test]
    fn dependence_independent() {
        let ds = dataset(&[(1, 1), (1, 0), (-1, 1), (-1, 0)]);
        assert_eq!(dependence_score(&ds).unwrap(), 0.0);
    }

    #[test]
    fn dependence_half() {
        // Brute-force conditional rates: P(Y=1|Z=1)=1/2, P(Y=1|Z=-1)=0.
        let ds = dataset(&[(1, 1), (1, 0), (-1, 0), (-1, 0)]);
        assert_eq!(dependence_score(&ds).unwrap(), 0.5);
    }

    #[test]
    fn dependence_missing_group() {
        let ds = dataset(&[(1, 1), (1, 0)]);
        assert!(matches!(dependence_score(&ds), Err(Error::EmptyGroup(_))));
    }

    fn balanced_dataset(n: usize) -> DomainDataset {
        let mut pairs = Vec::new();
        for i in 0..n {
            let z = if i % 2 == 0 { 1 } else { -1 };
            let y = if (i / 2) % 2 == 0 { 1 } else { 0 };
            pairs.push((z, y));
        }
        dataset(&pairs)
    }

    #[test]
    fn split_deterministic() {
        let ds = balanced_dataset(100);
        let plan = SplitPlan::new(0.8, 0.1, 7).unwrap();
        let a = split(&ds, &plan).unwrap();
        let b = split(&ds, &plan).unwrap();
        assert_eq!(a, b);
        // partition: disjoint and exhaustive
        let total = a.0.len() + a.1.len() + a.2.len();
        assert_eq!(total, 100);
    }

    #[test]
    fn split_no_test_part() {
        let ds = balanced_dataset(40);
        let plan = SplitPlan::new(0.5, 0.5, 3).unwrap();
        let (tr, va, te) = split(&ds, &plan).unwrap();
        assert!(te.is_empty());
        assert_eq!(tr.len() + va.len(), 40);
    }

    #[test]
    fn split_stratified_within_one() {
        let ds = balanced_dataset(102); // cells of uneven sizes too
        let plan = SplitPlan::new(0.8, 0.1, 11).unwrap();
        let (tr, _, _) = split(&ds, &plan).unwrap();
        let totals = ds.cell_counts();
        let trains = tr.cell_counts();
        for (cell, &n) in &totals {
            let got = *trains.get(cell).unwrap_or(&0) as f64;
            assert!(
                (got - 0.8 * n as f64).abs() <= 1.0,
                "cell {cell:?}: train {got} vs target {}",
                0.8 * n as f64
            );
        }
    }

    #[test]
    fn split_too_small() {
        let ds = dataset(&[(1, 1), (1, 0), (-1, 1), (-1, 0)]);
        let plan = SplitPlan::new(0.6, 0.2, 0).unwrap();
        assert!(matches!(split(&ds, &plan), Err(Error::TooSmall(_))));
    }

    #[test]
    fn tabular_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        let ds = vec![
            DomainDataset::new(
                "a",
                vec![
                    ex(vec![0.25, -1.5e-7], 1, 1),
                    ex(vec![f64::MIN_POSITIVE, 3.0], -1, 0),
                ],
                None,
            )
            .unwrap(),
            DomainDataset::new("b", vec![ex(vec![1.0 / 3.0, 2.0], -1, 1)], None).unwrap(),
        ];
        save_tabular(&ds, &path).unwrap();
        let loaded = load_tabular(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].domain_id, "a");
        assert_eq!(loaded[1].domain_id, "b");
        for (l, r) in ds.iter().zip(&loaded) {
            assert_eq!(l.examples, r.examples);
        }
        // save(load(p)) == load(p)
        let path2 = dir.path().join("toy2.csv");
        save_tabular(&loaded, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn tabular_rejects_bad_z() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "domain,z,y,x0\na,1,1,0.5\na,0,1,0.5\n").unwrap();
        match load_tabular(&path) {
            Err(Error::Value { row, msg, .. }) => {
                assert_eq!(row, 3);
                assert!(msg.contains("z must be -1 or 1"));
            }
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn tabular_domain_order_of_first_appearance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two.csv");
        std::fs::write(
            &path,
            "domain,z,y,x0\nzed,1,1,0.5\nalpha,-1,0,1.5\nzed,-1,1,2.5\n",
        )
        .unwrap();
        let loaded = load_tabular(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].domain_id, "zed");
        assert_eq!(loaded[0].len(), 2);
        assert_eq!(loaded[1].domain_id, "alpha");
    }

    #[test]
    fn tabular_format_error_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.csv");
        std::fs::write(&path, "domain,z,y,x0\na,1,1\n").unwrap();
        match load_tabular(&path) {
            Err(Error::Format { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
