//! Group-fairness quantities: the linear gap g and its aggregate rho, the
//! demographic-parity ratio, the pairwise AUC between sensitive groups, exact
//! Jensen-Shannon distance between discrete joints, and the cross-domain
//! unfairness upper bound.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-target-domain evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub target_domain: String,
    pub accuracy: f64,
    pub rho: f64,
    pub dp_ratio: f64,
    pub auc_fair: f64,
}

/// Linear group gap g(ŷ, z) = (1 / (p1 (1-p1))) ((z+1)/2 - p1) ŷ.
pub fn group_gap(prediction: f64, sensitive: i8, p1: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::DegenerateGroup(p1));
    }
    let z_ind = (sensitive as f64 + 1.0) / 2.0;
    Ok((z_ind - p1) * prediction / (p1 * (1.0 - p1)))
}

fn empirical_p1(sensitives: &[i8]) -> Result<f64> {
    let n = sensitives.len();
    let n_pos = sensitives.iter().filter(|&&z| z == 1).count();
    if n == 0 || n_pos == 0 || n_pos == n {
        return Err(Error::EmptyGroup(format!(
            "z=+1 count {n_pos} of {n} examples"
        )));
    }
    Ok(n_pos as f64 / n as f64)
}

/// rho(ŷ, z) = |mean of g| with p1 the empirical fraction of z = +1.
pub fn rho(predictions: &[f64], sensitives: &[i8]) -> Result<f64> {
    if predictions.len() != sensitives.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} sensitives",
            predictions.len(),
            sensitives.len()
        )));
    }
    let p1 = empirical_p1(sensitives)?;
    let mut acc = 0.0;
    for (&p, &z) in predictions.iter().zip(sensitives) {
        acc += group_gap(p, z, p1)?;
    }
    Ok((acc / predictions.len() as f64).abs())
}

/// Demographic-parity ratio min(k, 1/k) with k = P(ŷ=1|z=-1) / P(ŷ=1|z=+1).
///
/// Both rates zero means identical behavior (1.0); exactly one zero rate is
/// maximal disparity (0.0).
pub fn dp_ratio(binary_predictions: &[u8], sensitives: &[i8]) -> Result<f64> {
    if binary_predictions.len() != sensitives.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} sensitives",
            binary_predictions.len(),
            sensitives.len()
        )));
    }
    let mut n = [0usize; 2]; // [z=-1, z=+1]
    let mut pos = [0usize; 2];
    for (&yh, &z) in binary_predictions.iter().zip(sensitives) {
        let g = if z == 1 { 1 } else { 0 };
        n[g] += 1;
        pos[g] += (yh == 1) as usize;
    }
    if n[0] == 0 || n[1] == 0 {
        return Err(Error::EmptyGroup(format!(
            "z=-1 count {}, z=+1 count {}",
            n[0], n[1]
        )));
    }
    let rate_neg = pos[0] as f64 / n[0] as f64;
    let rate_pos = pos[1] as f64 / n[1] as f64;
    Ok(match (rate_neg == 0.0, rate_pos == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let k = rate_neg / rate_pos;
            k.min(1.0 / k)
        }
    })
}

/// Pairwise AUC between sensitive groups: the probability that a score from
/// the z = -1 group exceeds one from the z = +1 group, ties counting 1/2.
pub fn auc_fair(scores: &[f64], sensitives: &[i8]) -> Result<f64> {
    if scores.len() != sensitives.len() {
        return Err(Error::LengthMismatch(format!(
            "{} scores vs {} sensitives",
            scores.len(),
            sensitives.len()
        )));
    }
    let neg: Vec<f64> = scores
        .iter()
        .zip(sensitives)
        .filter(|(_, &z)| z == -1)
        .map(|(&s, _)| s)
        .collect();
    let pos: Vec<f64> = scores
        .iter()
        .zip(sensitives)
        .filter(|(_, &z)| z == 1)
        .map(|(&s, _)| s)
        .collect();
    if neg.is_empty() || pos.is_empty() {
        return Err(Error::EmptyGroup(format!(
            "z=-1 count {}, z=+1 count {}",
            neg.len(),
            pos.len()
        )));
    }
    let mut total = 0.0;
    for &a in &neg {
        for &b in &pos {
            total += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(total / (neg.len() as f64 * pos.len() as f64))
}

/// Fraction of predictions equal to the labels.
pub fn accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    if predictions.len() != labels.len() || predictions.is_empty() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// One atom of a discrete joint over (feature cell, z, y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointAtom {
    pub cell: u32,
    pub z: i8,
    pub y: u8,
}

/// A finite joint distribution over (feature cell, z, y) atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    atoms: Vec<JointAtom>,
    probs: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(atoms: Vec<JointAtom>, probs: Vec<f64>) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::LengthMismatch(format!(
                "{} atoms vs {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidSpec("negative or non-finite probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &atoms {
            if a.z != -1 && a.z != 1 {
                return Err(Error::InvalidSpec(format!("atom z must be -1 or 1, got {}", a.z)));
            }
            if a.y > 1 {
                return Err(Error::InvalidSpec(format!("atom y must be 0 or 1, got {}", a.y)));
            }
            if !seen.insert(*a) {
                return Err(Error::InvalidSpec(format!("duplicate atom {a:?}")));
            }
        }
        Ok(Self { atoms, probs })
    }

    pub fn atoms(&self) -> &[JointAtom] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Distinct feature cells in the support, sorted.
    pub fn cells(&self) -> Vec<u32> {
        let mut cells: Vec<u32> = self.atoms.iter().map(|a| a.cell).collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    /// Marginal P(Z = +1).
    pub fn p1(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.probs)
            .filter(|(a, _)| a.z == 1)
            .map(|(_, &p)| p)
            .sum()
    }

    /// |P(Y=1|Z=1) - P(Y=1|Z=-1)| on the exact table.
    pub fn dependence_score(&self) -> Result<f64> {
        let mut mass = [0.0f64; 2]; // by z group: [-1, +1]
        let mut y1 = [0.0f64; 2];
        for (a, &p) in self.atoms.iter().zip(&self.probs) {
            let g = if a.z == 1 { 1 } else { 0 };
            mass[g] += p;
            if a.y == 1 {
                y1[g] += p;
            }
        }
        if mass[0] <= 0.0 || mass[1] <= 0.0 {
            return Err(Error::EmptyGroup(format!(
                "z=-1 mass {}, z=+1 mass {}",
                mass[0], mass[1]
            )));
        }
        Ok((y1[1] / mass[1] - y1[0] / mass[0]).abs())
    }

    /// rho of a deterministic classifier on the exact table. The classifier
    /// maps every support cell to a label in {0, 1}.
    pub fn rho_of_classifier(&self, classifier: &BTreeMap<u32, u8>) -> Result<f64> {
        let p1 = self.p1();
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::DegenerateGroup(p1));
        }
        let mut acc = 0.0;
        for (a, &p) in self.atoms.iter().zip(&self.probs) {
            let pred = *classifier.get(&a.cell).ok_or_else(|| {
                Error::InvalidSpec(format!("classifier does not cover cell {}", a.cell))
            })? as f64;
            let z_ind = (a.z as f64 + 1.0) / 2.0;
            acc += p * (z_ind - p1) * pred / (p1 * (1.0 - p1));
        }
        Ok(acc.abs())
    }

    /// Accuracy of a deterministic classifier on the exact table.
    pub fn accuracy_of_classifier(&self, classifier: &BTreeMap<u32, u8>) -> Result<f64> {
        let mut acc = 0.0;
        for (a, &p) in self.atoms.iter().zip(&self.probs) {
            let pred = *classifier.get(&a.cell).ok_or_else(|| {
                Error::InvalidSpec(format!("classifier does not cover cell {}", a.cell))
            })?;
            if pred == a.y {
                acc += p;
            }
        }
        Ok(acc)
    }
}

/// Jensen-Shannon distance sqrt(1/2 KL(p||m) + 1/2 KL(q||m)), m = (p+q)/2,
/// natural logarithm, on the union of supports.
pub fn js_distance(p: &DiscreteJoint, q: &DiscreteJoint) -> f64 {
    let mut union: BTreeMap<JointAtom, (f64, f64)> = BTreeMap::new();
    for (a, &pr) in p.atoms.iter().zip(&p.probs) {
        union.entry(*a).or_insert((0.0, 0.0)).0 += pr;
    }
    for (a, &pr) in q.atoms.iter().zip(&q.probs) {
        union.entry(*a).or_insert((0.0, 0.0)).1 += pr;
    }
    let mut kl_p = 0.0;
    let mut kl_q = 0.0;
    for &(pp, qq) in union.values() {
        let m = 0.5 * (pp + qq);
        if pp > 0.0 {
            kl_p += pp * (pp / m).ln();
        }
        if qq > 0.0 {
            kl_q += qq * (qq / m).ln();
        }
    }
    (0.5 * kl_p + 0.5 * kl_q).max(0.0).sqrt()
}

/// Upper bound on the dependence of an unseen target domain:
/// mean source rho + sqrt(2) min_i dist(target, source_i)
///                  + sqrt(2) max_{i,j} dist(source_i, source_j).
pub fn fairness_upper_bound(
    source_rhos: &[f64],
    source_joints: &[DiscreteJoint],
    target_joint: &DiscreteJoint,
) -> Result<f64> {
    if source_joints.is_empty() {
        return Err(Error::EmptySources);
    }
    if source_rhos.len() != source_joints.len() {
        return Err(Error::LengthMismatch(format!(
            "{} rhos vs {} joints",
            source_rhos.len(),
            source_joints.len()
        )));
    }
    let mean_rho = source_rhos.iter().sum::<f64>() / source_rhos.len() as f64;
    let min_to_target = source_joints
        .iter()
        .map(|s| js_distance(target_joint, s))
        .fold(f64::INFINITY, f64::min);
    let mut max_between = 0.0f64;
    for i in 0..source_joints.len() {
        for j in (i + 1)..source_joints.len() {
            max_between = max_between.max(js_distance(&source_joints[i], &source_joints[j]));
        }
    }
    Ok(mean_rho + std::f64::consts::SQRT_2 * (min_to_target + max_between))
}
