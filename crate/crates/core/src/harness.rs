//! Leave-one-domain-out experiment driver: per-fold training with
//! validation-based checkpoint selection, metric aggregation over reseeded
//! repeats, the lambda2 tradeoff sweep, the discrete unfairness-bound audit,
//! and persistence of reports, traces, and plots.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{derive_seed, split, DomainDataset, SplitPlan};
use crate::error::{Error, Result};
use crate::metrics::{
    accuracy, auc_fair, dp_ratio, fairness_upper_bound, rho, DiscreteJoint, MetricsReport,
};
use crate::plot::{line_plot, scatter_plot};
use crate::synth::{exact_joint, random_audit_triple};
use crate::trainer::{
    predict, train_fedora_with_snapshots, write_trace, ClassifierParams, FedoraConfig, FedoraMode,
    TraceRow,
};
use crate::transform::{train_transform, TransformTrainConfig};

/// A full leave-one-domain-out experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub datasets: Vec<DomainDataset>,
    pub transform_config: TransformTrainConfig,
    pub fedora_config: FedoraConfig,
    pub split: SplitPlan,
    /// Reseeded repetitions feeding the mean and spread of every metric.
    pub repeats: usize,
    /// Checkpoint selection: best validation accuracy subject to validation
    /// rho at or below this cap; if nothing qualifies, lowest rho wins.
    pub rho_cap: f64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidSpec("repeats must be at least 1".into()));
        }
        if self.datasets.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "leave-one-domain-out needs at least 2 domains, got {}",
                self.datasets.len()
            )));
        }
        Ok(())
    }
}

/// serde-friendly Result for per-fold outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub report: MetricsReport,
    pub trace: Vec<TraceRow>,
}

/// Mean and spread of a fold's metrics over repeats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub target_domain: String,
    pub successful_repeats: usize,
    pub mean: MetricsReport,
    pub std: MetricsReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LodoSummary {
    pub folds: Vec<AggregateMetrics>,
    pub average: AggregateMetrics,
    /// Human-readable descriptions of failed (fold, repeat) runs.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LodoOutput {
    pub summary: LodoSummary,
    /// First-repeat training trace per target domain.
    pub traces: Vec<(String, Vec<TraceRow>)>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(target: &str, reports: &[MetricsReport]) -> AggregateMetrics {
    let field = |f: fn(&MetricsReport) -> f64| -> (f64, f64) {
        let vals: Vec<f64> = reports.iter().map(f).collect();
        mean_std(&vals)
    };
    let (acc_m, acc_s) = field(|r| r.accuracy);
    let (rho_m, rho_s) = field(|r| r.rho);
    let (dp_m, dp_s) = field(|r| r.dp_ratio);
    let (auc_m, auc_s) = field(|r| r.auc_fair);
    AggregateMetrics {
        target_domain: target.to_string(),
        successful_repeats: reports.len(),
        mean: MetricsReport {
            target_domain: target.to_string(),
            accuracy: acc_m,
            rho: rho_m,
            dp_ratio: dp_m,
            auc_fair: auc_m,
        },
        std: MetricsReport {
            target_domain: target.to_string(),
            accuracy: acc_s,
            rho: rho_s,
            dp_ratio: dp_s,
            auc_fair: auc_s,
        },
    }
}

/// Hard-label and score metrics of a classifier on one dataset.
pub fn evaluate_classifier(
    clf: &ClassifierParams,
    dataset: &DomainDataset,
) -> Result<MetricsReport> {
    if dataset.is_empty() {
        return Err(Error::TooSmall(format!(
            "evaluation set for {} is empty",
            dataset.domain_id
        )));
    }
    let mut hard = Vec::with_capacity(dataset.len());
    let mut scores = Vec::with_capacity(dataset.len());
    let mut labels = Vec::with_capacity(dataset.len());
    let mut zs = Vec::with_capacity(dataset.len());
    for e in &dataset.examples {
        let (label, score) = predict(clf, &e.features)?;
        hard.push(label);
        scores.push(score);
        labels.push(e.label);
        zs.push(e.sensitive);
    }
    let hard_f: Vec<f64> = hard.iter().map(|&h| f64::from(h)).collect();
    Ok(MetricsReport {
        target_domain: dataset.domain_id.clone(),
        accuracy: accuracy(&hard, &labels)?,
        rho: rho(&hard_f, &zs)?,
        dp_ratio: dp_ratio(&hard, &zs)?,
        auc_fair: auc_fair(&scores, &zs)?,
    })
}

/// Validation score of a candidate checkpoint: mean accuracy and mean
/// hard-label rho over the source validation splits.
fn validation_score(clf: &ClassifierParams, vals: &[DomainDataset]) -> Result<(f64, f64)> {
    let mut accs = Vec::with_capacity(vals.len());
    let mut rhos = Vec::with_capacity(vals.len());
    for v in vals {
        let r = evaluate_classifier(clf, v)?;
        accs.push(r.accuracy);
        rhos.push(r.rho);
    }
    Ok((
        accs.iter().sum::<f64>() / accs.len() as f64,
        rhos.iter().sum::<f64>() / rhos.len() as f64,
    ))
}

struct Candidate {
    clf: ClassifierParams,
    acc: f64,
    rho: f64,
}

/// Accuracy-subject-to-fairness-cap checkpoint rule: among candidates with
/// validation rho at or below the cap pick the most accurate; if none
/// qualifies pick the lowest rho. Earlier snapshots win ties.
fn better(best: &Option<Candidate>, new: &Candidate, cap: f64) -> bool {
    match best {
        None => true,
        Some(b) => {
            let b_ok = b.rho <= cap;
            let n_ok = new.rho <= cap;
            match (b_ok, n_ok) {
                (true, true) => new.acc > b.acc,
                (true, false) => false,
                (false, true) => true,
                (false, false) => new.rho < b.rho,
            }
        }
    }
}

fn run_single_fold(
    plan: &ExperimentPlan,
    target_idx: usize,
    repeat: usize,
) -> Result<FoldOutcome> {
    let target = &plan.datasets[target_idx];
    let rep_tag = format!("rep{repeat}");

    let mut source_trains = Vec::new();
    let mut source_vals = Vec::new();
    for (i, ds) in plan.datasets.iter().enumerate() {
        if i == target_idx {
            continue;
        }
        let split_plan = SplitPlan {
            seed: derive_seed(derive_seed(plan.split.seed, &rep_tag), &ds.domain_id),
            ..plan.split
        };
        let (tr, va, _) = split(ds, &split_plan)?;
        source_trains.push(tr);
        source_vals.push(va);
    }
    let target_split = SplitPlan {
        seed: derive_seed(derive_seed(plan.split.seed, &rep_tag), &target.domain_id),
        ..plan.split
    };
    let (_, _, target_test) = split(target, &target_split)?;

    let fold_seed = |base: u64, role: &str| {
        derive_seed(
            derive_seed(base, &rep_tag),
            &format!("{role}-{}", target.domain_id),
        )
    };

    let transform = if plan.fedora_config.mode == FedoraMode::NoT {
        None
    } else {
        let tconfig = TransformTrainConfig {
            seed: fold_seed(plan.transform_config.seed, "transform"),
            ..plan.transform_config.clone()
        };
        Some(train_transform(&source_trains, &tconfig)?.model)
    };

    let fconfig = FedoraConfig {
        seed: fold_seed(plan.fedora_config.seed, "classifier"),
        ..plan.fedora_config.clone()
    };
    let snapshot_every = (fconfig.iterations / 10).max(1);
    let mut best: Option<Candidate> = None;
    let mut selection_error: Option<Error> = None;
    let outcome = {
        let vals = &source_vals;
        let cap = plan.rho_cap;
        let best_ref = &mut best;
        let err_ref = &mut selection_error;
        train_fedora_with_snapshots(
            transform.as_ref(),
            &source_trains,
            &fconfig,
            snapshot_every,
            &mut |_iter, clf| {
                if err_ref.is_some() {
                    return;
                }
                match validation_score(clf, vals) {
                    Ok((acc, rho_v)) => {
                        let cand = Candidate {
                            clf: clf.clone(),
                            acc,
                            rho: rho_v,
                        };
                        if better(best_ref, &cand, cap) {
                            *best_ref = Some(cand);
                        }
                    }
                    Err(e) => *err_ref = Some(e),
                }
            },
        )?
    };
    if let Some(e) = selection_error {
        return Err(e);
    }
    let chosen = best
        .map(|c| c.clf)
        .unwrap_or_else(|| outcome.classifier.clone());
    let mut report = evaluate_classifier(&chosen, &target_test)?;
    report.target_domain = target.domain_id.clone();
    Ok(FoldOutcome {
        report,
        trace: outcome.trace,
    })
}

/// For each domain in turn: train on the rest, select by held-out source
/// validation, evaluate on the target's test split. Repeats rerun everything
/// reseeded; failed folds are recorded and skipped in the aggregates.
pub fn leave_one_domain_out(plan: &ExperimentPlan) -> Result<LodoOutput> {
    plan.validate()?;
    let n_domains = plan.datasets.len();
    let mut per_fold: Vec<Vec<MetricsReport>> = vec![Vec::new(); n_domains];
    let mut per_repeat_avgs: Vec<MetricsReport> = Vec::new();
    let mut failures = Vec::new();
    let mut traces = Vec::new();

    for r in 0..plan.repeats {
        let mut repeat_reports = Vec::new();
        for t in 0..n_domains {
            match run_single_fold(plan, t, r) {
                Ok(out) => {
                    per_fold[t].push(out.report.clone());
                    repeat_reports.push(out.report);
                    if r == 0 {
                        traces.push((plan.datasets[t].domain_id.clone(), out.trace));
                    }
                }
                Err(e) => failures.push(format!(
                    "target {} repeat {r}: {e}",
                    plan.datasets[t].domain_id
                )),
            }
        }
        if !repeat_reports.is_empty() {
            let agg = aggregate("average", &repeat_reports);
            per_repeat_avgs.push(agg.mean);
        }
    }

    let folds: Vec<AggregateMetrics> = per_fold
        .iter()
        .enumerate()
        .map(|(t, reports)| aggregate(&plan.datasets[t].domain_id, reports))
        .collect();

    // Mean over folds of fold means; spread over the per-repeat averages.
    let fold_means: Vec<MetricsReport> = folds
        .iter()
        .filter(|f| f.successful_repeats > 0)
        .map(|f| f.mean.clone())
        .collect();
    let mut average = aggregate("average", &fold_means);
    average.successful_repeats = per_repeat_avgs.len();
    average.std = aggregate("average", &per_repeat_avgs).std;

    Ok(LodoOutput {
        summary: LodoSummary {
            folds,
            average,
            failures,
        },
        traces,
    })
}

// ---------------------------------------------------------------------------
// Lambda2 tradeoff sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda2: f64,
    pub accuracy: f64,
    pub dp_ratio: f64,
    pub rho: f64,
}

/// Rerun leave-one-domain-out with lambda2 pinned to each value (its dual
/// update frozen, lambda1 dual still active) and tabulate the averaged
/// accuracy/fairness outcome.
pub fn sweep_lambda2(plan: &ExperimentPlan, lambda2_values: &[f64]) -> Result<Vec<SweepRow>> {
    if lambda2_values.is_empty() || lambda2_values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidSpec(
            "lambda2 sweep values must be positive".into(),
        ));
    }
    let mut rows = Vec::with_capacity(lambda2_values.len());
    for &l2 in lambda2_values {
        let swept = ExperimentPlan {
            fedora_config: FedoraConfig {
                lambda2_init: l2,
                freeze_lambda2: true,
                ..plan.fedora_config.clone()
            },
            ..plan.clone()
        };
        let out = leave_one_domain_out(&swept)?;
        rows.push(SweepRow {
            lambda2: l2,
            accuracy: out.summary.average.mean.accuracy,
            dp_ratio: out.summary.average.mean.dp_ratio,
            rho: out.summary.average.mean.rho,
        });
    }
    Ok(rows)
}

/// The sweep values used when none are configured.
pub fn default_sweep_values() -> Vec<f64> {
    vec![0.01, 0.05, 0.1, 1.0, 10.0]
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

// ---------------------------------------------------------------------------
// Unfairness-bound audit on exact joints
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundAudit {
    pub rho_target: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Evaluate one classifier against the bound: its unfairness on the target
/// joint must not exceed mean source unfairness plus the scaled minimum
/// target distance plus the scaled source diameter.
pub fn bound_audit(
    sources: &[DiscreteJoint],
    target: &DiscreteJoint,
    classifier: &BTreeMap<u32, u8>,
) -> Result<BoundAudit> {
    if sources.is_empty() {
        return Err(Error::EmptySources);
    }
    let rho_target = target.rho_of_classifier(classifier)?;
    let source_rhos: Vec<f64> = sources
        .iter()
        .map(|s| s.rho_of_classifier(classifier))
        .collect::<Result<_>>()?;
    let bound = fairness_upper_bound(&source_rhos, sources, target)?;
    Ok(BoundAudit {
        rho_target,
        bound,
        satisfied: rho_target <= bound + 1e-9,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditSummary {
    pub triples: usize,
    pub cases_checked: usize,
    pub violations: usize,
    /// Smallest bound minus target-rho margin seen (negative means violation).
    pub worst_margin: f64,
}

/// Exhaustive audit: for each random triple, every rotation of target vs
/// sources and every deterministic classifier on the support.
pub fn audit_random_triples(seed: u64, n_triples: usize) -> Result<AuditSummary> {
    let mut cases = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for t in 0..n_triples {
        let specs = random_audit_triple(seed, t as u64);
        let joints: Vec<DiscreteJoint> = specs.iter().map(exact_joint).collect::<Result<_>>()?;
        let n_cells = specs[0].n_cells;
        let cells: Vec<u32> = (0..n_cells as u32).collect();
        for target_idx in 0..joints.len() {
            let target = &joints[target_idx];
            let sources: Vec<DiscreteJoint> = joints
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != target_idx)
                .map(|(_, j)| j.clone())
                .collect();
            for mask in 0u32..(1u32 << n_cells) {
                let classifier: BTreeMap<u32, u8> = cells
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (c, ((mask >> i) & 1) as u8))
                    .collect();
                let audit = bound_audit(&sources, target, &classifier)?;
                cases += 1;
                let margin = audit.bound - audit.rho_target;
                worst = worst.min(margin);
                if !audit.satisfied {
                    violations += 1;
                }
            }
        }
    }
    Ok(AuditSummary {
        triples: n_triples,
        cases_checked: cases,
        violations,
        worst_margin: worst,
    })
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Serialize any report as pretty JSON with sorted keys. Re-emission with
/// identical input is byte-identical.
pub fn report_to_string(value: &impl Serialize) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(format!("{}\n", serde_json::to_string_pretty(&v)?))
}

pub fn emit_report(value: &impl Serialize, path: impl AsRef<Path>) -> Result<()> {
    let text = report_to_string(value)?;
    if let Some(parent) = path.as_ref().parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path.as_ref(), text)
        .map_err(|e| Error::io(path.as_ref().display().to_string(), e))
}

/// Write the standard output layout:
/// reports/<experiment>/fold_<domain>.json and average.json,
/// traces/<experiment>/fold_<domain>.csv,
/// plots/<experiment>/loss_<domain>.png.
pub fn persist_lodo(out_dir: &Path, experiment: &str, output: &LodoOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let reports = out_dir.join("reports").join(experiment);
    let traces = out_dir.join("traces").join(experiment);
    let plots = out_dir.join("plots").join(experiment);
    for d in [&reports, &traces, &plots] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d.display().to_string(), e))?;
    }
    for fold in &output.summary.folds {
        let p = reports.join(format!("fold_{}.json", fold.target_domain));
        emit_report(fold, &p)?;
        written.push(p);
    }
    let avg_path = reports.join("average.json");
    emit_report(&output.summary, &avg_path)?;
    written.push(avg_path);
    for (domain, trace) in &output.traces {
        let p = traces.join(format!("fold_{domain}.csv"));
        write_trace(trace, &p)?;
        written.push(p);
        let series: Vec<Vec<(f64, f64)>> = [
            trace.iter().map(|r| (r.iteration as f64, r.loss_cls)).collect(),
            trace.iter().map(|r| (r.iteration as f64, r.loss_inv)).collect(),
            trace.iter().map(|r| (r.iteration as f64, r.loss_fair)).collect(),
        ]
        .into();
        let p = plots.join(format!("loss_{domain}.png"));
        line_plot(&series, &p)?;
        written.push(p);
    }
    Ok(written)
}

/// Persist the sweep table and its tradeoff scatter
/// (x = dp ratio, y = accuracy).
pub fn persist_sweep(out_dir: &Path, experiment: &str, rows: &[SweepRow]) -> Result<Vec<PathBuf>> {
    let reports = out_dir.join("reports").join(experiment);
    let plots = out_dir.join("plots").join(experiment);
    for d in [&reports, &plots] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d.display().to_string(), e))?;
    }
    let table_path = reports.join("sweep.json");
    emit_report(&rows.to_vec(), &table_path)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.dp_ratio, r.accuracy)).collect();
    let plot_path = plots.join("tradeoff.png");
    scatter_plot(&[pts], &plot_path)?;
    Ok(vec![table_path, plot_path])
}
