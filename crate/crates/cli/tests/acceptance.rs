//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities. Criteria A1-A9 exercise the library directly on
//! the three-domain synthetic benchmark; A10 drives the binary end to end and
//! rechecks every text output byte for byte from its run manifest.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fedora_core::data::{dependence_score, split, SplitPlan};
use fedora_core::graph::{finite_difference_grads, max_relative_error, Grads, Graph, ParamId};
use fedora_core::harness::{
    audit_random_triples, leave_one_domain_out, spearman, sweep_lambda2, ExperimentPlan,
};
use fedora_core::metrics::{auc_fair, rho};
use fedora_core::synth::{
    default_benchmark_rhos, default_benchmark_styles, exact_joint, gen_benchmark, DiscreteDomainSpec,
};
use fedora_core::trainer::{
    classification_node, dual_step, fairness_node, invariance_node, ClassifierParams, DualState,
    FedoraConfig, FedoraMode,
};
use fedora_core::transform::{
    adversarial_nodes, data_recon_node, factor_recon_node, sensitive_node, train_transform,
    sensitive_probe_accuracy, TransformModelParams, TransformShapes, TransformTrainConfig,
};

// ---------------------------------------------------------------------------
// Shared toy-benchmark profile (calibrated; mirrors configs/toy.toml)
// ---------------------------------------------------------------------------

fn toy_plan(seed: u64, mode: FedoraMode) -> ExperimentPlan {
    let datasets = gen_benchmark(
        &default_benchmark_rhos(),
        &default_benchmark_styles(),
        800,
        seed,
    )
    .unwrap();
    ExperimentPlan {
        datasets,
        transform_config: TransformTrainConfig {
            iterations: 1500,
            batch_size: 32,
            lr_autoencoder: 1e-3,
            lr_discriminator: 1e-3,
            lr_sensitive: 1e-2,
            beta3: 5.0,
            seed,
            ..Default::default()
        },
        fedora_config: FedoraConfig {
            iterations: 1000,
            batch_size: 64,
            seed,
            hidden: vec![32, 32],
            mode,
            gamma2: 0.2,
            ..Default::default()
        },
        split: SplitPlan::new(0.7, 0.15, seed).unwrap(),
        repeats: 1,
        rho_cap: 1.0,
    }
}

#[test]
fn acceptance_a1_metric_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.gen_range(4..=200usize);
        let preds: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..=1u8))).collect();
        let zs: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let n_pos = zs.iter().filter(|&&z| z == 1).count();
        if n_pos == 0 || n_pos == n {
            continue;
        }
        let r = rho(&preds, &zs).unwrap();
        let rate = |group: i8| {
            let idx: Vec<usize> = zs
                .iter()
                .enumerate()
                .filter(|(_, &z)| z == group)
                .map(|(i, _)| i)
                .collect();
            idx.iter().map(|&i| preds[i]).sum::<f64>() / idx.len() as f64
        };
        let direct = (rate(1) - rate(-1)).abs();
        assert!(
            (r - direct).abs() <= 1e-12,
            "identity violated: rho {r} vs rates {direct}"
        );
        checked += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "A1 took {elapsed:?}");
    println!("A1 PASS: rho == |rate gap| within 1e-12 on 1000 datasets ({elapsed:?})");
}

#[test]
fn acceptance_a2_auc_fair_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.gen_range(2..=120usize);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..=20u8)) / 20.0).collect();
        let zs: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let n_pos = zs.iter().filter(|&&z| z == 1).count();
        if n_pos == 0 || n_pos == n {
            continue;
        }
        let flipped: Vec<i8> = zs.iter().map(|&z| -z).collect();
        let a = auc_fair(&scores, &zs).unwrap();
        let b = auc_fair(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() <= 1e-12, "complement violated: {a} + {b}");
        checked += 1;
    }
    // identical score multisets across groups score exactly 1/2
    let scores = [0.1, 0.4, 0.4, 0.9, 0.1, 0.4, 0.4, 0.9];
    let zs = [1, 1, 1, 1, -1, -1, -1, -1];
    assert_eq!(auc_fair(&scores, &zs).unwrap(), 0.5);
    // exhaustive 2x2 pair example
    let scores = [0.9, 0.8, 0.1, 0.2];
    let zs = [-1, -1, 1, 1];
    assert_eq!(auc_fair(&scores, &zs).unwrap(), 1.0);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "A2 took {elapsed:?}");
    println!("A2 PASS: complement symmetry, tie rule, exhaustive pair example ({elapsed:?})");
}

#[test]
fn acceptance_a3_bound_audit() {
    let start = Instant::now();
    let summary = audit_random_triples(2026, 5).unwrap();
    assert_eq!(summary.triples, 5);
    assert_eq!(
        summary.violations, 0,
        "bound violated; worst margin {}",
        summary.worst_margin
    );
    assert!(summary.worst_margin > -1e-9);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "A3 took {elapsed:?}");
    println!(
        "A3 PASS: {} classifier cases over 5 triples, zero violations, worst margin {:.6} ({elapsed:?})",
        summary.cases_checked, summary.worst_margin
    );
}

#[test]
fn acceptance_a4_generator_fidelity() {
    let start = Instant::now();
    // exact joints: dependence equals the target to 1e-12
    for rho_t in [0.0, 0.11, 0.43, 0.87, 1.0] {
        let spec = DiscreteDomainSpec {
            domain_id: "g".into(),
            target_rho: rho_t,
            n_cells: 8,
            class_separation: 0.4,
            sensitive_tilt: 0.15,
            style_weight: 0.1,
            style_profile: vec![0.125; 8],
        };
        let joint = exact_joint(&spec).unwrap();
        let dep = joint.dependence_score().unwrap();
        assert!(
            (dep - rho_t).abs() <= 1e-12,
            "exact joint: target {rho_t}, got {dep}"
        );
    }
    // sampled benchmark: measured dependence within 0.02 of the targets
    let datasets = gen_benchmark(
        &default_benchmark_rhos(),
        &default_benchmark_styles(),
        10000,
        7,
    )
    .unwrap();
    let mut measured = Vec::new();
    for (ds, target) in datasets.iter().zip(default_benchmark_rhos()) {
        let got = dependence_score(ds).unwrap();
        assert!(
            (got - target).abs() <= 0.02,
            "domain {}: target {target}, measured {got}",
            ds.domain_id
        );
        measured.push(got);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "A4 took {elapsed:?}");
    println!("A4 PASS: exact joints to 1e-12; sampled dependence {measured:?} within 0.02 ({elapsed:?})");
}

#[test]
fn acceptance_a5_gradient_checks() {
    let start = Instant::now();
    let batch: Vec<(Vec<f64>, i8, u8)> = vec![
        (vec![0.4, -0.9], 1, 1),
        (vec![-0.2, 0.6], -1, 0),
        (vec![1.1, 0.3], 1, 0),
        (vec![-0.7, -0.4], -1, 1),
    ];
    let augmented: Vec<(Vec<f64>, i8, u8)> = vec![
        (vec![0.1, -0.5], -1, 1),
        (vec![0.9, 0.2], 1, 0),
        (vec![-1.3, 0.8], 1, 0),
        (vec![0.3, -0.1], -1, 1),
    ];
    let xs: Vec<&[f64]> = batch.iter().map(|e| e.0.as_slice()).collect();
    let zs: Vec<i8> = batch.iter().map(|e| e.1).collect();
    let ys: Vec<u8> = batch.iter().map(|e| e.2).collect();
    let xa: Vec<&[f64]> = augmented.iter().map(|e| e.0.as_slice()).collect();
    let za: Vec<i8> = augmented.iter().map(|e| e.1).collect();

    // transformation-model losses on a two-layer stack
    let fresh_model = || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        TransformModelParams::init(TransformShapes::tiny(2), &mut rng)
    };
    let mut results: Vec<(&str, f64)> = Vec::new();
    {
        type Build<'a> = Box<dyn Fn(&mut Graph, &TransformModelParams) -> usize + 'a>;
        let builders: Vec<(&str, Build)> = vec![
            ("L_recon_data", {
                let xs = xs.clone();
                Box::new(move |g, m| data_recon_node(g, m, &xs).unwrap())
            }),
            ("L_recon_factor", {
                let xs = xs.clone();
                Box::new(move |g, m| {
                    let mut rng = ChaCha8Rng::seed_from_u64(99);
                    factor_recon_node(g, m, &xs, &mut rng).unwrap()
                })
            }),
            ("L_sens", {
                let xs = xs.clone();
                let zs = zs.clone();
                Box::new(move |g, m| sensitive_node(g, m, &xs, &zs).unwrap())
            }),
            ("L_adv", {
                let xs = xs.clone();
                Box::new(move |g, m| {
                    let mut rng = ChaCha8Rng::seed_from_u64(123);
                    let (gen, disc) = adversarial_nodes(g, m, &xs, &mut rng).unwrap();
                    g.add(gen, disc)
                })
            }),
        ];
        for (name, build) in builders {
            let mut model = fresh_model();
            let ids: Vec<ParamId> = (0..model.params.len()).collect();
            let mut grads = Grads::zeros(&model.params);
            {
                let mut g = Graph::new(&model.params);
                let node = build(&mut g, &model);
                g.backward(node, &mut grads);
            }
            let numeric = finite_difference_grads(&mut model.params, &ids, 1e-5, |p| {
                let probe = TransformModelParams {
                    params: p.clone(),
                    ..fresh_model()
                };
                let mut g = Graph::new(&probe.params);
                let node = build(&mut g, &probe);
                g.scalar(node)
            });
            let analytic: Vec<&[f64]> = ids.iter().map(|&id| grads.slot(id)).collect();
            let err = max_relative_error(&analytic, &numeric);
            assert!(err <= 1e-4, "{name}: relative gradient error {err}");
            results.push((name, err));
        }
    }

    // classifier losses on a two-layer classifier
    {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut clf = ClassifierParams::init(2, &[5], &mut rng);
        type BuildC<'a> = Box<dyn Fn(&mut Graph, &fedora_core::nn::MlpSpec) -> usize + 'a>;
        let builders: Vec<(&str, BuildC)> = vec![
            ("L_cls", {
                let xs = xs.clone();
                let ys = ys.clone();
                Box::new(move |g, spec| classification_node(g, spec, &xs, &ys).unwrap())
            }),
            ("L_inv", {
                let xs = xs.clone();
                let xa = xa.clone();
                Box::new(move |g, spec| invariance_node(g, spec, &xs, &xa).unwrap())
            }),
            ("L_fair", {
                let xs = xs.clone();
                let zs = zs.clone();
                let xa = xa.clone();
                let za = za.clone();
                Box::new(move |g, spec| {
                    let (node, _) = fairness_node(g, spec, &xs, &zs, &xa, &za).unwrap();
                    node.unwrap()
                })
            }),
        ];
        for (name, build) in builders {
            let ids = clf.spec.param_ids();
            let mut grads = Grads::zeros(&clf.params);
            {
                let mut g = Graph::new(&clf.params);
                let node = build(&mut g, &clf.spec);
                g.backward(node, &mut grads);
            }
            let spec = clf.spec.clone();
            let numeric = finite_difference_grads(&mut clf.params, &ids, 1e-5, |p| {
                let mut g = Graph::new(p);
                let node = build(&mut g, &spec);
                g.scalar(node)
            });
            let analytic: Vec<&[f64]> = ids.iter().map(|&id| grads.slot(id)).collect();
            let err = max_relative_error(&analytic, &numeric);
            assert!(err <= 1e-4, "{name}: relative gradient error {err}");
            results.push((name, err));
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "A5 took {elapsed:?}");
    let worst = results.iter().map(|r| r.1).fold(0.0f64, f64::max);
    println!("A5 PASS: 7 losses gradient-checked, worst relative error {worst:.2e} ({elapsed:?})");
}

#[test]
fn acceptance_a6_fairness_ordering() {
    let start = Instant::now();
    let mut wins = 0;
    let mut gaps = Vec::new();
    for seed in [101u64, 202, 303] {
        let full = leave_one_domain_out(&toy_plan(seed, FedoraMode::Full)).unwrap();
        let nolf = leave_one_domain_out(&toy_plan(seed, FedoraMode::NoLfair)).unwrap();
        for out in [&full, &nolf] {
            assert!(out.summary.failures.is_empty(), "{:?}", out.summary.failures);
            for (_, trace) in &out.traces {
                assert!(trace.iter().all(|r| r.lambda1 >= 0.0 && r.lambda2 >= 0.0));
            }
        }
        let f = &full.summary.average.mean;
        let n = &nolf.summary.average.mean;
        let win = f.dp_ratio > n.dp_ratio;
        wins += usize::from(win);
        gaps.push(n.accuracy - f.accuracy);
        println!(
            "  A6 seed {seed}: full dp {:.3} acc {:.3} | no-lfair dp {:.3} acc {:.3} | dp win {win}",
            f.dp_ratio, f.accuracy, n.dp_ratio, n.accuracy
        );
    }
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert_eq!(wins, 3, "full must beat no-lfair on dp_ratio in 3 of 3 seeds");
    assert!(
        mean_gap <= 0.05,
        "averaged accuracy of full must be within 5 points (gap {mean_gap:.4})"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "A6 took {elapsed:?}");
    println!(
        "A6 PASS: dp_ratio ordering 3/3 seeds, mean accuracy gap {mean_gap:+.4} <= 0.05 ({elapsed:?})"
    );
}

#[test]
fn acceptance_a7_tradeoff_direction() {
    let start = Instant::now();
    let lambdas = [0.01, 0.05, 0.1, 1.0, 10.0];
    let mut dp_corrs = Vec::new();
    let mut acc_corrs = Vec::new();
    for seed in [11u64, 22, 33] {
        let mut plan = toy_plan(seed, FedoraMode::Full);
        plan.repeats = 2;
        let rows = sweep_lambda2(&plan, &lambdas).unwrap();
        assert_eq!(rows.len(), lambdas.len());
        let ls: Vec<f64> = rows.iter().map(|r| r.lambda2).collect();
        let dps: Vec<f64> = rows.iter().map(|r| r.dp_ratio).collect();
        let accs: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
        dp_corrs.push(spearman(&ls, &dps));
        acc_corrs.push(spearman(&ls, &accs));
        println!(
            "  A7 seed {seed}: dp corr {:+.3}, acc corr {:+.3}",
            dp_corrs.last().unwrap(),
            acc_corrs.last().unwrap()
        );
    }
    let dp_corr = dp_corrs.iter().sum::<f64>() / dp_corrs.len() as f64;
    let acc_corr = acc_corrs.iter().sum::<f64>() / acc_corrs.len() as f64;
    assert!(dp_corr >= 0.6, "Spearman(lambda2, dp_ratio) = {dp_corr:.3} < 0.6");
    assert!(acc_corr <= -0.3, "Spearman(lambda2, accuracy) = {acc_corr:.3} > -0.3");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 900.0, "A7 took {elapsed:?}");
    println!(
        "A7 PASS: avg Spearman lambda2-dp {dp_corr:+.3} >= 0.6, lambda2-accuracy {acc_corr:+.3} <= -0.3 ({elapsed:?})"
    );
}

#[test]
fn acceptance_a8_dual_algebra() {
    let start = Instant::now();
    // scripted sequences match the closed form exactly
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let state = DualState {
            lambda1: rng.gen_range(0.0..5.0),
            lambda2: rng.gen_range(0.0..5.0),
            gamma1: rng.gen_range(0.0..0.5),
            gamma2: rng.gen_range(0.0..0.5),
            eta_primal: 0.001,
            eta_dual: rng.gen_range(0.001..0.5),
        };
        let inv = rng.gen_range(-1.0..2.0);
        let fair = rng.gen_range(-1.0..2.0);
        let next = dual_step(&state, inv, fair);
        let expect1 = (state.lambda1 + state.eta_dual * (inv - state.gamma1)).max(0.0);
        let expect2 = (state.lambda2 + state.eta_dual * (fair - state.gamma2)).max(0.0);
        assert_eq!(next.lambda1, expect1);
        assert_eq!(next.lambda2, expect2);
        assert!(next.lambda1 >= 0.0 && next.lambda2 >= 0.0);
    }
    // trace rows of A6/A7-profile training runs keep lambdas nonnegative,
    // including a frozen-lambda2 sweep-style run
    let out = leave_one_domain_out(&toy_plan(404, FedoraMode::Full)).unwrap();
    let mut frozen = toy_plan(404, FedoraMode::Full);
    frozen.fedora_config.lambda2_init = 10.0;
    frozen.fedora_config.freeze_lambda2 = true;
    frozen.fedora_config.iterations = 300;
    let out_frozen = leave_one_domain_out(&frozen).unwrap();
    let mut rows = 0usize;
    for o in [&out, &out_frozen] {
        for (_, trace) in &o.traces {
            for r in trace {
                assert!(r.lambda1 >= 0.0 && r.lambda2 >= 0.0);
                rows += 1;
            }
        }
    }
    for (_, trace) in &out_frozen.traces {
        assert!(trace.iter().all(|r| r.lambda2 == 10.0), "frozen lambda2 must not move");
    }
    let elapsed = start.elapsed();
    println!("A8 PASS: 1000 scripted dual steps exact; {rows} trace rows nonnegative ({elapsed:?})");
}

#[test]
fn acceptance_a9_transform_learning() {
    let start = Instant::now();
    let plan = toy_plan(7, FedoraMode::Full);
    let mut trains = Vec::new();
    let mut tests = Vec::new();
    for ds in &plan.datasets {
        let sp = SplitPlan {
            seed: fedora_core::data::derive_seed(3, &ds.domain_id),
            ..plan.split
        };
        let (tr, _, te) = split(ds, &sp).unwrap();
        trains.push(tr);
        tests.push(te);
    }
    let config = TransformTrainConfig {
        iterations: 2000,
        ..plan.transform_config.clone()
    };
    let out = train_transform(&trains, &config).unwrap();
    let first = out.trace.first().unwrap().loss_data;
    let last = out.trace.last().unwrap().loss_data;
    assert!(
        last <= 0.5 * first,
        "data reconstruction {first:.4} -> {last:.4} did not halve"
    );
    let pooled = fedora_core::data::DomainDataset::new(
        "heldout",
        tests.iter().flat_map(|t| t.examples.clone()).collect(),
        None,
    )
    .unwrap();
    let h_acc = sensitive_probe_accuracy(&out.model, &pooled).unwrap();
    assert!(h_acc >= 0.90, "sensitive classifier held-out accuracy {h_acc:.3} < 0.90");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 180.0, "A9 took {elapsed:?}");
    println!(
        "A9 PASS: data reconstruction {first:.3} -> {last:.3} ({:.1}%), h held-out accuracy {h_acc:.3} ({elapsed:?})",
        100.0 * last / first
    );
}

// ---------------------------------------------------------------------------
// A10: manifest determinism through the binary
// ---------------------------------------------------------------------------

fn run_cli(args: &[&str], dir: &std::path::Path) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_fedora"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

/// All text artifacts (and PNGs, which are deterministic too) under a root.
fn artifact_bytes(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn acceptance_a10_manifest_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let config_path = root.join("small.toml");
    std::fs::write(
        &config_path,
        r#"
out = "run"

[data]
file = "data/benchmark.csv"

[gen]
n_per_domain = 160
seed = 9

[transform]
iterations = 120
batch_size = 16
lr_autoencoder = 0.001
lr_discriminator = 0.001
lr_sensitive = 0.01
beta3 = 5.0
seed = 9

[train]
iterations = 120
batch_size = 32
seed = 9
gamma2 = 0.2
hidden = [8]

[eval]
repeats = 1
rho_cap = 1.0

[sweep]
lambda2 = [0.1, 1.0]

[audit]
triples = 2
"#,
    )
    .unwrap();

    let commands = ["gen", "train-transform", "train", "eval", "sweep", "audit-bound"];
    for cmd in commands {
        let out = run_cli(&[cmd, "--config", config_path.to_str().unwrap()], root);
        assert!(
            out.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let before = artifact_bytes(&root.join("run"));
    assert!(before.keys().any(|k| k.starts_with("reports/")));
    assert!(before.keys().any(|k| k.starts_with("traces/")));
    assert!(before.keys().any(|k| k.ends_with(".png")));

    // rerun every command from its own manifest; all outputs must be
    // reproduced byte for byte
    for cmd in commands {
        let manifest = root.join("run").join(format!("run_manifest_{cmd}.toml"));
        assert!(manifest.exists(), "manifest for {cmd} missing");
        let out = run_cli(&[cmd, "--config", manifest.to_str().unwrap()], root);
        assert!(
            out.status.success(),
            "{cmd} rerun failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let after = artifact_bytes(&root.join("run"));
    assert_eq!(
        before.keys().collect::<Vec<_>>(),
        after.keys().collect::<Vec<_>>(),
        "artifact sets differ"
    );
    let mut compared = 0;
    for (name, bytes) in &before {
        assert_eq!(bytes, &after[name], "artifact {name} changed on rerun");
        compared += 1;
    }
    let elapsed = start.elapsed();
    println!("A10 PASS: {compared} artifacts byte-identical after manifest reruns ({elapsed:?})");
}
