//! Command-line driver: generate synthetic benchmarks, train the
//! transformation model and the fairness-constrained classifier, run
//! leave-one-domain-out evaluation, sweep the fairness weight, and audit the
//! cross-domain unfairness bound on exact discrete joints.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedora_core::data::{load_tabular, save_tabular, SplitPlan};
use fedora_core::harness::{
    audit_random_triples, emit_report, leave_one_domain_out, persist_lodo, persist_sweep,
    sweep_lambda2, ExperimentPlan,
};
use fedora_core::synth::{benchmark_specs, gen_tabular_domain, StyleTransform};
use fedora_core::trainer::{
    save_classifier, train_fedora, write_trace, FedoraMode,
};
use fedora_core::transform::{load_checkpoint, save_checkpoint, train_transform};
use fedora_core::Result;

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "fedora",
    about = "Fair disentangled domain generalization on synthetic multi-domain benchmarks",
    version
)]
struct Cli {
    /// Config file (TOML sections); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override every section seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for checkpoints, reports, traces, and plots.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Training mode: full, no-ea, no-t, no-lfair.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and persist the synthetic multi-domain benchmark.
    Gen,
    /// Train the disentangling transformation model and save a checkpoint.
    TrainTransform,
    /// Train the classifier (full algorithm or an ablation) and save a checkpoint.
    Train,
    /// Leave-one-domain-out evaluation with reports and plots.
    Eval,
    /// Fairness-weight tradeoff sweep over fixed lambda2 values.
    Sweep,
    /// Exhaustive unfairness-bound audit on random enumerable domain triples.
    AuditBound,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        mode: cli.mode.clone(),
    };
    let config = match RunConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let run = match cli.command {
        Command::Gen => cmd_gen(&config),
        Command::TrainTransform => cmd_train_transform(&config),
        Command::Train => cmd_train(&config),
        Command::Eval => cmd_eval(&config),
        Command::Sweep => cmd_sweep(&config),
        Command::AuditBound => cmd_audit_bound(&config),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_datasets(config: &RunConfig) -> Result<Vec<fedora_core::data::DomainDataset>> {
    let path = config.in_out_dir(&config.data.file);
    load_tabular(path)
}

fn cmd_gen(config: &RunConfig) -> Result<ExitCode> {
    config.write_manifest("gen")?;
    let styles: Vec<StyleTransform> = config
        .gen
        .styles
        .iter()
        .map(|p| StyleTransform::from_packed(p))
        .collect::<Result<_>>()?;
    let specs = benchmark_specs(
        &config.gen.rhos,
        &styles,
        config.gen.n_per_domain,
        config.gen.seed,
    )?;
    let datasets = specs
        .iter()
        .map(gen_tabular_domain)
        .collect::<Result<Vec<_>>>()?;
    let path = config.in_out_dir(&config.data.file);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| fedora_core::Error::io(parent.display().to_string(), e))?;
    }
    save_tabular(&datasets, &path)?;
    let manifest_path = path.with_extension("manifest.json");
    emit_report(&specs, &manifest_path)?;
    println!(
        "gen: wrote {} domains x {} examples to {}",
        datasets.len(),
        config.gen.n_per_domain,
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train_transform(config: &RunConfig) -> Result<ExitCode> {
    config.write_manifest("train-transform")?;
    let datasets = load_datasets(config)?;
    let tconfig = config.transform.to_config();
    let outcome = train_transform(&datasets, &tconfig)?;
    let ckpt = config.in_out_dir(&config.transform.checkpoint);
    if let Some(parent) = ckpt.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| fedora_core::Error::io(parent.display().to_string(), e))?;
    }
    save_checkpoint(&outcome.model, Some(&tconfig), &ckpt)?;
    let trace_dir = config.out.join("traces");
    std::fs::create_dir_all(&trace_dir)
        .map_err(|e| fedora_core::Error::io(trace_dir.display().to_string(), e))?;
    let trace_path = trace_dir.join("transform.csv");
    let mut text = String::from("iter,L_data,L_factor,L_sens,L_gen,L_disc\n");
    for r in &outcome.trace {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration, r.loss_data, r.loss_factor, r.loss_sensitive, r.loss_gen, r.loss_disc
        ));
    }
    std::fs::write(&trace_path, text)
        .map_err(|e| fedora_core::Error::io(trace_path.display().to_string(), e))?;
    let first = outcome.trace.first().map(|r| r.loss_data).unwrap_or(f64::NAN);
    let last = outcome.trace.last().map(|r| r.loss_data).unwrap_or(f64::NAN);
    println!(
        "train-transform: {} iterations, data-reconstruction {first:.4} -> {last:.4}, checkpoint {}",
        tconfig.iterations,
        ckpt.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(config: &RunConfig) -> Result<ExitCode> {
    config.write_manifest("train")?;
    let datasets = load_datasets(config)?;
    let fconfig = config.train.to_config()?;
    let transform = if fconfig.mode == FedoraMode::NoT {
        None
    } else {
        Some(load_checkpoint(config.in_out_dir(&config.transform.checkpoint))?)
    };
    let outcome = train_fedora(transform.as_ref(), &datasets, &fconfig)?;
    let ckpt = config.in_out_dir(&config.train.checkpoint);
    if let Some(parent) = ckpt.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| fedora_core::Error::io(parent.display().to_string(), e))?;
    }
    save_classifier(&outcome.classifier, Some(&fconfig), &ckpt)?;
    let trace_dir = config.out.join("traces");
    std::fs::create_dir_all(&trace_dir)
        .map_err(|e| fedora_core::Error::io(trace_dir.display().to_string(), e))?;
    write_trace(&outcome.trace, trace_dir.join("train.csv"))?;
    let last = outcome.trace.last();
    println!(
        "train[{}]: {} iterations, final L_cls {:.4}, lambda1 {:.4}, lambda2 {:.4}, checkpoint {}",
        fconfig.mode,
        fconfig.iterations,
        last.map(|r| r.loss_cls).unwrap_or(f64::NAN),
        outcome.final_dual.lambda1,
        outcome.final_dual.lambda2,
        ckpt.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn experiment_plan(config: &RunConfig) -> Result<ExperimentPlan> {
    Ok(ExperimentPlan {
        datasets: load_datasets(config)?,
        transform_config: config.transform.to_config(),
        fedora_config: config.train.to_config()?,
        split: SplitPlan::new(
            config.eval.train_fraction,
            config.eval.validation_fraction,
            config.eval.split_seed,
        )?,
        repeats: config.eval.repeats,
        rho_cap: config.eval.rho_cap,
    })
}

fn cmd_eval(config: &RunConfig) -> Result<ExitCode> {
    config.write_manifest("eval")?;
    let plan = experiment_plan(config)?;
    let output = leave_one_domain_out(&plan)?;
    persist_lodo(&config.out, &config.eval.experiment, &output)?;
    let avg = &output.summary.average.mean;
    println!(
        "eval[{}]: {} folds x {} repeats, avg accuracy {:.4}, rho {:.4}, dp {:.4}, auc_fair {:.4} ({} failures)",
        config.eval.experiment,
        output.summary.folds.len(),
        plan.repeats,
        avg.accuracy,
        avg.rho,
        avg.dp_ratio,
        avg.auc_fair,
        output.summary.failures.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(config: &RunConfig) -> Result<ExitCode> {
    config.write_manifest("sweep")?;
    let plan = experiment_plan(config)?;
    let rows = sweep_lambda2(&plan, &config.sweep.lambda2)?;
    persist_sweep(&config.out, &config.sweep.experiment, &rows)?;
    println!("sweep[{}]: {} rows", config.sweep.experiment, rows.len());
    for r in &rows {
        println!(
            "  lambda2 {:>7.3}: accuracy {:.4}, dp {:.4}, rho {:.4}",
            r.lambda2, r.accuracy, r.dp_ratio, r.rho
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit_bound(config: &RunConfig) -> Result<ExitCode> {
    config.write_manifest("audit-bound")?;
    let summary = audit_random_triples(config.audit.seed, config.audit.triples)?;
    let report_path = config.out.join("reports").join("audit.json");
    emit_report(&summary, &report_path)?;
    println!(
        "audit-bound: {} triples, {} classifier cases, {} violations, worst margin {:.6}",
        summary.triples, summary.cases_checked, summary.violations, summary.worst_margin
    );
    if summary.violations > 0 {
        eprintln!("error: the unfairness bound was violated; this signals an implementation bug");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
