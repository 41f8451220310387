//! Primal-dual training of the fairness-aware invariant classifier, plus the
//! three ablation variants.
//!
//! Per minibatch the full mode forms the Lagrangian
//! L = L_cls + lambda1 * L_inv + lambda2 * L_fair, takes one Adam step on the
//! classifier, then one projected dual ascent step
//! lambda <- max(lambda + eta_d (loss - gamma), 0). The ablations drop the
//! inner encoder (augmenting with unchanged z), drop augmentation entirely,
//! or drop the fairness term, each keeping only its relevant dual variable.

use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DomainDataset;
use crate::error::{Error, Result};
use crate::graph::{Adam, Grads, Graph, NodeId, ParamSet};
use crate::nn::{apply_mlp, build_mlp, cross_entropy_logits, kl_softmax, normal_vec, prob_class1, MlpSpec};
use crate::transform::{augment, CheckpointFile, Example, TransformModelParams, CHECKPOINT_VERSION};

/// Weights and shape of the 2-class classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub params: ParamSet,
    pub spec: MlpSpec,
}

impl ClassifierParams {
    pub fn init(input_dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut params = ParamSet::new();
        let spec = build_mlp(&mut params, "f", input_dim, hidden, 2, rng);
        Self { params, spec }
    }

    pub fn verify_shapes(&self) -> Result<()> {
        let mut dims = vec![self.spec.input_dim];
        dims.extend_from_slice(&self.spec.hidden);
        dims.push(self.spec.output_dim);
        if self.spec.output_dim != 2 {
            return Err(Error::Checkpoint(format!(
                "classifier output dim {} != 2",
                self.spec.output_dim
            )));
        }
        for (l, &(w, b)) in self.spec.layers.iter().enumerate() {
            if w >= self.params.len() || b >= self.params.len() {
                return Err(Error::Checkpoint(format!("layer {l}: parameter ids out of range")));
            }
            let wt = self.params.get(w);
            let bt = self.params.get(b);
            if wt.rows != dims[l + 1]
                || wt.cols != dims[l]
                || bt.rows != dims[l + 1]
                || wt.data.len() != wt.rows * wt.cols
                || bt.data.len() != bt.rows
            {
                return Err(Error::Checkpoint(format!(
                    "layer {l}: tensor {}x{} vs expected {}x{}",
                    wt.rows,
                    wt.cols,
                    dims[l + 1],
                    dims[l]
                )));
            }
        }
        if !self.params.all_finite() {
            return Err(Error::Checkpoint("non-finite weights".into()));
        }
        Ok(())
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "input has length {}, classifier expects {}",
                x.len(),
                self.spec.input_dim
            )));
        }
        let mut g = Graph::new(&self.params);
        let xn = g.input(x.to_vec());
        let out = apply_mlp(&mut g, &self.spec, xn)?;
        Ok(g.value(out).to_vec())
    }
}

/// Hard label and class-1 probability for one example.
pub fn predict(params: &ClassifierParams, x: &[f64]) -> Result<(u8, f64)> {
    let logits = params.logits(x)?;
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let score = e1 / (e0 + e1);
    Ok((u8::from(score >= 0.5), score))
}

/// Lagrange multipliers, slack constants, and step sizes of the dual loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta_primal: f64,
    pub eta_dual: f64,
}

impl DualState {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 || self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::InvalidSpec(
                "lambdas and gammas must be nonnegative".into(),
            ));
        }
        if !(self.eta_primal > 0.0) || !(self.eta_dual > 0.0) {
            return Err(Error::InvalidSpec("step sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Projected dual ascent:
/// lambda1' = max(lambda1 + eta_d (inv_loss - gamma1), 0),
/// lambda2' = max(lambda2 + eta_d (fair_loss - gamma2), 0).
pub fn dual_step(state: &DualState, inv_loss: f64, fair_loss: f64) -> DualState {
    DualState {
        lambda1: (state.lambda1 + state.eta_dual * (inv_loss - state.gamma1)).max(0.0),
        lambda2: (state.lambda2 + state.eta_dual * (fair_loss - state.gamma2)).max(0.0),
        ..*state
    }
}

/// Which algorithm variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FedoraMode {
    /// Full primal-dual training with Procedure-T augmentation.
    Full,
    /// No inner level: augment with x' = G_o(E_m(x), s'), z unchanged,
    /// classification loss added on the augmented batch, lambda2 dual only.
    NoEa,
    /// No augmentation at all: L_cls + lambda2 * L_fair on the raw batch.
    NoT,
    /// No fairness term: L_cls + lambda1 * L_inv with full augmentation.
    NoLfair,
}

impl std::fmt::Display for FedoraMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FedoraMode::Full => "full",
            FedoraMode::NoEa => "no-ea",
            FedoraMode::NoT => "no-t",
            FedoraMode::NoLfair => "no-lfair",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for FedoraMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(FedoraMode::Full),
            "no-ea" => Ok(FedoraMode::NoEa),
            "no-t" => Ok(FedoraMode::NoT),
            "no-lfair" => Ok(FedoraMode::NoLfair),
            other => Err(Error::InvalidSpec(format!(
                "unknown mode `{other}` (expected full, no-ea, no-t, no-lfair)"
            ))),
        }
    }
}

/// Classifier-training controls. Batches should carry both sensitive values
/// in expectation (batch_size >= 2 per group); degenerate batches contribute
/// a zero fairness term and are counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FedoraConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eta_primal: f64,
    pub eta_dual: f64,
    pub lambda1_init: f64,
    pub lambda2_init: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub mode: FedoraMode,
    /// Hidden widths of the classifier.
    pub hidden: Vec<usize>,
    /// Hold lambda2 constant (tradeoff sweeps fix the fairness weight).
    pub freeze_lambda2: bool,
}

impl Default for FedoraConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            batch_size: 64,
            seed: 0,
            eta_primal: 0.001,
            eta_dual: 0.05,
            lambda1_init: 1.0,
            lambda2_init: 1.0,
            gamma1: 0.025,
            gamma2: 0.025,
            mode: FedoraMode::Full,
            hidden: vec![32, 32],
            freeze_lambda2: false,
        }
    }
}

impl FedoraConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.batch_size == 0 {
            return Err(Error::InvalidSpec(
                "iterations and batch_size must be positive".into(),
            ));
        }
        let dual = self.initial_dual_state();
        dual.validate()
    }

    pub fn initial_dual_state(&self) -> DualState {
        DualState {
            lambda1: self.lambda1_init,
            lambda2: self.lambda2_init,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            eta_primal: self.eta_primal,
            eta_dual: self.eta_dual,
        }
    }
}

// ---------------------------------------------------------------------------
// Loss graphs
// ---------------------------------------------------------------------------

/// Mean cross-entropy over the batch.
pub fn classification_node(
    g: &mut Graph,
    clf: &MlpSpec,
    xs: &[&[f64]],
    ys: &[u8],
) -> Result<NodeId> {
    let mut terms = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        let xn = g.input(x.to_vec());
        let logits = apply_mlp(g, clf, xn)?;
        terms.push(cross_entropy_logits(g, logits, y as usize));
    }
    Ok(g.mean_of(terms))
}

/// Mean KL(softmax f(x) || softmax f(x')) over aligned pairs; the original
/// example is the reference distribution.
pub fn invariance_node(
    g: &mut Graph,
    clf: &MlpSpec,
    xs: &[&[f64]],
    xs_aug: &[&[f64]],
) -> Result<NodeId> {
    if xs.len() != xs_aug.len() {
        return Err(Error::LengthMismatch(format!(
            "{} originals vs {} augmented",
            xs.len(),
            xs_aug.len()
        )));
    }
    let mut terms = Vec::with_capacity(xs.len());
    for (&x, &xa) in xs.iter().zip(xs_aug) {
        let xn = g.input(x.to_vec());
        let u = apply_mlp(g, clf, xn)?;
        let an = g.input(xa.to_vec());
        let v = apply_mlp(g, clf, an)?;
        terms.push(kl_softmax(g, u, v));
    }
    Ok(g.mean_of(terms))
}

/// |mean of g| over one batch using soft class-1 probabilities and the
/// batch-empirical p1. A batch with a single sensitive group present yields
/// no graph node (the term contributes zero) and the caller counts it.
fn fairness_term_node(
    g: &mut Graph,
    clf: &MlpSpec,
    xs: &[&[f64]],
    zs: &[i8],
) -> Result<Option<NodeId>> {
    let m = xs.len();
    let n_pos = zs.iter().filter(|&&z| z == 1).count();
    if n_pos == 0 || n_pos == m {
        return Ok(None);
    }
    let p1 = n_pos as f64 / m as f64;
    let mut weighted = Vec::with_capacity(m);
    for (&x, &z) in xs.iter().zip(zs) {
        let xn = g.input(x.to_vec());
        let logits = apply_mlp(g, clf, xn)?;
        let score = prob_class1(g, logits);
        let w = ((f64::from(z) + 1.0) / 2.0 - p1) / (p1 * (1.0 - p1));
        weighted.push(g.affine(score, w / m as f64, 0.0));
    }
    let mean = g.add_many(weighted);
    Ok(Some(g.abs(mean)))
}

/// L_fair = |mean g over batch| + |mean g over augmented batch|. Returns the
/// node (None when both terms are degenerate) and the number of degenerate
/// batch terms (0, 1, or 2).
pub fn fairness_node(
    g: &mut Graph,
    clf: &MlpSpec,
    xs: &[&[f64]],
    zs: &[i8],
    xs_aug: &[&[f64]],
    zs_aug: &[i8],
) -> Result<(Option<NodeId>, u64)> {
    let mut degenerate = 0;
    let mut terms = Vec::new();
    match fairness_term_node(g, clf, xs, zs)? {
        Some(n) => terms.push(n),
        None => degenerate += 1,
    }
    match fairness_term_node(g, clf, xs_aug, zs_aug)? {
        Some(n) => terms.push(n),
        None => degenerate += 1,
    }
    let node = if terms.is_empty() {
        None
    } else {
        Some(g.add_many(terms))
    };
    Ok((node, degenerate))
}

// ---------------------------------------------------------------------------
// Scalar wrappers
// ---------------------------------------------------------------------------

pub fn classification_loss(params: &ClassifierParams, batch: &[Example]) -> Result<f64> {
    let xs: Vec<&[f64]> = batch.iter().map(|e| e.0.as_slice()).collect();
    let ys: Vec<u8> = batch.iter().map(|e| e.2).collect();
    let mut g = Graph::new(&params.params);
    let node = classification_node(&mut g, &params.spec, &xs, &ys)?;
    Ok(g.scalar(node))
}

pub fn invariance_loss(
    params: &ClassifierParams,
    batch: &[Example],
    augmented: &[Example],
) -> Result<f64> {
    let xs: Vec<&[f64]> = batch.iter().map(|e| e.0.as_slice()).collect();
    let xa: Vec<&[f64]> = augmented.iter().map(|e| e.0.as_slice()).collect();
    let mut g = Graph::new(&params.params);
    let node = invariance_node(&mut g, &params.spec, &xs, &xa)?;
    Ok(g.scalar(node))
}

pub fn fairness_loss(
    params: &ClassifierParams,
    batch: &[Example],
    augmented: &[Example],
) -> Result<f64> {
    let xs: Vec<&[f64]> = batch.iter().map(|e| e.0.as_slice()).collect();
    let zs: Vec<i8> = batch.iter().map(|e| e.1).collect();
    let xa: Vec<&[f64]> = augmented.iter().map(|e| e.0.as_slice()).collect();
    let za: Vec<i8> = augmented.iter().map(|e| e.1).collect();
    let mut g = Graph::new(&params.params);
    let (node, _) = fairness_node(&mut g, &params.spec, &xs, &zs, &xa, &za)?;
    Ok(node.map_or(0.0, |n| g.scalar(n)))
}

/// |mean g| of fixed scores against a batch-empirical p1; the score-level
/// oracle for the graph-built fairness term.
pub fn fairness_term_from_scores(scores: &[f64], zs: &[i8]) -> f64 {
    let m = scores.len();
    let n_pos = zs.iter().filter(|&&z| z == 1).count();
    if n_pos == 0 || n_pos == m {
        return 0.0;
    }
    let p1 = n_pos as f64 / m as f64;
    let mean: f64 = scores
        .iter()
        .zip(zs)
        .map(|(&s, &z)| ((f64::from(z) + 1.0) / 2.0 - p1) * s / (p1 * (1.0 - p1)))
        .sum::<f64>()
        / m as f64;
    mean.abs()
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// One row of the classifier training trace. The lambda columns hold the
/// multipliers that weighted this iteration's Lagrangian (before the dual
/// update).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub loss_cls: f64,
    pub loss_inv: f64,
    pub loss_fair: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Export a trace as delimiter-separated text.
pub fn write_trace(rows: &[TraceRow], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut out = String::from("iter,L_cls,L_inv,L_fair,lambda1,lambda2\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration, r.loss_cls, r.loss_inv, r.loss_fair, r.lambda1, r.lambda2
        ));
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref().display().to_string(), e))
}

#[derive(Debug, Clone)]
pub struct FedoraOutcome {
    pub classifier: ClassifierParams,
    pub trace: Vec<TraceRow>,
    pub final_dual: DualState,
    /// Number of augmentation-procedure invocations.
    pub augment_calls: u64,
    /// Batches whose fairness term was skipped for lacking a sensitive group.
    pub degenerate_fair_batches: u64,
}

/// Snapshot hook for checkpoint selection: called with (iteration index,
/// current classifier) at every snapshot point.
pub type SnapshotHook<'a> = dyn FnMut(usize, &ClassifierParams) + 'a;

/// Train the classifier with the configured mode. `transform` is required by
/// every mode except `no-t`, which never augments.
pub fn train_fedora(
    transform: Option<&TransformModelParams>,
    datasets: &[DomainDataset],
    config: &FedoraConfig,
) -> Result<FedoraOutcome> {
    train_fedora_with_snapshots(transform, datasets, config, 0, &mut |_, _| {})
}

/// Same signature as [`train_fedora`] with mode dispatch; alias kept for
/// symmetry with the algorithm variants.
pub fn train_ablation(
    mode: FedoraMode,
    transform: Option<&TransformModelParams>,
    datasets: &[DomainDataset],
    config: &FedoraConfig,
) -> Result<FedoraOutcome> {
    let cfg = FedoraConfig {
        mode,
        ..config.clone()
    };
    train_fedora(transform, datasets, &cfg)
}

/// Training loop with an optional snapshot hook every `snapshot_every`
/// iterations (0 disables snapshots). The final iteration always snapshots.
pub fn train_fedora_with_snapshots(
    transform: Option<&TransformModelParams>,
    datasets: &[DomainDataset],
    config: &FedoraConfig,
    snapshot_every: usize,
    on_snapshot: &mut SnapshotHook,
) -> Result<FedoraOutcome> {
    config.validate()?;
    if config.mode != FedoraMode::NoT && transform.is_none() {
        return Err(Error::InvalidSpec(format!(
            "mode {} requires a trained transformation model",
            config.mode
        )));
    }
    let mut ordered: Vec<&DomainDataset> = datasets.iter().collect();
    ordered.sort_by(|a, b| a.domain_id.cmp(&b.domain_id));
    let dim = ordered
        .iter()
        .find(|d| !d.is_empty())
        .map(|d| d.feature_dim())
        .unwrap_or(0);
    if dim == 0 {
        return Err(Error::TooSmall("no training examples".into()));
    }
    let mut pool: Vec<Example> = Vec::new();
    for ds in &ordered {
        if !ds.is_empty() && ds.feature_dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "domain {} has dimension {}, expected {dim}",
                ds.domain_id,
                ds.feature_dim()
            )));
        }
        pool.extend(
            ds.examples
                .iter()
                .map(|e| (e.features.clone(), e.sensitive, e.label)),
        );
    }
    if let Some(t) = transform {
        if t.shapes.input_dim != dim {
            return Err(Error::DimensionMismatch(format!(
                "transformation model expects dimension {}, data has {dim}",
                t.shapes.input_dim
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut clf = ClassifierParams::init(dim, &config.hidden, &mut rng);
    let mut adam = Adam::new(&clf.params, config.eta_primal);
    let clf_ids = clf.spec.param_ids();
    let mut grads = Grads::zeros(&clf.params);
    let mut dual = config.initial_dual_state();
    let mut trace = Vec::with_capacity(config.iterations);
    let mut augment_calls = 0u64;
    let mut degenerate_fair_batches = 0u64;

    let batch_size = config.batch_size.min(pool.len());
    for iter in 0..config.iterations {
        let idx = index_sample(&mut rng, pool.len(), batch_size).into_vec();
        let batch: Vec<Example> = idx.iter().map(|&i| pool[i].clone()).collect();

        // Mode-dependent augmented batch.
        let augmented: Vec<Example> = match config.mode {
            FedoraMode::NoT => Vec::new(),
            FedoraMode::Full | FedoraMode::NoLfair => {
                let t = transform.expect("checked above");
                let mut out = Vec::with_capacity(batch.len());
                for (x, z, y) in &batch {
                    out.push(augment(t, x, *z, *y, &mut rng)?);
                    augment_calls += 1;
                }
                out
            }
            FedoraMode::NoEa => {
                // x' = G_o(E_m(x), s' ~ N(0, I_s)), z and y unchanged
                let t = transform.expect("checked above");
                let mut out = Vec::with_capacity(batch.len());
                for (x, z, y) in &batch {
                    let s_new = normal_vec(&mut rng, t.shapes.dim_s);
                    let mut g = Graph::new(&t.params);
                    let xn = g.input(x.clone());
                    let m = apply_mlp(&mut g, &t.em, xn)?;
                    let sn = g.input(s_new);
                    let ms = g.concat(m, sn);
                    let x_new = apply_mlp(&mut g, &t.go, ms)?;
                    out.push((g.value(x_new).to_vec(), *z, *y));
                    augment_calls += 1;
                }
                out
            }
        };

        let xs: Vec<&[f64]> = batch.iter().map(|e| e.0.as_slice()).collect();
        let zs: Vec<i8> = batch.iter().map(|e| e.1).collect();
        let ys: Vec<u8> = batch.iter().map(|e| e.2).collect();
        let xa: Vec<&[f64]> = augmented.iter().map(|e| e.0.as_slice()).collect();
        let za: Vec<i8> = augmented.iter().map(|e| e.1).collect();
        let ya: Vec<u8> = augmented.iter().map(|e| e.2).collect();

        grads.reset();
        let (cls_v, inv_v, fair_v) = {
            let mut g = Graph::new(&clf.params);
            let cls = classification_node(&mut g, &clf.spec, &xs, &ys)?;
            let mut total = cls;
            let mut inv_v = 0.0;
            let mut fair_v = 0.0;

            match config.mode {
                FedoraMode::Full => {
                    let inv = invariance_node(&mut g, &clf.spec, &xs, &xa)?;
                    inv_v = g.scalar(inv);
                    let weighted = g.affine(inv, dual.lambda1, 0.0);
                    total = g.add(total, weighted);
                    let (fair, degen) =
                        fairness_node(&mut g, &clf.spec, &xs, &zs, &xa, &za)?;
                    degenerate_fair_batches += degen;
                    if let Some(fair) = fair {
                        fair_v = g.scalar(fair);
                        let weighted = g.affine(fair, dual.lambda2, 0.0);
                        total = g.add(total, weighted);
                    }
                }
                FedoraMode::NoEa => {
                    let cls_aug = classification_node(&mut g, &clf.spec, &xa, &ya)?;
                    total = g.add(total, cls_aug);
                    match fairness_term_node(&mut g, &clf.spec, &xs, &zs)? {
                        Some(fair) => {
                            fair_v = g.scalar(fair);
                            let weighted = g.affine(fair, dual.lambda2, 0.0);
                            total = g.add(total, weighted);
                        }
                        None => degenerate_fair_batches += 1,
                    }
                }
                FedoraMode::NoT => {
                    match fairness_term_node(&mut g, &clf.spec, &xs, &zs)? {
                        Some(fair) => {
                            fair_v = g.scalar(fair);
                            let weighted = g.affine(fair, dual.lambda2, 0.0);
                            total = g.add(total, weighted);
                        }
                        None => degenerate_fair_batches += 1,
                    }
                }
                FedoraMode::NoLfair => {
                    let inv = invariance_node(&mut g, &clf.spec, &xs, &xa)?;
                    inv_v = g.scalar(inv);
                    let weighted = g.affine(inv, dual.lambda1, 0.0);
                    total = g.add(total, weighted);
                }
            }
            g.backward(total, &mut grads);
            (g.scalar(cls), inv_v, fair_v)
        };
        adam.step(&mut clf.params, &grads, &clf_ids, -1.0);

        for (name, v) in [("classification", cls_v), ("invariance", inv_v), ("fairness", fair_v)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss {
                    iteration: iter,
                    loss_name: name.into(),
                });
            }
        }
        trace.push(TraceRow {
            iteration: iter,
            loss_cls: cls_v,
            loss_inv: inv_v,
            loss_fair: fair_v,
            lambda1: dual.lambda1,
            lambda2: dual.lambda2,
        });

        // Dual ascent on the multipliers active in this mode.
        let next = dual_step(&dual, inv_v, fair_v);
        match config.mode {
            FedoraMode::Full => {
                dual.lambda1 = next.lambda1;
                if !config.freeze_lambda2 {
                    dual.lambda2 = next.lambda2;
                }
            }
            FedoraMode::NoEa | FedoraMode::NoT => {
                if !config.freeze_lambda2 {
                    dual.lambda2 = next.lambda2;
                }
            }
            FedoraMode::NoLfair => {
                dual.lambda1 = next.lambda1;
            }
        }

        if (snapshot_every > 0 && (iter + 1) % snapshot_every == 0)
            || iter + 1 == config.iterations
        {
            on_snapshot(iter, &clf);
        }
    }

    Ok(FedoraOutcome {
        classifier: clf,
        trace,
        final_dual: dual,
        augment_calls,
        degenerate_fair_batches,
    })
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

pub fn save_classifier(
    clf: &ClassifierParams,
    config: Option<&FedoraConfig>,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        kind: "classifier".to_string(),
        config: serde_json::to_value(config)?,
        payload: clf.clone(),
    };
    let text = serde_json::to_string(&file)?;
    std::fs::write(path.as_ref(), text)
        .map_err(|e| Error::io(path.as_ref().display().to_string(), e))
}

pub fn load_classifier(path: impl AsRef<std::path::Path>) -> Result<ClassifierParams> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::io(path.as_ref().display().to_string(), e))?;
    let file: CheckpointFile<ClassifierParams> = serde_json::from_str(&text)?;
    if file.format_version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {} unsupported (expected {CHECKPOINT_VERSION})",
            file.format_version
        )));
    }
    if file.kind != "classifier" {
        return Err(Error::Checkpoint(format!(
            "kind `{}` is not a classifier checkpoint",
            file.kind
        )));
    }
    file.payload.verify_shapes()?;
    Ok(file.payload)
}
