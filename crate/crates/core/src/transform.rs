//! The bi-level disentangling transformation model: encoders E_m, E_c, E_a,
//! E_s, decoders G_i, G_o, discriminators D_i, D_o, and the sensitive
//! classifier h, together with its four training losses, the three-phase
//! minibatch training loop, and the augmentation procedure used by the
//! downstream classifier trainer.
//!
//! The outer level encodes an input to a content factor m = E_m(x) and a
//! style factor s = E_s(x); the inner level splits the content factor into a
//! semantic factor c = E_c(m) and a sensitive factor a = E_a(m). Decoding
//! runs the other way: G_i maps (c, a) back to a content factor and G_o maps
//! (m, s) back to data space.

use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DomainDataset;
use crate::error::{Error, Result};
use crate::graph::{Adam, Grads, Graph, NodeId, ParamId, ParamSet};
use crate::nn::{
    apply_mlp, bce_logit, build_mlp, l1_diff, ln_one_minus_prob, ln_prob, normal_vec, MlpSpec,
};

/// The (content, semantic, sensitive, style) codes of one example.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentFactors {
    pub content_m: Vec<f64>,
    pub semantic_c: Vec<f64>,
    pub sensitive_a: Vec<f64>,
    pub style_s: Vec<f64>,
}

/// Layer widths of every sub-network. Defaults mirror a small tabular stack:
/// E_m 32->16, E_s 32->2, E_c 16->8, E_a 8->2, G_i 16->16, G_o 32->d,
/// D_o 32->16, D_i 8->8, h a single sigmoid layer on the sensitive factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformShapes {
    pub input_dim: usize,
    pub dim_m: usize,
    pub dim_c: usize,
    pub dim_a: usize,
    pub dim_s: usize,
    pub hidden_em: Vec<usize>,
    pub hidden_es: Vec<usize>,
    pub hidden_ec: Vec<usize>,
    pub hidden_ea: Vec<usize>,
    pub hidden_gi: Vec<usize>,
    pub hidden_go: Vec<usize>,
    pub hidden_do: Vec<usize>,
    pub hidden_di: Vec<usize>,
    /// Output width of the discriminator stacks; their mean is the logit.
    pub disc_out_o: usize,
    pub disc_out_i: usize,
}

impl TransformShapes {
    pub fn for_input_dim(input_dim: usize) -> Self {
        Self {
            input_dim,
            dim_m: 16,
            dim_c: 8,
            dim_a: 2,
            dim_s: 2,
            hidden_em: vec![32],
            hidden_es: vec![32],
            hidden_ec: vec![16],
            hidden_ea: vec![8],
            hidden_gi: vec![16],
            hidden_go: vec![32],
            hidden_do: vec![32],
            hidden_di: vec![8],
            disc_out_o: 16,
            disc_out_i: 8,
        }
    }

    /// A deliberately tiny stack for gradient checks and hand traces.
    pub fn tiny(input_dim: usize) -> Self {
        Self {
            input_dim,
            dim_m: 2,
            dim_c: 2,
            dim_a: 1,
            dim_s: 1,
            hidden_em: vec![3],
            hidden_es: vec![3],
            hidden_ec: vec![3],
            hidden_ea: vec![3],
            hidden_gi: vec![3],
            hidden_go: vec![3],
            hidden_do: vec![3],
            hidden_di: vec![3],
            disc_out_o: 2,
            disc_out_i: 2,
        }
    }
}

/// Loss weights, learning rates, and loop controls for transformation-model
/// training. Weight defaults follow the selected values beta = (10, 1, 1, 1);
/// rate defaults are Adam at 1e-4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformTrainConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub lr_discriminator: f64,
    pub lr_autoencoder: f64,
    pub lr_sensitive: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Network shape override; derived from the data dimension when absent.
    pub shapes: Option<TransformShapes>,
}

impl Default for TransformTrainConfig {
    fn default() -> Self {
        Self {
            beta1: 10.0,
            beta2: 1.0,
            beta3: 1.0,
            beta4: 1.0,
            lr_discriminator: 1e-4,
            lr_autoencoder: 1e-4,
            lr_sensitive: 1e-4,
            iterations: 2000,
            batch_size: 32,
            seed: 0,
            shapes: None,
        }
    }
}

impl TransformTrainConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("beta4", self.beta4),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("lr_discriminator", self.lr_discriminator),
            ("lr_autoencoder", self.lr_autoencoder),
            ("lr_sensitive", self.lr_sensitive),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.iterations == 0 || self.batch_size == 0 {
            return Err(Error::InvalidSpec(
                "iterations and batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// All weights of the transformation model plus the shape configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformModelParams {
    pub shapes: TransformShapes,
    pub params: ParamSet,
    pub em: MlpSpec,
    pub es: MlpSpec,
    pub ec: MlpSpec,
    pub ea: MlpSpec,
    pub gi: MlpSpec,
    pub go: MlpSpec,
    pub disc_o: MlpSpec,
    pub disc_i: MlpSpec,
    pub h: MlpSpec,
}

impl TransformModelParams {
    /// Fresh model with seeded He initialization.
    pub fn init(shapes: TransformShapes, rng: &mut ChaCha8Rng) -> Self {
        let mut params = ParamSet::new();
        let em = build_mlp(
            &mut params,
            "em",
            shapes.input_dim,
            &shapes.hidden_em,
            shapes.dim_m,
            rng,
        );
        let es = build_mlp(
            &mut params,
            "es",
            shapes.input_dim,
            &shapes.hidden_es,
            shapes.dim_s,
            rng,
        );
        let ec = build_mlp(&mut params, "ec", shapes.dim_m, &shapes.hidden_ec, shapes.dim_c, rng);
        let ea = build_mlp(&mut params, "ea", shapes.dim_m, &shapes.hidden_ea, shapes.dim_a, rng);
        let gi = build_mlp(
            &mut params,
            "gi",
            shapes.dim_c + shapes.dim_a,
            &shapes.hidden_gi,
            shapes.dim_m,
            rng,
        );
        let go = build_mlp(
            &mut params,
            "go",
            shapes.dim_m + shapes.dim_s,
            &shapes.hidden_go,
            shapes.input_dim,
            rng,
        );
        let disc_o = build_mlp(
            &mut params,
            "do",
            shapes.input_dim,
            &shapes.hidden_do,
            shapes.disc_out_o,
            rng,
        );
        let disc_i = build_mlp(
            &mut params,
            "di",
            shapes.dim_m,
            &shapes.hidden_di,
            shapes.disc_out_i,
            rng,
        );
        let h = build_mlp(&mut params, "h", shapes.dim_a, &[], 1, rng);
        Self {
            shapes,
            params,
            em,
            es,
            ec,
            ea,
            gi,
            go,
            disc_o,
            disc_i,
            h,
        }
    }

    pub fn autoencoder_param_ids(&self) -> Vec<ParamId> {
        [&self.em, &self.es, &self.ec, &self.ea, &self.gi, &self.go]
            .iter()
            .flat_map(|s| s.param_ids())
            .collect()
    }

    pub fn discriminator_param_ids(&self) -> Vec<ParamId> {
        [&self.disc_o, &self.disc_i]
            .iter()
            .flat_map(|s| s.param_ids())
            .collect()
    }

    pub fn sensitive_param_ids(&self) -> Vec<ParamId> {
        self.h.param_ids()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.shapes.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "input has length {}, model expects {}",
                x.len(),
                self.shapes.input_dim
            )));
        }
        Ok(())
    }

    /// m = E_m(x), s = E_s(x), c = E_c(m), a = E_a(m).
    pub fn encode(&self, x: &[f64]) -> Result<LatentFactors> {
        self.check_input(x)?;
        let mut g = Graph::new(&self.params);
        let xn = g.input(x.to_vec());
        let m = apply_mlp(&mut g, &self.em, xn)?;
        let s = apply_mlp(&mut g, &self.es, xn)?;
        let c = apply_mlp(&mut g, &self.ec, m)?;
        let a = apply_mlp(&mut g, &self.ea, m)?;
        Ok(LatentFactors {
            content_m: g.value(m).to_vec(),
            semantic_c: g.value(c).to_vec(),
            sensitive_a: g.value(a).to_vec(),
            style_s: g.value(s).to_vec(),
        })
    }

    /// x = G_o(G_i(c, a), s).
    pub fn decode(&self, c: &[f64], a: &[f64], s: &[f64]) -> Result<Vec<f64>> {
        let sh = &self.shapes;
        if c.len() != sh.dim_c || a.len() != sh.dim_a || s.len() != sh.dim_s {
            return Err(Error::DimensionMismatch(format!(
                "factor dims ({}, {}, {}) vs configured ({}, {}, {})",
                c.len(),
                a.len(),
                s.len(),
                sh.dim_c,
                sh.dim_a,
                sh.dim_s
            )));
        }
        let mut g = Graph::new(&self.params);
        let cn = g.input(c.to_vec());
        let an = g.input(a.to_vec());
        let ca = g.concat(cn, an);
        let m = apply_mlp(&mut g, &self.gi, ca)?;
        let sn = g.input(s.to_vec());
        let ms = g.concat(m, sn);
        let x = apply_mlp(&mut g, &self.go, ms)?;
        Ok(g.value(x).to_vec())
    }

    /// Probability that h assigns the sensitive factor to the z = +1 group.
    pub fn sensitive_prob(&self, a: &[f64]) -> Result<f64> {
        if a.len() != self.shapes.dim_a {
            return Err(Error::DimensionMismatch(format!(
                "sensitive factor has length {}, model expects {}",
                a.len(),
                self.shapes.dim_a
            )));
        }
        let mut g = Graph::new(&self.params);
        let an = g.input(a.to_vec());
        let logit = apply_mlp(&mut g, &self.h, an)?;
        let p = g.sigmoid(logit);
        Ok(g.scalar(p))
    }

    /// Verify that every stored tensor matches the shape configuration.
    pub fn verify_shapes(&self) -> Result<()> {
        let check = |spec: &MlpSpec, input: usize, output: usize| -> Result<()> {
            let mut dims = vec![input];
            dims.extend_from_slice(&spec.hidden);
            dims.push(output);
            if spec.input_dim != input || spec.output_dim != output {
                return Err(Error::Checkpoint(format!(
                    "{}: declared dims {}->{} but configuration requires {}->{}",
                    spec.name, spec.input_dim, spec.output_dim, input, output
                )));
            }
            if spec.layers.len() + 1 != dims.len() {
                return Err(Error::Checkpoint(format!(
                    "{}: {} layers vs {} dims",
                    spec.name,
                    spec.layers.len(),
                    dims.len()
                )));
            }
            for (l, &(w, b)) in spec.layers.iter().enumerate() {
                if w >= self.params.len() || b >= self.params.len() {
                    return Err(Error::Checkpoint(format!(
                        "{} layer {l}: parameter ids out of range",
                        spec.name
                    )));
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
                        "{} layer {l}: tensor {}x{} (bias {}) vs expected {}x{}",
                        spec.name,
                        wt.rows,
                        wt.cols,
                        bt.rows,
                        dims[l + 1],
                        dims[l]
                    )));
                }
            }
            Ok(())
        };
        let sh = &self.shapes;
        check(&self.em, sh.input_dim, sh.dim_m)?;
        check(&self.es, sh.input_dim, sh.dim_s)?;
        check(&self.ec, sh.dim_m, sh.dim_c)?;
        check(&self.ea, sh.dim_m, sh.dim_a)?;
        check(&self.gi, sh.dim_c + sh.dim_a, sh.dim_m)?;
        check(&self.go, sh.dim_m + sh.dim_s, sh.input_dim)?;
        check(&self.disc_o, sh.input_dim, sh.disc_out_o)?;
        check(&self.disc_i, sh.dim_m, sh.disc_out_i)?;
        check(&self.h, sh.dim_a, 1)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loss graphs
// ---------------------------------------------------------------------------

/// Per-example latent nodes reused by several losses.
struct Encoded {
    x: NodeId,
    m: NodeId,
    c: NodeId,
    s: NodeId,
}

fn encode_nodes(g: &mut Graph, model: &TransformModelParams, x: &[f64]) -> Result<Encoded> {
    let xn = g.input(x.to_vec());
    let m = apply_mlp(g, &model.em, xn)?;
    let s = apply_mlp(g, &model.es, xn)?;
    let c = apply_mlp(g, &model.ec, m)?;
    Ok(Encoded { x: xn, m, c, s })
}

/// Mean discriminator output as a probability: sigmoid of the mean logit.
fn disc_prob(g: &mut Graph, spec: &MlpSpec, x: NodeId) -> Result<NodeId> {
    let out = apply_mlp(g, spec, x)?;
    let n = spec.output_dim as f64;
    let s = g.sum(out);
    let logit = g.affine(s, 1.0 / n, 0.0);
    Ok(g.sigmoid(logit))
}

/// Data reconstruction: mean ||G_o(G_i(E_c(m), E_a(m)), E_s(x)) - x||_1
///                    + mean ||G_i(E_c(m), E_a(m)) - m||_1, with m = E_m(x).
pub fn data_recon_node(
    g: &mut Graph,
    model: &TransformModelParams,
    xs: &[&[f64]],
) -> Result<NodeId> {
    let mut outer = Vec::with_capacity(xs.len());
    let mut inner = Vec::with_capacity(xs.len());
    for &x in xs {
        let e = encode_nodes(g, model, x)?;
        let a = apply_mlp(g, &model.ea, e.m)?;
        let ca = g.concat(e.c, a);
        let m_hat = apply_mlp(g, &model.gi, ca)?;
        let ms = g.concat(m_hat, e.s);
        let x_hat = apply_mlp(g, &model.go, ms)?;
        outer.push(l1_diff(g, x_hat, e.x));
        inner.push(l1_diff(g, m_hat, e.m));
    }
    let outer_mean = g.mean_of(outer);
    let inner_mean = g.mean_of(inner);
    Ok(g.add(outer_mean, inner_mean))
}

/// Factor reconstruction, five L1 terms per example:
/// semantic and sensitive cycles through G_i with one shared prior draw
/// a' ~ N(0, I_a); style and content cycles through G_o with one shared
/// prior draw s' ~ N(0, I_s); and the composed style cycle through
/// G_o(G_i(c, a''), s'') with a fresh (a'', s'') pair. Draw order per
/// example is a', s', a'', s''.
pub fn factor_recon_node(
    g: &mut Graph,
    model: &TransformModelParams,
    xs: &[&[f64]],
    rng: &mut ChaCha8Rng,
) -> Result<NodeId> {
    let sh = &model.shapes;
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut t3 = Vec::new();
    let mut t4 = Vec::new();
    let mut t5 = Vec::new();
    for &x in xs {
        let e = encode_nodes(g, model, x)?;
        let a1 = g.input(normal_vec(rng, sh.dim_a));
        let s1 = g.input(normal_vec(rng, sh.dim_s));
        let a2 = g.input(normal_vec(rng, sh.dim_a));
        let s2 = g.input(normal_vec(rng, sh.dim_s));

        // inner cycle: decode (c, a') then re-encode both factors
        let ca = g.concat(e.c, a1);
        let m_gen = apply_mlp(g, &model.gi, ca)?;
        let c_rec = apply_mlp(g, &model.ec, m_gen)?;
        let a_rec = apply_mlp(g, &model.ea, m_gen)?;
        t1.push(l1_diff(g, c_rec, e.c));
        t2.push(l1_diff(g, a_rec, a1));

        // outer cycle: decode (m, s') then re-encode style and content
        let ms = g.concat(e.m, s1);
        let x_gen = apply_mlp(g, &model.go, ms)?;
        let s_rec = apply_mlp(g, &model.es, x_gen)?;
        let m_rec = apply_mlp(g, &model.em, x_gen)?;
        t3.push(l1_diff(g, s_rec, s1));
        t5.push(l1_diff(g, m_rec, e.m));

        // composed cycle: decode (c, a'') through both levels with s''
        let ca2 = g.concat(e.c, a2);
        let m_gen2 = apply_mlp(g, &model.gi, ca2)?;
        let ms2 = g.concat(m_gen2, s2);
        let x_gen2 = apply_mlp(g, &model.go, ms2)?;
        let s_rec2 = apply_mlp(g, &model.es, x_gen2)?;
        t4.push(l1_diff(g, s_rec2, s2));
    }
    let terms = vec![
        g.mean_of(t1),
        g.mean_of(t2),
        g.mean_of(t3),
        g.mean_of(t4),
        g.mean_of(t5),
    ];
    Ok(g.add_many(terms))
}

/// Sensitiveness loss: mean BCE of h(E_a(E_m(x))) against (z + 1) / 2.
pub fn sensitive_node(
    g: &mut Graph,
    model: &TransformModelParams,
    xs: &[&[f64]],
    zs: &[i8],
) -> Result<NodeId> {
    let mut terms = Vec::with_capacity(xs.len());
    for (&x, &z) in xs.iter().zip(zs) {
        let xn = g.input(x.to_vec());
        let m = apply_mlp(g, &model.em, xn)?;
        let a = apply_mlp(g, &model.ea, m)?;
        let logit = apply_mlp(g, &model.h, a)?;
        let target = f64::from(z + 1) / 2.0;
        terms.push(bce_logit(g, logit, target));
    }
    Ok(g.mean_of(terms))
}

/// Saturating adversarial terms split by role.
///
/// The discriminator objective (to be maximized) is
/// mean[ln D_o(x) + ln(1 - D_o(fake_x))] + mean[ln D_i(m) + ln(1 - D_i(fake_m))]
/// with fake_x = G_o(G_i(c, a'), s') and fake_m = G_i(c, a''), priors standard
/// normal; per example the draws are a', s', a''. The generator loss (to be
/// minimized) keeps only the fake terms:
/// mean[ln(1 - D_o(fake_x))] + mean[ln(1 - D_i(fake_m))].
pub fn adversarial_nodes(
    g: &mut Graph,
    model: &TransformModelParams,
    xs: &[&[f64]],
    rng: &mut ChaCha8Rng,
) -> Result<(NodeId, NodeId)> {
    let sh = &model.shapes;
    let mut d_terms = Vec::new();
    let mut g_terms = Vec::new();
    for &x in xs {
        let e = encode_nodes(g, model, x)?;
        let a_outer = g.input(normal_vec(rng, sh.dim_a));
        let s_outer = g.input(normal_vec(rng, sh.dim_s));
        let a_inner = g.input(normal_vec(rng, sh.dim_a));

        let ca = g.concat(e.c, a_outer);
        let m_fake_outer = apply_mlp(g, &model.gi, ca)?;
        let ms = g.concat(m_fake_outer, s_outer);
        let x_fake = apply_mlp(g, &model.go, ms)?;

        let ca_i = g.concat(e.c, a_inner);
        let m_fake = apply_mlp(g, &model.gi, ca_i)?;

        let d_real_o = disc_prob(g, &model.disc_o, e.x)?;
        let d_fake_o = disc_prob(g, &model.disc_o, x_fake)?;
        let d_real_i = disc_prob(g, &model.disc_i, e.m)?;
        let d_fake_i = disc_prob(g, &model.disc_i, m_fake)?;

        let ln_real_o = ln_prob(g, d_real_o);
        let ln_fake_o = ln_one_minus_prob(g, d_fake_o);
        let ln_real_i = ln_prob(g, d_real_i);
        let ln_fake_i = ln_one_minus_prob(g, d_fake_i);

        d_terms.push(g.add_many(vec![ln_real_o, ln_fake_o, ln_real_i, ln_fake_i]));
        g_terms.push(g.add(ln_fake_o, ln_fake_i));
    }
    let disc = g.mean_of(d_terms);
    let gen = g.mean_of(g_terms);
    Ok((gen, disc))
}

// ---------------------------------------------------------------------------
// Scalar wrappers
// ---------------------------------------------------------------------------

/// A training example as (features, z, y).
pub type Example = (Vec<f64>, i8, u8);

fn feature_refs(batch: &[Example]) -> Vec<&[f64]> {
    batch.iter().map(|(x, _, _)| x.as_slice()).collect()
}

pub fn loss_data_recon(model: &TransformModelParams, batch: &[Example]) -> Result<f64> {
    let xs = feature_refs(batch);
    let mut g = Graph::new(&model.params);
    let node = data_recon_node(&mut g, model, &xs)?;
    Ok(g.scalar(node))
}

pub fn loss_factor_recon(
    model: &TransformModelParams,
    batch: &[Example],
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let xs = feature_refs(batch);
    let mut g = Graph::new(&model.params);
    let node = factor_recon_node(&mut g, model, &xs, rng)?;
    Ok(g.scalar(node))
}

pub fn loss_sensitive(model: &TransformModelParams, batch: &[Example]) -> Result<f64> {
    let xs = feature_refs(batch);
    let zs: Vec<i8> = batch.iter().map(|(_, z, _)| *z).collect();
    let mut g = Graph::new(&model.params);
    let node = sensitive_node(&mut g, model, &xs, &zs)?;
    Ok(g.scalar(node))
}

pub fn loss_adversarial(
    model: &TransformModelParams,
    batch: &[Example],
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let xs = feature_refs(batch);
    let mut g = Graph::new(&model.params);
    let (gen, disc) = adversarial_nodes(&mut g, model, &xs, rng)?;
    Ok((g.scalar(gen), g.scalar(disc)))
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// One row of the transformation-model loss trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformTraceRow {
    pub iteration: usize,
    pub loss_data: f64,
    pub loss_factor: f64,
    pub loss_sensitive: f64,
    pub loss_gen: f64,
    pub loss_disc: f64,
}

#[derive(Debug, Clone)]
pub struct TransformOutcome {
    pub model: TransformModelParams,
    pub trace: Vec<TransformTraceRow>,
}

/// Three-phase minibatch loop: per batch, (1) ascend the discriminators on
/// beta4 * L_adv, (2) descend encoders and decoders on their part of the
/// total objective, beta1 * L_data + beta2 * L_factor + beta3 * L_sens (the
/// sensitiveness gradient is what ties the sensitive factor to the
/// attribute), (3) descend the sensitive classifier on beta3 * L_sens. Each
/// phase runs Adam with its own rate and step counter.
pub fn train_transform(
    datasets: &[DomainDataset],
    config: &TransformTrainConfig,
) -> Result<TransformOutcome> {
    config.validate()?;
    if datasets.is_empty() || datasets.iter().all(|d| d.is_empty()) {
        return Err(Error::TooSmall("no training examples".into()));
    }
    let mut ordered: Vec<&DomainDataset> = datasets.iter().collect();
    ordered.sort_by(|a, b| a.domain_id.cmp(&b.domain_id));
    let dim = ordered
        .iter()
        .find(|d| !d.is_empty())
        .map(|d| d.feature_dim())
        .unwrap_or(0);
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

    let shapes = config
        .shapes
        .clone()
        .unwrap_or_else(|| TransformShapes::for_input_dim(dim));
    if shapes.input_dim != dim {
        return Err(Error::DimensionMismatch(format!(
            "configured input_dim {} vs data dimension {dim}",
            shapes.input_dim
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TransformModelParams::init(shapes, &mut rng);
    let mut adam_disc = Adam::new(&model.params, config.lr_discriminator);
    let mut adam_ae = Adam::new(&model.params, config.lr_autoencoder);
    let mut adam_h = Adam::new(&model.params, config.lr_sensitive);
    let disc_ids = model.discriminator_param_ids();
    let ae_ids = model.autoencoder_param_ids();
    let h_ids = model.sensitive_param_ids();
    let mut grads = Grads::zeros(&model.params);
    let mut trace = Vec::with_capacity(config.iterations);

    let batch_size = config.batch_size.min(pool.len());
    for iter in 0..config.iterations {
        let idx = index_sample(&mut rng, pool.len(), batch_size).into_vec();
        let xs: Vec<&[f64]> = idx.iter().map(|&i| pool[i].0.as_slice()).collect();
        let zs: Vec<i8> = idx.iter().map(|&i| pool[i].1).collect();

        // Phase 1: discriminator ascent on beta4 * L_adv.
        grads.reset();
        let (gen_v, disc_v) = {
            let mut g = Graph::new(&model.params);
            let (gen, disc) = adversarial_nodes(&mut g, &model, &xs, &mut rng)?;
            let objective = g.affine(disc, config.beta4, 0.0);
            g.backward(objective, &mut grads);
            (g.scalar(gen), g.scalar(disc))
        };
        adam_disc.step(&mut model.params, &grads, &disc_ids, 1.0);

        // Phase 2: autoencoder descent on
        // beta1 * L_data + beta2 * L_factor + beta3 * L_sens.
        grads.reset();
        let (data_v, factor_v) = {
            let mut g = Graph::new(&model.params);
            let data = data_recon_node(&mut g, &model, &xs)?;
            let factor = factor_recon_node(&mut g, &model, &xs, &mut rng)?;
            let sens = sensitive_node(&mut g, &model, &xs, &zs)?;
            let wd = g.affine(data, config.beta1, 0.0);
            let wf = g.affine(factor, config.beta2, 0.0);
            let ws = g.affine(sens, config.beta3, 0.0);
            let total = g.add(wd, wf);
            let total = g.add(total, ws);
            g.backward(total, &mut grads);
            (g.scalar(data), g.scalar(factor))
        };
        adam_ae.step(&mut model.params, &grads, &ae_ids, -1.0);

        // Phase 3: sensitive-classifier descent on beta3 * L_sens.
        grads.reset();
        let sens_v = {
            let mut g = Graph::new(&model.params);
            let sens = sensitive_node(&mut g, &model, &xs, &zs)?;
            let weighted = g.affine(sens, config.beta3, 0.0);
            g.backward(weighted, &mut grads);
            g.scalar(sens)
        };
        adam_h.step(&mut model.params, &grads, &h_ids, -1.0);

        for (name, v) in [
            ("data_recon", data_v),
            ("factor_recon", factor_v),
            ("sensitive", sens_v),
            ("adversarial_gen", gen_v),
            ("adversarial_disc", disc_v),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss {
                    iteration: iter,
                    loss_name: name.into(),
                });
            }
        }
        trace.push(TransformTraceRow {
            iteration: iter,
            loss_data: data_v,
            loss_factor: factor_v,
            loss_sensitive: sens_v,
            loss_gen: gen_v,
            loss_disc: disc_v,
        });
    }

    Ok(TransformOutcome { model, trace })
}

/// Procedure T: keep the semantic factor of (x, z, y), draw fresh sensitive
/// and style factors from their standard-normal priors, decode through both
/// levels, and label the sensitive attribute with h (threshold 1/2, ties to
/// +1). The class label passes through unchanged; the input z is not used.
pub fn augment(
    model: &TransformModelParams,
    x: &[f64],
    _z: i8,
    y: u8,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, i8, u8)> {
    model.check_input(x)?;
    let sh = &model.shapes;
    let a_new = normal_vec(rng, sh.dim_a);
    let s_new = normal_vec(rng, sh.dim_s);

    let mut g = Graph::new(&model.params);
    let xn = g.input(x.to_vec());
    let m = apply_mlp(&mut g, &model.em, xn)?;
    let c = apply_mlp(&mut g, &model.ec, m)?;
    let an = g.input(a_new);
    let ca = g.concat(c, an);
    let m_new = apply_mlp(&mut g, &model.gi, ca)?;
    let sn = g.input(s_new);
    let ms = g.concat(m_new, sn);
    let x_new = apply_mlp(&mut g, &model.go, ms)?;
    let logit = apply_mlp(&mut g, &model.h, an)?;
    let prob = g.sigmoid(logit);
    let z_new = if g.scalar(prob) >= 0.5 { 1 } else { -1 };
    Ok((g.value(x_new).to_vec(), z_new, y))
}

/// Held-out accuracy of the sensitive classifier h on encoded data.
pub fn sensitive_probe_accuracy(
    model: &TransformModelParams,
    dataset: &DomainDataset,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::TooSmall("empty dataset".into()));
    }
    let mut hits = 0usize;
    for e in &dataset.examples {
        let f = model.encode(&e.features)?;
        let p = model.sensitive_prob(&f.sensitive_a)?;
        let z_hat = if p >= 0.5 { 1 } else { -1 };
        hits += (z_hat == e.sensitive) as usize;
    }
    Ok(hits as f64 / dataset.len() as f64)
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub(crate) struct CheckpointFile<T> {
    pub format_version: u32,
    pub kind: String,
    pub config: serde_json::Value,
    pub payload: T,
}

/// Write a versioned checkpoint with the weights, shapes, and the training
/// config that produced them.
pub fn save_checkpoint(
    model: &TransformModelParams,
    config: Option<&TransformTrainConfig>,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        kind: "transform".to_string(),
        config: serde_json::to_value(config)?,
        payload: model.clone(),
    };
    let text = serde_json::to_string(&file)?;
    std::fs::write(path.as_ref(), text)
        .map_err(|e| Error::io(path.as_ref().display().to_string(), e))
}

/// Load a checkpoint, failing loudly on version, kind, or shape mismatch.
pub fn load_checkpoint(path: impl AsRef<std::path::Path>) -> Result<TransformModelParams> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::io(path.as_ref().display().to_string(), e))?;
    let file: CheckpointFile<TransformModelParams> = serde_json::from_str(&text)?;
    if file.format_version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {} unsupported (expected {CHECKPOINT_VERSION})",
            file.format_version
        )));
    }
    if file.kind != "transform" {
        return Err(Error::Checkpoint(format!(
            "kind `{}` is not a transformation-model checkpoint",
            file.kind
        )));
    }
    file.payload.verify_shapes()?;
    Ok(file.payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{finite_difference_grads, max_relative_error};

    fn set_single_layer(
        model: &mut TransformModelParams,
        spec_name: &str,
        w: Vec<f64>,
        b: Vec<f64>,
    ) {
        let spec = match spec_name {
            "em" => model.em.clone(),
            "es" => model.es.clone(),
            "ec" => model.ec.clone(),
            "ea" => model.ea.clone(),
            "gi" => model.gi.clone(),
            "go" => model.go.clone(),
            "do" => model.disc_o.clone(),
            "di" => model.disc_i.clone(),
            "h" => model.h.clone(),
            _ => unreachable!(),
        };
        assert_eq!(spec.layers.len(), 1, "{spec_name} must be single-layer");
        let (wid, bid) = spec.layers[0];
        let wt = model.params.get(wid).clone();
        assert_eq!(w.len(), wt.rows * wt.cols);
        model.params.get_mut(wid).data = w;
        let bt = model.params.get(bid).clone();
        assert_eq!(b.len(), bt.rows);
        model.params.get_mut(bid).data = b;
    }

    /// All-linear scalar model: every factor is 1-dimensional, no hidden
    /// layers, so every loss reduces to arithmetic a human can trace.
    fn scalar_model() -> TransformModelParams {
        let shapes = TransformShapes {
            input_dim: 1,
            dim_m: 1,
            dim_c: 1,
            dim_a: 1,
            dim_s: 1,
            hidden_em: vec![],
            hidden_es: vec![],
            hidden_ec: vec![],
            hidden_ea: vec![],
            hidden_gi: vec![],
            hidden_go: vec![],
            hidden_do: vec![],
            hidden_di: vec![],
            disc_out_o: 1,
            disc_out_i: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        TransformModelParams::init(shapes, &mut rng)
    }

    /// m = 2x + 0.5, s = -x, c = 0.5m + 1, a = -m,
    /// G_i(c, a) = c + 0.25a + 0.1, G_o(m, s) = 0.5m - 2s - 0.3.
    fn traced_model() -> TransformModelParams {
        let mut model = scalar_model();
        set_single_layer(&mut model, "em", vec![2.0], vec![0.5]);
        set_single_layer(&mut model, "es", vec![-1.0], vec![0.0]);
        set_single_layer(&mut model, "ec", vec![0.5], vec![1.0]);
        set_single_layer(&mut model, "ea", vec![-1.0], vec![0.0]);
        set_single_layer(&mut model, "gi", vec![1.0, 0.25], vec![0.1]);
        set_single_layer(&mut model, "go", vec![0.5, -2.0], vec![-0.3]);
        model
    }

    fn batch(values: &[f64]) -> Vec<Example> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (vec![v], if i % 2 == 0 { 1 } else { -1 }, (i % 2) as u8))
            .collect()
    }

    #[test]
    fn encode_decode_shapes_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = TransformModelParams::init(TransformShapes::for_input_dim(4), &mut rng);
        let x = vec![0.3, -0.7, 1.2, 0.05];
        let f1 = model.encode(&x).unwrap();
        let f2 = model.encode(&x).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(f1.content_m.len(), 16);
        assert_eq!(f1.semantic_c.len(), 8);
        assert_eq!(f1.sensitive_a.len(), 2);
        assert_eq!(f1.style_s.len(), 2);
        let out = model
            .decode(&f1.semantic_c, &f1.sensitive_a, &f1.style_s)
            .unwrap();
        assert_eq!(out.len(), 4);
        let out2 = model
            .decode(&f1.semantic_c, &f1.sensitive_a, &f1.style_s)
            .unwrap();
        assert_eq!(out, out2);
        assert!(out.iter().all(|v| v.is_finite()));
        assert!(matches!(
            model.encode(&[0.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn data_recon_zero_for_identity_autoencoder() {
        let mut model = scalar_model();
        set_single_layer(&mut model, "em", vec![1.0], vec![0.0]);
        set_single_layer(&mut model, "es", vec![0.0], vec![0.0]);
        set_single_layer(&mut model, "ec", vec![1.0], vec![0.0]);
        set_single_layer(&mut model, "ea", vec![0.0], vec![0.0]);
        set_single_layer(&mut model, "gi", vec![1.0, 0.0], vec![0.0]);
        set_single_layer(&mut model, "go", vec![1.0, 0.0], vec![0.0]);
        let b = batch(&[0.4, -1.1, 2.0]);
        assert_eq!(loss_data_recon(&model, &b).unwrap(), 0.0);
    }

    #[test]
    fn data_recon_nonnegative_for_random_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let model = TransformModelParams::init(TransformShapes::tiny(2), &mut rng);
        let b = vec![(vec![0.3, -0.8], 1, 0), (vec![1.1, 0.2], -1, 1)];
        assert!(loss_data_recon(&model, &b).unwrap() >= 0.0);
        assert!(loss_factor_recon(&model, &b, &mut rng).unwrap() >= 0.0);
        assert!(loss_sensitive(&model, &b).unwrap() >= 0.0);
    }

    #[test]
    fn data_recon_hand_trace() {
        let model = traced_model();
        let xs = [0.8, -0.6];
        let b = batch(&xs);
        let mut outer = 0.0;
        let mut inner = 0.0;
        for &x in &xs {
            let m = 2.0 * x + 0.5;
            let s = -x;
            let c = 0.5 * m + 1.0;
            let a = -m;
            let m_hat = c + 0.25 * a + 0.1;
            let x_hat = 0.5 * m_hat - 2.0 * s - 0.3;
            outer += (x_hat - x).abs();
            inner += (m_hat - m).abs();
        }
        let expect = outer / 2.0 + inner / 2.0;
        let got = loss_data_recon(&model, &b).unwrap();
        assert!((got - expect).abs() < 1e-9, "got {got}, expected {expect}");
    }

    #[test]
    fn factor_recon_hand_trace() {
        let model = traced_model();
        let xs = [0.8, -0.6];
        let b = batch(&xs);

        // replicate the rng draw order: per example a1, s1, a2, s2
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut draws = Vec::new();
        for _ in &xs {
            draws.push((
                normal_vec(&mut rng, 1)[0],
                normal_vec(&mut rng, 1)[0],
                normal_vec(&mut rng, 1)[0],
                normal_vec(&mut rng, 1)[0],
            ));
        }
        let mut terms = [0.0f64; 5];
        for (&x, &(a1, s1, a2, s2)) in xs.iter().zip(&draws) {
            let m = 2.0 * x + 0.5;
            let c = 0.5 * m + 1.0;
            let m_gen = c + 0.25 * a1 + 0.1;
            let c_rec = 0.5 * m_gen + 1.0;
            let a_rec = -m_gen;
            terms[0] += (c_rec - c).abs();
            terms[1] += (a_rec - a1).abs();
            let x_gen = 0.5 * m - 2.0 * s1 - 0.3;
            let s_rec = -x_gen;
            let m_rec = 2.0 * x_gen + 0.5;
            terms[2] += (s_rec - s1).abs();
            terms[4] += (m_rec - m).abs();
            let m_gen2 = c + 0.25 * a2 + 0.1;
            let x_gen2 = 0.5 * m_gen2 - 2.0 * s2 - 0.3;
            let s_rec2 = -x_gen2;
            terms[3] += (s_rec2 - s2).abs();
        }
        let expect: f64 = terms.iter().map(|t| t / 2.0).sum();
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let got = loss_factor_recon(&model, &b, &mut rng2).unwrap();
        assert!((got - expect).abs() < 1e-9, "got {got}, expected {expect}");
        let mut rng3 = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(got, loss_factor_recon(&model, &b, &mut rng3).unwrap());
    }

    #[test]
    fn sensitive_loss_values() {
        let mut model = scalar_model();
        // with zero weights h outputs exactly 0.5 for every example
        set_single_layer(&mut model, "h", vec![0.0], vec![0.0]);
        let b = batch(&[0.3, -0.2, 0.9, 1.4]);
        let got = loss_sensitive(&model, &b).unwrap();
        assert!((got - std::f64::consts::LN_2).abs() < 1e-12);

        // near-perfect h: a = E_a(E_m(x)) = x, saturated sigmoid on x sign
        let mut perfect = scalar_model();
        set_single_layer(&mut perfect, "em", vec![1.0], vec![0.0]);
        set_single_layer(&mut perfect, "ea", vec![1.0], vec![0.0]);
        set_single_layer(&mut perfect, "h", vec![1e4], vec![0.0]);
        let b = vec![(vec![2.0], 1, 1), (vec![-2.0], -1, 0)];
        let got = loss_sensitive(&perfect, &b).unwrap();
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn adversarial_closed_form_at_half() {
        let mut model = scalar_model();
        // zero discriminator weights -> logit 0 -> D = 0.5 everywhere
        set_single_layer(&mut model, "do", vec![0.0], vec![0.0]);
        set_single_layer(&mut model, "di", vec![0.0], vec![0.0]);
        let b = batch(&[0.5, -0.5, 1.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (gen, disc) = loss_adversarial(&model, &b, &mut rng).unwrap();
        // per level the (real, fake) pair contributes 2 ln(1/2); both levels
        // together give -4 ln 2
        assert!((disc - (-4.0 * std::f64::consts::LN_2)).abs() < 1e-12);
        assert!((gen - (-2.0 * std::f64::consts::LN_2)).abs() < 1e-12);
        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            (gen, disc),
            loss_adversarial(&model, &b, &mut rng2).unwrap()
        );
    }

    #[test]
    fn adversarial_finite_under_saturation() {
        let mut model = scalar_model();
        set_single_layer(&mut model, "do", vec![100.0], vec![50.0]);
        set_single_layer(&mut model, "di", vec![-100.0], vec![-50.0]);
        let b = batch(&[3.0, -3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (gen, disc) = loss_adversarial(&model, &b, &mut rng).unwrap();
        assert!(gen.is_finite() && disc.is_finite());
    }

    fn grad_check_model() -> TransformModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        TransformModelParams::init(TransformShapes::tiny(2), &mut rng)
    }

    /// Compare tape gradients of `build` against central finite differences
    /// of the same scalar recomputed through a fresh graph per evaluation.
    fn grad_check(build: impl Fn(&mut Graph, &TransformModelParams) -> NodeId) {
        let mut model = grad_check_model();
        let all_ids: Vec<ParamId> = (0..model.params.len()).collect();

        let mut grads = Grads::zeros(&model.params);
        {
            let mut g = Graph::new(&model.params);
            let node = build(&mut g, &model);
            g.backward(node, &mut grads);
        }
        let numeric = finite_difference_grads(&mut model.params, &all_ids, 1e-5, |p| {
            let probe = TransformModelParams {
                params: p.clone(),
                ..grad_check_model()
            };
            let mut g = Graph::new(&probe.params);
            let node = build(&mut g, &probe);
            g.scalar(node)
        });
        let analytic: Vec<&[f64]> = all_ids.iter().map(|&id| grads.slot(id)).collect();
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "max relative gradient error {err}");
    }

    #[test]
    fn gradcheck_data_recon() {
        let b: Vec<Example> = vec![(vec![0.4, -0.9], 1, 1), (vec![-0.2, 0.6], -1, 0)];
        grad_check(move |g, m| {
            let xs: Vec<&[f64]> = b.iter().map(|e| e.0.as_slice()).collect();
            data_recon_node(g, m, &xs).unwrap()
        });
    }

    #[test]
    fn gradcheck_factor_recon() {
        let b: Vec<Example> = vec![(vec![0.4, -0.9], 1, 1), (vec![-0.2, 0.6], -1, 0)];
        grad_check(move |g, m| {
            let xs: Vec<&[f64]> = b.iter().map(|e| e.0.as_slice()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            factor_recon_node(g, m, &xs, &mut rng).unwrap()
        });
    }

    #[test]
    fn gradcheck_sensitive() {
        let b: Vec<Example> = vec![(vec![0.4, -0.9], 1, 1), (vec![-0.2, 0.6], -1, 0)];
        grad_check(move |g, m| {
            let xs: Vec<&[f64]> = b.iter().map(|e| e.0.as_slice()).collect();
            let zs: Vec<i8> = b.iter().map(|e| e.1).collect();
            sensitive_node(g, m, &xs, &zs).unwrap()
        });
    }

    #[test]
    fn gradcheck_adversarial_both_roles() {
        let b: Vec<Example> = vec![(vec![0.4, -0.9], 1, 1), (vec![-0.2, 0.6], -1, 0)];
        grad_check(move |g, m| {
            let xs: Vec<&[f64]> = b.iter().map(|e| e.0.as_slice()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(123);
            let (gen, disc) = adversarial_nodes(g, m, &xs, &mut rng).unwrap();
            g.add(gen, disc)
        });
    }

    #[test]
    fn augment_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut model = TransformModelParams::init(TransformShapes::for_input_dim(3), &mut rng);
        // h whose decision flips with the first coordinate of a ~ N(0, I):
        // both z values then occur with probability ~1/2.
        let (wid, bid) = model.h.layers[0];
        model.params.get_mut(wid).data = vec![5.0, 0.0];
        model.params.get_mut(bid).data = vec![0.0];
        let x = vec![0.2, -0.4, 0.9];
        let mut counts = (0usize, 0usize);
        for i in 0..1000 {
            let (x2, z2, y2) = augment(&model, &x, 1, (i % 2) as u8, &mut rng).unwrap();
            assert_eq!(y2, (i % 2) as u8, "label must pass through unchanged");
            assert!(z2 == 1 || z2 == -1);
            assert_eq!(x2.len(), 3);
            if z2 == 1 {
                counts.0 += 1;
            } else {
                counts.1 += 1;
            }
        }
        assert!(
            counts.0 >= 50 && counts.1 >= 50,
            "z' distribution degenerate: {counts:?}"
        );
    }

    #[test]
    fn checkpoint_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ckpt");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = TransformModelParams::init(TransformShapes::for_input_dim(4), &mut rng);
        save_checkpoint(&model, Some(&TransformTrainConfig::default()), &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(model, loaded);

        // version mismatch fails loudly
        let orig = std::fs::read_to_string(&path).unwrap();
        std::fs::write(
            &path,
            orig.replace("\"format_version\":1", "\"format_version\":99"),
        )
        .unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));

        // shape mismatch fails loudly
        std::fs::write(&path, &orig).unwrap();
        let mut broken = load_checkpoint(&path).unwrap();
        let (wid, _) = broken.em.layers[0];
        broken.params.get_mut(wid).data.push(0.0);
        broken.params.get_mut(wid).rows += 1;
        save_checkpoint(&broken, None, &path).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn training_is_seed_deterministic() {
        let examples: Vec<crate::data::LabeledExample> = (0..40)
            .map(|i| {
                crate::data::LabeledExample::new(
                    vec![(i % 7) as f64 / 3.0 - 1.0, (i % 5) as f64 / 2.0 - 1.0],
                    if i % 2 == 0 { 1 } else { -1 },
                    (i % 2) as u8,
                )
                .unwrap()
            })
            .collect();
        let ds = vec![DomainDataset::new("d0", examples, None).unwrap()];
        let config = TransformTrainConfig {
            iterations: 10,
            batch_size: 8,
            seed: 5,
            shapes: Some(TransformShapes::tiny(2)),
            ..Default::default()
        };
        let a = train_transform(&ds, &config).unwrap();
        let b = train_transform(&ds, &config).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.model, b.model);
    }
}
