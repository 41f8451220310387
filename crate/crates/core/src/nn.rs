//! Small fully-connected networks over the autodiff graph, plus the scalar
//! loss builders shared by both trainers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{Graph, NodeId, ParamId, ParamSet, Tensor};

/// Discriminator outputs and classifier probabilities are clamped to
/// [EPS_PROB, 1 - EPS_PROB] before any logarithm.
pub const EPS_PROB: f64 = 1e-6;

/// An MLP: ReLU hidden layers, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub name: String,
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    /// (weight, bias) parameter ids, one pair per layer.
    pub layers: Vec<(ParamId, ParamId)>,
}

impl MlpSpec {
    pub fn param_ids(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}

/// Allocate and He-initialize an MLP's parameters.
pub fn build_mlp(
    params: &mut ParamSet,
    name: &str,
    input_dim: usize,
    hidden: &[usize],
    output_dim: usize,
    rng: &mut ChaCha8Rng,
) -> MlpSpec {
    let mut dims = vec![input_dim];
    dims.extend_from_slice(hidden);
    dims.push(output_dim);
    let mut layers = Vec::new();
    for l in 0..dims.len() - 1 {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let scale = (2.0 / fan_in as f64).sqrt();
        let mut w = Tensor::zeros(fan_out, fan_in);
        for v in &mut w.data {
            *v = scale * standard_normal(rng);
        }
        // small uniform bias keeps pre-activations off the exact ReLU kink
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut b = Tensor::zeros(fan_out, 1);
        for v in &mut b.data {
            *v = rng.gen_range(-bound..bound);
        }
        let wid = params.add(format!("{name}.w{l}"), w);
        let bid = params.add(format!("{name}.b{l}"), b);
        layers.push((wid, bid));
    }
    MlpSpec {
        name: name.to_string(),
        input_dim,
        hidden: hidden.to_vec(),
        output_dim,
        layers,
    }
}

/// Forward pass: linear layers with ReLU between them, linear output.
pub fn apply_mlp(g: &mut Graph, spec: &MlpSpec, x: NodeId) -> Result<NodeId> {
    let mut h = x;
    let last = spec.layers.len() - 1;
    for (l, &(w, b)) in spec.layers.iter().enumerate() {
        h = g.linear(w, b, h)?;
        if l != last {
            h = g.relu(h);
        }
    }
    Ok(h)
}

/// Box-Muller standard normal draw.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Vector of independent standard normal draws.
pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

/// L1 norm of the difference of two nodes: sum_i |a_i - b_i|.
pub fn l1_diff(g: &mut Graph, a: NodeId, b: NodeId) -> NodeId {
    let d = g.sub(a, b);
    let d = g.abs(d);
    g.sum(d)
}

/// Binary cross-entropy of a probability node (length 1) against a constant
/// target in {0, 1}. The probability is clamped before the logarithms.
pub fn bce(g: &mut Graph, prob: NodeId, target: f64) -> NodeId {
    let p = g.clamp(prob, EPS_PROB, 1.0 - EPS_PROB);
    let ln_p = g.ln(p);
    let one_minus = g.affine(p, -1.0, 1.0);
    let ln_q = g.ln(one_minus);
    let a = g.affine(ln_p, -target, 0.0);
    let b = g.affine(ln_q, -(1.0 - target), 0.0);
    g.add(a, b)
}

/// Binary cross-entropy of sigmoid(logit) against a constant target, in the
/// numerically stable logit form max(l, 0) - l t + ln(1 + exp(-|l|)). Unlike
/// the clamped-probability form, saturated-wrong examples keep their
/// gradient.
pub fn bce_logit(g: &mut Graph, logit: NodeId, target: f64) -> NodeId {
    let pos = g.relu(logit);
    let lt = g.affine(logit, -target, 0.0);
    let a = g.abs(logit);
    let na = g.affine(a, -1.0, 0.0);
    let ea = g.exp(na);
    let onep = g.affine(ea, 1.0, 1.0);
    let softplus = g.ln(onep);
    g.add_many(vec![pos, lt, softplus])
}

/// ln of a clamped probability node, for the saturating GAN terms.
pub fn ln_prob(g: &mut Graph, prob: NodeId) -> NodeId {
    let p = g.clamp(prob, EPS_PROB, 1.0 - EPS_PROB);
    g.ln(p)
}

/// ln(1 - p) of a clamped probability node.
pub fn ln_one_minus_prob(g: &mut Graph, prob: NodeId) -> NodeId {
    let p = g.clamp(prob, EPS_PROB, 1.0 - EPS_PROB);
    let q = g.affine(p, -1.0, 1.0);
    g.ln(q)
}

/// Cross-entropy of logits against an integer class label.
pub fn cross_entropy_logits(g: &mut Graph, logits: NodeId, label: usize) -> NodeId {
    let lsm = g.log_softmax(logits);
    let picked = g.pick(lsm, label);
    g.affine(picked, -1.0, 0.0)
}

/// KL(softmax(u) || softmax(v)), the first argument being the reference.
pub fn kl_softmax(g: &mut Graph, u: NodeId, v: NodeId) -> NodeId {
    let lsm_u = g.log_softmax(u);
    let lsm_v = g.log_softmax(v);
    let p = g.exp(lsm_u);
    let d = g.sub(lsm_u, lsm_v);
    let prod = g.mul(p, d);
    g.sum(prod)
}

/// Softmax probability of class 1 for a 2-class logits node.
pub fn prob_class1(g: &mut Graph, logits: NodeId) -> NodeId {
    let lsm = g.log_softmax(logits);
    let l1 = g.pick(lsm, 1);
    g.exp(l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn mlp_shapes_and_determinism() {
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = build_mlp(&mut params, "f", 3, &[8, 4], 2, &mut rng);
        let mut g = Graph::new(&params);
        let x = g.input(vec![0.1, -0.2, 0.3]);
        let y = apply_mlp(&mut g, &spec, x).unwrap();
        assert_eq!(g.value(y).len(), 2);
        let mut g2 = Graph::new(&params);
        let x2 = g2.input(vec![0.1, -0.2, 0.3]);
        let y2 = apply_mlp(&mut g2, &spec, x2).unwrap();
        assert_eq!(g.value(y), g2.value(y2));
    }

    #[test]
    fn bce_at_half_is_ln2() {
        let params = ParamSet::new();
        let mut g = Graph::new(&params);
        let p = g.input(vec![0.5]);
        let l0 = bce(&mut g, p, 0.0);
        let l1 = bce(&mut g, p, 1.0);
        assert!((g.scalar(l0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((g.scalar(l1) - std::f64::consts::LN_2).abs() < 1e-12);
        // logit form agrees: sigmoid(0) = 0.5
        let z = g.input(vec![0.0]);
        let l2 = bce_logit(&mut g, z, 1.0);
        assert!((g.scalar(l2) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bce_forms_agree_on_moderate_logits() {
        let params = ParamSet::new();
        let mut g = Graph::new(&params);
        for (logit, target) in [(1.3, 1.0), (-0.7, 0.0), (2.5, 0.0), (-3.0, 1.0)] {
            let ln = g.input(vec![logit]);
            let p = g.sigmoid(ln);
            let a = bce(&mut g, p, target);
            let b = bce_logit(&mut g, ln, target);
            assert!((g.scalar(a) - g.scalar(b)).abs() < 1e-9);
        }
    }

    #[test]
    fn kl_example_value() {
        // softmax(u) = (0.75, 0.25), softmax(v) = (0.5, 0.5)
        let params = ParamSet::new();
        let mut g = Graph::new(&params);
        let u = g.input(vec![(3.0f64).ln(), 0.0]);
        let v = g.input(vec![0.0, 0.0]);
        let kl = kl_softmax(&mut g, u, v);
        let expect = 0.75 * (1.5f64).ln() + 0.25 * (0.5f64).ln();
        assert!((g.scalar(kl) - expect).abs() < 1e-12);
        // KL of a distribution with itself is 0
        let kl_same = kl_softmax(&mut g, u, u);
        assert!(g.scalar(kl_same).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_uniform_is_ln2() {
        let params = ParamSet::new();
        let mut g = Graph::new(&params);
        let logits = g.input(vec![0.0, 0.0]);
        let ce = cross_entropy_logits(&mut g, logits, 1);
        assert!((g.scalar(ce) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn normal_draws_are_seed_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(normal_vec(&mut a, 16), normal_vec(&mut b, 16));
    }
}
