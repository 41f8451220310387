//! Run configuration: flat-sectioned key = value files (TOML) with full
//! defaults, strict unknown-key rejection, and command-line overrides.
//! Every command writes the fully resolved configuration back out as a
//! run manifest, which is itself a valid config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fedora_core::synth::{default_benchmark_rhos, default_benchmark_styles, StyleTransform};
use fedora_core::trainer::FedoraMode;
use fedora_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Benchmark file written by `gen` and read by the training commands.
    pub file: PathBuf,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            file: PathBuf::from("data/benchmark.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenSection {
    pub rhos: Vec<f64>,
    /// Packed style vectors `[shift.., rotation, scale]`, one per domain;
    /// defaults to three distinct four-dimensional styles.
    pub styles: Vec<Vec<f64>>,
    pub n_per_domain: usize,
    pub seed: u64,
}

impl Default for GenSection {
    fn default() -> Self {
        Self {
            rhos: default_benchmark_rhos(),
            styles: default_benchmark_styles()
                .iter()
                .map(StyleTransform::to_packed)
                .collect(),
            n_per_domain: 800,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
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
    /// Checkpoint path written by `train-transform`, read by `train`.
    pub checkpoint: PathBuf,
}

impl Default for TransformSection {
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
            seed: 7,
            checkpoint: PathBuf::from("transform.ckpt"),
        }
    }
}

impl TransformSection {
    pub fn to_config(&self) -> fedora_core::transform::TransformTrainConfig {
        fedora_core::transform::TransformTrainConfig {
            beta1: self.beta1,
            beta2: self.beta2,
            beta3: self.beta3,
            beta4: self.beta4,
            lr_discriminator: self.lr_discriminator,
            lr_autoencoder: self.lr_autoencoder,
            lr_sensitive: self.lr_sensitive,
            iterations: self.iterations,
            batch_size: self.batch_size,
            seed: self.seed,
            shapes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub mode: String,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eta_primal: f64,
    pub eta_dual: f64,
    pub lambda1_init: f64,
    pub lambda2_init: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub hidden: Vec<usize>,
    pub freeze_lambda2: bool,
    /// Checkpoint path written by `train`.
    pub checkpoint: PathBuf,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            mode: "full".into(),
            iterations: 1000,
            batch_size: 64,
            seed: 7,
            eta_primal: 0.001,
            eta_dual: 0.05,
            lambda1_init: 1.0,
            lambda2_init: 1.0,
            gamma1: 0.025,
            gamma2: 0.025,
            hidden: vec![32, 32],
            freeze_lambda2: false,
            checkpoint: PathBuf::from("classifier.ckpt"),
        }
    }
}

impl TrainSection {
    pub fn mode(&self) -> Result<FedoraMode> {
        self.mode.parse()
    }

    pub fn to_config(&self) -> Result<fedora_core::trainer::FedoraConfig> {
        Ok(fedora_core::trainer::FedoraConfig {
            iterations: self.iterations,
            batch_size: self.batch_size,
            seed: self.seed,
            eta_primal: self.eta_primal,
            eta_dual: self.eta_dual,
            lambda1_init: self.lambda1_init,
            lambda2_init: self.lambda2_init,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            mode: self.mode()?,
            hidden: self.hidden.clone(),
            freeze_lambda2: self.freeze_lambda2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub experiment: String,
    pub repeats: usize,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub split_seed: u64,
    pub rho_cap: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            experiment: "lodo".into(),
            repeats: 3,
            train_fraction: 0.7,
            validation_fraction: 0.15,
            split_seed: 3,
            rho_cap: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub experiment: String,
    pub lambda2: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            experiment: "sweep".into(),
            lambda2: fedora_core::harness::default_sweep_values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub triples: usize,
    pub seed: u64,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self {
            triples: 5,
            seed: 2026,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifestSection {
    /// The subcommand that produced this manifest; informational.
    pub command: String,
}

/// The full resolved run configuration. The scalar `out` field leads so the
/// TOML serializer emits it before the sections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Output directory for checkpoints, reports, traces, and plots.
    pub out: PathBuf,
    pub data: DataSection,
    pub gen: GenSection,
    pub transform: TransformSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub audit: AuditSection,
    pub manifest: ManifestSection,
}

/// Command-line overrides; flags win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut config: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::io(p.display().to_string(), e))?;
                toml::from_str(&text)
                    .map_err(|e| Error::InvalidSpec(format!("config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if config.out.as_os_str().is_empty() {
            config.out = PathBuf::from("runs");
        }
        if let Some(seed) = overrides.seed {
            config.gen.seed = seed;
            config.transform.seed = seed;
            config.train.seed = seed;
            config.eval.split_seed = seed;
            config.audit.seed = seed;
        }
        if let Some(out) = &overrides.out {
            config.out = out.clone();
        }
        if let Some(mode) = &overrides.mode {
            config.train.mode = mode.clone();
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gen.rhos.len() != self.gen.styles.len() {
            return Err(Error::InvalidSpec(format!(
                "gen: {} rhos vs {} styles",
                self.gen.rhos.len(),
                self.gen.styles.len()
            )));
        }
        for packed in &self.gen.styles {
            StyleTransform::from_packed(packed)?;
        }
        if self.gen.n_per_domain < 4 {
            return Err(Error::InvalidSpec("gen.n_per_domain must be at least 4".into()));
        }
        self.train.mode()?;
        self.train.to_config()?.initial_dual_state().validate()?;
        if !(self.eval.train_fraction > 0.0
            && self.eval.validation_fraction > 0.0
            && self.eval.train_fraction + self.eval.validation_fraction < 1.0)
        {
            return Err(Error::InvalidSpec(
                "eval fractions must be positive and leave room for a test split".into(),
            ));
        }
        if self.eval.repeats == 0 {
            return Err(Error::InvalidSpec("eval.repeats must be at least 1".into()));
        }
        if self.sweep.lambda2.is_empty() || self.sweep.lambda2.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidSpec(
                "sweep.lambda2 values must be positive".into(),
            ));
        }
        if self.audit.triples == 0 {
            return Err(Error::InvalidSpec("audit.triples must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolve a path against the output directory unless it is absolute.
    pub fn in_out_dir(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out.join(p)
        }
    }

    /// Write the resolved config as the command's run manifest.
    pub fn write_manifest(&self, command: &str) -> Result<PathBuf> {
        let mut resolved = self.clone();
        resolved.manifest.command = command.to_string();
        let text = toml::to_string_pretty(&resolved)
            .map_err(|e| Error::InvalidSpec(format!("manifest serialization: {e}")))?;
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Error::io(self.out.display().to_string(), e))?;
        let path = self.out.join(format!("run_manifest_{command}.toml"));
        std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let text = "[train]\nmode = \"full\"\nbananas = 3\n";
        let err = toml::from_str::<RunConfig>(text).unwrap_err().to_string();
        assert!(err.contains("bananas"), "error should name the key: {err}");
    }

    #[test]
    fn overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[train]\nmode = \"no-t\"\nseed = 1\n").unwrap();
        let cfg = RunConfig::load(
            Some(&p),
            &Overrides {
                seed: Some(42),
                out: Some(dir.path().join("o")),
                mode: Some("no-lfair".into()),
            },
        )
        .unwrap();
        assert_eq!(cfg.train.seed, 42);
        assert_eq!(cfg.gen.seed, 42);
        assert_eq!(cfg.train.mode, "no-lfair");
        assert_eq!(cfg.out, dir.path().join("o"));
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let p = cfg.write_manifest("gen").unwrap();
        let reloaded = RunConfig::load(Some(&p), &Overrides::default()).unwrap();
        assert_eq!(reloaded.gen, cfg.gen);
        assert_eq!(reloaded.manifest.command, "gen");
    }

    #[test]
    fn bad_mode_rejected() {
        let text = "[train]\nmode = \"sideways\"\n";
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert!(cfg.validate().is_err());
    }
}
