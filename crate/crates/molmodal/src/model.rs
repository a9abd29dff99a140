//! Model parameters, training configuration, and checkpoint serialization.
//!
//! The model owns one affine projector per modality (into the shared latent
//! space), one affine decoder per reconstruction target (the primary
//! molecular modality plus every context modality), and the tree codebook.
//! Checkpoints are JSON with a version field; identical training runs write
//! byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::Projector;
use crate::context::Decoder;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::treevq::{init_codebook, init_flat_codebook, TreeCodebook};

/// Which pipeline stage an ablation run disables or replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// The complete pipeline.
    Full,
    /// Missing context features stay at the zero placeholder.
    ZeroImpute,
    /// Missing context features drawn as column-scaled Gaussian noise.
    RandomImpute,
    /// Missing context features replaced by the mean of observed neighbors.
    NeighborMean,
    /// Both alignment channels off.
    NoSca,
    /// Variance/invariance/covariance channel off.
    NoDa,
    /// Contrastive channel off.
    NoIa,
    /// Quantization loss off.
    NoTreevq,
    /// Single-level codebook with `2^H` codes instead of the tree.
    FlatVq,
    /// Reconstruction loss off.
    NoCpr,
    /// Walks collapse to the start node only.
    NoWalk,
}

impl AblationMode {
    pub const ALL: [AblationMode; 11] = [
        AblationMode::Full,
        AblationMode::ZeroImpute,
        AblationMode::RandomImpute,
        AblationMode::NeighborMean,
        AblationMode::NoSca,
        AblationMode::NoDa,
        AblationMode::NoIa,
        AblationMode::NoTreevq,
        AblationMode::FlatVq,
        AblationMode::NoCpr,
        AblationMode::NoWalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::Full => "full",
            AblationMode::ZeroImpute => "zero_impute",
            AblationMode::RandomImpute => "random_impute",
            AblationMode::NeighborMean => "neighbor_mean",
            AblationMode::NoSca => "no_sca",
            AblationMode::NoDa => "no_da",
            AblationMode::NoIa => "no_ia",
            AblationMode::NoTreevq => "no_treevq",
            AblationMode::FlatVq => "flat_vq",
            AblationMode::NoCpr => "no_cpr",
            AblationMode::NoWalk => "no_walk",
        }
    }
}

impl std::fmt::Display for AblationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationMode::ALL
            .into_iter()
            .find(|mode| mode.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown ablation mode '{s}' (expected one of: {})",
                    AblationMode::ALL.map(AblationMode::name).join(", ")
                ))
            })
    }
}

/// Hyperparameters of one pretraining run. Serialized into checkpoints so a
/// run is reproducible from its artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Alignment weight λ1.
    pub lambda1: f64,
    /// Quantization weight λ2.
    pub lambda2: f64,
    /// Reverse commitment weight η.
    pub eta: f64,
    /// Contrastive temperature τ.
    pub tau: f64,
    /// Neighbors per node in the imputation graph (K).
    pub k: usize,
    /// Propagation iterations (T).
    pub iterations: usize,
    /// Walk length (L).
    pub walk_len: usize,
    /// Codebook depth (H).
    pub depth: usize,
    /// Shared latent dimension (d).
    pub d: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub ablation_mode: AblationMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda1: 10.0,
            lambda2: 0.1,
            eta: 1.0,
            tau: 0.1,
            k: 10,
            iterations: 5,
            walk_len: 4,
            depth: 6,
            d: 16,
            learning_rate: 1e-4,
            weight_decay: 1e-8,
            steps: 200,
            batch_size: 64,
            seed: 0,
            ablation_mode: AblationMode::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "loss weights must be nonnegative, got λ1={} λ2={}",
                self.lambda1, self.lambda2
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "reverse commitment weight must be nonnegative, got {}",
                self.eta
            )));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidTemperature(self.tau));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("neighbor count k must be positive".into()));
        }
        if self.depth == 0 {
            return Err(Error::InvalidTreeDepth);
        }
        if self.d < 2 {
            return Err(Error::InvalidLatentDim(self.d));
        }
        if !(self.learning_rate >= 0.0 && self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate and weight decay must be nonnegative, got {} and {}",
                self.learning_rate, self.weight_decay
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "batch size must be at least 2 (the variance regularizer needs two rows), got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Per-step loss components. `total = cpr + λ1·(sca_ia + sca_da) + λ2·treevq`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LossReport<T> {
    pub step: usize,
    pub total: T,
    pub cpr: T,
    pub sca_ia: T,
    pub sca_da: T,
    pub treevq: T,
}

/// All learnable parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// Shared latent dimension.
    pub d: usize,
    /// One projector per modality, keyed by modality name.
    pub projectors: BTreeMap<String, Projector<T>>,
    /// One decoder per reconstruction target (primary molecular modality and
    /// every context modality), keyed by modality name.
    pub decoders: BTreeMap<String, Decoder<T>>,
    pub codebook: TreeCodebook<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Seeded initialization. Weights are `N(0, 1/dim_in)`; biases are small
    /// but deliberately nonzero (`0.01·N(0,1)`) so the all-zero placeholder
    /// rows of missing modalities still project to a vector with a defined
    /// cosine. Parameter draw order follows the dataset's modality
    /// declaration order, so initialization is reproducible byte-for-byte.
    pub fn init(dataset: &Dataset<T>, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        dataset.validate()?;
        let primary = dataset.primary_molecular()?.name.clone();
        let d = config.d;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut draw_affine = |rows: usize, cols: usize| {
            let scale = T::of_f64(1.0 / (cols as f64).sqrt());
            let weight: Vec<Vec<T>> = (0..rows)
                .map(|_| (0..cols).map(|_| T::sample_standard_normal(&mut rng) * scale).collect())
                .collect();
            let bias: Vec<T> = (0..rows)
                .map(|_| T::sample_standard_normal(&mut rng) * T::of_f64(0.01))
                .collect();
            (weight, bias)
        };

        let mut projectors = BTreeMap::new();
        for spec in &dataset.specs {
            let (weight, bias) = draw_affine(d, spec.dim);
            projectors.insert(
                spec.name.clone(),
                Projector { modality: spec.name.clone(), weight, bias },
            );
        }
        let mut decoders = BTreeMap::new();
        for spec in &dataset.specs {
            if spec.name != primary && spec.kind.is_molecular() {
                continue;
            }
            let (weight, bias) = draw_affine(spec.dim, d);
            decoders.insert(
                spec.name.clone(),
                Decoder { target_modality: spec.name.clone(), weight, bias },
            );
        }
        let codebook_seed: u64 = rng.gen();
        let codebook = if config.ablation_mode == AblationMode::FlatVq {
            init_flat_codebook(config.depth, d, codebook_seed)?
        } else {
            init_codebook(config.depth, d, codebook_seed)?
        };
        Ok(ModelParams { d, projectors, decoders, codebook })
    }

    /// Check internal consistency: every projector maps into `d`, every
    /// decoder maps out of `d`, and the codebook lives in `d`.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in &self.projectors {
            if p.output_dim() != self.d {
                return Err(Error::CheckpointInconsistent(format!(
                    "projector '{name}' outputs {} dims, model says {}",
                    p.output_dim(),
                    self.d
                )));
            }
        }
        for (name, dec) in &self.decoders {
            if dec.input_dim() != self.d {
                return Err(Error::CheckpointInconsistent(format!(
                    "decoder '{name}' reads {} dims, model says {}",
                    dec.input_dim(),
                    self.d
                )));
            }
        }
        if self.codebook.dim != self.d {
            return Err(Error::CheckpointInconsistent(format!(
                "codebook dimension {} does not match latent dimension {}",
                self.codebook.dim, self.d
            )));
        }
        self.codebook.validate()
    }
}

// ---------------------------------------------------------------------------
// Checkpoint file
// ---------------------------------------------------------------------------

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AffinePair<T> {
    w: Vec<Vec<T>>,
    b: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct CodebookFile<T> {
    #[serde(rename = "H")]
    h: usize,
    levels: Vec<Vec<Vec<T>>>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile<T> {
    version: u32,
    d: usize,
    projectors: BTreeMap<String, AffinePair<T>>,
    codebook: CodebookFile<T>,
    decoders: BTreeMap<String, AffinePair<T>>,
    config: TrainConfig,
}

/// A trained model together with the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub params: ModelParams<T>,
    pub config: TrainConfig,
}

impl<T: Scalar + Serialize + for<'de> Deserialize<'de>> Checkpoint<T> {
    pub fn to_json(&self) -> Result<String> {
        let file = CheckpointFile {
            version: CHECKPOINT_FORMAT_VERSION,
            d: self.params.d,
            projectors: self
                .params
                .projectors
                .iter()
                .map(|(name, p)| {
                    (name.clone(), AffinePair { w: p.weight.clone(), b: p.bias.clone() })
                })
                .collect(),
            codebook: CodebookFile {
                h: self.params.codebook.depth,
                levels: self.params.codebook.levels.clone(),
            },
            decoders: self
                .params
                .decoders
                .iter()
                .map(|(name, dec)| {
                    (name.clone(), AffinePair { w: dec.weight.clone(), b: dec.bias.clone() })
                })
                .collect(),
            config: self.config.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json()?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile<T> = serde_json::from_str(text)?;
        if file.version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(file.version));
        }
        let projectors: BTreeMap<String, Projector<T>> = file
            .projectors
            .into_iter()
            .map(|(name, pair)| {
                let p = Projector { modality: name.clone(), weight: pair.w, bias: pair.b };
                (name, p)
            })
            .collect();
        let decoders: BTreeMap<String, Decoder<T>> = file
            .decoders
            .into_iter()
            .map(|(name, pair)| {
                let dec =
                    Decoder { target_modality: name.clone(), weight: pair.w, bias: pair.b };
                (name, dec)
            })
            .collect();
        let codebook =
            TreeCodebook { depth: file.codebook.h, dim: file.d, levels: file.codebook.levels };
        let checkpoint = Checkpoint {
            params: ModelParams { d: file.d, projectors, decoders, codebook },
            config: file.config,
        };
        checkpoint.params.validate()?;
        Ok(checkpoint)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
