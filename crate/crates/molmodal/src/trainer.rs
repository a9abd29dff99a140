//! Joint training loop: objective composition, hand-derived gradients,
//! gradient verification, and the Adam optimizer.
//!
//! The pipeline runs in a fixed order. Before training, every context
//! modality is imputed once over the molecular similarity graph (the
//! augmentation step has no learnable parameters). Each training step then
//! projects one mini-batch through the modality projectors and composes
//!
//! `total = cpr + λ1·(sca_ia + sca_da) + λ2·treevq`
//!
//! where `cpr` reconstructs features of walk-visited context-graph nodes,
//! the alignment terms tie molecular anchors to context projections, and
//! `treevq` quantizes all projections against the tree codebook. Ablation
//! modes replace the imputation rule or zero individual terms.
//!
//! All gradients are analytic. The stop-gradient boundaries of the
//! quantization loss make the naive "perturb a parameter and re-run"
//! finite-difference probe wrong by construction, so [`loss_value_frozen`]
//! re-evaluates the objective with the stopped slots and all sampling
//! decisions (batch, walks, routing) held at a captured baseline; that is
//! the function [`gradcheck`] differentiates numerically.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alignment::{sca_loss, CellularProjections, ProjectedBatch, ScaConfig};
use crate::context::{
    cpr_loss, random_walk, ContextGraph, NodeKind, WalkPath,
};
use crate::data::{apply_placeholder, Dataset, DenseModality, ValueDomain};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{AblationMode, LossReport, ModelParams, TrainConfig};
use crate::propagation::{build_knn_graph, propagate, PropagationConfig, SimilarityGraph};
use crate::scalar::Scalar;
use crate::treevq::{treevq_loss, treevq_loss_frozen, TreeVqCapture};

// Distinct seeds for the independent random streams derived from the run
// seed. Arbitrary odd constants; fixed so runs are reproducible.
const SHUFFLE_SALT: u64 = 0xA5A5_5A5A_0F0F_F0F0;
const IMPUTE_SALT: u64 = 0x51A7_E0D0_C0FF_EE01;
const WALK_STEP_MIX: u64 = 0x9E37_79B9_7F4A_7C15;
const WALK_NODE_MIX: u64 = 0xD1B5_4A32_D192_ED03;

/// Everything the training loop needs besides parameters: densified raw
/// features, imputation-augmented features, the molecular similarity graph,
/// and the context graph with node resolution tables.
#[derive(Clone, Debug)]
pub struct TrainingData<T> {
    pub dataset: Dataset<T>,
    /// Placeholder-zeroed feature matrices, one per modality in spec order.
    pub raw: Vec<DenseModality<T>>,
    /// Features after the imputation rule of the ablation mode. Observed
    /// rows are bit-identical to `raw`.
    pub augmented: Vec<DenseModality<T>>,
    /// K-nearest-neighbor graph over the primary molecular modality.
    pub knn: SimilarityGraph<T>,
    pub graph: ContextGraph<T>,
    /// Context-graph node → dataset record index (molecule nodes only).
    pub node_records: Vec<Option<usize>>,
    /// Context-graph node → (modality name, centroid) for bucket nodes that
    /// resolve to a context modality with at least one observed neighbor.
    pub bucket_targets: BTreeMap<usize, (String, Vec<T>)>,
    /// Positions of molecular / context modalities within `raw`.
    mol_positions: Vec<usize>,
    ctx_positions: Vec<usize>,
}

impl<T: Scalar> TrainingData<T> {
    pub fn molecular_count(&self) -> usize {
        self.mol_positions.len()
    }
}

fn mean_of_observed_neighbors<T: Scalar>(
    matrix: &[Vec<T>],
    mask: &[bool],
    knn: &SimilarityGraph<T>,
) -> Vec<Vec<T>> {
    let dim = matrix.first().map_or(0, Vec::len);
    matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if mask[i] {
                return row.clone();
            }
            let mut acc = linalg::zeros::<T>(dim);
            let mut total = T::zero();
            for &(j, w) in knn.neighbors(i) {
                if mask[j] {
                    linalg::axpy(w, &matrix[j], &mut acc);
                    total = total + w;
                }
            }
            if total > T::zero() {
                for v in acc.iter_mut() {
                    *v = *v / total;
                }
            }
            acc
        })
        .collect()
}

fn column_scaled_noise<T: Scalar>(
    matrix: &[Vec<T>],
    mask: &[bool],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<T>> {
    let dim = matrix.first().map_or(0, Vec::len);
    let observed = mask.iter().filter(|m| **m).count();
    // Per-column standard deviation over observed rows; falls back to 1
    // when nothing is observed.
    let mut std = vec![T::one(); dim];
    if observed > 0 {
        let inv = T::one() / T::of_usize(observed);
        for (j, s) in std.iter_mut().enumerate() {
            let mean: T = matrix
                .iter()
                .zip(mask)
                .filter(|(_, m)| **m)
                .map(|(row, _)| row[j])
                .sum::<T>()
                * inv;
            let var: T = matrix
                .iter()
                .zip(mask)
                .filter(|(_, m)| **m)
                .map(|(row, _)| (row[j] - mean) * (row[j] - mean))
                .sum::<T>()
                * inv;
            *s = var.sqrt();
        }
    }
    matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if mask[i] {
                row.clone()
            } else {
                std.iter().map(|&s| s * T::sample_standard_normal(rng)).collect()
            }
        })
        .collect()
}

fn augment_modalities<T: Scalar>(
    raw: &[DenseModality<T>],
    knn: &SimilarityGraph<T>,
    config: &TrainConfig,
) -> Result<Vec<DenseModality<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ IMPUTE_SALT);
    raw.iter()
        .map(|modality| {
            let mut out = modality.clone();
            if modality.observed.iter().all(|&o| o) {
                return Ok(out);
            }
            out.matrix = match config.ablation_mode {
                AblationMode::ZeroImpute => modality.matrix.clone(),
                AblationMode::RandomImpute => {
                    column_scaled_noise(&modality.matrix, &modality.observed, &mut rng)
                }
                AblationMode::NeighborMean => {
                    mean_of_observed_neighbors(&modality.matrix, &modality.observed, knn)
                }
                _ => {
                    let propagation = PropagationConfig {
                        iterations: config.iterations,
                        convergence_tol: 0.0,
                    };
                    propagate(&modality.matrix, &modality.observed, knn, &propagation)?.0
                }
            };
            Ok(out)
        })
        .collect()
}

fn resolve_graph<T: Scalar>(
    dataset: &Dataset<T>,
    raw: &[DenseModality<T>],
    graph: &ContextGraph<T>,
) -> (Vec<Option<usize>>, BTreeMap<usize, (String, Vec<T>)>) {
    let record_index: BTreeMap<&str, usize> = dataset
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let node_records: Vec<Option<usize>> = (0..graph.len())
        .map(|u| {
            if graph.kind(u) == NodeKind::Molecule {
                record_index.get(graph.id(u)).copied()
            } else {
                None
            }
        })
        .collect();
    // Bucket node ids follow "<modality>:b<pattern>"; the target is the mean
    // of the connected molecules' observed features in that modality, so it
    // is recoverable from any (dataset, graph) pair, including graphs loaded
    // from a file.
    let mut bucket_targets = BTreeMap::new();
    for u in 0..graph.len() {
        if graph.kind(u) == NodeKind::Molecule {
            continue;
        }
        let Some((name, _)) = graph.id(u).rsplit_once(":b") else { continue };
        let Some(position) = dataset.specs.iter().position(|s| s.name == name) else {
            continue;
        };
        if dataset.specs[position].kind.is_molecular() {
            continue;
        }
        let modality = &raw[position];
        let mut centroid = linalg::zeros::<T>(dataset.specs[position].dim);
        let mut members = 0usize;
        for &(v, _) in graph.neighbors(u) {
            if let Some(record) = node_records[v] {
                if modality.observed[record] {
                    linalg::axpy(T::one(), &modality.matrix[record], &mut centroid);
                    members += 1;
                }
            }
        }
        if members == 0 {
            continue;
        }
        for value in centroid.iter_mut() {
            *value = *value / T::of_usize(members);
        }
        bucket_targets.insert(u, (name.to_string(), centroid));
    }
    (node_records, bucket_targets)
}

/// Densify, impute, and index a dataset for training, building the context
/// graph from the dataset itself.
pub fn prepare_training_data<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig,
) -> Result<TrainingData<T>> {
    let graph = crate::context::build_synthetic_context_graph(dataset, config.seed)?;
    prepare_training_data_with_graph(dataset, graph, config)
}

/// Like [`prepare_training_data`], but reuse an already-built context graph
/// (for example one loaded from a file).
pub fn prepare_training_data_with_graph<T: Scalar>(
    dataset: &Dataset<T>,
    graph: ContextGraph<T>,
    config: &TrainConfig,
) -> Result<TrainingData<T>> {
    config.validate()?;
    let raw = apply_placeholder(dataset)?;
    let primary = dataset.primary_molecular()?.name.clone();
    let primary_position = dataset
        .specs
        .iter()
        .position(|s| s.name == primary)
        .expect("primary modality is a spec");
    let knn = build_knn_graph(&raw[primary_position].matrix, config.k)?;
    let augmented = augment_modalities(&raw, &knn, config)?;
    let (node_records, bucket_targets) = resolve_graph(dataset, &raw, &graph);
    let mol_positions: Vec<usize> = dataset
        .specs
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind.is_molecular())
        .map(|(i, _)| i)
        .collect();
    let ctx_positions: Vec<usize> = dataset
        .specs
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.kind.is_molecular())
        .map(|(i, _)| i)
        .collect();
    Ok(TrainingData {
        dataset: dataset.clone(),
        raw,
        augmented,
        knn,
        graph,
        node_records,
        bucket_targets,
        mol_positions,
        ctx_positions,
    })
}

// ---------------------------------------------------------------------------
// Gradient containers
// ---------------------------------------------------------------------------

/// Gradient (or optimizer-moment) buffers shaped like one affine map.
#[derive(Clone, Debug)]
pub struct AffineGrad<T> {
    pub weight: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> AffineGrad<T> {
    fn zeros(rows: usize, cols: usize) -> Self {
        AffineGrad { weight: linalg::zeros_matrix(rows, cols), bias: linalg::zeros(rows) }
    }

    /// `weight += scale · gy ⊗ x`, `bias += scale · gy`.
    fn add_outer(&mut self, gy: &[T], x: &[T], scale: T) {
        for (row, &g) in self.weight.iter_mut().zip(gy) {
            linalg::axpy(scale * g, x, row);
        }
        for (b, &g) in self.bias.iter_mut().zip(gy) {
            *b = *b + scale * g;
        }
    }
}

/// Full gradient set, shaped like [`ModelParams`].
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub projectors: BTreeMap<String, AffineGrad<T>>,
    pub decoders: BTreeMap<String, AffineGrad<T>>,
    pub codebook: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros(params: &ModelParams<T>) -> Self {
        Gradients {
            projectors: params
                .projectors
                .iter()
                .map(|(name, p)| {
                    (name.clone(), AffineGrad::zeros(p.output_dim(), p.input_dim()))
                })
                .collect(),
            decoders: params
                .decoders
                .iter()
                .map(|(name, d)| {
                    (name.clone(), AffineGrad::zeros(d.output_dim(), d.input_dim()))
                })
                .collect(),
            codebook: params
                .codebook
                .levels
                .iter()
                .map(|codes| linalg::zeros_matrix(codes.len(), params.codebook.dim))
                .collect(),
        }
    }
}

/// Baseline snapshot that makes the objective finite-difference-able: the
/// batch, the sampled walks, and the quantizer's stop-gradient slots.
#[derive(Clone, Debug)]
pub struct LossCapture<T> {
    pub step: usize,
    pub batch: Vec<usize>,
    pub walks: Vec<WalkPath<T>>,
    pub vq: Option<TreeVqCapture<T>>,
}

// ---------------------------------------------------------------------------
// Objective composition
// ---------------------------------------------------------------------------

struct Components<T> {
    cpr: T,
    ia: T,
    da: T,
    vq: T,
}

fn walk_seed(seed: u64, step: usize, record: usize) -> u64 {
    seed ^ (step as u64 + 1).wrapping_mul(WALK_STEP_MIX)
        ^ (record as u64 + 1).wrapping_mul(WALK_NODE_MIX)
}

fn trivial_walk<T: Scalar>(node: usize) -> WalkPath<T> {
    WalkPath { nodes: vec![Some(node)], cum_weights: vec![T::one()] }
}

/// Reconstruction channels: each visited node gets at most one decoded /
/// target pair per channel, and channel losses add up.
struct Channel<T> {
    decoder: String,
    /// node → latent fed to the decoder, plus which projector (and input
    /// features) produced it so gradients can flow back.
    latents: BTreeMap<usize, LatentSource<T>>,
    targets: BTreeMap<usize, (Vec<T>, ValueDomain)>,
}

/// Where a decoded latent came from, for backpropagation.
enum LatentSource<T> {
    /// Sum of every molecular projection of this record.
    Anchor { record: usize, value: Vec<T> },
    /// A single context projector applied to `input`.
    Projected { modality: String, input: Vec<T>, value: Vec<T> },
}

impl<T: Scalar> LatentSource<T> {
    fn value(&self) -> &[T] {
        match self {
            LatentSource::Anchor { value, .. } => value,
            LatentSource::Projected { value, .. } => value,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn compose_loss<T: Scalar>(
    data: &TrainingData<T>,
    params: &ModelParams<T>,
    config: &TrainConfig,
    batch: &[usize],
    walks: &[WalkPath<T>],
    frozen_vq: Option<&TreeVqCapture<T>>,
    want_grads: bool,
) -> Result<(Components<T>, Option<Gradients<T>>, Option<TreeVqCapture<T>>)> {
    if batch.is_empty() {
        return Err(Error::BatchTooSmall { minimum: 1, actual: 0 });
    }
    let n = data.dataset.len();
    if let Some(&bad) = batch.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidConfig(format!(
            "batch references record {bad}, dataset has {n}"
        )));
    }
    let mode = config.ablation_mode;
    let lambda1 = T::of_f64(config.lambda1);
    let lambda2 = T::of_f64(config.lambda2);
    let eta = T::of_f64(config.eta);
    let mut grads = want_grads.then(|| Gradients::zeros(params));

    let projector = |name: &str| -> Result<&crate::alignment::Projector<T>> {
        params.projectors.get(name).ok_or_else(|| {
            Error::CheckpointInconsistent(format!("no projector for modality '{name}'"))
        })
    };
    let decoder = |name: &str| -> Result<&crate::context::Decoder<T>> {
        params.decoders.get(name).ok_or_else(|| {
            Error::CheckpointInconsistent(format!("no decoder for modality '{name}'"))
        })
    };

    // --- Projections of the batch ------------------------------------------
    let mut mol_proj: Vec<(String, Vec<Vec<T>>)> = Vec::with_capacity(data.mol_positions.len());
    for &pos in &data.mol_positions {
        let modality = &data.augmented[pos];
        let p = projector(&modality.name)?;
        let rows: Vec<Vec<T>> =
            batch.iter().map(|&i| p.project(&modality.matrix[i])).collect::<Result<_>>()?;
        mol_proj.push((modality.name.clone(), rows));
    }
    let mut cellular: Vec<CellularProjections<T>> = Vec::with_capacity(data.ctx_positions.len());
    for &pos in &data.ctx_positions {
        let raw = &data.raw[pos];
        let aug = &data.augmented[pos];
        let p = projector(&raw.name)?;
        let raw_rows: Vec<Vec<T>> =
            batch.iter().map(|&i| p.project(&raw.matrix[i])).collect::<Result<_>>()?;
        let aug_rows: Vec<Vec<T>> =
            batch.iter().map(|&i| p.project(&aug.matrix[i])).collect::<Result<_>>()?;
        cellular.push(CellularProjections { name: raw.name.clone(), raw: raw_rows, augmented: aug_rows });
    }
    let projected = ProjectedBatch::new(mol_proj, cellular)?;

    // Record → batch position, for reusing batch anchors in reconstruction.
    let batch_position: BTreeMap<usize, usize> =
        batch.iter().enumerate().map(|(pos, &i)| (i, pos)).collect();

    // --- Alignment ----------------------------------------------------------
    let ia_on = !matches!(mode, AblationMode::NoSca | AblationMode::NoIa);
    let da_on = !matches!(mode, AblationMode::NoSca | AblationMode::NoDa);
    let mut components = Components { cpr: T::zero(), ia: T::zero(), da: T::zero(), vq: T::zero() };
    if config.lambda1 != 0.0 && (ia_on || da_on) && !projected.cellular.is_empty() {
        let sca_config =
            ScaConfig { tau: config.tau, infonce_enabled: ia_on, vicreg_enabled: da_on };
        let sca = sca_loss(&projected, &sca_config)?;
        components.ia = sca.infonce;
        components.da = sca.vicreg;
        if let Some(grads) = grads.as_mut() {
            // Anchor rows are sums of molecular projections, so the anchor
            // gradient flows into every molecular projector unchanged.
            for (pos, &record) in batch.iter().enumerate() {
                for &mol in &data.mol_positions {
                    let modality = &data.augmented[mol];
                    grads.projectors.get_mut(&modality.name).expect("gradient block exists")
                        .add_outer(&sca.grad_anchor[pos], &modality.matrix[record], lambda1);
                }
            }
            for (c_idx, &ctx) in data.ctx_positions.iter().enumerate() {
                let raw = &data.raw[ctx];
                let aug = &data.augmented[ctx];
                let block = grads.projectors.get_mut(&raw.name).expect("gradient block exists");
                for (pos, &record) in batch.iter().enumerate() {
                    block.add_outer(
                        &sca.grad_cellular_raw[c_idx][pos],
                        &raw.matrix[record],
                        lambda1,
                    );
                    block.add_outer(
                        &sca.grad_cellular_augmented[c_idx][pos],
                        &aug.matrix[record],
                        lambda1,
                    );
                }
            }
        }
    }

    // --- Quantization -------------------------------------------------------
    let vq_on = mode != AblationMode::NoTreevq && config.lambda2 != 0.0;
    let mut vq_capture = None;
    if vq_on {
        // Inputs: molecular projections, then augmented context projections,
        // both in spec order — the same order the frozen evaluator rebuilds.
        let mut inputs: Vec<Vec<Vec<T>>> =
            projected.molecular.iter().map(|(_, rows)| rows.clone()).collect();
        inputs.extend(projected.cellular.iter().map(|c| c.augmented.clone()));
        if let Some(capture) = frozen_vq {
            components.vq = treevq_loss_frozen(&inputs, &params.codebook, capture, eta)?;
        } else {
            let vq = treevq_loss(&inputs, &params.codebook, eta)?;
            components.vq = vq.loss;
            if let Some(grads) = grads.as_mut() {
                for (l, level) in vq.grad_codebook.iter().enumerate() {
                    for (j, g) in level.iter().enumerate() {
                        linalg::axpy(lambda2, g, &mut grads.codebook[l][j]);
                    }
                }
                let mol_count = data.mol_positions.len();
                for (input_idx, per_rows) in vq.grad_inputs.iter().enumerate() {
                    let (name, feature_pos) = if input_idx < mol_count {
                        let pos = data.mol_positions[input_idx];
                        (&data.augmented[pos].name, pos)
                    } else {
                        let pos = data.ctx_positions[input_idx - mol_count];
                        (&data.augmented[pos].name, pos)
                    };
                    let block =
                        grads.projectors.get_mut(name).expect("gradient block exists");
                    for (pos, g) in per_rows.iter().enumerate() {
                        block.add_outer(g, &data.augmented[feature_pos].matrix[batch[pos]], lambda2);
                    }
                }
            }
            if want_grads {
                vq_capture = Some(TreeVqCapture::new(&inputs, &params.codebook, &vq.paths));
            }
        }
    }

    // --- Walk-weighted reconstruction --------------------------------------
    if mode != AblationMode::NoCpr {
        if walks.len() != batch.len() {
            return Err(Error::LengthMismatch {
                context: "one walk per batch molecule",
                expected: batch.len(),
                actual: walks.len(),
            });
        }
        // Anchor for any visited molecule: reuse the batch row, or project
        // on demand for molecules reached by the walk but outside the batch.
        let mut anchor_cache: BTreeMap<usize, Vec<T>> = BTreeMap::new();
        let mut anchor_of = |record: usize| -> Result<Vec<T>> {
            if let Some(&pos) = batch_position.get(&record) {
                return Ok(projected.anchor[pos].clone());
            }
            if let Some(value) = anchor_cache.get(&record) {
                return Ok(value.clone());
            }
            let mut acc = linalg::zeros::<T>(params.d);
            for &mol in &data.mol_positions {
                let modality = &data.augmented[mol];
                let p = projector(&modality.name)?;
                let row = p.project(&modality.matrix[record])?;
                linalg::axpy(T::one(), &row, &mut acc);
            }
            anchor_cache.insert(record, acc.clone());
            Ok(acc)
        };

        // Visited nodes, deduplicated.
        let visited: std::collections::BTreeSet<usize> =
            walks.iter().flat_map(|w| w.visited().map(|(u, _)| u)).collect();

        let primary = &data.dataset.specs[data.mol_positions[0]];
        let primary_matrix = &data.raw[data.mol_positions[0]];
        let mut channels: Vec<Channel<T>> = Vec::new();

        // Channel 0: primary molecular features decoded from the anchor.
        let mut molecular = Channel {
            decoder: primary.name.clone(),
            latents: BTreeMap::new(),
            targets: BTreeMap::new(),
        };
        for &u in &visited {
            let Some(record) = data.node_records[u] else { continue };
            let value = anchor_of(record)?;
            molecular.latents.insert(u, LatentSource::Anchor { record, value });
            molecular
                .targets
                .insert(u, (primary_matrix.matrix[record].clone(), primary.value_domain));
        }
        channels.push(molecular);

        // One channel per context modality: observed molecule features plus
        // bucket centroids, both decoded from that modality's projector.
        for &ctx in &data.ctx_positions {
            let spec = &data.dataset.specs[ctx];
            let raw = &data.raw[ctx];
            let p = projector(&spec.name)?;
            let mut channel = Channel {
                decoder: spec.name.clone(),
                latents: BTreeMap::new(),
                targets: BTreeMap::new(),
            };
            for &u in &visited {
                if let Some(record) = data.node_records[u] {
                    if !raw.observed[record] {
                        continue;
                    }
                    let input = raw.matrix[record].clone();
                    let value = p.project(&input)?;
                    channel.latents.insert(
                        u,
                        LatentSource::Projected { modality: spec.name.clone(), input, value },
                    );
                    channel.targets.insert(u, (raw.matrix[record].clone(), spec.value_domain));
                } else if let Some((name, centroid)) = data.bucket_targets.get(&u) {
                    if name != &spec.name {
                        continue;
                    }
                    let value = p.project(centroid)?;
                    channel.latents.insert(
                        u,
                        LatentSource::Projected {
                            modality: spec.name.clone(),
                            input: centroid.clone(),
                            value,
                        },
                    );
                    channel.targets.insert(u, (centroid.clone(), spec.value_domain));
                }
            }
            channels.push(channel);
        }

        for channel in &channels {
            let dec = decoder(&channel.decoder)?;
            let decoded: BTreeMap<usize, Vec<T>> = channel
                .latents
                .iter()
                .map(|(&u, source)| Ok((u, dec.decode(source.value())?)))
                .collect::<Result<_>>()?;
            let out = cpr_loss(walks, &decoded, &channel.targets)?;
            components.cpr = components.cpr + out.loss;
            let Some(grads) = grads.as_mut() else { continue };
            for (&u, g_dec) in &out.grad_decoded {
                let source = &channel.latents[&u];
                grads
                    .decoders
                    .get_mut(&channel.decoder)
                    .expect("gradient block exists")
                    .add_outer(g_dec, source.value(), T::one());
                let g_latent = linalg::matvec_transposed(&dec.weight, g_dec);
                match source {
                    LatentSource::Anchor { record, .. } => {
                        for &mol in &data.mol_positions {
                            let modality = &data.augmented[mol];
                            grads
                                .projectors
                                .get_mut(&modality.name)
                                .expect("gradient block exists")
                                .add_outer(&g_latent, &modality.matrix[*record], T::one());
                        }
                    }
                    LatentSource::Projected { modality, input, .. } => {
                        grads
                            .projectors
                            .get_mut(modality)
                            .expect("gradient block exists")
                            .add_outer(&g_latent, input, T::one());
                    }
                }
            }
        }
    }

    Ok((components, grads, vq_capture))
}

/// Compose the full objective on one batch: loss components, analytic
/// gradients for every parameter block, and the capture needed to evaluate
/// the same objective with frozen sampling and stop-gradient slots.
pub fn total_loss<T: Scalar>(
    data: &TrainingData<T>,
    params: &ModelParams<T>,
    config: &TrainConfig,
    batch: &[usize],
    step: usize,
) -> Result<(LossReport<T>, Gradients<T>, LossCapture<T>)> {
    let walks = sample_walks(data, config, batch, step)?;
    let (components, grads, vq_capture) =
        compose_loss(data, params, config, batch, &walks, None, true)?;
    let report = build_report(&components, config, step);
    let capture = LossCapture { step, batch: batch.to_vec(), walks, vq: vq_capture };
    Ok((report, grads.expect("gradients were requested"), capture))
}

fn sample_walks<T: Scalar>(
    data: &TrainingData<T>,
    config: &TrainConfig,
    batch: &[usize],
    step: usize,
) -> Result<Vec<WalkPath<T>>> {
    if config.ablation_mode == AblationMode::NoCpr {
        return Ok(Vec::new());
    }
    batch
        .iter()
        .map(|&record| {
            let id = &data.dataset.records[record].id;
            let node = data
                .graph
                .node_index(id)
                .ok_or_else(|| Error::UnknownNode(id.clone()))?;
            if config.ablation_mode == AblationMode::NoWalk || config.walk_len == 0 {
                Ok(trivial_walk(node))
            } else {
                random_walk(&data.graph, id, config.walk_len, walk_seed(config.seed, step, record))
            }
        })
        .collect()
}

fn build_report<T: Scalar>(
    components: &Components<T>,
    config: &TrainConfig,
    step: usize,
) -> LossReport<T> {
    let lambda1 = T::of_f64(config.lambda1);
    let lambda2 = T::of_f64(config.lambda2);
    LossReport {
        step,
        total: components.cpr
            + lambda1 * (components.ia + components.da)
            + lambda2 * components.vq,
        cpr: components.cpr,
        sca_ia: components.ia,
        sca_da: components.da,
        treevq: components.vq,
    }
}

/// Objective value with the batch, walks, routing, and stop-gradient slots
/// frozen at `capture`, while parameters stay live. Central differences of
/// this function match the analytic gradients of [`total_loss`].
pub fn loss_value_frozen<T: Scalar>(
    data: &TrainingData<T>,
    params: &ModelParams<T>,
    config: &TrainConfig,
    capture: &LossCapture<T>,
) -> Result<T> {
    let (components, _, _) = compose_loss(
        data,
        params,
        config,
        &capture.batch,
        &capture.walks,
        capture.vq.as_ref(),
        false,
    )?;
    Ok(build_report(&components, config, capture.step).total)
}

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

/// Worst relative error per parameter block.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub blocks: Vec<(String, f64)>,
    pub worst: f64,
}

/// Compare every analytic gradient entry against central finite differences
/// of the frozen objective. Exhaustive over all parameters — intended for
/// small configurations only.
pub fn gradcheck<T: Scalar>(
    data: &TrainingData<T>,
    params: &ModelParams<T>,
    config: &TrainConfig,
    batch: &[usize],
    step_size: f64,
) -> Result<GradCheckReport> {
    let (_, grads, capture) = total_loss(data, params, config, batch, 0)?;
    let mut work = params.clone();
    let h = T::of_f64(step_size);
    let mut blocks = Vec::new();

    let check_entry = |work: &mut ModelParams<T>,
                           get: &dyn Fn(&mut ModelParams<T>) -> &mut T,
                           analytic: T|
     -> Result<f64> {
        let original = *get(work);
        *get(work) = original + h;
        let up = loss_value_frozen(data, work, config, &capture)?;
        *get(work) = original - h;
        let down = loss_value_frozen(data, work, config, &capture)?;
        *get(work) = original;
        let numeric = (up - down) / (T::of_f64(2.0) * h);
        Ok(linalg::relative_error(analytic, numeric).to_f64_lossy())
    };

    for (name, grad) in &grads.projectors {
        let mut worst = 0.0f64;
        let rows = grad.weight.len();
        let cols = grad.weight.first().map_or(0, Vec::len);
        for r in 0..rows {
            for c in 0..cols {
                let name = name.clone();
                let err = check_entry(
                    &mut work,
                    &move |p: &mut ModelParams<T>| {
                        &mut p.projectors.get_mut(&name).unwrap().weight[r][c]
                    },
                    grad.weight[r][c],
                )?;
                worst = worst.max(err);
            }
            let name = name.clone();
            let err = check_entry(
                &mut work,
                &move |p: &mut ModelParams<T>| &mut p.projectors.get_mut(&name).unwrap().bias[r],
                grad.bias[r],
            )?;
            worst = worst.max(err);
        }
        blocks.push((format!("projector/{name}"), worst));
    }
    for (name, grad) in &grads.decoders {
        let mut worst = 0.0f64;
        let rows = grad.weight.len();
        let cols = grad.weight.first().map_or(0, Vec::len);
        for r in 0..rows {
            for c in 0..cols {
                let name = name.clone();
                let err = check_entry(
                    &mut work,
                    &move |p: &mut ModelParams<T>| {
                        &mut p.decoders.get_mut(&name).unwrap().weight[r][c]
                    },
                    grad.weight[r][c],
                )?;
                worst = worst.max(err);
            }
            let name = name.clone();
            let err = check_entry(
                &mut work,
                &move |p: &mut ModelParams<T>| &mut p.decoders.get_mut(&name).unwrap().bias[r],
                grad.bias[r],
            )?;
            worst = worst.max(err);
        }
        blocks.push((format!("decoder/{name}"), worst));
    }
    if !grads.codebook.is_empty() {
        let mut worst = 0.0f64;
        for l in 0..grads.codebook.len() {
            for j in 0..grads.codebook[l].len() {
                for k in 0..grads.codebook[l][j].len() {
                    let err = check_entry(
                        &mut work,
                        &move |p: &mut ModelParams<T>| &mut p.codebook.levels[l][j][k],
                        grads.codebook[l][j][k],
                    )?;
                    worst = worst.max(err);
                }
            }
        }
        blocks.push(("codebook".to_string(), worst));
    }

    let worst = blocks.iter().fold(0.0f64, |acc, (_, e)| acc.max(*e));
    Ok(GradCheckReport { blocks, worst })
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

struct AdamState<T> {
    first: Gradients<T>,
    second: Gradients<T>,
    t: usize,
}

impl<T: Scalar> AdamState<T> {
    fn new(params: &ModelParams<T>) -> Self {
        AdamState { first: Gradients::zeros(params), second: Gradients::zeros(params), t: 0 }
    }
}

fn adam_update_slice<T: Scalar>(
    theta: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    t: usize,
    config: &TrainConfig,
) {
    let beta1 = T::of_f64(ADAM_BETA1);
    let beta2 = T::of_f64(ADAM_BETA2);
    let eps = T::of_f64(ADAM_EPSILON);
    let lr = T::of_f64(config.learning_rate);
    let wd = T::of_f64(config.weight_decay);
    let correct1 = T::one() - T::of_f64(ADAM_BETA1.powi(t as i32));
    let correct2 = T::one() - T::of_f64(ADAM_BETA2.powi(t as i32));
    for i in 0..theta.len() {
        // Coupled weight decay: plain L2 folded into the gradient.
        let g = grad[i] + wd * theta[i];
        m[i] = beta1 * m[i] + (T::one() - beta1) * g;
        v[i] = beta2 * v[i] + (T::one() - beta2) * g * g;
        let m_hat = m[i] / correct1;
        let v_hat = v[i] / correct2;
        theta[i] = theta[i] - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    config: &TrainConfig,
) {
    state.t += 1;
    let t = state.t;
    for (name, grad) in &grads.projectors {
        let p = params.projectors.get_mut(name).expect("blocks mirror params");
        let m = state.first.projectors.get_mut(name).unwrap();
        let v = state.second.projectors.get_mut(name).unwrap();
        for (row, (g, (mr, vr))) in p
            .weight
            .iter_mut()
            .zip(grad.weight.iter().zip(m.weight.iter_mut().zip(v.weight.iter_mut())))
        {
            adam_update_slice(row, g, mr, vr, t, config);
        }
        adam_update_slice(&mut p.bias, &grad.bias, &mut m.bias, &mut v.bias, t, config);
    }
    for (name, grad) in &grads.decoders {
        let d = params.decoders.get_mut(name).expect("blocks mirror params");
        let m = state.first.decoders.get_mut(name).unwrap();
        let v = state.second.decoders.get_mut(name).unwrap();
        for (row, (g, (mr, vr))) in d
            .weight
            .iter_mut()
            .zip(grad.weight.iter().zip(m.weight.iter_mut().zip(v.weight.iter_mut())))
        {
            adam_update_slice(row, g, mr, vr, t, config);
        }
        adam_update_slice(&mut d.bias, &grad.bias, &mut m.bias, &mut v.bias, t, config);
    }
    for l in 0..params.codebook.levels.len() {
        for j in 0..params.codebook.levels[l].len() {
            adam_update_slice(
                &mut params.codebook.levels[l][j],
                &grads.codebook[l][j],
                &mut state.first.codebook[l][j],
                &mut state.second.codebook[l][j],
                t,
                config,
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Pretrain on an already-prepared dataset. Mini-batches are drawn without
/// replacement per epoch with seeded shuffling; a trailing batch smaller
/// than two rows is dropped. Aborts with an error as soon as the total loss
/// stops being finite. Deterministic per config.
pub fn train_prepared<T: Scalar>(
    data: &TrainingData<T>,
    config: &TrainConfig,
) -> Result<(ModelParams<T>, Vec<LossReport<T>>)> {
    config.validate()?;
    let n = data.dataset.len();
    if n < 2 {
        return Err(Error::BatchTooSmall { minimum: 2, actual: n });
    }
    let mut params = ModelParams::init(&data.dataset, config)?;
    let mut state = AdamState::new(&params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut history = Vec::with_capacity(config.steps);
    let mut step = 0usize;
    'outer: loop {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size.min(n)) {
            if chunk.len() < 2 {
                continue;
            }
            let (report, grads, _) = total_loss(data, &params, config, chunk, step)?;
            if !report.total.is_finite() {
                return Err(Error::NonFiniteLoss { step });
            }
            adam_step(&mut params, &grads, &mut state, config);
            history.push(report);
            step += 1;
            if step >= config.steps {
                break 'outer;
            }
        }
    }
    Ok((params, history))
}

/// Prepare a dataset (building its context graph) and pretrain on it.
pub fn train<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig,
) -> Result<(ModelParams<T>, Vec<LossReport<T>>)> {
    let data = prepare_training_data(dataset, config)?;
    train_prepared(&data, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, ModalityKind, ModalitySpec, MoleculeRecord, SyntheticConfig};
    use rand::Rng;

    fn tiny_dataset(n: usize, seed: u64) -> Dataset<f64> {
        generate_synthetic(&SyntheticConfig { n, seed, ..SyntheticConfig::default() }).unwrap()
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            d: 4,
            depth: 2,
            k: 3,
            batch_size: 4,
            steps: 3,
            iterations: 3,
            walk_len: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn preparation_preserves_observed_rows_bit_exactly() {
        let dataset = tiny_dataset(20, 5);
        for mode in [
            AblationMode::Full,
            AblationMode::ZeroImpute,
            AblationMode::RandomImpute,
            AblationMode::NeighborMean,
        ] {
            let config = TrainConfig { ablation_mode: mode, ..tiny_config() };
            let data = prepare_training_data(&dataset, &config).unwrap();
            for (raw, aug) in data.raw.iter().zip(&data.augmented) {
                for i in 0..dataset.len() {
                    if raw.observed[i] {
                        assert_eq!(raw.matrix[i], aug.matrix[i], "{} row {i}", raw.name);
                    }
                }
            }
        }
    }

    #[test]
    fn imputation_rules_differ_where_rows_are_missing() {
        let dataset = tiny_dataset(24, 6);
        let full = prepare_training_data(&dataset, &tiny_config()).unwrap();
        let zero = prepare_training_data(
            &dataset,
            &TrainConfig { ablation_mode: AblationMode::ZeroImpute, ..tiny_config() },
        )
        .unwrap();
        let noise = prepare_training_data(
            &dataset,
            &TrainConfig { ablation_mode: AblationMode::RandomImpute, ..tiny_config() },
        )
        .unwrap();
        // Find a context modality with at least one missing row.
        let position = full
            .augmented
            .iter()
            .position(|m| m.observed.iter().any(|o| !o))
            .expect("default rates leave missing rows");
        let row = full.augmented[position].observed.iter().position(|o| !o).unwrap();
        assert!(zero.augmented[position].matrix[row].iter().all(|v| *v == 0.0));
        assert_ne!(full.augmented[position].matrix[row], zero.augmented[position].matrix[row]);
        assert_ne!(noise.augmented[position].matrix[row], zero.augmented[position].matrix[row]);
    }

    #[test]
    fn loss_report_identity_holds_with_gradients_shaped_like_params() {
        let dataset = tiny_dataset(16, 7);
        let config = tiny_config();
        let data = prepare_training_data(&dataset, &config).unwrap();
        let params = ModelParams::init(&dataset, &config).unwrap();
        let batch = [0, 3, 5, 9];
        let (report, grads, capture) = total_loss(&data, &params, &config, &batch, 0).unwrap();
        let weighted = report.cpr
            + config.lambda1 * (report.sca_ia + report.sca_da)
            + config.lambda2 * report.treevq;
        assert!((report.total - weighted).abs() < 1e-12);
        assert_eq!(grads.projectors.len(), params.projectors.len());
        assert_eq!(grads.decoders.len(), params.decoders.len());
        assert_eq!(grads.codebook.len(), params.codebook.levels.len());
        assert_eq!(capture.walks.len(), batch.len());
        // The frozen evaluation reproduces the live value at the baseline.
        let frozen = loss_value_frozen(&data, &params, &config, &capture).unwrap();
        assert!((frozen - report.total).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_reduce_the_total_to_reconstruction_only() {
        let dataset = tiny_dataset(16, 8);
        let config = TrainConfig { lambda1: 0.0, lambda2: 0.0, ..tiny_config() };
        let data = prepare_training_data(&dataset, &config).unwrap();
        let params = ModelParams::init(&dataset, &config).unwrap();
        let (report, _, _) = total_loss(&data, &params, &config, &[0, 1, 2], 0).unwrap();
        assert_eq!(report.total, report.cpr);
        assert_eq!(report.sca_ia, 0.0);
        assert_eq!(report.sca_da, 0.0);
        assert_eq!(report.treevq, 0.0);
    }

    #[test]
    fn no_treevq_zeroes_the_component_and_codebook_gradients() {
        let dataset = tiny_dataset(16, 9);
        let config = TrainConfig { ablation_mode: AblationMode::NoTreevq, ..tiny_config() };
        let data = prepare_training_data(&dataset, &config).unwrap();
        let params = ModelParams::init(&dataset, &config).unwrap();
        let (report, grads, capture) = total_loss(&data, &params, &config, &[0, 1, 2], 0).unwrap();
        assert_eq!(report.treevq, 0.0);
        assert!(capture.vq.is_none());
        for level in &grads.codebook {
            for code in level {
                assert!(code.iter().all(|g| *g == 0.0));
            }
        }
    }

    #[test]
    fn every_ablation_mode_trains_for_a_few_steps() {
        let dataset = tiny_dataset(14, 10);
        for mode in AblationMode::ALL {
            let config = TrainConfig { ablation_mode: mode, steps: 2, ..tiny_config() };
            let (params, history) = train(&dataset, &config)
                .unwrap_or_else(|e| panic!("mode {mode} failed: {e}"));
            assert_eq!(history.len(), 2);
            params.validate().unwrap();
            for report in &history {
                let weighted = report.cpr
                    + config.lambda1 * (report.sca_ia + report.sca_da)
                    + config.lambda2 * report.treevq;
                assert!((report.total - weighted).abs() < 1e-12, "mode {mode}");
                assert!(report.total.is_finite());
            }
        }
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let dataset = tiny_dataset(16, 11);
        let config = TrainConfig { steps: 4, ..tiny_config() };
        let (params_a, history_a) = train(&dataset, &config).unwrap();
        let (params_b, history_b) = train(&dataset, &config).unwrap();
        assert_eq!(params_a, params_b);
        let totals_a: Vec<f64> = history_a.iter().map(|r| r.total).collect();
        let totals_b: Vec<f64> = history_b.iter().map(|r| r.total).collect();
        assert_eq!(totals_a, totals_b);
        let other = TrainConfig { seed: 99, ..config };
        let (params_c, _) = train(&dataset, &other).unwrap();
        assert_ne!(params_a, params_c);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_bit_identical() {
        let dataset = tiny_dataset(12, 12);
        // Full-dataset batches and length-0 walks make every step evaluate
        // the identical deterministic objective, so the history is flat.
        let config = TrainConfig {
            learning_rate: 0.0,
            batch_size: 64,
            steps: 3,
            walk_len: 0,
            ..tiny_config()
        };
        let data = prepare_training_data(&dataset, &config).unwrap();
        let init = ModelParams::init(&dataset, &config).unwrap();
        let (params, history) = train_prepared(&data, &config).unwrap();
        assert_eq!(params, init);
        assert!(history.windows(2).all(|w| w[0].total == w[1].total));
    }

    #[test]
    fn frozen_codebook_under_forward_only_loss_never_moves() {
        // η = 0 isolates the forward summand, whose stop-gradient blocks the
        // codebook; with weight decay off, a training step must leave the
        // codebook bytes untouched while other blocks move.
        let dataset = tiny_dataset(14, 13);
        let config = TrainConfig {
            eta: 0.0,
            weight_decay: 0.0,
            steps: 2,
            learning_rate: 1e-3,
            ..tiny_config()
        };
        let init = ModelParams::init(&dataset, &config).unwrap();
        let (params, _) = train(&dataset, &config).unwrap();
        assert_eq!(params.codebook, init.codebook);
        assert_ne!(params.projectors, init.projectors);
    }

    #[test]
    fn non_finite_features_abort_training() {
        let mut dataset = tiny_dataset(12, 14);
        // Poison a continuous molecular feature: it reaches the anchor
        // directly, so the first batch containing it goes non-finite.
        for record in dataset.records.iter_mut() {
            if let Some(Some(v)) = record.features.get_mut("graph_2d") {
                v[0] = f64::NAN;
            }
        }
        let config = TrainConfig { steps: 3, ..tiny_config() };
        match train(&dataset, &config) {
            Err(Error::NonFiniteLoss { step: 0 }) => {}
            other => panic!("expected a divergence abort, got {other:?}"),
        }
    }

    #[test]
    fn gradcheck_passes_on_a_small_random_configuration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..2 {
            let profile_seed: u64 = rng.gen();
            let dataset = generate_synthetic::<f64>(&SyntheticConfig {
                n: 6,
                latent_dim: 3,
                seed: profile_seed,
                ..SyntheticConfig::default()
            })
            .unwrap();
            let config = TrainConfig {
                d: 3,
                depth: 2,
                k: 2,
                batch_size: 4,
                walk_len: 2,
                seed: profile_seed,
                ..TrainConfig::default()
            };
            let data = prepare_training_data(&dataset, &config).unwrap();
            let params = ModelParams::init(&dataset, &config).unwrap();
            let report = gradcheck(&data, &params, &config, &[0, 1, 2, 3], 1e-5).unwrap();
            assert!(
                report.worst < 1e-4,
                "trial {trial}: worst {:.3e} in {:?}",
                report.worst,
                report.blocks
            );
        }
    }

    #[test]
    fn zero_signal_construction_yields_vanishing_gradients() {
        // One continuous molecular modality, identity projector and decoder,
        // λ1 = λ2 = 0: reconstruction is exact, so every gradient is ~0.
        let dim = 3;
        let specs = vec![ModalitySpec {
            name: "only".into(),
            kind: ModalityKind::Molecular,
            dim,
            value_domain: ValueDomain::Continuous,
        }];
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let records: Vec<MoleculeRecord<f64>> = (0..6)
            .map(|i| MoleculeRecord {
                id: format!("m{i}"),
                features: [(
                    "only".to_string(),
                    Some((0..dim).map(|_| rng.gen_range(0.1..1.0)).collect()),
                )]
                .into_iter()
                .collect(),
                label: None,
            })
            .collect();
        let dataset = Dataset { specs, records, seed: 0 };
        let config = TrainConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            d: dim,
            depth: 2,
            k: 2,
            batch_size: 3,
            walk_len: 2,
            ..TrainConfig::default()
        };
        let data = prepare_training_data(&dataset, &config).unwrap();
        let mut params = ModelParams::init(&dataset, &config).unwrap();
        let identity: Vec<Vec<f64>> = (0..dim)
            .map(|r| (0..dim).map(|c| f64::from(u8::from(r == c))).collect())
            .collect();
        let projector = params.projectors.get_mut("only").unwrap();
        projector.weight = identity.clone();
        projector.bias = vec![0.0; dim];
        let decoder = params.decoders.get_mut("only").unwrap();
        decoder.weight = identity;
        decoder.bias = vec![0.0; dim];
        let (report, grads, _) = total_loss(&data, &params, &config, &[0, 1, 2], 0).unwrap();
        assert!(report.total.abs() < 1e-24);
        for block in grads.projectors.values().chain(grads.decoders.values()) {
            for row in &block.weight {
                assert!(row.iter().all(|g| g.abs() < 1e-10));
            }
            assert!(block.bias.iter().all(|g| g.abs() < 1e-10));
        }
    }

    #[test]
    fn training_descends_on_the_synthetic_default() {
        let dataset = tiny_dataset(32, 15);
        let config = TrainConfig {
            steps: 40,
            learning_rate: 1e-3,
            batch_size: 16,
            ..tiny_config()
        };
        let (_, history) = train(&dataset, &config).unwrap();
        let first = history.first().unwrap().total;
        let last = history.last().unwrap().total;
        assert!(last < first, "no descent: {first} → {last}");
    }

    #[test]
    fn walks_stay_inside_the_context_graph() {
        let dataset = tiny_dataset(18, 16);
        let config = tiny_config();
        let data = prepare_training_data(&dataset, &config).unwrap();
        let batch: Vec<usize> = (0..10).collect();
        let walks = sample_walks(&data, &config, &batch, 3).unwrap();
        assert_eq!(walks.len(), batch.len());
        for walk in &walks {
            assert_eq!(walk.cum_weights[0], 1.0);
            for (node, _) in walk.visited() {
                assert!(node < data.graph.len());
            }
        }
    }
}
