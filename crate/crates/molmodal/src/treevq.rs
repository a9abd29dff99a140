//! Tree-structured vector quantization with a symmetric stop-gradient loss.
//!
//! The codebook is a binary tree of depth `H`: level `h` (1-based) holds
//! `2^h` code vectors, and the children of code `j` at one level are codes
//! `2j` and `2j+1` at the next. Routing is greedy: the first level considers
//! every code it has, deeper levels only the two children of the previous
//! choice, minimizing the angular distance `δ = 1 − cos(p, e)` with ties
//! broken toward the lower index.
//!
//! Each routed level contributes the symmetric term
//! `(1 − cos(sg[q], p)) + η (1 − cos(q, sg[p]))`, where `sg[·]` stops
//! gradient flow: the first summand trains only the input vector and the
//! second only the codebook. Both summands share the same numeric value, so
//! the stop-gradient contract is observable only through gradients; the
//! `*_frozen` evaluators here recompute the loss with the stopped slots held
//! at captured values, which is what a finite-difference probe of either
//! summand must differentiate.
//!
//! A flat codebook (one level of `2^H` codes, used by an ablation) reuses the
//! same machinery: routing over a single level simply considers every code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Binary-tree codebook. `levels[l]` holds the codes of tree level `l+1`
/// (`2^(l+1)` of them), except in the flat layout where a single level holds
/// `2^depth` codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeCodebook<T> {
    /// Nominal tree depth H.
    pub depth: usize,
    /// Code vector dimension.
    pub dim: usize,
    /// Code vectors per level.
    pub levels: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> TreeCodebook<T> {
    /// Number of routed levels (equals `depth` for a tree, 1 for flat).
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// True for the single-level layout holding all `2^depth` codes.
    pub fn is_flat(&self) -> bool {
        self.levels.len() == 1 && self.depth > 1
    }

    /// Check the structural invariants: level sizes, dimensions, and that
    /// every code is finite with nonzero norm (cosine must be defined).
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidTreeDepth);
        }
        if self.dim < 2 {
            return Err(Error::InvalidLatentDim(self.dim));
        }
        let tree_shape = self.levels.len() == self.depth
            && self.levels.iter().enumerate().all(|(l, codes)| codes.len() == 1 << (l + 1));
        let flat_shape = self.levels.len() == 1 && self.levels[0].len() == 1 << self.depth;
        if !tree_shape && !flat_shape {
            return Err(Error::CheckpointInconsistent(format!(
                "codebook levels {:?} match neither a depth-{} tree nor a flat layout",
                self.levels.iter().map(Vec::len).collect::<Vec<_>>(),
                self.depth
            )));
        }
        for (l, codes) in self.levels.iter().enumerate() {
            for (j, code) in codes.iter().enumerate() {
                if code.len() != self.dim {
                    return Err(Error::LengthMismatch {
                        context: "codebook vector dimension",
                        expected: self.dim,
                        actual: code.len(),
                    });
                }
                let norm = linalg::norm(code);
                if !norm.is_finite() || norm == T::zero() {
                    return Err(Error::CheckpointInconsistent(format!(
                        "code {j} at level {} is zero or non-finite",
                        l + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

fn random_unit<T: Scalar, R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..dim).map(|_| T::sample_standard_normal(rng)).collect();
        let norm = linalg::norm(&v);
        if norm > T::of_f64(1e-9) {
            return v.iter().map(|&x| x / norm).collect();
        }
    }
}

/// Initialize a depth-`h` tree codebook with i.i.d. standard-normal vectors
/// normalized to unit length. Deterministic per seed.
pub fn init_codebook<T: Scalar>(h: usize, d: usize, seed: u64) -> Result<TreeCodebook<T>> {
    if h == 0 {
        return Err(Error::InvalidTreeDepth);
    }
    if d < 2 {
        return Err(Error::InvalidLatentDim(d));
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let levels = (0..h)
        .map(|l| (0..1usize << (l + 1)).map(|_| random_unit(d, &mut rng)).collect())
        .collect();
    Ok(TreeCodebook { depth: h, dim: d, levels })
}

/// Initialize a flat single-level codebook with `2^h` unit-normal codes; the
/// nominal depth is kept so checkpoints stay comparable with the tree layout.
pub fn init_flat_codebook<T: Scalar>(h: usize, d: usize, seed: u64) -> Result<TreeCodebook<T>> {
    if h == 0 {
        return Err(Error::InvalidTreeDepth);
    }
    if d < 2 {
        return Err(Error::InvalidLatentDim(d));
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let levels = vec![(0..1usize << h).map(|_| random_unit(d, &mut rng)).collect()];
    Ok(TreeCodebook { depth: h, dim: d, levels })
}

/// Initialize a tree codebook where each child is its parent plus `spread`
/// times a standard-normal perturbation, re-normalized. Deeper levels refine
/// their parents, so leaf regions shrink with depth.
pub fn init_codebook_refined<T: Scalar>(
    h: usize,
    d: usize,
    seed: u64,
    spread: f64,
) -> Result<TreeCodebook<T>> {
    if h == 0 {
        return Err(Error::InvalidTreeDepth);
    }
    if d < 2 {
        return Err(Error::InvalidLatentDim(d));
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let spread = T::of_f64(spread);
    let mut levels: Vec<Vec<Vec<T>>> = vec![(0..2).map(|_| random_unit(d, &mut rng)).collect()];
    for l in 1..h {
        let mut codes = Vec::with_capacity(1 << (l + 1));
        for j in 0..1usize << (l + 1) {
            let parent = levels[l - 1][j / 2].clone();
            let code = loop {
                let mut v = parent.clone();
                for x in v.iter_mut() {
                    *x = *x + spread * T::sample_standard_normal(&mut rng);
                }
                let norm = linalg::norm(&v);
                if norm > T::of_f64(1e-9) {
                    break v.iter().map(|&x| x / norm).collect::<Vec<T>>();
                }
            };
            codes.push(code);
        }
        levels.push(codes);
    }
    Ok(TreeCodebook { depth: h, dim: d, levels })
}

/// The index sequence a vector follows through the tree, with the angular
/// distance `1 − cos` at each chosen node.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizationPath<T> {
    pub indices: Vec<usize>,
    pub distances: Vec<T>,
}

impl<T: Scalar> QuantizationPath<T> {
    /// Check that this path is structurally valid for `codebook`: one index
    /// per level, in range, and each index a child of the previous one.
    pub fn validate_for(&self, codebook: &TreeCodebook<T>) -> Result<()> {
        if self.indices.len() != codebook.level_count() {
            return Err(Error::InvalidConfig(format!(
                "quantization path has {} levels, codebook has {}",
                self.indices.len(),
                codebook.level_count()
            )));
        }
        for (l, &idx) in self.indices.iter().enumerate() {
            if idx >= codebook.levels[l].len() {
                return Err(Error::InvalidConfig(format!(
                    "path index {idx} out of range at level {}",
                    l + 1
                )));
            }
            if l > 0 {
                let parent = self.indices[l - 1];
                if idx / 2 != parent {
                    return Err(Error::InvalidConfig(format!(
                        "path index {idx} at level {} is not a child of {parent}",
                        l + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Leaf index (last level).
    pub fn leaf(&self) -> usize {
        *self.indices.last().expect("paths are never empty")
    }
}

fn angular_distance<T: Scalar>(p: &[T], code: &[T], level: usize, index: usize) -> Result<T> {
    match linalg::cosine(p, code) {
        Some(c) => Ok(T::one() - c),
        None => Err(Error::CheckpointInconsistent(format!(
            "code {index} at level {} has zero norm",
            level + 1
        ))),
    }
}

/// Greedily route `p` through the codebook. The first level considers all of
/// its codes; each deeper level considers only the two children of the
/// previous choice. Ties break toward the lower index.
pub fn route<T: Scalar>(p: &[T], codebook: &TreeCodebook<T>) -> Result<QuantizationPath<T>> {
    if p.len() != codebook.dim {
        return Err(Error::LengthMismatch {
            context: "routing input dimension",
            expected: codebook.dim,
            actual: p.len(),
        });
    }
    if linalg::norm(p) == T::zero() {
        return Err(Error::ZeroNormRow { row: 0 });
    }
    let mut indices = Vec::with_capacity(codebook.level_count());
    let mut distances = Vec::with_capacity(codebook.level_count());
    for (l, codes) in codebook.levels.iter().enumerate() {
        let candidates: Vec<usize> = if l == 0 {
            (0..codes.len()).collect()
        } else {
            let parent = indices[l - 1];
            vec![2 * parent, 2 * parent + 1]
        };
        let mut best: Option<(usize, T)> = None;
        for &j in &candidates {
            let d = angular_distance(p, &codes[j], l, j)?;
            // Strict `<` keeps the lower index on exact ties.
            let replace = match best {
                None => true,
                Some((_, best_d)) => d < best_d,
            };
            if replace {
                best = Some((j, d));
            }
        }
        let (j, d) = best.expect("every level has at least one candidate");
        indices.push(j);
        distances.push(d);
    }
    Ok(QuantizationPath { indices, distances })
}

// ---------------------------------------------------------------------------
// Symmetric stop-gradient loss
// ---------------------------------------------------------------------------

/// First summand `1 − cos(sg[q], p)`: value and gradient with respect to the
/// live input `p`. The stopped code contributes no gradient by construction.
pub fn forward_term<T: Scalar>(p: &[T], stopped_code: &[T]) -> Result<(T, Vec<T>)> {
    let (c, grad_p, _) = linalg::cosine_with_grads(p, stopped_code)
        .ok_or(Error::ZeroNormRow { row: 0 })?;
    Ok((T::one() - c, grad_p.iter().map(|&g| -g).collect()))
}

/// Second summand `1 − cos(q, sg[p])`: value and gradient with respect to the
/// live code `q`. The stopped input contributes no gradient by construction.
pub fn reverse_term<T: Scalar>(code: &[T], stopped_p: &[T]) -> Result<(T, Vec<T>)> {
    let (c, grad_q, _) = linalg::cosine_with_grads(code, stopped_p)
        .ok_or(Error::ZeroNormRow { row: 0 })?;
    Ok((T::one() - c, grad_q.iter().map(|&g| -g).collect()))
}

/// Value and gradients of [`symmetric_vq_loss`]. Codebook gradients are
/// sparse: one `(level, index, gradient)` triple per routed node.
#[derive(Clone, Debug)]
pub struct SymmetricVq<T> {
    pub loss: T,
    pub grad_p: Vec<T>,
    pub grad_codebook_nodes: Vec<(usize, usize, Vec<T>)>,
}

/// Per-sample symmetric loss, averaged over the routed levels:
/// `(1/H) Σ_h (1 − cos(sg[q_h], p)) + η (1 − cos(q_h, sg[p]))`.
///
/// Stop-gradient contract: the first summand contributes gradient only to
/// `p`, the second only to the routed codebook nodes; with `η = 0` the
/// codebook receives exactly zero gradient.
pub fn symmetric_vq_loss<T: Scalar>(
    p: &[T],
    path: &QuantizationPath<T>,
    codebook: &TreeCodebook<T>,
    eta: T,
) -> Result<SymmetricVq<T>> {
    path.validate_for(codebook)?;
    if eta < T::zero() {
        return Err(Error::InvalidConfig(format!(
            "reverse commitment weight must be nonnegative, got {eta}"
        )));
    }
    let share = T::one() / T::of_usize(codebook.level_count());
    let mut loss = T::zero();
    let mut grad_p = linalg::zeros(p.len());
    let mut grad_codebook_nodes = Vec::with_capacity(path.indices.len());
    for (l, &j) in path.indices.iter().enumerate() {
        let code = &codebook.levels[l][j];
        let (forward, g_p) = forward_term(p, code)?;
        let (reverse, g_q) = reverse_term(code, p)?;
        loss = loss + share * (forward + eta * reverse);
        linalg::axpy(share, &g_p, &mut grad_p);
        grad_codebook_nodes.push((l, j, g_q.iter().map(|&g| share * eta * g).collect()));
    }
    Ok(SymmetricVq { loss, grad_p, grad_codebook_nodes })
}

// ---------------------------------------------------------------------------
// Batched objective
// ---------------------------------------------------------------------------

/// Value, gradients, and routing paths of [`treevq_loss`].
#[derive(Clone, Debug)]
pub struct TreeVqLoss<T> {
    pub loss: T,
    /// Per modality, per row: gradient with respect to the projected input.
    pub grad_inputs: Vec<Vec<Vec<T>>>,
    /// Dense codebook gradient, same shape as `codebook.levels`.
    pub grad_codebook: Vec<Vec<Vec<T>>>,
    /// Routing path of every row, for utilization analysis.
    pub paths: Vec<Vec<QuantizationPath<T>>>,
}

/// Quantization objective over one batch: the per-sample symmetric loss
/// averaged over samples within each modality, then over modalities.
pub fn treevq_loss<T: Scalar>(
    projections: &[Vec<Vec<T>>],
    codebook: &TreeCodebook<T>,
    eta: T,
) -> Result<TreeVqLoss<T>> {
    if projections.is_empty() {
        return Err(Error::NoSuchModalities("quantization needs at least one modality"));
    }
    let modality_share = T::one() / T::of_usize(projections.len());
    let mut out = TreeVqLoss {
        loss: T::zero(),
        grad_inputs: Vec::with_capacity(projections.len()),
        grad_codebook: codebook
            .levels
            .iter()
            .map(|codes| linalg::zeros_matrix(codes.len(), codebook.dim))
            .collect(),
        paths: Vec::with_capacity(projections.len()),
    };
    for rows in projections {
        if rows.is_empty() {
            return Err(Error::BatchTooSmall { minimum: 1, actual: 0 });
        }
        let row_share = modality_share / T::of_usize(rows.len());
        let mut grads = Vec::with_capacity(rows.len());
        let mut paths = Vec::with_capacity(rows.len());
        for (i, p) in rows.iter().enumerate() {
            if linalg::norm(p) == T::zero() {
                return Err(Error::ZeroNormRow { row: i });
            }
            let path = route(p, codebook)?;
            let per = symmetric_vq_loss(p, &path, codebook, eta)?;
            out.loss = out.loss + row_share * per.loss;
            grads.push(per.grad_p.iter().map(|&g| row_share * g).collect());
            for (l, j, g) in &per.grad_codebook_nodes {
                linalg::axpy(row_share, g, &mut out.grad_codebook[*l][*j]);
            }
            paths.push(path);
        }
        out.grad_inputs.push(grads);
        out.paths.push(paths);
    }
    Ok(out)
}

/// Snapshot of the stop-gradient slots of one [`treevq_loss`] call: the
/// routing decisions plus stopped copies of the inputs and the codebook.
#[derive(Clone, Debug)]
pub struct TreeVqCapture<T> {
    pub paths: Vec<Vec<QuantizationPath<T>>>,
    pub inputs: Vec<Vec<Vec<T>>>,
    pub codebook: TreeCodebook<T>,
}

impl<T: Scalar> TreeVqCapture<T> {
    pub fn new(
        projections: &[Vec<Vec<T>>],
        codebook: &TreeCodebook<T>,
        paths: &[Vec<QuantizationPath<T>>],
    ) -> Self {
        TreeVqCapture {
            paths: paths.to_vec(),
            inputs: projections.to_vec(),
            codebook: codebook.clone(),
        }
    }
}

/// Forward-summand value with the stopped slots frozen at the capture: the
/// codes come from the captured codebook, so this value is exactly constant
/// in the live codebook, which is what the stop-gradient contract asserts.
pub fn treevq_forward_frozen<T: Scalar>(
    live_inputs: &[Vec<Vec<T>>],
    capture: &TreeVqCapture<T>,
) -> Result<T> {
    let modality_share = T::one() / T::of_usize(capture.paths.len());
    let level_share = T::one() / T::of_usize(capture.codebook.level_count());
    let mut total = T::zero();
    for (rows, paths) in live_inputs.iter().zip(&capture.paths) {
        let row_share = modality_share / T::of_usize(rows.len());
        for (p, path) in rows.iter().zip(paths) {
            for (l, &j) in path.indices.iter().enumerate() {
                let (value, _) = forward_term(p, &capture.codebook.levels[l][j])?;
                total = total + row_share * level_share * value;
            }
        }
    }
    Ok(total)
}

/// Reverse-summand value with the stopped slots frozen at the capture: the
/// inputs come from the captured batch, so this value is exactly constant in
/// the live inputs.
pub fn treevq_reverse_frozen<T: Scalar>(
    live_codebook: &TreeCodebook<T>,
    capture: &TreeVqCapture<T>,
    eta: T,
) -> Result<T> {
    let modality_share = T::one() / T::of_usize(capture.paths.len());
    let level_share = T::one() / T::of_usize(live_codebook.level_count());
    let mut total = T::zero();
    for (rows, paths) in capture.inputs.iter().zip(&capture.paths) {
        let row_share = modality_share / T::of_usize(rows.len());
        for (p, path) in rows.iter().zip(paths) {
            for (l, &j) in path.indices.iter().enumerate() {
                let (value, _) = reverse_term(&live_codebook.levels[l][j], p)?;
                total = total + row_share * level_share * eta * value;
            }
        }
    }
    Ok(total)
}

/// Full quantization loss with routing and both stop-gradient slots frozen at
/// the capture. Differentiating this function (by finite differences) with
/// respect to the live inputs or the live codebook reproduces the analytic
/// gradients of [`treevq_loss`].
pub fn treevq_loss_frozen<T: Scalar>(
    live_inputs: &[Vec<Vec<T>>],
    live_codebook: &TreeCodebook<T>,
    capture: &TreeVqCapture<T>,
    eta: T,
) -> Result<T> {
    Ok(treevq_forward_frozen(live_inputs, capture)?
        + treevq_reverse_frozen(live_codebook, capture, eta)?)
}

// ---------------------------------------------------------------------------
// Leaf-similarity bound
// ---------------------------------------------------------------------------

/// Result of the same-leaf similarity check.
#[derive(Clone, Copy, Debug)]
pub struct LeafSimilarity<T> {
    /// Whether the two inputs follow the identical path.
    pub shared_leaf: bool,
    /// `min(cos(p1, leaf), cos(p2, leaf))`.
    pub alpha: T,
    /// True when the two leaf cosines differ by more than 1e−9, i.e. the
    /// theorem's equal-α premise does not hold and `alpha` is the min.
    pub alpha_mismatch: bool,
    /// `2α² − 1`.
    pub bound: T,
    /// `cos(p1, p2)`.
    pub cosine: T,
    /// `cosine ≥ bound − 1e−9`.
    pub satisfied: bool,
}

/// Evaluate the same-leaf similarity bound `cos(p1, p2) ≥ 2α² − 1` for two
/// routed vectors. When the paths differ, each vector's own leaf is used for
/// its cosine and the bound carries no guarantee.
pub fn leaf_similarity_bound<T: Scalar>(
    p1: &[T],
    p2: &[T],
    codebook: &TreeCodebook<T>,
) -> Result<LeafSimilarity<T>> {
    let path1 = route(p1, codebook)?;
    let path2 = route(p2, codebook)?;
    let shared_leaf = path1.indices == path2.indices;
    let last = codebook.level_count() - 1;
    let leaf1 = &codebook.levels[last][path1.leaf()];
    let leaf2 = &codebook.levels[last][path2.leaf()];
    let a1 = linalg::cosine(p1, leaf1).expect("routed vectors are nonzero");
    let a2 = linalg::cosine(p2, leaf2).expect("routed vectors are nonzero");
    let alpha = a1.min(a2);
    let alpha_mismatch = (a1 - a2).abs() > T::of_f64(1e-9);
    let bound = T::of_f64(2.0) * alpha * alpha - T::one();
    let cosine = linalg::cosine(p1, p2).expect("routed vectors are nonzero");
    let satisfied = cosine >= bound - T::of_f64(1e-9);
    Ok(LeafSimilarity { shared_leaf, alpha, alpha_mismatch, bound, cosine, satisfied })
}

/// Per-level fraction of distinct codes selected by at least one path.
pub fn utilization<T: Scalar>(
    paths: &[QuantizationPath<T>],
    codebook: &TreeCodebook<T>,
) -> Vec<f64> {
    (0..codebook.level_count())
        .map(|l| {
            let distinct: std::collections::BTreeSet<usize> =
                paths.iter().filter_map(|p| p.indices.get(l).copied()).collect();
            distinct.len() as f64 / codebook.levels[l].len() as f64
        })
        .collect()
}
