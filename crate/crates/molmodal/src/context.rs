//! Context graph over molecules and biological entities, weighted random
//! walks, affine decoders, and the walk-weighted reconstruction loss.
//!
//! The graph is undirected; every edge carries a relation strength
//! `β ∈ [0, 1]`. A walk of length `L` from a molecule samples neighbors with
//! probability proportional to `β` and accumulates the product of traversed
//! strengths, so each visited node enters the reconstruction loss weighted by
//! how strongly it is connected to the start molecule. Dead ends truncate the
//! walk: remaining node slots are marked absent and contribute nothing.
//!
//! The reconstruction discrepancy adapts to the target's value domain —
//! mean binary cross-entropy on logits for binary features, mean squared
//! error for continuous ones — and the loss is minimized as a positive
//! quantity.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModalityKind, ValueDomain};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// What a context-graph node stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Molecule,
    Cell,
    Gene,
}

impl NodeKind {
    /// Node kind for a bucket of the given context modality.
    pub fn for_modality(kind: ModalityKind) -> NodeKind {
        match kind {
            ModalityKind::Molecular => NodeKind::Molecule,
            ModalityKind::Cellular => NodeKind::Cell,
            ModalityKind::Gene | ModalityKind::GeneExpression => NodeKind::Gene,
        }
    }
}

/// Undirected weighted graph over molecule / cell / gene nodes.
#[derive(Clone, Debug, Default)]
pub struct ContextGraph<T> {
    ids: Vec<String>,
    kinds: Vec<NodeKind>,
    index: BTreeMap<String, usize>,
    adjacency: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> ContextGraph<T> {
    pub fn new() -> Self {
        ContextGraph {
            ids: Vec::new(),
            kinds: Vec::new(),
            index: BTreeMap::new(),
            adjacency: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, T)] {
        &self.adjacency[node]
    }

    /// Insert a node; ids must be unique.
    pub fn add_node(&mut self, id: impl Into<String>, kind: NodeKind) -> Result<usize> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::FileFormat(format!("duplicate node id '{id}'")));
        }
        let idx = self.ids.len();
        self.index.insert(id.clone(), idx);
        self.ids.push(id);
        self.kinds.push(kind);
        self.adjacency.push(Vec::new());
        Ok(idx)
    }

    /// Insert an undirected edge with strength `beta ∈ [0, 1]`. Self-loops
    /// and duplicate pairs are rejected.
    pub fn add_edge(&mut self, u: usize, v: usize, beta: T) -> Result<()> {
        if u >= self.len() || v >= self.len() {
            return Err(Error::FileFormat(format!(
                "edge ({u}, {v}) references a node outside the graph"
            )));
        }
        if u == v {
            return Err(Error::FileFormat(format!("self-loop on node {u}")));
        }
        let b = beta.to_f64_lossy();
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::FileFormat(format!(
                "edge strength {b} outside [0, 1] on edge ({u}, {v})"
            )));
        }
        if self.adjacency[u].iter().any(|&(w, _)| w == v) {
            return Err(Error::FileFormat(format!("duplicate edge ({u}, {v})")));
        }
        self.adjacency[u].push((v, beta));
        self.adjacency[v].push((u, beta));
        Ok(())
    }

    /// All edges once each, as `(u, v, β)` with `u < v`, in index order.
    pub fn edges(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            for &(v, beta) in &self.adjacency[u] {
                if u < v {
                    out.push((u, v, beta));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Synthetic construction
// ---------------------------------------------------------------------------

/// Stand-in for curated biological relations: one node per molecule, plus one
/// bucket node per (context modality, sign pattern of a seeded 3-dimensional
/// random projection of the observed features). Each molecule links to the
/// buckets of its observed context modalities with `β` equal to the cosine
/// similarity between its features and the bucket centroid, clipped to
/// `[0, 1]`; non-positive similarities produce no edge.
pub fn build_synthetic_context_graph<T: Scalar>(
    dataset: &Dataset<T>,
    seed: u64,
) -> Result<ContextGraph<T>> {
    const PROJECTION_DIMS: usize = 3;
    let mut graph = ContextGraph::new();
    for record in &dataset.records {
        graph.add_node(record.id.clone(), NodeKind::Molecule)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for spec in dataset.context_specs() {
        // Seeded projection; drawn for every context modality in spec order
        // so the stream stays aligned regardless of how many members exist.
        let projection: Vec<Vec<T>> = (0..PROJECTION_DIMS)
            .map(|_| (0..spec.dim).map(|_| T::sample_standard_normal(&mut rng)).collect())
            .collect();
        // Bucket = sign pattern of the projected features, as a bitmask.
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, record) in dataset.records.iter().enumerate() {
            let Some(Some(features)) = record.features.get(&spec.name) else {
                continue;
            };
            let mut pattern = 0usize;
            for (bit, row) in projection.iter().enumerate() {
                if linalg::dot(row, features) > T::zero() {
                    pattern |= 1 << bit;
                }
            }
            buckets.entry(pattern).or_default().push(i);
        }
        for (pattern, members) in buckets {
            let mut centroid = linalg::zeros::<T>(spec.dim);
            for &i in &members {
                let features = dataset.records[i].features[&spec.name]
                    .as_ref()
                    .expect("members are observed");
                linalg::axpy(T::one() / T::of_usize(members.len()), features, &mut centroid);
            }
            let node = graph.add_node(
                format!("{}:b{pattern}", spec.name),
                NodeKind::for_modality(spec.kind),
            )?;
            for &i in &members {
                let features = dataset.records[i].features[&spec.name]
                    .as_ref()
                    .expect("members are observed");
                let Some(cos) = linalg::cosine(features, &centroid) else { continue };
                let beta = cos.min(T::one()).max(T::zero());
                if beta > T::zero() {
                    graph.add_edge(i, node, beta)?;
                }
            }
        }
    }
    Ok(graph)
}

// ---------------------------------------------------------------------------
// Serialization (JSON Lines)
// ---------------------------------------------------------------------------

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GraphHeader {
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct NodeLine {
    node: String,
    kind: NodeKind,
}

#[derive(Serialize, Deserialize)]
struct EdgeLine {
    edge: [String; 2],
    beta: f64,
}

impl<T: Scalar> ContextGraph<T> {
    /// Serialize as JSON Lines: a version header, one line per node, then one
    /// line per edge (endpoints by id).
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&GraphHeader { version: GRAPH_FORMAT_VERSION })?);
        out.push('\n');
        for (id, &kind) in self.ids.iter().zip(&self.kinds) {
            out.push_str(&serde_json::to_string(&NodeLine { node: id.clone(), kind })?);
            out.push('\n');
        }
        for (u, v, beta) in self.edges() {
            let line = EdgeLine {
                edge: [self.ids[u].clone(), self.ids[v].clone()],
                beta: beta.to_f64_lossy(),
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_jsonl()?.as_bytes())?;
        Ok(())
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::FileFormat("empty graph file".into()))?;
        let header: GraphHeader = serde_json::from_str(header).map_err(|e| {
            Error::MalformedLine { line: 1, message: format!("bad header: {e}") }
        })?;
        if header.version != GRAPH_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(header.version));
        }
        let mut graph = ContextGraph::new();
        for (zero_based, line) in lines {
            let line_no = zero_based + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(node) = serde_json::from_str::<NodeLine>(line) {
                graph.add_node(node.node, node.kind)?;
            } else if let Ok(edge) = serde_json::from_str::<EdgeLine>(line) {
                let u = graph
                    .node_index(&edge.edge[0])
                    .ok_or_else(|| Error::UnknownNode(edge.edge[0].clone()))?;
                let v = graph
                    .node_index(&edge.edge[1])
                    .ok_or_else(|| Error::UnknownNode(edge.edge[1].clone()))?;
                graph.add_edge(u, v, T::of_f64(edge.beta))?;
            } else {
                return Err(Error::MalformedLine {
                    line: line_no,
                    message: "expected a node or edge object".into(),
                });
            }
        }
        Ok(graph)
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

// ---------------------------------------------------------------------------
// Random walks
// ---------------------------------------------------------------------------

/// One sampled walk: `L + 1` node slots (absent after a dead end) and the
/// cumulative products of traversed edge strengths, with `cum_weights[0] = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkPath<T> {
    pub nodes: Vec<Option<usize>>,
    pub cum_weights: Vec<T>,
}

impl<T: Scalar> WalkPath<T> {
    /// The visited prefix: `(node, cumulative weight)` for present slots.
    pub fn visited(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.nodes
            .iter()
            .zip(&self.cum_weights)
            .filter_map(|(node, &w)| node.map(|n| (n, w)))
    }
}

/// Sample a length-`l` walk from the node with id `start`. Neighbor choice is
/// proportional to edge strength; a dead end truncates the walk, leaving the
/// remaining slots absent with the last cumulative weight repeated.
/// Deterministic per seed.
pub fn random_walk<T: Scalar>(
    graph: &ContextGraph<T>,
    start: &str,
    l: usize,
    seed: u64,
) -> Result<WalkPath<T>> {
    let start = graph
        .node_index(start)
        .ok_or_else(|| Error::UnknownNode(start.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(l + 1);
    let mut cum_weights = Vec::with_capacity(l + 1);
    nodes.push(Some(start));
    cum_weights.push(T::one());
    let mut current = start;
    let mut weight = T::one();
    for _ in 0..l {
        let neighbors = graph.neighbors(current);
        let total: f64 = neighbors.iter().map(|&(_, b)| b.to_f64_lossy()).sum();
        if neighbors.is_empty() || total <= 0.0 {
            // Dead end: keep the slots so downstream indexing stays uniform.
            nodes.push(None);
            cum_weights.push(weight);
            continue;
        }
        let draw: f64 = rng.gen_range(0.0..total);
        let mut acc = 0.0;
        let mut chosen = neighbors.len() - 1;
        for (j, &(_, b)) in neighbors.iter().enumerate() {
            acc += b.to_f64_lossy();
            if draw < acc {
                chosen = j;
                break;
            }
        }
        let (next, beta) = neighbors[chosen];
        weight = weight * beta;
        nodes.push(Some(next));
        cum_weights.push(weight);
        current = next;
    }
    Ok(WalkPath { nodes, cum_weights })
}

// ---------------------------------------------------------------------------
// Decoders
// ---------------------------------------------------------------------------

/// Affine map from the shared latent space back to one modality's feature
/// space. For binary modalities the outputs are logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoder<T> {
    /// Modality whose features this decoder reconstructs.
    pub target_modality: String,
    /// `dim_out × d` weight matrix.
    pub weight: Vec<Vec<T>>,
    /// `dim_out` bias vector.
    pub bias: Vec<T>,
}

impl<T: Scalar> Decoder<T> {
    pub fn input_dim(&self) -> usize {
        self.weight.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn decode(&self, p: &[T]) -> Result<Vec<T>> {
        if p.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                context: "decoder input",
                expected: self.input_dim(),
                actual: p.len(),
            });
        }
        Ok(linalg::affine(&self.weight, &self.bias, p))
    }
}

// ---------------------------------------------------------------------------
// Reconstruction loss
// ---------------------------------------------------------------------------

/// Numerically stable binary cross-entropy on a logit, with its gradient.
/// `value = max(z, 0) − z·x + ln(1 + e^{−|z|})`, `d value / d z = σ(z) − x`.
pub fn bce_with_logit<T: Scalar>(logit: T, target: T) -> (T, T) {
    let value = logit.max(T::zero()) - logit * target + (-logit.abs()).exp().ln_1p();
    let sigmoid = T::one() / (T::one() + (-logit).exp());
    (value, sigmoid - target)
}

/// Mean discrepancy between a decoded vector and its target under the given
/// value domain, with the gradient w.r.t. the decoded vector.
pub fn discrepancy<T: Scalar>(
    decoded: &[T],
    target: &[T],
    domain: ValueDomain,
) -> (T, Vec<T>) {
    let inv_dim = T::one() / T::of_usize(decoded.len().max(1));
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(decoded.len());
    for (&z, &x) in decoded.iter().zip(target) {
        match domain {
            ValueDomain::Binary => {
                let (v, g) = bce_with_logit(z, x);
                value = value + v * inv_dim;
                grad.push(g * inv_dim);
            }
            ValueDomain::Continuous => {
                let diff = z - x;
                value = value + diff * diff * inv_dim;
                grad.push(T::of_f64(2.0) * diff * inv_dim);
            }
        }
    }
    (value, grad)
}

/// Value and gradients of [`cpr_loss`].
#[derive(Clone, Debug)]
pub struct CprLoss<T> {
    pub loss: T,
    /// Gradient w.r.t. each decoded vector, keyed by node index.
    pub grad_decoded: BTreeMap<usize, Vec<T>>,
}

/// Walk-weighted reconstruction loss over one batch of walks:
/// `(1/|walks|) Σ_i Σ_l cum_weights[i][l] · D(decoded[u], target[u])`
/// for every visited node `u` that carries a target. Visited nodes without a
/// target and absent (truncated) slots contribute zero; a visited node that
/// has a target but no decoded vector is an error.
pub fn cpr_loss<T: Scalar>(
    walks: &[WalkPath<T>],
    decoded: &BTreeMap<usize, Vec<T>>,
    targets: &BTreeMap<usize, (Vec<T>, ValueDomain)>,
) -> Result<CprLoss<T>> {
    if walks.is_empty() {
        return Err(Error::BatchTooSmall { minimum: 1, actual: 0 });
    }
    let inv_n = T::one() / T::of_usize(walks.len());
    let mut loss = T::zero();
    let mut grad_decoded: BTreeMap<usize, Vec<T>> = BTreeMap::new();
    for walk in walks {
        for (node, beta) in walk.visited() {
            let Some((target, domain)) = targets.get(&node) else { continue };
            let out = decoded.get(&node).ok_or(Error::MissingDecoded { node })?;
            if out.len() != target.len() {
                return Err(Error::DecodedTargetMismatch {
                    node,
                    expected: target.len(),
                    actual: out.len(),
                });
            }
            let (value, grad) = discrepancy(out, target, *domain);
            loss = loss + inv_n * beta * value;
            let acc = grad_decoded
                .entry(node)
                .or_insert_with(|| linalg::zeros(out.len()));
            linalg::axpy(inv_n * beta, &grad, acc);
        }
    }
    Ok(CprLoss { loss, grad_decoded })
}
