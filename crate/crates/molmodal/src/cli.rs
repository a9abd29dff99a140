//! Command-line surface wiring the pipeline into reproducible experiments.
//!
//! Every command prints one summary line of key metrics on success (the
//! tree inspector and the ablation table additionally print their report
//! bodies) and maps failures to coarse exit codes:
//!
//! * `0` — success
//! * `1` — usage error (bad flags or configuration values)
//! * `2` — data error (malformed or inconsistent input files)
//! * `3` — numeric failure (divergence, gradient check above threshold)
//!
//! Training hyperparameters follow a three-level precedence: an explicit
//! flag beats a `--config` JSON file, which beats the built-in default.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::context::ContextGraph;
use crate::data::{self, Dataset, SyntheticConfig, SyntheticModality, ValueDomain};
use crate::error::{Error, ErrorClass, Result};
use crate::eval::{self, ProbeTask};
use crate::model::{AblationMode, Checkpoint, ModelParams, TrainConfig};
use crate::propagation::{build_knn_graph, propagate, PropagationConfig};
use crate::trainer;
use crate::treevq::{route, utilization, QuantizationPath};
use crate::Real;

/// Map an error class to the process exit code contract.
pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numeric => 3,
    }
}

/// Parse `args` and run the selected command, returning the exit code. The
/// binary is a thin wrapper over this so tests can drive the full surface
/// in-process.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests arrive as "errors" but are successes.
            let code = i32::from(err.use_stderr());
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(err.class())
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "molmodal",
    version,
    about = "Desk-scale multi-modal molecular pretraining: graph imputation, \
             contrastive alignment, tree-structured quantization, and \
             walk-weighted reconstruction with analytic gradients."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic multi-modal dataset (JSON Lines).
    GenData(GenDataArgs),
    /// Build the bucket-based context graph for a dataset.
    BuildGraph(BuildGraphArgs),
    /// Impute one modality's missing rows by graph propagation.
    Impute(ImputeArgs),
    /// Jointly pretrain projectors, decoders, and the tree codebook.
    Pretrain(PretrainArgs),
    /// Verify analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Write frozen molecule embeddings for a checkpoint.
    Embed(EmbedArgs),
    /// Train a linear probe on frozen embeddings and report its metric.
    Probe(ProbeArgs),
    /// Report codebook utilization and leaf occupancy for a checkpoint.
    InspectTree(InspectTreeArgs),
    /// Train one run per (ablation mode, seed) and tabulate the downstream
    /// probe metric (negated held-out MAE; higher is better).
    Ablate(AblateArgs),
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenData(args) => cmd_gen_data(&args),
        Command::BuildGraph(args) => cmd_build_graph(&args),
        Command::Impute(args) => cmd_impute(&args),
        Command::Pretrain(args) => cmd_pretrain(&args),
        Command::Gradcheck(args) => cmd_gradcheck(&args),
        Command::Embed(args) => cmd_embed(&args),
        Command::Probe(args) => cmd_probe(&args),
        Command::InspectTree(args) => cmd_inspect_tree(&args),
        Command::Ablate(args) => cmd_ablate(&args),
    }
}

// ---------------------------------------------------------------------------
// Shared hyperparameter flags
// ---------------------------------------------------------------------------

/// Training hyperparameters as optional overrides. Defaults live in
/// `TrainConfig::default`; a `--config` file sits between the two.
#[derive(Args, Clone, Debug, Default)]
struct TrainFlags {
    /// JSON file with training-config fields (partial files allowed)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Alignment weight lambda1 [default: 10]
    #[arg(long)]
    lambda1: Option<f64>,
    /// Quantization weight lambda2 [default: 0.1]
    #[arg(long)]
    lambda2: Option<f64>,
    /// Reverse commitment weight eta [default: 1]
    #[arg(long)]
    eta: Option<f64>,
    /// Contrastive temperature tau [default: 0.1]
    #[arg(long)]
    tau: Option<f64>,
    /// Neighbors per node in the imputation graph [default: 10]
    #[arg(long)]
    k: Option<usize>,
    /// Propagation iterations before training [default: 5]
    #[arg(long)]
    iterations: Option<usize>,
    /// Context-walk length [default: 4]
    #[arg(long)]
    walk_len: Option<usize>,
    /// Codebook tree depth [default: 6]
    #[arg(long)]
    depth: Option<usize>,
    /// Shared latent dimension [default: 16]
    #[arg(long)]
    d: Option<usize>,
    /// Adam learning rate [default: 1e-4]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Coupled L2 weight decay [default: 1e-8]
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Optimizer steps [default: 200]
    #[arg(long)]
    steps: Option<usize>,
    /// Mini-batch size [default: 64]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Run seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Ablation mode [default: full]
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
}

impl TrainFlags {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut config = match &self.config {
            Some(path) => serde_json::from_str::<TrainConfig>(&fs::read_to_string(path)?)?,
            None => TrainConfig::default(),
        };
        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(value) = self.$field { config.$field = value; })*
            };
        }
        overlay!(
            lambda1,
            lambda2,
            eta,
            tau,
            k,
            iterations,
            walk_len,
            depth,
            d,
            learning_rate,
            weight_decay,
            steps,
            batch_size,
            seed
        );
        if let Some(mode) = &self.mode {
            config.ablation_mode = mode.parse()?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn load_dataset(path: &Path) -> Result<Dataset<Real>> {
    data::load_jsonl(path)
}

fn prepare(
    dataset: &Dataset<Real>,
    graph: Option<&PathBuf>,
    config: &TrainConfig,
) -> Result<trainer::TrainingData<Real>> {
    match graph {
        Some(path) => {
            let graph = ContextGraph::load_jsonl(path)?;
            trainer::prepare_training_data_with_graph(dataset, graph, config)
        }
        None => trainer::prepare_training_data(dataset, config),
    }
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Number of records [default: 256]
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Latent factor dimension of the generator [default: 8]
    #[arg(long, default_value_t = 8)]
    latent_dim: usize,
    /// Observation noise scale [default: 0.1]
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Generator seed [default: 0]
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file with a custom modality profile (array of specs with
    /// missing rates); omitted = built-in eight-modality profile
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Output dataset path (JSON Lines)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let profile = match &args.profile {
        Some(path) => serde_json::from_str::<Vec<SyntheticModality>>(&fs::read_to_string(path)?)?,
        None => data::default_profile(),
    };
    let config = SyntheticConfig {
        n: args.n,
        latent_dim: args.latent_dim,
        noise_scale: args.noise,
        seed: args.seed,
        profile,
    };
    let dataset = data::generate_synthetic::<Real>(&config)?;
    data::save_jsonl(&dataset, &args.out)?;
    println!(
        "wrote {}: {} records, {} modalities, seed {}",
        args.out.display(),
        dataset.len(),
        dataset.specs.len(),
        args.seed
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// build-graph
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct BuildGraphArgs {
    /// Input dataset (JSON Lines)
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Bucketing seed [default: 0]
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output graph path (JSON Lines)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn cmd_build_graph(args: &BuildGraphArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let graph = crate::context::build_synthetic_context_graph(&dataset, args.seed)?;
    graph.save_jsonl(&args.out)?;
    let molecules = (0..graph.len())
        .filter(|&u| graph.kind(u) == crate::context::NodeKind::Molecule)
        .count();
    println!(
        "wrote {}: {} nodes ({} molecules), {} edges",
        args.out.display(),
        graph.len(),
        molecules,
        graph.edges().len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// impute
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct ImputeArgs {
    /// Input dataset (JSON Lines)
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Modality whose missing rows to impute
    #[arg(long, value_name = "NAME")]
    modality: String,
    /// Neighbors per node in the similarity graph [default: 10]
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Propagation iterations [default: 5]
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Output dataset path; a residual-history sidecar is written next to it
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn cmd_impute(args: &ImputeArgs) -> Result<()> {
    let mut dataset = load_dataset(&args.data)?;
    let position = dataset
        .specs
        .iter()
        .position(|s| s.name == args.modality)
        .ok_or_else(|| Error::InvalidConfig(format!("no modality named '{}'", args.modality)))?;
    let densified = data::apply_placeholder(&dataset)?;
    let primary = dataset.primary_molecular()?.name.clone();
    let anchor_matrix = &densified
        .iter()
        .find(|m| m.name == primary)
        .expect("primary modality is densified")
        .matrix;
    let knn = build_knn_graph(anchor_matrix, args.k)?;
    let target = &densified[position];
    let propagation = PropagationConfig { iterations: args.iters, convergence_tol: 0.0 };
    let (completed, residuals) =
        propagate(&target.matrix, &target.observed, &knn, &propagation)?;
    let filled = target.observed.iter().filter(|o| !**o).count();
    let name = dataset.specs[position].name.clone();
    for (record, row) in dataset.records.iter_mut().zip(&completed) {
        let entry = record.features.get_mut(&name).expect("validated modality map");
        if entry.is_none() {
            *entry = Some(row.clone());
        }
    }
    // Propagated values are weighted averages, so a binary modality comes
    // back fractional; relabel its domain so the written file validates.
    if dataset.specs[position].value_domain == ValueDomain::Binary && filled > 0 {
        dataset.specs[position].value_domain = ValueDomain::Continuous;
    }
    data::save_jsonl(&dataset, &args.out)?;
    let sidecar = residual_sidecar(&args.out);
    fs::write(&sidecar, serde_json::to_string(&residuals)?)?;
    println!(
        "imputed '{}' (k={}, T={}): {}/{} rows filled, final residual {:.3e}; wrote {} (+ {})",
        name,
        args.k,
        args.iters,
        filled,
        dataset.len(),
        residuals.last().copied().unwrap_or(0.0),
        args.out.display(),
        sidecar.display()
    );
    Ok(())
}

fn residual_sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".residuals.json");
    PathBuf::from(name)
}

// ---------------------------------------------------------------------------
// pretrain
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct PretrainArgs {
    /// Input dataset (JSON Lines)
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Context graph (JSON Lines); omitted = built from the dataset
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Output checkpoint path (JSON)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Optional loss-history output (JSON array of per-step reports)
    #[arg(long, value_name = "FILE")]
    history: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

fn cmd_pretrain(args: &PretrainArgs) -> Result<()> {
    let config = args.train.resolve()?;
    let dataset = load_dataset(&args.data)?;
    let data = prepare(&dataset, args.graph.as_ref(), &config)?;
    let (params, history) = trainer::train_prepared(&data, &config)?;
    let checkpoint = Checkpoint { params, config: config.clone() };
    checkpoint.save(&args.out)?;
    if let Some(path) = &args.history {
        fs::write(path, serde_json::to_string(&history)?)?;
    }
    let first = history.first().map_or(f64::NAN, |r| r.total);
    let last = history.last().map_or(f64::NAN, |r| r.total);
    println!(
        "pretrained {} steps (mode {}, seed {}): total {:.6} -> {:.6}; wrote {}",
        history.len(),
        config.ablation_mode,
        config.seed,
        first,
        last,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// Dataset to check on; omitted = built-in synthetic dataset
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Central-difference step size [default: 1e-5]
    #[arg(long, default_value_t = 1e-5)]
    step_size: f64,
    /// Acceptance threshold on the max relative error [default: 1e-4]
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    #[command(flatten)]
    train: TrainFlags,
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<()> {
    let config = args.train.resolve()?;
    let dataset = match &args.data {
        Some(path) => load_dataset(path)?,
        None => data::generate_synthetic::<Real>(&SyntheticConfig {
            seed: config.seed,
            ..SyntheticConfig::default()
        })?,
    };
    let data = trainer::prepare_training_data(&dataset, &config)?;
    let params = ModelParams::init(&dataset, &config)?;
    // Finite differences are exhaustive over parameters, so keep the batch
    // small; six rows is enough to exercise every loss path.
    let batch: Vec<usize> = (0..dataset.len().min(6)).collect();
    let report = trainer::gradcheck(&data, &params, &config, &batch, args.step_size)?;
    let worst_block = report
        .blocks
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map_or("none", |(name, _)| name.as_str());
    if report.worst > args.threshold {
        return Err(Error::GradientCheckFailed {
            worst: report.worst,
            threshold: args.threshold,
        });
    }
    println!(
        "gradcheck: max relative error {:.3e} <= {:.3e} (worst block: {}, {} blocks)",
        report.worst,
        args.threshold,
        worst_block,
        report.blocks.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct EmbedArgs {
    /// Trained checkpoint (JSON)
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Input dataset (JSON Lines)
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Output embeddings path (JSON Lines: {"id":…, "embedding":[…]})
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn cmd_embed(args: &EmbedArgs) -> Result<()> {
    let checkpoint = Checkpoint::<Real>::load(&args.checkpoint)?;
    let dataset = load_dataset(&args.data)?;
    let rows = eval::embed(&dataset, &checkpoint.params)?;
    let mut out = String::new();
    for (record, row) in dataset.records.iter().zip(&rows) {
        let line = serde_json::json!({ "id": record.id, "embedding": row });
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    fs::write(&args.out, out)?;
    let width = rows.first().map_or(0, Vec::len);
    println!("wrote {}: {} rows x {} dims", args.out.display(), rows.len(), width);
    Ok(())
}

// ---------------------------------------------------------------------------
// probe
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct ProbeArgs {
    /// Trained checkpoint (JSON)
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Input dataset with labels (JSON Lines)
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Task: "binary" reports held-out AUC (continuous labels are
    /// binarized at their median), "regression" reports held-out MAE
    #[arg(long, value_name = "TASK")]
    task: String,
    /// Probe split/training seed [default: 0]
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_task(text: &str) -> Result<ProbeTask> {
    match text {
        "binary" => Ok(ProbeTask::Binary),
        "regression" => Ok(ProbeTask::Regression),
        other => Err(Error::InvalidConfig(format!(
            "unknown probe task '{other}' (expected binary or regression)"
        ))),
    }
}

fn cmd_probe(args: &ProbeArgs) -> Result<()> {
    let task = parse_task(&args.task)?;
    let checkpoint = Checkpoint::<Real>::load(&args.checkpoint)?;
    let dataset = load_dataset(&args.data)?;
    let embeddings = eval::embed(&dataset, &checkpoint.params)?;
    let (rows, labels) = eval::labeled_rows(&dataset, &embeddings)?;
    let labels = match task {
        ProbeTask::Binary => eval::median_binarize(&labels),
        ProbeTask::Regression => labels,
    };
    let metric = eval::probe(&rows, &labels, task, args.seed)?;
    let name = match task {
        ProbeTask::Binary => "auc",
        ProbeTask::Regression => "mae",
    };
    println!("probe {name} = {metric:.4} (n={}, seed {})", rows.len(), args.seed);
    Ok(())
}

// ---------------------------------------------------------------------------
// inspect-tree
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct InspectTreeArgs {
    /// Trained checkpoint (JSON)
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Input dataset (JSON Lines)
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
}

fn cmd_inspect_tree(args: &InspectTreeArgs) -> Result<()> {
    let checkpoint = Checkpoint::<Real>::load(&args.checkpoint)?;
    let dataset = load_dataset(&args.data)?;
    let config = checkpoint.config.clone();
    let data = trainer::prepare_training_data(&dataset, &config)?;
    let params = &checkpoint.params;
    // Route every record's quantizer inputs: molecular projections plus
    // augmented context projections, as during training.
    let mut paths: Vec<QuantizationPath<Real>> = Vec::new();
    let mut leaf_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for modality in &data.augmented {
        let projector = params.projectors.get(&modality.name).ok_or_else(|| {
            Error::CheckpointInconsistent(format!("no projector for modality '{}'", modality.name))
        })?;
        for row in &modality.matrix {
            let p = projector.project(row)?;
            let path = route(&p, &params.codebook)?;
            *leaf_counts.entry(path.leaf()).or_insert(0) += 1;
            paths.push(path);
        }
    }
    let fractions = utilization(&paths, &params.codebook);
    let formatted: Vec<String> = fractions
        .iter()
        .enumerate()
        .map(|(level, f)| format!("L{}={:.3}", level + 1, f))
        .collect();
    println!(
        "codebook depth {}, {} routed vectors; utilization per level: {}",
        params.codebook.depth,
        paths.len(),
        formatted.join(" ")
    );
    let max = leaf_counts.values().copied().max().unwrap_or(0).max(1);
    for (leaf, count) in &leaf_counts {
        let bar = "#".repeat((count * 40).div_ceil(max).min(40));
        println!("leaf {leaf:>4}: {count:>6} {bar}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
struct AblateArgs {
    /// Input dataset (JSON Lines)
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Context graph (JSON Lines); omitted = built per run seed
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Seeds per mode, used as offsets from the base seed [default: 5]
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Comma-separated mode subset; omitted = all modes
    #[arg(long, value_name = "LIST")]
    modes: Option<String>,
    /// Optional CSV output with header mode,seed,metric
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(Error::InvalidConfig("--seeds must be at least 1".into()));
    }
    let base = args.train.resolve()?;
    let modes: Vec<AblationMode> = match &args.modes {
        Some(list) => list
            .split(',')
            .map(|m| m.trim().parse::<AblationMode>())
            .collect::<Result<_>>()?,
        None => AblationMode::ALL.to_vec(),
    };
    if modes.is_empty() {
        return Err(Error::InvalidConfig("--modes must name at least one mode".into()));
    }
    let dataset = load_dataset(&args.data)?;
    let mut csv = String::from("mode,seed,metric\n");
    let mut means: Vec<(AblationMode, f64, f64)> = Vec::new();
    for &mode in &modes {
        let mut metrics = Vec::with_capacity(args.seeds as usize);
        for offset in 0..args.seeds {
            let config = TrainConfig {
                ablation_mode: mode,
                seed: base.seed + offset,
                ..base.clone()
            };
            let data = prepare(&dataset, args.graph.as_ref(), &config)?;
            let (params, _) = trainer::train_prepared(&data, &config)?;
            let metric = eval::downstream_neg_mae(&dataset, &params, config.seed)?;
            csv.push_str(&format!("{},{},{:.6}\n", mode, config.seed, metric));
            metrics.push(metric);
        }
        let mean = metrics.iter().sum::<f64>() / metrics.len() as f64;
        let var = metrics.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>()
            / metrics.len() as f64;
        means.push((mode, mean, var.sqrt()));
    }
    let full_mean = means
        .iter()
        .find(|(mode, _, _)| *mode == AblationMode::Full)
        .map(|(_, mean, _)| *mean);
    println!("{:<16} {:>8} {:>8} {:>10}", "mode", "mean", "std", "delta");
    for (mode, mean, std) in &means {
        match full_mean {
            Some(full) => println!("{:<16} {mean:>8.4} {std:>8.4} {:>+10.4}", mode.name(), mean - full),
            None => println!("{:<16} {mean:>8.4} {std:>8.4} {:>10}", mode.name(), "-"),
        }
    }
    if let Some(path) = &args.out {
        fs::write(path, &csv)?;
        println!(
            "wrote {}: {} runs across {} modes",
            path.display(),
            modes.len() * args.seeds as usize,
            modes.len()
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CHECKPOINT_FORMAT_VERSION;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("molmodal").chain(args.iter().copied()))
    }

    fn workdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    fn path_str(dir: &tempfile::TempDir, name: &str) -> String {
        dir.path().join(name).to_string_lossy().into_owned()
    }

    fn small_dataset(dir: &tempfile::TempDir) -> String {
        let data = path_str(dir, "data.jsonl");
        assert_eq!(
            run_args(&["gen-data", "--n", "24", "--latent-dim", "4", "--out", &data]),
            0
        );
        data
    }

    const FAST_TRAIN: &[&str] = &[
        "--d", "3", "--depth", "2", "--k", "3", "--batch-size", "8", "--steps", "2",
        "--walk-len", "2", "--iterations", "2",
    ];

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run_args(&["--help"]), 0);
        assert_eq!(run_args(&["--version"]), 0);
        assert_eq!(run_args(&["pretrain", "--help"]), 0);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["--no-such-flag"]), 1);
        assert_eq!(run_args(&["no-such-command"]), 1);
        // Missing required --out.
        assert_eq!(run_args(&["gen-data", "--n", "8"]), 1);
    }

    #[test]
    fn help_text_quotes_the_cited_defaults() {
        use clap::CommandFactory;
        let mut help = Vec::new();
        Cli::command()
            .find_subcommand_mut("pretrain")
            .expect("pretrain is a subcommand")
            .write_long_help(&mut help)
            .expect("render help");
        let text = String::from_utf8(help).expect("utf-8 help");
        for needle in [
            "default: 10",
            "default: 0.1",
            "default: 1e-4",
            "default: 6",
            "default: 5",
            "default: 4",
            "default: 200",
            "default: 64",
            "default: full",
            "default: 1e-8",
        ] {
            assert!(text.contains(needle), "help text lacks '{needle}':\n{text}");
        }
    }

    #[test]
    fn missing_input_file_is_a_data_error() {
        let dir = workdir();
        let out = path_str(&dir, "graph.jsonl");
        assert_eq!(
            run_args(&["build-graph", "--data", "/nonexistent/data.jsonl", "--out", &out]),
            2
        );
    }

    #[test]
    fn bad_mode_flag_is_a_usage_error() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let out = path_str(&dir, "ckpt.json");
        assert_eq!(
            run_args(&["pretrain", "--data", &data, "--out", &out, "--mode", "bogus"]),
            1
        );
    }

    #[test]
    fn gen_data_is_deterministic_per_seed() {
        let dir = workdir();
        let a = path_str(&dir, "a.jsonl");
        let b = path_str(&dir, "b.jsonl");
        assert_eq!(run_args(&["gen-data", "--n", "16", "--seed", "3", "--out", &a]), 0);
        assert_eq!(run_args(&["gen-data", "--n", "16", "--seed", "3", "--out", &b]), 0);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn graph_and_impute_round_trip() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let graph = path_str(&dir, "graph.jsonl");
        assert_eq!(run_args(&["build-graph", "--data", &data, "--out", &graph]), 0);
        ContextGraph::<Real>::load_jsonl(&graph).expect("graph loads back");

        let imputed = path_str(&dir, "aug.jsonl");
        assert_eq!(
            run_args(&[
                "impute", "--data", &data, "--modality", "cp_jump", "--k", "3", "--iters",
                "3", "--out", &imputed,
            ]),
            0
        );
        let augmented: Dataset<Real> =
            data::load_jsonl(Path::new(&imputed)).expect("imputed loads back");
        assert!(augmented
            .records
            .iter()
            .all(|r| r.features.get("cp_jump").map_or(false, Option::is_some)));
        let sidecar = residual_sidecar(Path::new(&imputed));
        let residuals: Vec<f64> =
            serde_json::from_str(&fs::read_to_string(sidecar).unwrap()).unwrap();
        assert_eq!(residuals.len(), 3);
    }

    #[test]
    fn impute_rejects_unknown_modality() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let out = path_str(&dir, "aug.jsonl");
        assert_eq!(
            run_args(&["impute", "--data", &data, "--modality", "nope", "--out", &out]),
            1
        );
    }

    #[test]
    fn pretrain_writes_a_loadable_checkpoint_and_history() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let out = path_str(&dir, "ckpt.json");
        let history = path_str(&dir, "history.json");
        let mut args = vec!["pretrain", "--data", &data, "--out", &out, "--history", &history];
        args.extend_from_slice(FAST_TRAIN);
        assert_eq!(run_args(&args), 0);
        let checkpoint = Checkpoint::<Real>::load(&out).expect("checkpoint loads");
        assert_eq!(checkpoint.config.d, 3);
        let reports: Vec<serde_json::Value> =
            serde_json::from_str(&fs::read_to_string(&history).unwrap()).unwrap();
        assert_eq!(reports.len(), 2);
        let _ = CHECKPOINT_FORMAT_VERSION;
    }

    #[test]
    fn pretrain_accepts_a_prebuilt_graph() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let graph = path_str(&dir, "graph.jsonl");
        assert_eq!(run_args(&["build-graph", "--data", &data, "--out", &graph]), 0);
        let out = path_str(&dir, "ckpt.json");
        let mut args =
            vec!["pretrain", "--data", &data, "--graph", &graph, "--out", &out];
        args.extend_from_slice(FAST_TRAIN);
        assert_eq!(run_args(&args), 0);
    }

    #[test]
    fn config_file_sits_between_defaults_and_flags() {
        let dir = workdir();
        let config_path = dir.path().join("config.json");
        fs::write(&config_path, r#"{"steps": 7, "d": 5}"#).unwrap();
        let flags = TrainFlags {
            config: Some(config_path),
            steps: Some(2),
            ..TrainFlags::default()
        };
        let config = flags.resolve().unwrap();
        assert_eq!(config.steps, 2, "flag beats file");
        assert_eq!(config.d, 5, "file beats default");
        assert_eq!(config.depth, TrainConfig::default().depth, "default otherwise");
    }

    #[test]
    fn embed_probe_and_inspect_run_on_a_trained_checkpoint() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let ckpt = path_str(&dir, "ckpt.json");
        let mut args = vec!["pretrain", "--data", &data, "--out", &ckpt];
        args.extend_from_slice(FAST_TRAIN);
        assert_eq!(run_args(&args), 0);

        let embeddings = path_str(&dir, "emb.jsonl");
        assert_eq!(
            run_args(&["embed", "--checkpoint", &ckpt, "--data", &data, "--out", &embeddings]),
            0
        );
        let first = fs::read_to_string(&embeddings).unwrap();
        assert_eq!(first.lines().count(), 24);

        assert_eq!(
            run_args(&["probe", "--checkpoint", &ckpt, "--data", &data, "--task", "binary"]),
            0
        );
        assert_eq!(
            run_args(&[
                "probe", "--checkpoint", &ckpt, "--data", &data, "--task", "regression",
            ]),
            0
        );
        assert_eq!(
            run_args(&["probe", "--checkpoint", &ckpt, "--data", &data, "--task", "xyz"]),
            1
        );
        assert_eq!(run_args(&["inspect-tree", "--checkpoint", &ckpt, "--data", &data]), 0);
    }

    #[test]
    fn gradcheck_passes_on_a_small_configuration() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let mut args = vec!["gradcheck", "--data", &data];
        args.extend_from_slice(FAST_TRAIN);
        assert_eq!(run_args(&args), 0);
    }

    #[test]
    fn gradcheck_fails_numerically_with_an_absurd_threshold() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let mut args = vec!["gradcheck", "--data", &data, "--threshold", "1e-300"];
        args.extend_from_slice(FAST_TRAIN);
        assert_eq!(run_args(&args), 3);
    }

    #[test]
    fn ablate_writes_the_csv_with_one_row_per_run() {
        let dir = workdir();
        let data = small_dataset(&dir);
        let csv = path_str(&dir, "ablate.csv");
        let mut args = vec![
            "ablate", "--data", &data, "--seeds", "2", "--modes", "full,no_treevq",
            "--out", &csv,
        ];
        args.extend_from_slice(FAST_TRAIN);
        assert_eq!(run_args(&args), 0);
        let text = fs::read_to_string(&csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mode,seed,metric");
        assert_eq!(lines.len(), 5, "header + 2 modes x 2 seeds");
        assert!(lines[1].starts_with("full,0,"));
        assert!(lines[4].starts_with("no_treevq,1,"));
    }
}
