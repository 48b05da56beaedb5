//! `fieldst`: data generation, training, evaluation and ablations.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use fieldst::eval::{
    ablate_ensemble, ablate_pretrain, ablate_uncertainty, error_map, export_heatmap, labeled_subset_indices,
    model_mae, run_protocol, AblationSpec, HeatmapFormat, ProtocolSpec,
};
use fieldst::field_sim::{build_dataset, load_dataset, save_dataset, Dataset, GenConfig, Grid, Split};
use fieldst::numnet::{load_checkpoint, save_checkpoint};
use fieldst::sensing::{place_sensors, PlacementStrategy};
use fieldst::ssl::{run_uge_st, train, Method, TrainConfig};

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "fieldst", version, about = "Sparse-sensor field reconstruction with ensemble self-training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate fields and write a dataset file plus its JSON manifest.
    GenData(GenDataArgs),
    /// Train one model and write its checkpoints.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Run the label-budget protocol.
    Protocol(ProtocolArgs),
    /// Run an ablation study.
    Ablate(AblateArgs),
    /// Write a predicted, true or error heatmap for one sample.
    Export(ExportArgs),
}

/// Flags shared by every command that trains models.
#[derive(Args, Debug, Clone)]
struct TrainFlags {
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "FIELDST_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    ensemble: Option<usize>,
    #[arg(long)]
    no_uncertainty: bool,
    #[arg(long)]
    no_pretrain: bool,
    /// Concurrent jobs (ensemble members or protocol cells).
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the effective config as JSON and exit.
    #[arg(long)]
    dump_config: bool,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(b) = self.batch {
            cfg.batch_size = b;
        }
        if let Some(n) = self.ensemble {
            cfg.ensemble_size = n;
        }
        if self.no_uncertainty {
            cfg.use_uncertainty = false;
        }
        if self.no_pretrain {
            cfg.use_pretrain_finetune = false;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
    }
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Output dataset path; the manifest goes next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
    /// JSON generator config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    labeled: usize,
    #[arg(long, default_value_t = 256)]
    unlabeled: usize,
    #[arg(long, default_value_t = 64)]
    test: usize,
    #[arg(long, default_value_t = 16)]
    sensors: usize,
    #[arg(long, default_value = "stratified-jitter")]
    placement: PlacementStrategy,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, env = "FIELDST_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Output directory for checkpoints and the run manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    method: Option<Method>,
    /// Number of labeled samples to use, drawn by the seeded subset rule.
    #[arg(long)]
    labels: Option<usize>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    split: Split,
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated label budgets.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Study {
    Ensemble,
    Pretrain,
    Uncertainty,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[arg(value_enum)]
    study: Study,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Ensemble sizes for the ensemble and uncertainty studies.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    labels: Option<usize>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MapKind {
    Prediction,
    Truth,
    Error,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Position of the sample within the split.
    #[arg(long, default_value_t = 0)]
    sample: usize,
    #[arg(long, value_enum, default_value = "error")]
    kind: MapKind,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Pgm,
}

fn read_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn dump<T: Serialize>(value: &T) -> Result<()> {
    writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn load(path: &Path) -> Result<Dataset> {
    load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let mut gen: GenConfig = read_json(args.config.as_deref())?;
    if args.rows.is_some() || args.cols.is_some() {
        gen.grid = Grid::new(args.rows.unwrap_or(gen.grid.rows), args.cols.unwrap_or(gen.grid.cols));
    }
    let sensors = place_sensors(gen.grid, args.sensors, args.placement, args.seed)?;
    let ds = build_dataset(args.labeled, args.unlabeled, args.test, &sensors, args.seed, &gen)?;
    if let Some(dir) = args.out.parent() {
        fs::create_dir_all(dir)?;
    }
    save_dataset(&ds, &args.out)?;
    println!("wrote {} ({})", args.out.display(), ds.sha256()?);
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = read_json(args.flags.config.as_deref())?;
    args.flags.apply(&mut cfg);
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if args.flags.dump_config {
        return dump(&cfg);
    }
    cfg.validate()?;
    let ds = load(&args.data)?;
    let labeled = match args.labels {
        Some(b) => ds.labeled_subset(&labeled_subset_indices(ds.labeled.len(), b, cfg.seed)?)?,
        None => ds.labeled_set(),
    };
    let unlabeled = ds.unlabeled_set();
    fs::create_dir_all(&args.out)?;
    let mut artifacts = Vec::new();
    let model = if cfg.method == Method::UgeSt {
        let outcome = run_uge_st(&labeled, &unlabeled, &cfg)?;
        artifacts.extend(outcome.save_artifacts(&args.out, ds.grid, &cfg)?);
        outcome.student
    } else {
        let net = train(cfg.method, &labeled, &unlabeled, &cfg)?;
        let p = args.out.join("model.fsnn");
        save_checkpoint(&net, &p)?;
        artifacts.push(p);
        let p = args.out.join("config.json");
        fs::write(&p, serde_json::to_string_pretty(&cfg)?)?;
        artifacts.push(p);
        net
    };
    let test = ds.test_set();
    let mae = model_mae(&model, test.inputs.view(), test.targets.view(), ds.normalization)?;
    let manifest = RunManifest::new("train", &cfg, &ds, &args.out, &artifacts)?.with_metric("test_mae", mae);
    manifest.write(&args.out)?;
    println!("test_mae {mae}");
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let net = load_checkpoint(&args.checkpoint).with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let (inputs, targets) = match args.split {
        Split::Labeled => {
            let s = ds.labeled_set();
            (s.inputs, s.targets)
        }
        Split::Unlabeled => (ds.unlabeled_set().inputs, ds.unlabeled_truth()),
        Split::Test => {
            let s = ds.test_set();
            (s.inputs, s.targets)
        }
    };
    let mae = model_mae(&net, inputs.view(), targets.view(), ds.normalization)?;
    println!("mae {mae}");
    Ok(())
}

fn cmd_protocol(args: ProtocolArgs) -> Result<()> {
    let mut spec: ProtocolSpec = read_json(args.flags.config.as_deref())?;
    args.flags.apply(&mut spec.train);
    if let Some(b) = args.budgets {
        spec.label_budgets = b;
    }
    if let Some(m) = args.methods {
        spec.methods = m;
    }
    if let Some(s) = args.seeds {
        spec.seeds = s;
    }
    if args.flags.dump_config {
        return dump(&spec);
    }
    let ds = load(&args.data)?;
    let table = run_protocol(&ds, &spec)?;
    table.save(&args.out)?;
    for row in &table.rows {
        let agg = row.aggregate.map_or("failed".to_string(), |v| v.to_string());
        println!("{} {} {}", row.method, row.budget, agg);
    }
    let artifacts = [args.out.join("results.csv"), args.out.join("summary.json")];
    RunManifest::new("protocol", &spec, &ds, &args.out, &artifacts)?.write(&args.out)?;
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let mut spec: AblationSpec = read_json(args.flags.config.as_deref())?;
    args.flags.apply(&mut spec.train);
    if let Some(s) = args.seeds {
        spec.seeds = s;
    }
    if args.labels.is_some() {
        spec.budget = args.labels;
    }
    if args.flags.dump_config {
        return dump(&spec);
    }
    let ds = load(&args.data)?;
    let (name, json) = match args.study {
        Study::Ensemble => {
            let r = ablate_ensemble(&ds, &args.sizes, &spec)?;
            for p in &r.aggregate {
                println!("n={} pseudo_label {} pt_student {} uge_st {}", p.n, p.pseudo_label, p.pt_student, p.uge_st);
            }
            ("ensemble", serde_json::to_string_pretty(&r)?)
        }
        Study::Pretrain => {
            let r = ablate_pretrain(&ds, &spec)?;
            let a = r.aggregate;
            println!(
                "pseudo_label {} self_training {} pt_student {} uge_st {}",
                a.pseudo_label, a.self_training, a.pt_student, a.uge_st
            );
            ("pretrain", serde_json::to_string_pretty(&r)?)
        }
        Study::Uncertainty => {
            let r = ablate_uncertainty(&ds, &args.sizes, &spec)?;
            for a in &r.aggregate {
                println!(
                    "n={} pt w/o {} w/ {} uge_st w/o {} w/ {}",
                    a.n, a.pt_without, a.pt_with, a.uge_without, a.uge_with
                );
            }
            ("uncertainty", serde_json::to_string_pretty(&r)?)
        }
    };
    fs::create_dir_all(&args.out)?;
    let path = args.out.join(format!("ablation_{name}.json"));
    fs::write(&path, json)?;
    RunManifest::new(&format!("ablate {name}"), &spec, &ds, &args.out, &[path])?.write(&args.out)?;
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let samples = ds.split(args.split);
    let Some(sample) = samples.get(args.sample) else {
        bail!("sample {} out of range for a split of {}", args.sample, samples.len());
    };
    let prediction = || -> Result<Vec<f64>> {
        let Some(path) = &args.checkpoint else {
            bail!("--checkpoint is required for prediction and error maps");
        };
        let net = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
        let input: Vec<f64> = sample.observation.iter().map(|&v| ds.normalization.normalize(v)).collect();
        Ok(net.forward(&input)?.iter().map(|&v| ds.normalization.denormalize(v)).collect())
    };
    let values = match args.kind {
        MapKind::Truth => sample.field.clone(),
        MapKind::Prediction => prediction()?,
        MapKind::Error => error_map(&prediction()?, &sample.field)?,
    };
    let format = match args.format {
        Format::Csv => HeatmapFormat::Csv,
        Format::Pgm => HeatmapFormat::Pgm,
    };
    if let Some(dir) = args.out.parent() {
        fs::create_dir_all(dir)?;
    }
    export_heatmap(&values, ds.grid, &args.out, format)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Protocol(a) => cmd_protocol(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Export(a) => cmd_export(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
