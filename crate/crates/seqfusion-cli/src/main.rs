//! Experiment runner: generate synthetic datasets, evaluate the twelve
//! models, sweep parameter grids, and inspect datasets or report files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use seqfusion::io::{
    self, dataset_summary, load_dataset, parse_reports_csv, reports_rows_to_csv, save_dataset,
    write_atomic,
};
use seqfusion::pipeline::{
    evaluate_all, reports_to_csv, summary_table, ActivationSource, EvalReport, Hp, ModelId,
    Protocol,
};
use seqfusion::synth::{gen_four_block_dataset, sweep, SweepAxes, DEFAULT_SHAPE};
use seqfusion::DEFAULT_SEED;

#[derive(Parser)]
#[command(
    name = "seqfusion",
    version,
    about = "Classification experiments on datasets with static and dynamic features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic four-block dataset and write it to disk.
    Generate(GenerateArgs),
    /// Evaluate models on a dataset and write reports.
    Run(RunArgs),
    /// Evaluate models over a grid of synthetic datasets.
    Sweep(SweepArgs),
    /// Print dataset statistics, or round-trip a reports CSV.
    Inspect { path: PathBuf },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "synthetic")]
    name: String,
    #[arg(long, default_value_t = DEFAULT_SHAPE.0)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SHAPE.1)]
    ns: usize,
    #[arg(long, default_value_t = DEFAULT_SHAPE.2)]
    nd: usize,
    #[arg(long, default_value_t = DEFAULT_SHAPE.3)]
    ld: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct HpArgs {
    /// Declarative hyperparameter file (key = value); flags win over it.
    #[arg(long)]
    hp_file: Option<PathBuf>,
    /// LSTM size (units).
    #[arg(long)]
    lstm_size: Option<usize>,
    #[arg(long)]
    lstm_dropout: Option<f64>,
    #[arg(long)]
    lstm_batch: Option<usize>,
    #[arg(long)]
    lstm_epochs: Option<usize>,
    #[arg(long)]
    lstm_learning_rate: Option<f64>,
    #[arg(long)]
    hmm_states: Option<usize>,
    #[arg(long)]
    hmm_iters: Option<usize>,
    #[arg(long)]
    rf_trees: Option<usize>,
    #[arg(long)]
    standardize_lstm: Option<bool>,
    #[arg(long)]
    standardize_hmm: Option<bool>,
    /// Which network feeds the activations hybrid: pos, neg, or
    /// both-concatenated.
    #[arg(long)]
    activation_source: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset manifest (.toml) or UCR-style univariate file.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// "default" or "n=2000,ns=10,nd=5,ld=100".
    #[arg(long)]
    synthetic: Option<String>,
    /// "all" or a comma-separated list of model ids (1..=12).
    #[arg(long, default_value = "all")]
    models: String,
    /// "train-test" or "cv:K".
    #[arg(long, default_value = "train-test")]
    protocol: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    hp: HpArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid spec "sizes=200,500;ld=10,50,100;ns_nd=8:2,5:5,2:8"
    /// (defaults to the desk-scale grid).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value = "all")]
    models: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    hp: HpArgs,
}

// Hyperparameter file keys; every field optional, flags override.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct HpFile {
    lstm_size: Option<usize>,
    lstm_dropout: Option<f64>,
    lstm_batch: Option<usize>,
    lstm_epochs: Option<usize>,
    lstm_learning_rate: Option<f64>,
    lstm_clip_norm: Option<f64>,
    hmm_states: Option<usize>,
    hmm_iters: Option<usize>,
    rf_trees: Option<usize>,
    standardize_lstm: Option<bool>,
    standardize_hmm: Option<bool>,
    activation_source: Option<String>,
}

fn parse_activation_source(raw: &str) -> Result<ActivationSource> {
    match raw {
        "pos" => Ok(ActivationSource::Pos),
        "neg" => Ok(ActivationSource::Neg),
        "both-concatenated" | "both" => Ok(ActivationSource::BothConcatenated),
        other => bail!("unknown activation source {other:?} (pos | neg | both-concatenated)"),
    }
}

fn resolve_hp(args: &HpArgs) -> Result<Hp> {
    let mut hp = Hp::default();
    if let Some(path) = &args.hp_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading hyperparameter file {}", path.display()))?;
        let file: HpFile = toml::from_str(&text)
            .with_context(|| format!("parsing hyperparameter file {}", path.display()))?;
        if let Some(v) = file.lstm_size {
            hp.lstm_units = v;
        }
        if let Some(v) = file.lstm_dropout {
            hp.lstm_dropout = v;
        }
        if let Some(v) = file.lstm_batch {
            hp.lstm_batch = v;
        }
        if let Some(v) = file.lstm_epochs {
            hp.lstm_epochs = v;
        }
        if let Some(v) = file.lstm_learning_rate {
            hp.lstm_learning_rate = v;
        }
        if let Some(v) = file.lstm_clip_norm {
            hp.lstm_clip_norm = v;
        }
        if let Some(v) = file.hmm_states {
            hp.hmm_states = v;
        }
        if let Some(v) = file.hmm_iters {
            hp.hmm_iters = v;
        }
        if let Some(v) = file.rf_trees {
            hp.rf_trees = v;
        }
        if let Some(v) = file.standardize_lstm {
            hp.standardize_lstm = v;
        }
        if let Some(v) = file.standardize_hmm {
            hp.standardize_hmm = v;
        }
        if let Some(v) = &file.activation_source {
            hp.activation_source = parse_activation_source(v)?;
        }
    }
    if let Some(v) = args.lstm_size {
        hp.lstm_units = v;
    }
    if let Some(v) = args.lstm_dropout {
        hp.lstm_dropout = v;
    }
    if let Some(v) = args.lstm_batch {
        hp.lstm_batch = v;
    }
    if let Some(v) = args.lstm_epochs {
        hp.lstm_epochs = v;
    }
    if let Some(v) = args.lstm_learning_rate {
        hp.lstm_learning_rate = v;
    }
    if let Some(v) = args.hmm_states {
        hp.hmm_states = v;
    }
    if let Some(v) = args.hmm_iters {
        hp.hmm_iters = v;
    }
    if let Some(v) = args.rf_trees {
        hp.rf_trees = v;
    }
    if let Some(v) = args.standardize_lstm {
        hp.standardize_lstm = v;
    }
    if let Some(v) = args.standardize_hmm {
        hp.standardize_hmm = v;
    }
    if let Some(v) = &args.activation_source {
        hp.activation_source = parse_activation_source(v)?;
    }
    validate_hp(&hp)?;
    Ok(hp)
}

fn validate_hp(hp: &Hp) -> Result<()> {
    if hp.lstm_units == 0 {
        bail!("lstm_size must be >= 1");
    }
    if !(0.0..1.0).contains(&hp.lstm_dropout) {
        bail!("lstm_dropout must lie in [0, 1)");
    }
    if hp.lstm_batch == 0 || hp.lstm_epochs == 0 {
        bail!("lstm_batch and lstm_epochs must be >= 1");
    }
    if hp.hmm_states == 0 || hp.hmm_iters == 0 {
        bail!("hmm_states and hmm_iters must be >= 1");
    }
    if hp.rf_trees == 0 {
        bail!("rf_trees must be >= 1");
    }
    Ok(())
}

fn parse_models(raw: &str) -> Result<Vec<ModelId>> {
    if raw == "all" {
        return Ok(ModelId::ALL.to_vec());
    }
    raw.split(',')
        .map(|token| {
            let index: usize = token
                .trim()
                .parse()
                .with_context(|| format!("model id {token:?} is not a number"))?;
            ModelId::from_index(index).map_err(Into::into)
        })
        .collect()
}

fn parse_protocol(raw: &str) -> Result<Protocol> {
    if raw == "train-test" {
        return Ok(Protocol::TrainTest);
    }
    if let Some(k) = raw.strip_prefix("cv:") {
        let k: usize = k
            .parse()
            .with_context(|| format!("bad fold count in {raw:?}"))?;
        if k < 2 {
            bail!("cv protocol needs k >= 2, got {k}");
        }
        return Ok(Protocol::Cv(k));
    }
    bail!("unknown protocol {raw:?} (train-test | cv:K)")
}

// "n=2000,ns=10,nd=5,ld=100" with defaults for missing keys.
fn parse_synthetic_spec(raw: &str) -> Result<(usize, usize, usize, usize)> {
    let (mut n, mut ns, mut nd, mut ld) = DEFAULT_SHAPE;
    if raw == "default" {
        return Ok((n, ns, nd, ld));
    }
    for part in raw.split(',') {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("synthetic spec entry {part:?} is not key=value"))?;
        let value: usize = value
            .trim()
            .parse()
            .with_context(|| format!("bad value in synthetic spec entry {part:?}"))?;
        match key.trim() {
            "n" => n = value,
            "ns" => ns = value,
            "nd" => nd = value,
            "ld" => ld = value,
            other => bail!("unknown synthetic spec key {other:?} (n | ns | nd | ld)"),
        }
    }
    Ok((n, ns, nd, ld))
}

// "sizes=...;ld=...;ns_nd=8:2,5:5"
fn parse_grid(raw: &str) -> Result<SweepAxes> {
    let mut axes = SweepAxes::desk_default();
    for section in raw.split(';') {
        let (key, value) = section
            .split_once('=')
            .with_context(|| format!("grid section {section:?} is not key=value"))?;
        match key.trim() {
            "sizes" => {
                axes.sizes = value
                    .split(',')
                    .map(|v| v.trim().parse().context("bad size"))
                    .collect::<Result<_>>()?;
            }
            "ld" => {
                axes.seq_lens = value
                    .split(',')
                    .map(|v| v.trim().parse().context("bad ld"))
                    .collect::<Result<_>>()?;
            }
            "ns_nd" => {
                axes.feature_splits = value
                    .split(',')
                    .map(|pair| {
                        let (a, b) = pair
                            .split_once(':')
                            .with_context(|| format!("ns_nd entry {pair:?} is not ns:nd"))?;
                        Ok((
                            a.trim().parse().context("bad ns")?,
                            b.trim().parse().context("bad nd")?,
                        ))
                    })
                    .collect::<Result<_>>()?;
            }
            other => bail!("unknown grid key {other:?} (sizes | ld | ns_nd)"),
        }
    }
    Ok(axes)
}

fn dataset_name_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string())
}

fn write_run_outputs(
    out: &Path,
    outcomes: &[(ModelId, seqfusion::Result<EvalReport>)],
) -> Result<bool> {
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("reports.csv"), &reports_to_csv(outcomes))?;
    let table = summary_table(outcomes);
    write_atomic(&out.join("summary.txt"), &table)?;
    print!("{table}");

    let mut errors = Vec::new();
    for (model, outcome) in outcomes {
        match outcome {
            Ok(report) => {
                let json = serde_json::to_string_pretty(report)?;
                write_atomic(&out.join(format!("model_{:02}.json", model.index())), &json)?;
            }
            Err(e) => errors.push(serde_json::json!({
                "model_id": model.index(),
                "model_name": model.name(),
                "error": e.to_string(),
            })),
        }
    }
    if errors.is_empty() {
        Ok(true)
    } else {
        let record = serde_json::to_string_pretty(&errors)?;
        write_atomic(&out.join("errors.json"), &record)?;
        eprintln!(
            "{} model(s) failed; see {}",
            errors.len(),
            out.join("errors.json").display()
        );
        Ok(false)
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let dataset = gen_four_block_dataset(args.samples, args.ns, args.nd, args.ld, args.seed)?;
    let manifest = save_dataset(&dataset, &args.out, &args.name)?;
    println!("wrote {} samples to {}", dataset.len(), manifest.display());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    // Validate everything before any training starts.
    let models = parse_models(&args.models)?;
    let protocol = parse_protocol(&args.protocol)?;
    let hp = resolve_hp(&args.hp)?;
    let (dataset, name) = match (&args.data, &args.synthetic) {
        (Some(path), None) => {
            if !path.exists() {
                bail!("dataset file {} does not exist", path.display());
            }
            (load_dataset(path)?, dataset_name_from_path(path))
        }
        (None, Some(spec)) => {
            let (n, ns, nd, ld) = parse_synthetic_spec(spec)?;
            (
                gen_four_block_dataset(n, ns, nd, ld, args.seed)?,
                format!("synthetic-{n}-{ns}-{nd}-{ld}"),
            )
        }
        _ => bail!("exactly one of --data or --synthetic is required"),
    };

    let outcomes = evaluate_all(&dataset, &name, &models, &hp, protocol, args.seed);
    let all_ok = write_run_outputs(&args.out, &outcomes)?;
    if !all_ok {
        std::process::exit(1);
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let models = parse_models(&args.models)?;
    let hp = resolve_hp(&args.hp)?;
    let axes = match &args.grid {
        Some(raw) => parse_grid(raw)?,
        None => SweepAxes::desk_default(),
    };
    let grid = sweep(&axes, &models, &hp, args.seed);
    std::fs::create_dir_all(&args.out)?;
    write_atomic(&args.out.join("sweep.csv"), &grid.to_csv())?;
    let failures: Vec<_> = grid
        .cells
        .iter()
        .filter(|c| c.error.is_some())
        .map(|c| {
            serde_json::json!({
                "size": c.size, "l_d": c.l_d, "n_s": c.n_s, "n_d": c.n_d,
                "model_id": c.model_index, "error": c.error,
            })
        })
        .collect();
    if !failures.is_empty() {
        write_atomic(
            &args.out.join("sweep_errors.json"),
            &serde_json::to_string_pretty(&failures)?,
        )?;
    }
    println!(
        "swept {} cells ({} failed); wrote {}",
        grid.cells.len(),
        failures.len(),
        args.out.join("sweep.csv").display()
    );
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).unwrap_or_default();
    if text.starts_with("id,name,accuracy,n_folds,seed,wall_time_s") {
        let rows = parse_reports_csv(&text)?;
        let rendered = reports_rows_to_csv(&rows);
        let reparsed = parse_reports_csv(&rendered)?;
        if reparsed != rows {
            bail!("reports CSV does not round-trip");
        }
        let by_id: BTreeMap<usize, &io::ReportRow> = rows.iter().map(|row| (row.id, row)).collect();
        println!(
            "reports file with {} rows (round-trip ok, {} distinct models):",
            rows.len(),
            by_id.len()
        );
        print!("{rendered}");
        return Ok(());
    }
    let dataset = load_dataset(path)?;
    print!(
        "{}",
        dataset_summary(&dataset, &dataset_name_from_path(path))
    );
    Ok(())
}

fn main() -> Result<()> {
    if let Ok(threads) = std::env::var("SEQFUSION_THREADS") {
        let threads: usize = threads
            .parse()
            .context("SEQFUSION_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Inspect { path } => cmd_inspect(&path),
    }
}
