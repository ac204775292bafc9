//! Command-line front end for QAOA parameter-transfer studies.
//!
//! Exit codes: 0 success, 2 usage or validation failure, 3 output conflict
//! (an artifact exists and `--force` was not given), 4 runtime failure.

mod config;
mod csv;
mod plot;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use qaoa_transfer::graphgen::{
    generate_graph, serialize_graph, FamilyTag, GraphFamily, DEFAULT_BA_ATTACH,
    DEFAULT_ER_EDGE_PROB, DEFAULT_WEIGHT_MEAN, DEFAULT_WEIGHT_STD,
};
use qaoa_transfer::optimizers::{AdagradConfig, RegKind, Regularizer};
use qaoa_transfer::params::{bank_load, bank_save, bank_to_string, BankKey, ParameterBank};
use qaoa_transfer::pipeline::{
    layer_selection, regularization_study, run_family_study_with_progress, train_donor,
    RunRecord, StudyConfig,
};

use config::{
    apply_study_keys, family_from_parts, load_study_config, parse_target_layer,
    study_section_lines,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFLICT: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

/// Error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFLICT,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

macro_rules! runtime_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::runtime(e.to_string())
            }
        })*
    };
}

runtime_from!(
    std::io::Error,
    qaoa_transfer::graphgen::GraphError,
    qaoa_transfer::simulator::SimError,
    qaoa_transfer::params::ParamsError,
    qaoa_transfer::optimizers::OptimError,
    qaoa_transfer::pipeline::PipelineError
);

#[derive(Parser)]
#[command(
    name = "qaoa-transfer",
    version,
    about = "QAOA MaxCut parameter-transfer studies: graph generation, donor training, \
             layer selection, and accuracy/efficiency measurements"
)]
struct Cli {
    /// Worker threads for per-graph parallelism (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate graph files for a family, size, and seed range.
    Generate(GenerateArgs),
    /// Train a donor and store its optimized parameters in the bank.
    TrainDonor(TrainDonorArgs),
    /// Run the layer-selection procedure and emit the win-frequency heatmap.
    SelectLayer(SelectLayerArgs),
    /// Run a full family study (records, summary, manifest, optional plots).
    Study(StudyArgs),
    /// Count r_s > r_f violations per regularizer kind.
    RegStudy(RegStudyArgs),
    /// Inspect the parameter bank.
    Bank(BankArgs),
}

/// Family selection shared by several commands.
#[derive(Args, Clone)]
struct FamilyArgs {
    /// Graph family: u3r, uba, uer, w3r, wba, wer.
    #[arg(long)]
    family: FamilyTag,
    /// Erdős–Rényi edge probability.
    #[arg(long, default_value_t = DEFAULT_ER_EDGE_PROB)]
    er_edge_prob: f64,
    /// Barabási–Albert attachment count.
    #[arg(long, default_value_t = DEFAULT_BA_ATTACH)]
    ba_attach: usize,
    /// Gaussian weight mean (weighted families).
    #[arg(long, default_value_t = DEFAULT_WEIGHT_MEAN)]
    weight_mu: f64,
    /// Gaussian weight standard deviation (weighted families).
    #[arg(long, default_value_t = DEFAULT_WEIGHT_STD)]
    weight_sigma: f64,
}

impl FamilyArgs {
    fn family(&self) -> GraphFamily {
        family_from_parts(
            self.family,
            self.er_edge_prob,
            self.ba_attach,
            self.weight_mu,
            self.weight_sigma,
        )
    }
}

/// Donor-training knobs shared by several commands.
#[derive(Args, Clone)]
struct DonorArgs {
    /// Donor graph size.
    #[arg(long, default_value_t = 8)]
    donor_n: usize,
    /// Donor graph seed.
    #[arg(long, default_value_t = 1)]
    donor_seed: u64,
    /// Ansatz depth p.
    #[arg(long, default_value_t = 15)]
    depth: usize,
    /// TQA time step.
    #[arg(long, default_value_t = 0.75)]
    dt: f64,
    /// TQA index base (0 = published schedule with gamma_0 = 0).
    #[arg(long, default_value_t = 0)]
    index_base: u8,
    /// Adagrad learning rate.
    #[arg(long, default_value_t = 0.1)]
    adagrad_lr: f64,
    /// Adagrad epsilon.
    #[arg(long, default_value_t = 1e-8)]
    adagrad_eps: f64,
    /// Adagrad iteration budget.
    #[arg(long, default_value_t = 100)]
    adagrad_iters: usize,
    /// Regularizer kind: none, l1, l2, smooth.
    #[arg(long, default_value = "l2")]
    reg: RegKind,
    /// Regularization strength.
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
}

impl DonorArgs {
    fn adagrad(&self) -> AdagradConfig {
        AdagradConfig {
            learning_rate: self.adagrad_lr,
            epsilon: self.adagrad_eps,
            max_iters: self.adagrad_iters,
        }
    }

    fn regularizer(&self) -> Result<Regularizer, CliError> {
        Regularizer::new(self.reg, self.lambda).map_err(|e| CliError::usage(e.to_string()))
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Vertex count.
    #[arg(long)]
    n: usize,
    /// How many graphs (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// First graph seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overwrite existing files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TrainDonorArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    donor: DonorArgs,
    /// Bank file (default: $QAOA_BANK or ./qaoa_bank.txt).
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Args)]
struct SelectLayerArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    donor: DonorArgs,
    /// Acceptor sizes, comma separated.
    #[arg(long, default_value = "8,10,12,14,16,18,20,22,24", value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Experiments (fresh graphs) per size.
    #[arg(long, default_value_t = 40)]
    experiments: usize,
    /// Master seed for the experiment graphs.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Heatmap CSV output path.
    #[arg(long, default_value = "heatmap.csv")]
    out: PathBuf,
    /// Overwrite an existing heatmap file.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct StudyArgs {
    /// Config file (`key = value`, sections per family study).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Section to use when the config has several.
    #[arg(long)]
    section: Option<String>,
    /// Override any study key, e.g. --set sizes=8,10 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Graph family (overrides the config file).
    #[arg(long)]
    family: Option<FamilyTag>,
    /// Acceptor sizes, comma separated (override).
    #[arg(long)]
    sizes: Option<String>,
    /// Graphs per size (override).
    #[arg(long)]
    graphs: Option<usize>,
    /// Repetitions per graph (override).
    #[arg(long)]
    reps: Option<usize>,
    /// Donor seed (override).
    #[arg(long)]
    donor_seed: Option<u64>,
    /// Master seed (override).
    #[arg(long)]
    seed: Option<u64>,
    /// Targeted layer: 1-based index, family-default, or from-selection.
    #[arg(long)]
    layer: Option<String>,
    /// Regularization strength (override).
    #[arg(long)]
    lambda: Option<f64>,
    /// Output directory for records.csv, summary.csv, manifest.txt.
    #[arg(long)]
    out: PathBuf,
    /// Also render accuracy/time/efficiency SVG plots.
    #[arg(long)]
    plot: bool,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Also record the trained donor in this bank file.
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Args)]
struct RegStudyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    donor: DonorArgs,
    /// Sizes to test, comma separated.
    #[arg(long, default_value = "8,10", value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Trials (fresh graphs) per size.
    #[arg(long, default_value_t = 300)]
    trials: usize,
    /// Targeted layer (1-based); defaults to the family's published layer.
    #[arg(long)]
    layer: Option<usize>,
    /// Master seed for trial graphs.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path.
    #[arg(long, default_value = "regstudy.csv")]
    out: PathBuf,
    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct BankArgs {
    #[command(subcommand)]
    action: BankAction,
}

#[derive(Subcommand)]
enum BankAction {
    /// List bank entries.
    List {
        /// Bank file (default: $QAOA_BANK or ./qaoa_bank.txt).
        #[arg(long)]
        bank: Option<PathBuf>,
    },
    /// Print one entry in full.
    Show {
        #[arg(long)]
        family: FamilyTag,
        #[arg(long, default_value_t = 8)]
        donor_n: usize,
        #[arg(long, default_value_t = 15)]
        depth: usize,
        #[arg(long)]
        bank: Option<PathBuf>,
    },
}

fn default_bank_path(cli: Option<PathBuf>) -> PathBuf {
    cli.unwrap_or_else(|| {
        std::env::var_os("QAOA_BANK")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("qaoa_bank.txt"))
    })
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn load_bank_or_empty(path: &Path) -> Result<ParameterBank, CliError> {
    if path.exists() {
        Ok(bank_load(path)?)
    } else {
        Ok(ParameterBank::new())
    }
}

fn refuse_existing(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::conflict(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn validate_family_args(f: &FamilyArgs, n: usize) -> Result<(), CliError> {
    match f.family {
        FamilyTag::U3r | FamilyTag::W3r => {
            if n < 4 || !n.is_multiple_of(2) {
                return Err(CliError::usage(format!(
                    "3-regular graphs need even n >= 4, got n = {n}"
                )));
            }
        }
        FamilyTag::Uba | FamilyTag::Wba => {
            if n <= f.ba_attach {
                return Err(CliError::usage(format!(
                    "Barabási–Albert needs n > m, got n = {n}, m = {}",
                    f.ba_attach
                )));
            }
        }
        FamilyTag::Uer | FamilyTag::Wer => {
            if !(f.er_edge_prob > 0.0 && f.er_edge_prob < 1.0) {
                return Err(CliError::usage(format!(
                    "edge probability must lie in (0, 1), got {}",
                    f.er_edge_prob
                )));
            }
        }
    }
    if f.family.is_weighted() && f.weight_sigma < 0.0 {
        return Err(CliError::usage("weight sigma must be >= 0".to_string()));
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    validate_family_args(&args.family, args.n)?;
    if args.count == 0 {
        return Err(CliError::usage("count must be >= 1".to_string()));
    }
    let family = args.family.family();
    std::fs::create_dir_all(&args.out)?;
    let paths: Vec<(u64, PathBuf)> = (0..args.count)
        .map(|i| {
            let seed = args.seed + i;
            let name = format!("{}_n{}_seed{}.graph", family.tag(), args.n, seed);
            (seed, args.out.join(name))
        })
        .collect();
    for (_, path) in &paths {
        refuse_existing(path, args.force)?;
    }
    for (seed, path) in &paths {
        let graph = generate_graph(&family, args.n, *seed)?;
        std::fs::write(path, serialize_graph(&graph))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_train_donor(args: &TrainDonorArgs) -> Result<(), CliError> {
    validate_family_args(&args.family, args.donor.donor_n)?;
    let family = args.family.family();
    let reg = args.donor.regularizer()?;
    let training = train_donor(
        &family,
        args.donor.donor_n,
        args.donor.depth,
        args.donor.dt,
        args.donor.index_base,
        &args.donor.adagrad(),
        &reg,
        args.donor.donor_seed,
    )?;
    let bank_path = default_bank_path(args.bank.clone());
    let mut bank = load_bank_or_empty(&bank_path)?;
    let mut entry = training.entry;
    entry.trained_at = now_unix();
    bank.insert(training.key.clone(), entry.clone())?;
    bank_save(&bank, &bank_path)?;
    println!(
        "donor {} r_f = {:.5} (digest {}, bank {})",
        training.key, entry.donor_rf, entry.config_digest, bank_path.display()
    );
    Ok(())
}

fn cmd_select_layer(args: &SelectLayerArgs) -> Result<(), CliError> {
    validate_family_args(&args.family, args.donor.donor_n)?;
    if args.experiments == 0 {
        return Err(CliError::usage("experiments must be >= 1".to_string()));
    }
    refuse_existing(&args.out, args.force)?;
    let family = args.family.family();
    let reg = args.donor.regularizer()?;
    let training = train_donor(
        &family,
        args.donor.donor_n,
        args.donor.depth,
        args.donor.dt,
        args.donor.index_base,
        &args.donor.adagrad(),
        &reg,
        args.donor.donor_seed,
    )?;
    let matrix = layer_selection(
        &family,
        &training.entry.params,
        &args.sizes,
        args.experiments,
        &reg,
        &qaoa_transfer::optimizers::OptimizerConfig::NelderMead(Default::default()),
        args.seed,
    )?;
    std::fs::write(&args.out, csv::heatmap_csv(&matrix))?;
    println!(
        "family {} modal layer = {} (heatmap: {})",
        family.tag(),
        matrix.modal_layer,
        args.out.display()
    );
    Ok(())
}

fn study_config_from_args(args: &StudyArgs) -> Result<StudyConfig, CliError> {
    let mut cfg = StudyConfig::defaults(GraphFamily::U3r);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        cfg = load_study_config(&text, args.section.as_deref(), cfg)?;
    }
    // Flags override file keys; they reuse the same key set.
    let mut pairs: Vec<(String, String, usize)> = Vec::new();
    let mut push = |k: &str, v: String| pairs.push((k.to_string(), v, 0));
    if let Some(f) = args.family {
        push("family", f.to_string());
    }
    if let Some(s) = &args.sizes {
        push("sizes", s.clone());
    }
    if let Some(g) = args.graphs {
        push("graphs_per_size", g.to_string());
    }
    if let Some(r) = args.reps {
        push("repetitions", r.to_string());
    }
    if let Some(s) = args.donor_seed {
        push("donor_seed", s.to_string());
    }
    if let Some(s) = args.seed {
        push("master_seed", s.to_string());
    }
    if let Some(l) = &args.layer {
        parse_target_layer(l)?;
        push("target_layer", l.clone());
    }
    if let Some(l) = args.lambda {
        push("lambda", format!("{l:.16e}"));
    }
    for set in &args.sets {
        let (k, v) = set.split_once('=').ok_or_else(|| {
            CliError::usage(format!("--set expects KEY=VALUE, got '{set}'"))
        })?;
        push(k.trim(), v.trim().to_string());
    }
    apply_study_keys(&mut cfg, &pairs)?;
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn manifest_text(cfg: &StudyConfig, out: &qaoa_transfer::pipeline::StudyOutput) -> String {
    let mut text = String::from("# qaoa-transfer study manifest\n[study]\n");
    for line in study_section_lines(cfg) {
        text.push_str(&line);
        text.push('\n');
    }
    text.push_str("\n[provenance]\n");
    text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("donor_digest = {}\n", out.donor_entry.config_digest));
    text.push_str(&format!("donor_rf = {:.16e}\n", out.donor_entry.donor_rf));
    text.push_str(&format!("resolved_layer = {}\n", out.resolved_layer));
    text.push_str(&format!(
        "resampled_instances = {}\n",
        out.resampled_instances
    ));
    text.push_str(&format!("failures = {}\n", out.failures.len()));
    text.push_str(&format!("created_unix = {}\n", now_unix()));
    text
}

fn cmd_study(args: &StudyArgs) -> Result<(), CliError> {
    let cfg = study_config_from_args(args)?;
    std::fs::create_dir_all(&args.out)?;
    let records_path = args.out.join("records.csv");
    let summary_path = args.out.join("summary.csv");
    let manifest_path = args.out.join("manifest.txt");
    for path in [&records_path, &summary_path, &manifest_path] {
        refuse_existing(path, args.force)?;
    }

    let family = cfg.family.tag().to_string();
    eprintln!(
        "study {family}: sizes {:?}, {} graphs/size, depth {}",
        cfg.acceptor_sizes, cfg.graphs_per_size, cfg.depth
    );
    let log_item = |records: &[RunRecord]| {
        if let Some(r) = records.first() {
            eprintln!(
                "  {family} n={} seed={} r_n={:.5} r_s={:.5} r_f={:.5}",
                r.n_a, r.graph_seed, r.r_n, r.r_s, r.r_f
            );
        }
    };
    let out = run_family_study_with_progress(&cfg, &log_item)?;
    for failure in &out.failures {
        eprintln!(
            "  warning: n={} seed={} failed: {}",
            failure.n_a, failure.graph_seed, failure.message
        );
    }

    std::fs::write(&records_path, csv::records_csv(&out.records))?;
    std::fs::write(&summary_path, csv::summary_csv(&family, &out.summaries))?;
    std::fs::write(&manifest_path, manifest_text(&cfg, &out))?;
    if let Some(bank_arg) = &args.bank {
        let bank_path = default_bank_path(Some(bank_arg.clone()));
        let mut bank = load_bank_or_empty(&bank_path)?;
        let mut entry = out.donor_entry.clone();
        entry.trained_at = now_unix();
        bank.insert(out.donor_key.clone(), entry)?;
        bank_save(&bank, &bank_path)?;
    }
    if args.plot {
        std::fs::write(
            args.out.join("accuracy.svg"),
            plot::accuracy_svg(&family, &out.summaries),
        )?;
        std::fs::write(
            args.out.join("time.svg"),
            plot::time_svg(&family, &out.summaries),
        )?;
        std::fs::write(
            args.out.join("efficiency.svg"),
            plot::efficiency_svg(&family, &out.summaries),
        )?;
    }

    println!(
        "donor r_f = {:.5}, targeted layer k = {}",
        out.donor_entry.donor_rf, out.resolved_layer
    );
    for s in &out.summaries {
        println!(
            "n_a={:<3} mean r_n={:.5} r_s={:.5} r_f={:.5} tau_s={:.3}s tau_f={:.3}s",
            s.n_a, s.mean_r_n, s.mean_r_s, s.mean_r_f, s.mean_tau_s, s.mean_tau_f
        );
    }
    println!("wrote {}", records_path.display());
    Ok(())
}

fn cmd_reg_study(args: &RegStudyArgs) -> Result<(), CliError> {
    validate_family_args(&args.family, args.donor.donor_n)?;
    refuse_existing(&args.out, args.force)?;
    let family = args.family.family();
    let reg = args.donor.regularizer()?;
    let layer = args
        .layer
        .unwrap_or_else(|| qaoa_transfer::pipeline::default_target_layer(family.tag()));
    if layer == 0 || layer > args.donor.depth {
        return Err(CliError::usage(format!(
            "layer {layer} outside 1..={}",
            args.donor.depth
        )));
    }
    let training = train_donor(
        &family,
        args.donor.donor_n,
        args.donor.depth,
        args.donor.dt,
        args.donor.index_base,
        &args.donor.adagrad(),
        &reg,
        args.donor.donor_seed,
    )?;
    let out = regularization_study(
        &family,
        &training.entry.params,
        &args.sizes,
        args.trials,
        &RegKind::ALL,
        args.donor.lambda,
        layer,
        &args.donor.adagrad(),
        &qaoa_transfer::optimizers::OptimizerConfig::NelderMead(Default::default()),
        args.seed,
    )?;
    std::fs::write(&args.out, csv::regstudy_csv(&out))?;
    for row in &out.rows {
        println!(
            "n_a={:<3} N={} violations nr/l1/l2/sm = {:?}",
            row.n_a, row.trials, row.violations
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_bank(args: &BankArgs) -> Result<(), CliError> {
    match &args.action {
        BankAction::List { bank } => {
            let path = default_bank_path(bank.clone());
            let bank = load_bank_or_empty(&path)?;
            if bank.is_empty() {
                println!("bank {} is empty", path.display());
                return Ok(());
            }
            for (key, entry) in bank.iter() {
                println!(
                    "{key}  seed={} r_f={:.5} digest={} trained_at={}",
                    entry.donor_seed, entry.donor_rf, entry.config_digest, entry.trained_at
                );
            }
            Ok(())
        }
        BankAction::Show {
            family,
            donor_n,
            depth,
            bank,
        } => {
            let path = default_bank_path(bank.clone());
            let bank = load_bank_or_empty(&path)?;
            let key = BankKey {
                family: *family,
                donor_n: *donor_n,
                depth: *depth,
            };
            let entry = bank
                .get(&key)
                .ok_or_else(|| CliError::runtime(format!("no bank entry for key {key}")))?;
            let mut single = ParameterBank::new();
            single.insert(key, entry.clone())?;
            print!("{}", bank_to_string(&single));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be >= 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: failed to configure worker pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::TrainDonor(args) => cmd_train_donor(args),
        Command::SelectLayer(args) => cmd_select_layer(args),
        Command::Study(args) => cmd_study(args),
        Command::RegStudy(args) => cmd_reg_study(args),
        Command::Bank(args) => cmd_bank(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
