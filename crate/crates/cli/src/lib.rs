//! `shufreg` command-line front end: generate synthetic data, fit the
//! estimators, and run the comparison studies.
//!
//! Exit status is 0 on success, 2 for usage errors, 3 for data errors and 4
//! for numerical failures. Errors are printed to stderr as
//! `error[<category>]: <message>`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shufreg::data_io::{
    read_numeric_csv, read_sequence_csv, write_csv, write_dataset_csv, write_json, RunManifest,
};
use shufreg::experiments::{self, plans, Pipeline, Plan, Preset, RealData, Scale};
use shufreg::synthetic::{generate, parameter_error, ShuffleMode, SyntheticSpec};
use shufreg::{
    fit_hard_em_grouped, fit_ols_baseline, fit_stochastic_em_grouped, EmOverrides, Error, ErrorCategory,
    FitResult, GroupedDataset, Groups, PermutationEstimate, Result,
};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "SHUFREG_OUT_DIR";

const LABEL: &str = "y";

#[derive(Debug, Parser)]
#[command(name = "shufreg", version, about = "Linear regression with shuffled labels")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory that output files are written to (created if missing)
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "shufreg-out")]
    pub out: PathBuf,

    /// Maximum number of worker threads (default: one per core)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Record per-fit wall time in reports (makes reruns differ)
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with a known weight vector and permutation
    Generate(GenerateArgs),
    /// Fit an estimator to a dataset
    Fit(FitArgs),
    /// Run a preset comparison study
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShuffleKind {
    Identity,
    Full,
    Grouped,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of rows
    #[arg(long)]
    pub n: usize,

    /// Number of features
    #[arg(long)]
    pub d: usize,

    /// Noise standard deviation
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,

    /// How the labels are shuffled
    #[arg(long, value_enum, default_value_t = ShuffleKind::Full)]
    pub shuffle: ShuffleKind,

    /// Number of equal-sized groups for the grouped shuffle
    #[arg(long, default_value_t = 1)]
    pub groups: usize,

    /// Fraction of rows swapped across groups after the grouped shuffle
    #[arg(long, default_value_t = 0.0)]
    pub crossbin_fraction: f64,

    /// Random seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ols,
    HardEm,
    StochasticEm,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::HardEm => "hard-em",
            Method::StochasticEm => "stochastic-em",
        }
    }
}

/// Overrides of the estimator defaults, which are derived from the row count.
#[derive(Debug, Clone, Args)]
pub struct EmArgs {
    /// Outer EM iterations [default: 50]
    #[arg(long)]
    pub iterations: Option<usize>,

    /// Metropolis-Hastings steps per iteration [default: ceil(n ln n)]
    #[arg(long)]
    pub sampling_steps: Option<usize>,

    /// Burn-in steps per iteration [default: n]
    #[arg(long)]
    pub burn_steps: Option<usize>,

    /// Keep every g-th step after burn-in [default: max(1, n/10)]
    #[arg(long)]
    pub sample_gap: Option<usize>,

    /// Hard EM random restarts [default: n]
    #[arg(long)]
    pub restarts: Option<usize>,

    /// Sample against the observed labels every iteration instead of the previous estimate
    #[arg(long)]
    pub non_cumulative: bool,
}

impl EmArgs {
    fn overrides(&self) -> EmOverrides {
        EmOverrides {
            iterations: self.iterations,
            sampling_steps: self.sampling_steps,
            burn_steps: self.burn_steps,
            sample_gap: self.sample_gap,
            restarts: self.restarts,
            non_cumulative: self.non_cumulative,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV with a header row
    #[arg(long)]
    pub data: PathBuf,

    /// Name of the label column
    #[arg(long, default_value = LABEL)]
    pub label: String,

    /// Estimator
    #[arg(long, value_enum, default_value_t = Method::StochasticEm)]
    pub method: Method,

    /// Group structure: a group count (equal-sized contiguous groups) or a CSV with a `group` column
    #[arg(long)]
    pub groups: Option<String>,

    /// Truth CSV from `generate`; adds the parameter error to the output
    #[arg(long)]
    pub truth: Option<PathBuf>,

    /// Append a column of ones to the features
    #[arg(long)]
    pub intercept: bool,

    #[command(flatten)]
    pub em: EmArgs,

    /// Random seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    FeatureGrouped,
    LabelGrouped,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Study to run: fig2, fig3, fig4, fig6 or appendixB
    #[arg(long, value_parser = parse_preset)]
    pub preset: Preset,

    /// Problem sizes
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    pub scale: ScaleArg,

    /// Real dataset for fig6 (numeric CSV, or `sequence,label` CSV for the label-grouped pipeline)
    #[arg(long)]
    pub dataset: Option<PathBuf>,

    /// How real-data rows are grouped
    #[arg(long, value_enum, default_value_t = PipelineArg::FeatureGrouped)]
    pub pipeline: PipelineArg,

    /// Label column for the feature-grouped pipeline
    #[arg(long, default_value = "LSTAT")]
    pub label: String,

    /// Column whose value bins rows in the feature-grouped pipeline
    #[arg(long, default_value = "MEDV")]
    pub group_feature: String,

    /// Largest k-mer length for the label-grouped pipeline
    #[arg(long, default_value_t = 3)]
    pub max_k: usize,

    /// Whether to append a column of ones to real-data features
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub intercept: bool,

    #[command(flatten)]
    pub em: EmArgs,

    /// Random seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name), runs the command and maps the
/// outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            eprint!("error[usage]: {}", text.strip_prefix("error: ").unwrap_or(&text));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error[{}]: {e}", category.as_str());
            ExitCode::from(exit_code(category))
        }
    }
}

pub fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Usage => 2,
        ErrorCategory::Data => 3,
        ErrorCategory::Numerical => 4,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
        }
        // Fails only if the pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    fs::create_dir_all(&cli.global.out).map_err(|e| Error::io(&cli.global.out, e))?;
    match &cli.command {
        Command::Generate(args) => cmd_generate(&cli.global, args),
        Command::Fit(args) => cmd_fit(&cli.global, args),
        Command::Experiment(args) => cmd_experiment(&cli.global, args),
    }
}

fn feature_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

fn out_file(global: &GlobalArgs, name: &str) -> PathBuf {
    global.out.join(name)
}

fn cmd_generate(global: &GlobalArgs, args: &GenerateArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n: args.n,
        d: args.d,
        sigma: args.sigma,
        seed: args.seed,
    };
    spec.validate()?;
    if args.shuffle != ShuffleKind::Grouped && (args.groups != 1 || args.crossbin_fraction != 0.0) {
        return Err(Error::InvalidConfig(
            "--groups and --crossbin-fraction apply only to --shuffle grouped".into(),
        ));
    }
    let groups = Groups::equal_sized(args.n, args.groups)?;
    let mode = match args.shuffle {
        ShuffleKind::Identity => ShuffleMode::Identity,
        ShuffleKind::Full => ShuffleMode::Full,
        ShuffleKind::Grouped => ShuffleMode::Grouped {
            groups: groups.clone(),
            crossbin_fraction: args.crossbin_fraction,
        },
    };
    let inst = generate(&spec, &mode)?;

    let dataset = out_file(global, "dataset.csv");
    write_dataset_csv(&dataset, &feature_names(args.d), &inst.x, LABEL, &inst.y_observed)?;

    let truth = out_file(global, "truth.csv");
    let w_rows = inst
        .w_true
        .iter()
        .enumerate()
        .map(|(j, w)| ["w".to_string(), j.to_string(), w.to_string()]);
    let pi_rows = inst
        .pi_true
        .mapping()
        .iter()
        .enumerate()
        .map(|(i, src)| ["pi".to_string(), i.to_string(), src.to_string()]);
    write_csv(&truth, &["kind", "index", "value"], w_rows.chain(pi_rows))?;

    let groups_path = out_file(global, "groups.csv");
    let group_rows = (0..args.n).map(|i| {
        let g = groups.group_of(i).expect("row inside groups");
        [i.to_string(), g.to_string()]
    });
    write_csv(&groups_path, &["row", "group"], group_rows)?;

    let mut manifest = RunManifest::new("generate")
        .seed("seed", args.seed)
        .with_config(&serde_json::json!({
            "n": args.n,
            "d": args.d,
            "sigma": args.sigma,
            "shuffle": format!("{:?}", args.shuffle).to_lowercase(),
            "groups": args.groups,
            "crossbin_fraction": args.crossbin_fraction,
        }));
    manifest.outputs = vec!["dataset.csv".into(), "truth.csv".into(), "groups.csv".into()];
    write_json(out_file(global, "manifest.json"), &manifest)?;
    eprintln!("wrote {} rows to {}", args.n, dataset.display());
    Ok(())
}

/// `w_true` and `pi_true` read back from a truth CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub weights: Vec<f64>,
    pub permutation: Vec<usize>,
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut truth = Truth {
        weights: Vec::new(),
        permutation: Vec::new(),
    };
    let bad = |line: usize, column: &str, message: String| Error::Parse {
        path: path.into(),
        row: line,
        column: column.into(),
        message,
    };
    let header = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["kind", "index", "value"] {
        return Err(Error::Format {
            path: path.into(),
            message: "expected header kind,index,value".into(),
        });
    }
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let index: usize = record[1].trim().parse().map_err(|e| bad(line, "index", format!("{e}")))?;
        let value = record[2].trim();
        let (list_len, expected) = match &record[0] {
            "w" => {
                let v: f64 = value.parse().map_err(|e| bad(line, "value", format!("{e}")))?;
                truth.weights.push(v);
                (truth.weights.len(), index + 1)
            }
            "pi" => {
                let v: usize = value.parse().map_err(|e| bad(line, "value", format!("{e}")))?;
                truth.permutation.push(v);
                (truth.permutation.len(), index + 1)
            }
            other => return Err(bad(line, "kind", format!("unknown kind {other:?}"))),
        };
        if list_len != expected {
            return Err(bad(line, "index", "indices must start at 0 and increase by 1".into()));
        }
    }
    Ok(truth)
}

/// A count gives equal-sized contiguous groups; anything else is read as a
/// CSV whose `group` column labels each row, with labels non-decreasing.
pub fn resolve_groups(spec: &str, n: usize) -> Result<Groups> {
    if let Ok(count) = spec.parse::<usize>() {
        return Groups::equal_sized(n, count);
    }
    let path = Path::new(spec);
    let table = read_numeric_csv(path)?;
    let column = table.column(table.column_index("group")?);
    if column.len() != n {
        return Err(Error::Format {
            path: path.into(),
            message: format!("{} group labels for {n} rows", column.len()),
        });
    }
    let mut offsets = vec![0];
    for i in 1..n {
        if column[i] < column[i - 1] {
            return Err(Error::Parse {
                path: path.into(),
                row: i + 2,
                column: "group".into(),
                message: "group labels must be non-decreasing (rows of a group are contiguous)".into(),
            });
        }
        if column[i] != column[i - 1] {
            offsets.push(i);
        }
    }
    offsets.push(n);
    Groups::for_rows(offsets, n)
}

fn cmd_fit(global: &GlobalArgs, args: &FitArgs) -> Result<()> {
    let table = read_numeric_csv(&args.data)?;
    let data = table.labeled(&args.label, args.intercept)?;
    let n = data.y.len();
    let groups = match &args.groups {
        Some(spec) => resolve_groups(spec, n)?,
        None => Groups::single(n),
    };
    let cfg = args.em.overrides().resolve(n, args.seed);
    let dataset = GroupedDataset::new(data.x, data.y, groups)?;
    let fit: FitResult = match args.method {
        Method::Ols => fit_ols_baseline(&dataset.x, &dataset.y)?,
        Method::HardEm => fit_hard_em_grouped(&dataset, &cfg)?,
        Method::StochasticEm => fit_stochastic_em_grouped(&dataset, &cfg)?,
    };
    let truth = args.truth.as_deref().map(read_truth).transpose()?;
    let w_true = match &truth {
        Some(t) if t.weights.len() != fit.weights.len() => {
            return Err(Error::DimensionMismatch(format!(
                "truth has {} weights, model has {}",
                t.weights.len(),
                fit.weights.len()
            )))
        }
        Some(t) => Some(t.weights.as_slice()),
        None => None,
    };

    let mut summary: Vec<[String; 2]> = data
        .feature_names
        .iter()
        .zip(&fit.weights)
        .map(|(name, w)| [format!("w:{name}"), w.to_string()])
        .collect();
    summary.push(["sigma2".into(), fit.sigma2.to_string()]);
    summary.push(["residual_ss".into(), fit.residual_ss.to_string()]);
    if let Some(w) = w_true {
        summary.push(["param_error".into(), parameter_error(&fit.weights, w).to_string()]);
    }
    if let PermutationEstimate::Hard(p) = &fit.permutation_estimate {
        summary.push(["permutation_is_identity".into(), p.is_identity().to_string()]);
    }
    write_csv(out_file(global, "fit.csv"), &["name", "value"], &summary)?;

    let mut header: Vec<String> = vec!["iteration".into(), "residual_ss".into(), "acceptance_rate".into()];
    if w_true.is_some() {
        header.push("param_error".into());
    }
    header.extend(data.feature_names.iter().map(|f| format!("w:{f}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let trace = fit.trace.iter().map(|t| {
        let mut row = vec![
            t.iteration.to_string(),
            t.residual_ss.to_string(),
            t.acceptance_rate.map_or_else(String::new, |a| a.to_string()),
        ];
        if let Some(w) = w_true {
            row.push(parameter_error(&t.weights, w).to_string());
        }
        row.extend(t.weights.iter().map(f64::to_string));
        row
    });
    write_csv(out_file(global, "trace.csv"), &header, trace)?;

    let mut manifest = RunManifest::new("fit")
        .seed("seed", args.seed)
        .input(&args.data)?
        .choice("method", args.method.name())
        .choice("label", &args.label)
        .choice("intercept", args.intercept)
        .choice("groups", args.groups.as_deref().unwrap_or("1"))
        .choice("non_cumulative", cfg.non_cumulative)
        .with_config(&cfg);
    if let Some(path) = &args.truth {
        manifest = manifest.input(path)?;
    }
    if let Some(spec) = &args.groups {
        if spec.parse::<usize>().is_err() {
            manifest = manifest.input(spec)?;
        }
    }
    manifest.outputs = vec!["fit.csv".into(), "trace.csv".into()];
    write_json(out_file(global, "manifest.json"), &manifest)?;
    for [name, value] in &summary {
        println!("{name}\t{value}");
    }
    Ok(())
}

fn load_realdata(args: &ExperimentArgs, pipeline: Pipeline) -> Result<Option<RealData>> {
    let Some(path) = &args.dataset else {
        return Ok(None);
    };
    let data = match pipeline {
        Pipeline::FeatureGrouped => {
            let table = read_numeric_csv(path)?;
            experiments::prepare_feature_grouped(&table, &args.label, &args.group_feature, args.intercept)?
        }
        Pipeline::LabelGrouped => {
            let table = read_sequence_csv(path)?;
            experiments::prepare_label_grouped(&table, args.max_k, args.intercept)?
        }
    };
    Ok(Some(data))
}

fn cmd_experiment(global: &GlobalArgs, args: &ExperimentArgs) -> Result<()> {
    let scale = match args.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let pipeline = match args.pipeline {
        PipelineArg::FeatureGrouped => Pipeline::FeatureGrouped,
        PipelineArg::LabelGrouped => Pipeline::LabelGrouped,
    };
    let mut plans: Vec<Plan> = plans(args.preset, scale, args.seed, pipeline);
    let overrides = args.em.overrides();
    for plan in &mut plans {
        *plan.em_mut() = overrides.clone();
    }
    let needs_data = plans.iter().any(|p| matches!(p, Plan::RealData(_)));
    let data = if needs_data { load_realdata(args, pipeline)? } else { None };
    if needs_data && data.is_none() {
        return Err(Error::InvalidConfig(format!(
            "preset {} needs --dataset",
            args.preset
        )));
    }

    let mut reports = Vec::with_capacity(plans.len());
    for plan in &plans {
        let report = plan.run(data.as_ref())?;
        eprintln!("{}: {} rows", plan.name(), report.rows.len());
        reports.push(report);
    }
    let dir = global.out.join(args.preset.name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    experiments::write_trials_csv(dir.join("trials.csv"), &reports, global.timing)?;
    experiments::write_aggregates_csv(dir.join("aggregates.csv"), &reports)?;

    let mut manifest = RunManifest::new("experiment")
        .seed("seed", args.seed)
        .choice("preset", args.preset)
        .choice("scale", format!("{:?}", args.scale).to_lowercase())
        .choice("timing", global.timing)
        .with_config(&plans);
    if let (Some(path), Some(data)) = (&args.dataset, &data) {
        manifest = manifest.input(path)?.choice("pipeline", format!("{pipeline:?}"));
        for (k, v) in &data.choices {
            manifest = manifest.choice(k, v);
        }
    }
    manifest.outputs = vec!["trials.csv".into(), "aggregates.csv".into()];
    write_json(dir.join("manifest.json"), &manifest)?;
    Ok(())
}
