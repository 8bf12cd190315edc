//! Command-line interface. Every subcommand reads an optional section of the
//! `--manifest` TOML file; flags given on the command line override it.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::augment::{fit_surrogate, generate, write_traces, PipelineConfig};
use crate::bench::ablation::{ablation_grid, write_ablation};
use crate::bench::classifiers::ClassifierSpec;
use crate::bench::protocol::{
    mean_scores, read_results, run_benchmark, write_failures, write_results, BenchConfig, BenchDataset, Timing,
};
use crate::bench::stats::friedman_nemenyi;
use crate::constraints::{audit, rules_from_json, DomainRule};
use crate::datagen::{
    self, builtin, builtin_names, config_hash, generate_domain, generate_shape, shape_rules, DomainConfig,
    GenerationMeta, ShapeKind,
};
use crate::dpg::import_constraints;
use crate::error::{Error, Result};
use crate::ga::FitnessWeights;
use crate::report;
use crate::samplers::{required_for, SamplerSpec};
use crate::tabular::{load_csv, write_csv, Dataset, LabelColumn};

#[derive(Debug, Parser)]
#[command(name = "dpgda", version, about = "Constraint-aware minority oversampling")]
pub struct Cli {
    /// TOML file with one table per subcommand, e.g. `[augment]`.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic domains and shapes with their rules.
    GenData(GenDataFlags),
    /// Train the surrogate and export class bounds.
    ExtractConstraints(ExtractFlags),
    /// Add constraint-aware synthetic minority samples.
    Augment(AugmentFlags),
    /// Audit a dataset against domain rules.
    Audit(AuditFlags),
    /// Run the benchmarking protocol.
    Bench(BenchFlags),
    /// Friedman/Nemenyi statistics over a results table.
    Stats(StatsFlags),
    /// Rank all fitness-weight triples of the grid.
    Ablate(AblateFlags),
    /// Render a table or figure.
    Report(ReportFlags),
}

impl Command {
    fn section(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::ExtractConstraints(_) => "extract-constraints",
            Command::Augment(_) => "augment",
            Command::Audit(_) => "audit",
            Command::Bench(_) => "bench",
            Command::Stats(_) => "stats",
            Command::Ablate(_) => "ablate",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataFlags {
    /// Domain TOML path, built-in domain, shape name, or `all`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub config: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        GenDataConfig { config: "all".into(), seed: 0, out: None }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// Label column: name, 0-based index or `last`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_col: Option<String>,
    /// TOML file with forest settings.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forest_cfg: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_support: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Also write the predicate graph in DOT format.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub train: Option<PathBuf>,
    pub label_col: String,
    pub forest_cfg: Option<PathBuf>,
    pub min_support: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub dot: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Args, Serialize)]
pub struct AugmentFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_col: Option<String>,
    /// Class to augment; defaults to the smallest class.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minority: Option<String>,
    /// Target share of the class, in (0,1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Fitness weights `w1,w2,w3`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    /// TOML file with pipeline settings.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline_cfg: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Directory for `trace_<i>.json|csv` and `constraints.json`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_dir: Option<PathBuf>,
    /// Also write only the synthetic rows to this CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub train: Option<PathBuf>,
    pub label_col: String,
    pub minority: Option<String>,
    pub level: f64,
    pub weights: Option<String>,
    pub pipeline_cfg: Option<PathBuf>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub trace_dir: Option<PathBuf>,
    pub synthetic_out: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            train: None,
            label_col: "last".into(),
            minority: None,
            level: 0.3,
            weights: None,
            pipeline_cfg: None,
            seed: 0,
            out: None,
            trace_dir: None,
            synthetic_out: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AuditFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_col: Option<String>,
    /// Domain rules JSON, or a constraints document together with `--class`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    /// With a constraints document: the class whose box is audited.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub data: Option<PathBuf>,
    pub label_col: String,
    pub rules: Option<PathBuf>,
    pub class: Option<String>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchFlags {
    /// Directory of `<name>.csv` files with optional `<name>.rules.json`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datasets: Option<PathBuf>,
    /// Comma list of none, dpgda, ros, smote, jitter.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<String>,
    /// Comma list of target minority percentages.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Comma list of decision_tree, knn, logistic_regression.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifiers: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// `wall` records augmentation time, `none` writes 0.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline_cfg: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchCliConfig {
    pub datasets: Option<PathBuf>,
    pub methods: String,
    pub levels: String,
    pub reps: usize,
    pub classifiers: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub timing: String,
    pub train_fraction: f64,
    pub pipeline_cfg: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

impl Default for BenchCliConfig {
    fn default() -> Self {
        BenchCliConfig {
            datasets: None,
            methods: "dpgda,ros,smote,jitter".into(),
            levels: "15,30,50".into(),
            reps: 10,
            classifiers: "decision_tree,knn,logistic_regression".into(),
            seed: 0,
            out: None,
            jobs: None,
            timing: "wall".into(),
            train_fraction: 0.8,
            pipeline_cfg: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct StatsFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub results: Option<PathBuf>,
    pub alpha: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { results: None, alpha: 0.05, seed: 0, out: None }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AblateFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datasets: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Comma list of values each weight takes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifiers: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline_cfg: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    pub datasets: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub values: String,
    pub levels: String,
    pub reps: usize,
    pub classifiers: String,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub pipeline_cfg: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

impl Default for AblateConfig {
    fn default() -> Self {
        AblateConfig {
            datasets: None,
            out: None,
            values: "1,2,3".into(),
            levels: "15,30,50".into(),
            reps: 10,
            classifiers: "decision_tree,knn,logistic_regression".into(),
            seed: 0,
            jobs: None,
            pipeline_cfg: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    DeltaTable,
    EvoHeatmap,
    Bar,
    ViolationHeatmap,
    Scatter,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportFlags {
    #[serde(skip)]
    pub kind: ReportKind,
    /// Trace JSON, or (violation-heatmap) results CSV, or (scatter) data CSV.
    #[arg(long = "in")]
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Comma list of feature names for trace figures.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<String>,
    /// Scatter only: rules JSON and the two plotted features.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub features: Option<String>,
    pub rules: Option<PathBuf>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub seed: u64,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn progress(cmd: &str, msg: impl std::fmt::Display) {
    eprintln!("dpgda {cmd}: {msg}");
}

/// Manifest section overlaid with the flags that were given.
fn resolve<C: DeserializeOwned>(manifest: Option<&toml::Table>, section: &str, flags: &impl Serialize) -> Result<C> {
    let mut table = match manifest.and_then(|m| m.get(section)) {
        Some(toml::Value::Table(t)) => t.clone(),
        Some(_) => return Err(invalid(format!("manifest entry `{section}` must be a table"))),
        None => toml::Table::new(),
    };
    let given = toml::Table::try_from(flags).map_err(|e| invalid(e.to_string()))?;
    table.extend(given);
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| invalid(format!("[{section}]: {e}")))
}

fn require<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| invalid(format!("--{flag} is required")))
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn label_col(s: &str) -> LabelColumn {
    s.parse().unwrap_or_default()
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(item).collect()
}

/// Percentages (`15,30,50`) or fractions (`0.15,...`).
fn parse_levels(s: &str) -> Result<Vec<f64>> {
    parse_list(s, |p| {
        let v: f64 = p.parse().map_err(|_| invalid(format!("level `{p}` is not a number")))?;
        let v = if v >= 1.0 { v / 100.0 } else { v };
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(invalid(format!("level `{p}` must lie in (0, 100) percent")))
        }
    })
}

fn class_by_name(ds: &Dataset, name: &str) -> Result<usize> {
    ds.class_index(name)
        .ok_or_else(|| invalid(format!("class `{name}` not in the data; known: {:?}", ds.class_names())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

/// `<name>.csv` files of `dir` in name order, with `<name>.rules.json` when
/// present. The label is the last column.
pub fn load_bench_dir(dir: &Path) -> Result<Vec<BenchDataset>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let rules_path = dir.join(format!("{name}.rules.json"));
        let rules = if rules_path.exists() { Some(rules_from_json(&rules_path)?) } else { None };
        out.push(BenchDataset { data: load_csv(&p, &LabelColumn::Last)?, name, rules });
    }
    if out.is_empty() {
        return Err(invalid(format!("no .csv datasets in {}", dir.display())));
    }
    Ok(out)
}

fn pipeline_from(file: &Option<PathBuf>, base: PipelineConfig) -> Result<PipelineConfig> {
    match file {
        Some(p) => read_toml(p),
        None => Ok(base),
    }
}

#[allow(clippy::too_many_arguments)]
fn bench_config(
    methods: &str,
    levels: &str,
    reps: usize,
    classifiers: &str,
    seed: u64,
    train_fraction: f64,
    pipeline: PipelineConfig,
    jobs: Option<usize>,
    timing: Timing,
) -> Result<BenchConfig> {
    let cfg = BenchConfig {
        methods: parse_list(methods, str::parse::<SamplerSpec>)?,
        levels: parse_levels(levels)?,
        reps,
        classifiers: parse_list(classifiers, str::parse::<ClassifierSpec>)?,
        master_seed: seed,
        train_fraction,
        pipeline,
        timing,
        jobs,
        progress: true,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 3 for infeasible augmentation, 1 for I/O and runtime failures, 2 for
/// everything caused by invalid input.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InfeasibleAugmentation { .. } => 3,
        Error::Io { .. } | Error::Generation(_) | Error::Stats(_) => 1,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let manifest: Option<toml::Table> = match &cli.manifest {
        Some(p) => Some(read_toml(p)?),
        None => None,
    };
    let m = manifest.as_ref();
    let section = cli.command.section();
    macro_rules! effective {
        ($ty:ty, $flags:expr) => {{
            let cfg: $ty = resolve(m, section, $flags)?;
            if cli.print_config {
                let mut doc = toml::Table::new();
                doc.insert(section.into(), toml::Value::try_from(&cfg).map_err(|e| invalid(e.to_string()))?);
                print!("{}", toml::to_string(&doc).map_err(|e| invalid(e.to_string()))?);
                return Ok(());
            }
            cfg
        }};
    }
    match &cli.command {
        Command::GenData(f) => gen_data(effective!(GenDataConfig, f)),
        Command::ExtractConstraints(f) => extract(effective!(ExtractConfig, f)),
        Command::Augment(f) => augment(effective!(AugmentConfig, f)),
        Command::Audit(f) => audit_cmd(effective!(AuditConfig, f)),
        Command::Bench(f) => bench(effective!(BenchCliConfig, f)),
        Command::Stats(f) => stats(effective!(StatsConfig, f)),
        Command::Ablate(f) => ablate(effective!(AblateConfig, f)),
        Command::Report(f) => report_cmd(f.kind, effective!(ReportConfig, f)),
    }
}

fn gen_data(cfg: GenDataConfig) -> Result<()> {
    let out = require(&cfg.out, "out")?;
    let shape = |kind: ShapeKind| -> Result<()> {
        let ds = generate_shape(kind, 600, (5, 1), cfg.seed)?;
        let meta = GenerationMeta {
            name: kind.name().into(),
            seed: cfg.seed,
            config_hash: config_hash(&(kind, 600usize, (5u32, 1u32)))?,
            n_samples: ds.n_samples(),
            class_counts: ds.class_counts(),
        };
        let path = datagen::write_outputs(&ds, &shape_rules(), &meta, out)?;
        progress("gen-data", format!("wrote {}", path.display()));
        Ok(())
    };
    let domain = |dc: DomainConfig| -> Result<()> {
        let (ds, rules) = generate_domain(&dc, cfg.seed)?;
        let meta = GenerationMeta {
            name: dc.name.clone(),
            seed: cfg.seed,
            config_hash: config_hash(&dc)?,
            n_samples: ds.n_samples(),
            class_counts: ds.class_counts(),
        };
        let path = datagen::write_outputs(&ds, &rules, &meta, out)?;
        progress("gen-data", format!("wrote {}", path.display()));
        Ok(())
    };
    match cfg.config.as_str() {
        "all" => {
            for name in builtin_names() {
                domain(builtin(name)?)?;
            }
            ShapeKind::ALL.into_iter().try_for_each(shape)
        }
        name if builtin_names().contains(&name) => domain(builtin(name)?),
        name if name.parse::<ShapeKind>().is_ok() => shape(name.parse()?),
        path => domain(DomainConfig::from_path(Path::new(path))?),
    }
}

fn extract(cfg: ExtractConfig) -> Result<()> {
    let train = load_csv(require(&cfg.train, "train")?, &label_col(&cfg.label_col))?;
    let out = require(&cfg.out, "out")?;
    let mut pipeline = cfg.pipeline.clone();
    if let Some(p) = &cfg.forest_cfg {
        pipeline.forest = read_toml(p)?;
    }
    if let Some(s) = cfg.min_support {
        pipeline.min_support = s;
    }
    let sur = fit_surrogate(&train, &pipeline, cfg.seed)?;
    progress("extract-constraints", format!("surrogate holdout macro F1 {:.4}", sur.holdout_f1));
    write_json(out, &sur.constraints)?;
    if let Some(dot) = &cfg.dot {
        fs::write(dot, sur.dpg.to_dot(train.feature_names(), train.class_names())).map_err(|e| Error::io(dot, e))?;
    }
    progress("extract-constraints", format!("wrote {}", out.display()));
    Ok(())
}

fn augment(cfg: AugmentConfig) -> Result<()> {
    let train = load_csv(require(&cfg.train, "train")?, &label_col(&cfg.label_col))?;
    let out = require(&cfg.out, "out")?;
    let mut pipeline = pipeline_from(&cfg.pipeline_cfg, cfg.pipeline.clone())?;
    if let Some(w) = &cfg.weights {
        pipeline.weights = w.parse::<FitnessWeights>()?;
    }
    let minority = match &cfg.minority {
        Some(name) => class_by_name(&train, name)?,
        None => train.minority_class().ok_or(Error::EmptyDataset)?,
    };
    let m = required_for(&train, minority, cfg.level)?;
    progress(
        "augment",
        format!("class `{}`: {m} synthetic samples to reach {}", train.class_names()[minority], cfg.level),
    );
    let aug = generate(&train, minority, m, &pipeline, cfg.seed)?;
    if m == 0 {
        progress("augment", "notice: target level already met, data copied unchanged");
    }
    write_csv(&aug.dataset, out)?;
    let constraints_path = match &cfg.trace_dir {
        Some(dir) => {
            write_traces(&aug.traces, train.feature_names(), dir)?;
            dir.join("constraints.json")
        }
        None => out.with_file_name("constraints.json"),
    };
    write_json(&constraints_path, &aug.surrogate.constraints)?;
    if let Some(p) = &cfg.synthetic_out {
        let synth = Dataset::new(
            aug.synthetic_rows(),
            vec![minority; aug.n_synthetic()],
            train.feature_names().to_vec(),
            train.class_names().to_vec(),
        )?
        .with_label_name(train.label_name());
        write_csv(&synth, p)?;
    }
    progress("augment", format!("wrote {} ({} rows)", out.display(), aug.dataset.n_samples()));
    Ok(())
}

fn audit_cmd(cfg: AuditConfig) -> Result<()> {
    let data = load_csv(require(&cfg.data, "data")?, &label_col(&cfg.label_col))?;
    let rules_path = require(&cfg.rules, "rules")?;
    let rules: Vec<DomainRule> = match &cfg.class {
        None => rules_from_json(rules_path)?,
        Some(class) => {
            let text = fs::read_to_string(rules_path).map_err(|e| Error::io(rules_path, e))?;
            let doc: serde_json::Value = serde_json::from_str(&text)?;
            // the audited file may hold a single class, so names come from the document
            let names: Vec<String> = doc
                .get("class_bounds")
                .and_then(serde_json::Value::as_object)
                .map(|m| m.keys().cloned().collect())
                .unwrap_or_default();
            let c = names
                .iter()
                .position(|n| n == class)
                .ok_or_else(|| invalid(format!("class `{class}` not in {}; known: {names:?}", rules_path.display())))?;
            let (bounds, _) = import_constraints(&doc, data.feature_names(), &names)?;
            crate::constraints::rules_from_bounds(&bounds, c, data.feature_names())?
        }
    };
    let report = audit(&data, &rules)?;
    progress(
        "audit",
        format!("{} of {} rows violate, rate {}", report.n_violating_samples, report.n_synth, report.violation_rate),
    );
    match &cfg.out {
        Some(out) => write_json(out, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn bench(cfg: BenchCliConfig) -> Result<()> {
    let datasets = load_bench_dir(require(&cfg.datasets, "datasets")?)?;
    let out = require(&cfg.out, "out")?;
    let pipeline = pipeline_from(&cfg.pipeline_cfg, cfg.pipeline.clone())?;
    let bc = bench_config(
        &cfg.methods,
        &cfg.levels,
        cfg.reps,
        &cfg.classifiers,
        cfg.seed,
        cfg.train_fraction,
        pipeline,
        cfg.jobs,
        cfg.timing.parse()?,
    )?;
    let table = run_benchmark(&datasets, &bc)?;
    write_results(&table.results, out)?;
    if !table.failures.is_empty() {
        let fpath = out.with_extension("failures.csv");
        write_failures(&table.failures, &fpath)?;
        progress("bench", format!("{} failed cells listed in {}", table.failures.len(), fpath.display()));
    }
    progress("bench", format!("wrote {} rows to {}", table.results.len(), out.display()));
    Ok(())
}

fn stats(cfg: StatsConfig) -> Result<()> {
    let results = read_results(require(&cfg.results, "results")?)?;
    let table = mean_scores(&results);
    if let Some((i, j)) = (0..table.datasets.len())
        .flat_map(|i| (0..table.methods.len()).map(move |j| (i, j)))
        .find(|&(i, j)| !table.scores[i][j].is_finite())
    {
        return Err(Error::Stats(format!(
            "missing cell: method `{}` on dataset `{}`",
            table.methods[j], table.datasets[i]
        )));
    }
    let summary = friedman_nemenyi(&table.scores, &table.methods, cfg.alpha)?;
    progress(
        "stats",
        format!("chi2_F {} p {} CD {}", summary.friedman_statistic, summary.p_value, summary.critical_difference),
    );
    match &cfg.out {
        Some(out) => write_json(out, &summary),
        None => {
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

fn ablate(cfg: AblateConfig) -> Result<()> {
    let datasets = load_bench_dir(require(&cfg.datasets, "datasets")?)?;
    let out = require(&cfg.out, "out")?;
    let values =
        parse_list(&cfg.values, |p| p.parse::<f64>().map_err(|_| invalid(format!("weight `{p}` is not a number"))))?;
    let pipeline = pipeline_from(&cfg.pipeline_cfg, cfg.pipeline.clone())?;
    let mut bc = bench_config(
        "dpgda",
        &cfg.levels,
        cfg.reps,
        &cfg.classifiers,
        cfg.seed,
        0.8,
        pipeline,
        cfg.jobs,
        Timing::None,
    )?;
    bc.progress = false;
    let rows = ablation_grid(&datasets, &bc, &values)?;
    write_ablation(&rows, out)?;
    progress("ablate", format!("wrote {} configurations to {}", rows.len(), out.display()));
    Ok(())
}

fn report_cmd(kind: ReportKind, cfg: ReportConfig) -> Result<()> {
    let input = require(&cfg.input, "in")?;
    let out = require(&cfg.out, "out")?;
    let trace_inputs = || -> Result<(Vec<crate::ga::TraceRecord>, Vec<String>)> {
        let trace = crate::augment::read_trace(input)?;
        let d = trace[0].delta.len();
        let names = match &cfg.features {
            Some(s) => parse_list(s, |p| Ok(p.to_string()))?,
            None => (0..d).map(|j| format!("f{j}")).collect(),
        };
        Ok((trace, names))
    };
    match kind {
        ReportKind::DeltaTable => {
            let (trace, names) = trace_inputs()?;
            let table = report::delta_table(&trace, &names)?;
            fs::write(out, table.to_text()).map_err(|e| Error::io(out, e))?;
            let csv = out.with_extension("csv");
            fs::write(&csv, table.to_csv()).map_err(|e| Error::io(&csv, e))?;
        }
        ReportKind::EvoHeatmap => {
            let (trace, names) = trace_inputs()?;
            report::evolution_heatmap(&trace, &names)?.write(out)?;
        }
        ReportKind::Bar => {
            let (trace, names) = trace_inputs()?;
            report::cumulative_change_barplot(&trace, &names)?.write(out)?;
        }
        ReportKind::ViolationHeatmap => {
            report::violation_heatmap(&read_results(input)?)?.write(out)?;
        }
        ReportKind::Scatter => {
            let data = load_csv(input, &LabelColumn::Last)?;
            let rules = rules_from_json(require(&cfg.rules, "rules")?)?;
            report::violation_scatter(&data, &rules, require(&cfg.x, "x")?, require(&cfg.y, "y")?)?.write(out)?;
        }
    }
    progress("report", format!("wrote {}", out.display()));
    Ok(())
}
