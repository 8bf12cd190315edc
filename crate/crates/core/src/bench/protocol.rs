//! The benchmarking protocol: split, augment the training part only, train
//! each classifier, score on the untouched test part.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_dataset, PipelineConfig};
use crate::constraints::{audit_rows, DomainRule};
use crate::error::{Error, Result};
use crate::samplers::{required_for, SamplerSpec};
use crate::seed;
use crate::tabular::{stratified_split, ClassId, Dataset, SplitSpec};

use super::classifiers::{train_classifier, ClassifierSpec};
use super::metrics::macro_metrics;

pub const RESULT_COLUMNS: [&str; 10] =
    ["dataset", "method", "level", "rep", "classifier", "f1", "precision", "recall", "runtime_s", "violation_rate"];

#[derive(Debug, Clone)]
pub struct BenchDataset {
    pub name: String,
    pub data: Dataset,
    /// Rules the synthetic rows are audited against, when known.
    pub rules: Option<Vec<DomainRule>>,
}

/// How augmentation runtime is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    #[default]
    Wall,
    /// Records 0, making result tables byte-reproducible.
    None,
}

impl FromStr for Timing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(Timing::Wall),
            "none" => Ok(Timing::None),
            other => Err(Error::InvalidConfig(format!("timing must be `wall` or `none`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub methods: Vec<SamplerSpec>,
    pub levels: Vec<f64>,
    pub reps: usize,
    pub classifiers: Vec<ClassifierSpec>,
    pub master_seed: u64,
    pub train_fraction: f64,
    pub pipeline: PipelineConfig,
    pub timing: Timing,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Print one line per finished cell on stderr.
    pub progress: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            methods: vec![
                SamplerSpec::Dpgda,
                SamplerSpec::Ros,
                SamplerSpec::Smote { k: 5 },
                SamplerSpec::Jitter { scale: 0.3 },
            ],
            levels: vec![0.15, 0.30, 0.50],
            reps: 10,
            classifiers: ClassifierSpec::all(),
            master_seed: 0,
            train_fraction: 0.8,
            pipeline: PipelineConfig::default(),
            timing: Timing::Wall,
            jobs: None,
            progress: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.methods.is_empty() || self.classifiers.is_empty() || self.reps == 0 {
            return bad("bench needs methods, classifiers and reps >= 1");
        }
        if self.levels.is_empty() && self.methods.iter().any(|m| *m != SamplerSpec::None) {
            return bad("bench needs at least one level");
        }
        if self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return bad("levels must lie in (0,1)");
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1");
        }
        self.classifiers.iter().try_for_each(ClassifierSpec::validate)?;
        self.pipeline.validate()?;
        SplitSpec { train_fraction: self.train_fraction, ..SplitSpec::default() }.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub dataset: String,
    pub method: String,
    pub level: f64,
    pub rep: usize,
    pub classifier: String,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub runtime_s: f64,
    pub violation_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub dataset: String,
    pub method: String,
    pub level: f64,
    pub rep: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchTable {
    pub results: Vec<BenchResult>,
    pub failures: Vec<CellFailure>,
}

/// Fails when a row tag of `train` also tags a row of `test`. Synthetic rows
/// carry no tag.
pub fn check_leakage(train: &Dataset, test: &Dataset) -> Result<()> {
    let held: std::collections::BTreeSet<usize> = test.provenance().iter().flatten().copied().collect();
    match train.provenance().iter().flatten().find(|p| held.contains(p)) {
        Some(p) => Err(Error::InvalidDataset(format!("test row {p} leaked into training data"))),
        None => Ok(()),
    }
}

struct Cell<'a> {
    dataset: &'a BenchDataset,
    split: &'a (Dataset, Dataset),
    minority: ClassId,
    method: SamplerSpec,
    level: f64,
    rep: usize,
    seed: u64,
}

fn run_cell(cell: &Cell<'_>, cfg: &BenchConfig) -> Result<Vec<BenchResult>> {
    let (train, test) = cell.split;
    check_leakage(train, test)?;
    let start = Instant::now();
    let (augmented, synthetic) = match cell.method {
        SamplerSpec::None => (train.clone(), Vec::new()),
        SamplerSpec::Dpgda => {
            let aug = augment_dataset(train, cell.minority, cell.level, &cfg.pipeline, cell.seed)?;
            let rows = aug.synthetic_rows();
            (aug.dataset, rows)
        }
        baseline => {
            let m = required_for(train, cell.minority, cell.level)?;
            let rows = baseline.generate(train, cell.minority, m, cell.seed)?;
            (train.with_appended(&rows, cell.minority)?, rows)
        }
    };
    let runtime_s = match cfg.timing {
        Timing::Wall => start.elapsed().as_secs_f64(),
        Timing::None => 0.0,
    };
    check_leakage(&augmented, test)?;
    let violation_rate = match &cell.dataset.rules {
        Some(rules) => {
            Some(audit_rows(train.feature_names(), synthetic.iter().map(Vec::as_slice), rules)?.violation_rate)
        }
        None => None,
    };
    cfg.classifiers
        .iter()
        .map(|spec| {
            let model = train_classifier(spec, &augmented)?;
            let m = macro_metrics(test.labels(), &model.predict_all(test)?, test.n_classes())?;
            Ok(BenchResult {
                dataset: cell.dataset.name.clone(),
                method: cell.method.name().to_string(),
                level: cell.level,
                rep: cell.rep,
                classifier: spec.name().to_string(),
                f1: m.f1,
                precision: m.precision,
                recall: m.recall,
                runtime_s,
                violation_rate,
            })
        })
        .collect()
}

/// Runs every `(dataset, rep, method, level)` cell. The split of a
/// `(dataset, rep)` pair is shared by all methods; the control method
/// `none` runs once per rep with level 0. Seeds depend only on the cell's
/// position, and results keep cell order regardless of `jobs`.
pub fn run_benchmark(datasets: &[BenchDataset], cfg: &BenchConfig) -> Result<BenchTable> {
    cfg.validate()?;
    let mut splits = Vec::new();
    for (di, ds) in datasets.iter().enumerate() {
        ds.data.require_supervised()?;
        for rep in 0..cfg.reps {
            let spec = SplitSpec {
                train_fraction: cfg.train_fraction,
                seed: seed::derive(cfg.master_seed, &[di as u64, rep as u64]),
                ..SplitSpec::default()
            };
            splits.push(stratified_split(&ds.data, &spec)?);
        }
    }
    let mut cells = Vec::new();
    for (di, ds) in datasets.iter().enumerate() {
        let minority = ds.data.minority_class().ok_or(Error::EmptyDataset)?;
        for rep in 0..cfg.reps {
            for (mi, &method) in cfg.methods.iter().enumerate() {
                let levels: &[f64] = if method == SamplerSpec::None { &[0.0] } else { &cfg.levels };
                for (li, &level) in levels.iter().enumerate() {
                    cells.push(Cell {
                        dataset: ds,
                        split: &splits[di * cfg.reps + rep],
                        minority,
                        method,
                        level,
                        rep,
                        seed: seed::derive(cfg.master_seed, &[di as u64, rep as u64, mi as u64, li as u64, 0xce11]),
                    });
                }
            }
        }
    }
    let run = || -> Vec<Result<Vec<BenchResult>>> {
        cells
            .par_iter()
            .map(|c| {
                let out = run_cell(c, cfg);
                if cfg.progress {
                    let status = if out.is_ok() { "ok" } else { "failed" };
                    eprintln!(
                        "bench dataset={} method={} level={} rep={} {status}",
                        c.dataset.name, c.method, c.level, c.rep
                    );
                }
                out
            })
            .collect()
    };
    let outcomes = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run),
        None => run(),
    };
    let mut table = BenchTable::default();
    for (cell, out) in cells.iter().zip(outcomes) {
        match out {
            Ok(rows) => table.results.extend(rows),
            Err(e) => table.failures.push(CellFailure {
                dataset: cell.dataset.name.clone(),
                method: cell.method.name().to_string(),
                level: cell.level,
                rep: cell.rep,
                error: e.to_string(),
            }),
        }
    }
    Ok(table)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results_to<W: std::io::Write>(results: &[BenchResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULT_COLUMNS)?;
    for r in results {
        out.write_record([
            r.dataset.clone(),
            r.method.clone(),
            r.level.to_string(),
            r.rep.to_string(),
            r.classifier.clone(),
            r.f1.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.runtime_s.to_string(),
            fmt_opt(r.violation_rate),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

pub fn write_results(results: &[BenchResult], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_results_to(results, std::io::BufWriter::new(f))
}

pub fn write_failures(failures: &[CellFailure], path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["dataset", "method", "level", "rep", "error"])?;
    for f in failures {
        out.write_record([
            f.dataset.clone(),
            f.method.clone(),
            f.level.to_string(),
            f.rep.to_string(),
            f.error.clone(),
        ])?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_results_from<R: std::io::Read>(r: R) -> Result<Vec<BenchResult>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.into()));
    let idx: Vec<usize> = RESULT_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| Error::Parse {
                row: line + 2,
                col: idx[i] + 1,
                msg: format!("`{}` is not a number", field(i)),
            })
        };
        out.push(BenchResult {
            dataset: field(0).to_string(),
            method: field(1).to_string(),
            level: num(2)?,
            rep: num(3)? as usize,
            classifier: field(4).to_string(),
            f1: num(5)?,
            precision: num(6)?,
            recall: num(7)?,
            runtime_s: num(8)?,
            violation_rate: if field(9).is_empty() { None } else { Some(num(9)?) },
        });
    }
    Ok(out)
}

pub fn read_results(path: &Path) -> Result<Vec<BenchResult>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_results_from(f)
}

/// Mean F1 per `(dataset, method)`: averaged over reps and classifiers
/// within each level, then over levels. Datasets and methods keep their
/// first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    /// `scores[i][j]` for dataset `i`, method `j`; NaN when absent.
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn get(&self, dataset: &str, method: &str) -> Option<f64> {
        let i = self.datasets.iter().position(|d| d == dataset)?;
        let j = self.methods.iter().position(|m| m == method)?;
        Some(self.scores[i][j]).filter(|v| v.is_finite())
    }
}

fn first_seen<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in it {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

pub fn mean_scores(results: &[BenchResult]) -> ScoreTable {
    let datasets = first_seen(results.iter().map(|r| r.dataset.as_str()));
    let methods = first_seen(results.iter().map(|r| r.method.as_str()));
    // (dataset, method) -> level bits -> (sum, count)
    let mut acc: BTreeMap<(usize, usize), BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    for r in results {
        let i = datasets.iter().position(|d| *d == r.dataset).expect("collected");
        let j = methods.iter().position(|m| *m == r.method).expect("collected");
        let e = acc.entry((i, j)).or_default().entry(r.level.to_bits()).or_insert((0.0, 0));
        e.0 += r.f1;
        e.1 += 1;
    }
    let mut scores = vec![vec![f64::NAN; methods.len()]; datasets.len()];
    for ((i, j), levels) in acc {
        let per_level: Vec<f64> = levels.values().map(|(s, n)| s / *n as f64).collect();
        scores[i][j] = per_level.iter().sum::<f64>() / per_level.len() as f64;
    }
    ScoreTable { datasets, methods, scores }
}
