//! End-to-end minority augmentation: surrogate forest, class bounds, one
//! genetic search per drawn query.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dpg::{build_dpg, export_constraints, extract_class_bounds, ClassBounds, ConstraintsMetadata, DpGraph};
use crate::error::{Error, Result};
use crate::forest::{surrogate_f1, train_forest, Forest, ForestConfig};
use crate::ga::{evolve, Evolution, FitnessWeights, GaConfig, Problem, TraceRecord};
use crate::samplers::required_for;
use crate::seed;
use crate::tabular::{holdout_split, ClassId, Dataset, SplitSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub forest: ForestConfig,
    pub quantize_decimals: u32,
    pub min_support: f64,
    /// Share of the training set used to fit the surrogate.
    pub holdout_fraction: f64,
    pub ga: GaConfig,
    pub weights: FitnessWeights,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            forest: ForestConfig::default(),
            quantize_decimals: crate::dpg::DEFAULT_QUANTIZE_DECIMALS,
            min_support: 0.0,
            holdout_fraction: 0.8,
            ga: GaConfig::default(),
            weights: FitnessWeights::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.forest.validate()?;
        self.ga.validate()?;
        self.weights.validate()?;
        SplitSpec { holdout_fraction: self.holdout_fraction, ..SplitSpec::default() }.validate()?;
        if !(0.0..=1.0).contains(&self.min_support) {
            return Err(Error::InvalidConfig(format!("min_support must lie in [0,1], got {}", self.min_support)));
        }
        Ok(())
    }
}

/// Output of the surrogate and constraint-extraction stages.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub forest: Forest,
    pub dpg: DpGraph,
    pub bounds: ClassBounds,
    /// Exported bounds document (`constraints.json`).
    pub constraints: Value,
    /// Macro F1 of the forest on the part of train it did not see.
    pub holdout_f1: f64,
}

/// Trains the surrogate on the holdout portion of `train` and extracts class
/// bounds from it. The forest seed is derived from `seed`; the seed inside
/// `pipeline.forest` is ignored.
pub fn fit_surrogate(train: &Dataset, pipeline: &PipelineConfig, seed: u64) -> Result<Surrogate> {
    pipeline.validate()?;
    train.require_supervised()?;
    let spec = SplitSpec { holdout_fraction: pipeline.holdout_fraction, seed, ..SplitSpec::default() };
    let (fit, rest) = holdout_split(train, &spec)?;
    let forest_cfg = ForestConfig { seed: seed::derive(seed, &[1]), ..pipeline.forest.clone() };
    let forest = train_forest(&fit, &forest_cfg)?;
    let dpg = build_dpg(&forest, &fit, pipeline.quantize_decimals)?;
    let bounds = extract_class_bounds(&dpg, &forest, &fit, pipeline.min_support)?;
    let meta = ConstraintsMetadata {
        quantize_decimals: pipeline.quantize_decimals,
        min_support: pipeline.min_support,
        forest_seed: forest_cfg.seed,
    };
    let constraints = export_constraints(&bounds, train.feature_names(), train.class_names(), &meta)?;
    let holdout_f1 = surrogate_f1(&forest, &rest)?;
    Ok(Surrogate { forest, dpg, bounds, constraints, holdout_f1 })
}

/// One evolved sample and the training row it started from.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTrace {
    pub query_row: usize,
    pub evolution: Evolution,
}

impl QueryTrace {
    pub fn trace(&self) -> &[TraceRecord] {
        &self.evolution.trace
    }
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    /// `train` followed by the accepted samples, labelled with the
    /// augmented class.
    pub dataset: Dataset,
    pub surrogate: Surrogate,
    pub traces: Vec<QueryTrace>,
    /// Set when the target level needed no new samples.
    pub notice: Option<String>,
}

impl Augmentation {
    pub fn n_synthetic(&self) -> usize {
        self.traces.len()
    }

    pub fn synthetic_rows(&self) -> Vec<Vec<f64>> {
        self.traces.iter().map(|t| t.evolution.accepted.x.clone()).collect()
    }
}

/// Raises `minority` to `level` of the training set. See [`generate`].
pub fn augment_dataset(
    train: &Dataset,
    minority: ClassId,
    level: f64,
    pipeline: &PipelineConfig,
    seed: u64,
) -> Result<Augmentation> {
    let m = required_for(train, minority, level)?;
    let mut out = generate(train, minority, m, pipeline, seed)?;
    if m == 0 {
        let share = train.class_counts()[minority] as f64 / train.n_samples() as f64;
        out.notice = Some(format!(
            "class `{}` already makes up {share:.4} of the data (target {level}); nothing to add",
            train.class_names()[minority]
        ));
    }
    Ok(out)
}

/// Evolves exactly `m` samples of `minority`.
///
/// The surrogate stages always run, so the constraints are produced even for
/// `m = 0`. Queries are drawn uniformly with replacement from the class rows
/// of `train`; query `i` evolves under a seed derived from `(seed, i)`, so
/// the result does not depend on the thread count.
pub fn generate(
    train: &Dataset,
    minority: ClassId,
    m: usize,
    pipeline: &PipelineConfig,
    seed: u64,
) -> Result<Augmentation> {
    if minority >= train.n_classes() {
        return Err(Error::UnknownClass(minority));
    }
    let pool = train.indices_of(minority);
    if pool.is_empty() {
        return Err(Error::TooFewSamples(train.class_names()[minority].clone(), "no rows to query".into()));
    }
    let surrogate = fit_surrogate(train, pipeline, seed)?;
    let mut rng = seed::child_rng(seed, &[2]);
    let queries: Vec<usize> = (0..m).map(|_| pool[rng.random_range(0..pool.len())]).collect();
    let traces = queries
        .par_iter()
        .enumerate()
        .map(|(i, &row)| {
            let problem = Problem {
                query: train.row(row),
                class: minority,
                bounds: &surrogate.bounds,
                forest: &surrogate.forest,
                weights: &pipeline.weights,
                stats: &surrogate.forest.stats,
                query_index: row,
            };
            let ga = GaConfig { seed: seed::derive(seed, &[3, i as u64]), ..pipeline.ga.clone() };
            evolve(&problem, &ga).map(|evolution| QueryTrace { query_row: row, evolution })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = traces.iter().map(|t| t.evolution.accepted.x.clone()).collect();
    let dataset = train.with_appended(&rows, minority)?;
    Ok(Augmentation { dataset, surrogate, traces, notice: None })
}

/// Trace as CSV: generation, one delta column per feature, fitness and its
/// components for the generation's best.
pub fn trace_csv(trace: &[TraceRecord], feature_names: &[String]) -> String {
    let mut s = String::from("generation");
    for f in feature_names {
        let _ = write!(s, ",delta_{f}");
    }
    s.push_str(",fitness,V,A,D,S\n");
    for r in trace {
        let _ = write!(s, "{}", r.generation);
        for d in &r.delta {
            let _ = write!(s, ",{d:?}");
        }
        let c = &r.best.components;
        let _ = writeln!(s, ",{:?},{},{:?},{:?},{:?}", r.best.fitness, c.v, c.a, c.d, c.s);
    }
    s
}

/// Writes `trace_<i>.json` and `trace_<i>.csv` for every query into `dir`.
pub fn write_traces(traces: &[QueryTrace], feature_names: &[String], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, t) in traces.iter().enumerate() {
        let json = dir.join(format!("trace_{i}.json"));
        fs::write(&json, serde_json::to_string_pretty(t.trace())?).map_err(|e| Error::io(&json, e))?;
        let csv = dir.join(format!("trace_{i}.csv"));
        fs::write(&csv, trace_csv(t.trace(), feature_names)).map_err(|e| Error::io(&csv, e))?;
    }
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let trace: Vec<TraceRecord> = serde_json::from_str(&text)?;
    if trace.is_empty() {
        return Err(Error::Schema { path: "$".into(), msg: "trace is empty".into() });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpg::check_bounds;

    /// Two blobs, class 1 a 1:4 minority at larger x.
    fn blobs(n_maj: usize, n_min: usize) -> Dataset {
        let mut rng = seed::rng(9);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (class, n, cx) in [(0usize, n_maj, 2.0), (1, n_min, 7.0)] {
            for _ in 0..n {
                rows.push(vec![cx + rng.random::<f64>() * 2.0, rng.random::<f64>() * 10.0]);
                labels.push(class);
            }
        }
        Dataset::new(rows, labels, vec!["x".into(), "y".into()], vec!["maj".into(), "min".into()]).unwrap()
    }

    fn small() -> PipelineConfig {
        PipelineConfig {
            forest: ForestConfig { n_trees: 10, max_depth: 4, ..ForestConfig::default() },
            ga: GaConfig { population_size: 20, max_generations: 30, ..GaConfig::default() },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn reaches_target_level_within_bounds() {
        let train = blobs(80, 20);
        let aug = augment_dataset(&train, 1, 0.5, &small(), 5).unwrap();
        assert_eq!(aug.n_synthetic(), 60);
        assert_eq!(aug.dataset.class_counts(), vec![80, 80]);
        for x in aug.synthetic_rows() {
            assert!(check_bounds(&aug.surrogate.bounds, 1, &x).unwrap().satisfied);
            assert_eq!(aug.surrogate.forest.predict(&x).unwrap(), 1);
        }
        assert!(aug.dataset.provenance()[100..].iter().all(Option::is_none));
    }

    #[test]
    fn already_balanced_is_a_noop_with_constraints() {
        let train = blobs(80, 20);
        let aug = augment_dataset(&train, 1, 0.15, &small(), 5).unwrap();
        assert_eq!(aug.n_synthetic(), 0);
        assert!(aug.notice.is_some());
        assert_eq!(aug.dataset, train);
        assert!(aug.surrogate.constraints["class_bounds"].get("min").is_some());
    }

    #[test]
    fn deterministic_under_seed() {
        let train = blobs(40, 10);
        let a = augment_dataset(&train, 1, 0.3, &small(), 11).unwrap();
        let b = augment_dataset(&train, 1, 0.3, &small(), 11).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.dataset, b.dataset);
    }

    #[test]
    fn trace_files_round_trip() {
        let train = blobs(40, 10);
        let aug = augment_dataset(&train, 1, 0.3, &small(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_traces(&aug.traces, train.feature_names(), dir.path()).unwrap();
        let back = read_trace(&dir.path().join("trace_0.json")).unwrap();
        assert_eq!(back, aug.traces[0].evolution.trace);
        let csv = fs::read_to_string(dir.path().join("trace_0.csv")).unwrap();
        assert!(csv.starts_with("generation,delta_x,delta_y,fitness,V,A,D,S\n"));
        assert_eq!(csv.lines().count(), back.len() + 1);
    }
}
