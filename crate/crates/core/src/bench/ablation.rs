//! Exhaustive grid over the three fitness weights.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::FitnessWeights;
use crate::samplers::SamplerSpec;

use super::protocol::{run_benchmark, BenchConfig, BenchDataset, Timing};

pub const GRID_VALUES: [f64; 3] = [1.0, 2.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub rank: usize,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub mean_f1: f64,
}

/// Every `(w1, w2, w3)` in `values³`, lexicographic.
pub fn weight_grid(values: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(values.len().pow(3));
    for &a in values {
        for &d in values {
            for &s in values {
                out.push((a, d, s));
            }
        }
    }
    out
}

/// Benchmarks the constraint-aware sampler once per weight triple with the
/// same seeds and ranks the triples by mean macro F1, best first; ties keep
/// grid order. Any failed cell aborts the grid.
pub fn ablation_grid(datasets: &[BenchDataset], base: &BenchConfig, values: &[f64]) -> Result<Vec<AblationRow>> {
    if datasets.is_empty() {
        return Err(Error::InvalidConfig("ablation needs at least one dataset".into()));
    }
    let mut scored = Vec::new();
    for (a, d, s) in weight_grid(values) {
        let mut cfg = base.clone();
        cfg.methods = vec![SamplerSpec::Dpgda];
        cfg.timing = Timing::None;
        cfg.pipeline.weights = FitnessWeights::new(a, d, s)?;
        let table = run_benchmark(datasets, &cfg)?;
        if let Some(f) = table.failures.first() {
            return Err(Error::InvalidConfig(format!(
                "weights ({a}, {d}, {s}) failed on {} rep {}: {}",
                f.dataset, f.rep, f.error
            )));
        }
        let mean = table.results.iter().map(|r| r.f1).sum::<f64>() / table.results.len() as f64;
        scored.push((a, d, s, mean));
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&i, &j| scored[j].3.total_cmp(&scored[i].3).then(i.cmp(&j)));
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(rank, i)| {
            let (w1, w2, w3, mean_f1) = scored[i];
            AblationRow { rank: rank + 1, w1, w2, w3, mean_f1 }
        })
        .collect())
}

pub fn write_ablation(rows: &[AblationRow], path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["rank", "w1", "w2", "w3", "mean_f1"])?;
    for r in rows {
        out.write_record([
            r.rank.to_string(),
            r.w1.to_string(),
            r.w2.to_string(),
            r.w3.to_string(),
            r.mean_f1.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_27_members_including_default() {
        let g = weight_grid(&GRID_VALUES);
        assert_eq!(g.len(), 27);
        assert!(g.contains(&FitnessWeights::default().as_triple()));
        let mut uniq = g.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), 27);
    }
}
