//! Baseline oversamplers: random duplication, SMOTE interpolation and
//! Gaussian jitter. None of them consult domain constraints.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::tabular::{feature_stats, ClassId, Dataset};

/// Synthetic rows needed so that `class` makes up at least `level` of the
/// data: `max(0, ⌈level·n_other/(1−level)⌉ − n_class)`.
pub fn required_synthetic(n_class: usize, n_other: usize, level: f64) -> Result<usize> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must lie in (0,1), got {level}")));
    }
    // absorb representation error so that exact quotients do not round up
    let target = (level * n_other as f64 / (1.0 - level) - 1e-9).ceil().max(0.0) as usize;
    Ok(target.saturating_sub(n_class))
}

/// Required count for `class` within `ds`.
pub fn required_for(ds: &Dataset, class: ClassId, level: f64) -> Result<usize> {
    let counts = ds.class_counts();
    let n_class = *counts.get(class).ok_or(Error::UnknownClass(class))?;
    required_synthetic(n_class, ds.n_samples() - n_class, level)
}

fn class_rows(ds: &Dataset, class: ClassId) -> Result<Vec<&[f64]>> {
    if class >= ds.n_classes() {
        return Err(Error::UnknownClass(class));
    }
    let rows: Vec<&[f64]> = ds.indices_of(class).into_iter().map(|i| ds.row(i)).collect();
    if rows.is_empty() {
        return Err(Error::TooFewSamples(ds.class_names()[class].clone(), "no samples to oversample".into()));
    }
    Ok(rows)
}

/// Duplicates `m` rows of `class`, drawn uniformly with replacement.
pub fn ros(ds: &Dataset, class: ClassId, m: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    let rows = class_rows(ds, class)?;
    Ok((0..m).map(|_| rows[rng.random_range(0..rows.len())].to_vec()).collect())
}

/// Indices of the `k` nearest rows to `rows[i]` (Euclidean, ties by index),
/// excluding `i` itself.
fn neighbours(rows: &[&[f64]], i: usize, k: usize) -> Vec<usize> {
    let mut dist: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, r)| (r.iter().zip(rows[i]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dist.truncate(k);
    dist.into_iter().map(|(_, j)| j).collect()
}

/// SMOTE: each synthetic row is `x_i + λ·(x_n − x_i)` for a random row `x_i`
/// of `class`, one of its `k` nearest same-class neighbours `x_n`, and
/// `λ ~ U[0,1)`.
pub fn smote(ds: &Dataset, class: ClassId, m: usize, k: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    smote_with(ds, class, m, k, rng, |r| r.random::<f64>())
}

/// [`smote`] with the interpolation factor supplied by `lambda`.
pub fn smote_with(
    ds: &Dataset,
    class: ClassId,
    m: usize,
    k: usize,
    rng: &mut Rng,
    mut lambda: impl FnMut(&mut Rng) -> f64,
) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidConfig("smote k must be >= 1".into()));
    }
    let rows = class_rows(ds, class)?;
    if m > 0 && rows.len() < 2 {
        return Err(Error::TooFewSamples(
            ds.class_names()[class].clone(),
            "interpolation needs at least two samples".into(),
        ));
    }
    let k = k.min(rows.len().saturating_sub(1));
    let mut cache: Vec<Option<Vec<usize>>> = vec![None; rows.len()];
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let i = rng.random_range(0..rows.len());
        let nn = cache[i].get_or_insert_with(|| neighbours(&rows, i, k));
        let n = nn[rng.random_range(0..nn.len())];
        let l = lambda(rng);
        out.push(rows[i].iter().zip(rows[n]).map(|(a, b)| a + l * (b - a)).collect());
    }
    Ok(out)
}

/// Adds `N(0, (scale·range_f)²)` noise to randomly drawn rows of `class`,
/// with `range_f` taken over the whole dataset. Values are not clipped.
pub fn jitter(ds: &Dataset, class: ClassId, m: usize, scale: f64, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("jitter scale must be finite and >= 0, got {scale}")));
    }
    let rows = class_rows(ds, class)?;
    let ranges = feature_stats(ds)?.ranges();
    let noise: Vec<Option<Normal<f64>>> = ranges
        .iter()
        .map(|r| (scale * r > 0.0).then(|| Normal::new(0.0, scale * r).expect("positive sigma")))
        .collect();
    Ok((0..m)
        .map(|_| {
            let base = rows[rng.random_range(0..rows.len())];
            base.iter().zip(&noise).map(|(v, n)| v + n.as_ref().map_or(0.0, |n| n.sample(rng))).collect()
        })
        .collect())
}

/// Oversampling method selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum SamplerSpec {
    /// Leaves the data unchanged.
    None,
    Ros,
    Smote {
        k: usize,
    },
    Jitter {
        scale: f64,
    },
    /// Constraint-aware genetic augmentation; see [`crate::augment`].
    Dpgda,
}

impl SamplerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerSpec::None => "none",
            SamplerSpec::Ros => "ros",
            SamplerSpec::Smote { .. } => "smote",
            SamplerSpec::Jitter { .. } => "jitter",
            SamplerSpec::Dpgda => "dpgda",
        }
    }

    /// Generates `m` rows of `class` for the baseline methods.
    pub fn generate(&self, ds: &Dataset, class: ClassId, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = seed::rng(seed);
        match *self {
            SamplerSpec::None => Ok(Vec::new()),
            SamplerSpec::Ros => ros(ds, class, m, &mut rng),
            SamplerSpec::Smote { k } => smote(ds, class, m, k, &mut rng),
            SamplerSpec::Jitter { scale } => jitter(ds, class, m, scale, &mut rng),
            SamplerSpec::Dpgda => {
                Err(Error::InvalidConfig("dpgda generation runs through the augmentation pipeline".into()))
            }
        }
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerSpec {
    type Err = Error;

    /// Accepts `none`, `ros`, `smote`, `jitter`, `dpgda` (also `dpg-da`).
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "none" => SamplerSpec::None,
            "ros" => SamplerSpec::Ros,
            "smote" => SamplerSpec::Smote { k: 5 },
            "jitter" => SamplerSpec::Jitter { scale: 0.3 },
            "dpgda" | "dpg-da" => SamplerSpec::Dpgda,
            other => return Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds() -> Dataset {
        Dataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0], vec![6.0, 4.0], vec![9.0, 9.0]],
            vec![0, 0, 1, 1, 1],
            vec!["a".into(), "b".into()],
            vec!["min".into(), "maj".into()],
        )
        .unwrap()
    }

    #[test]
    fn required_counts() {
        assert_eq!(required_synthetic(10, 90, 0.5).unwrap(), 80);
        assert_eq!(required_synthetic(15, 85, 0.15).unwrap(), 0);
        assert_eq!(required_synthetic(15, 85, 0.25).unwrap(), 14);
        assert_eq!(required_synthetic(50, 50, 0.3).unwrap(), 0);
        assert!(required_synthetic(1, 1, 1.0).is_err());
        assert!(required_synthetic(1, 1, 0.0).is_err());
    }

    #[test]
    fn ros_duplicates_rows() {
        let d = ds();
        let out = ros(&d, 0, 20, &mut seed::rng(1)).unwrap();
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|r| r == &[0.0, 0.0] || r == &[1.0, 1.0]));
    }

    #[test]
    fn smote_midpoint() {
        let d = ds();
        let out = smote_with(&d, 0, 3, 5, &mut seed::rng(2), |_| 0.5).unwrap();
        assert!(out.iter().all(|r| r == &[0.5, 0.5]));
        let lone = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0, 1, 1],
            vec!["x".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(smote(&lone, 0, 1, 5, &mut seed::rng(0)), Err(Error::TooFewSamples(..))));
    }

    #[test]
    fn smote_stays_on_segments() {
        let d = ds();
        for r in smote(&d, 1, 50, 2, &mut seed::rng(3)).unwrap() {
            assert!((5.0..=9.0).contains(&r[0]) && (4.0..=9.0).contains(&r[1]));
        }
    }

    #[test]
    fn jitter_zero_scale_copies() {
        let d = ds();
        let out = jitter(&d, 1, 5, 0.0, &mut seed::rng(0)).unwrap();
        assert!(out.iter().all(|r| d.rows().any(|x| x == r.as_slice())));
        assert!(jitter(&d, 1, 5, -1.0, &mut seed::rng(0)).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("SMOTE".parse::<SamplerSpec>().unwrap(), SamplerSpec::Smote { k: 5 });
        assert_eq!("dpg-da".parse::<SamplerSpec>().unwrap().name(), "dpgda");
        assert!("adasyn".parse::<SamplerSpec>().is_err());
    }
}
