//! Synthetic benchmark data: rule-bearing tabular domains and 2-D
//! imbalanced shapes.

pub mod domains;
pub mod shapes;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::constraints::{rules_to_json, DomainRule};
use crate::error::{Error, Result};
use crate::tabular::{write_csv, Dataset};

pub use domains::{builtin, builtin_names, generate_domain, DomainConfig};
pub use shapes::{generate_shape, shape_rules, ShapeKind};

/// Contents of `<name>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationMeta {
    pub name: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON form of the generating config.
    pub config_hash: String,
    pub n_samples: usize,
    pub class_counts: Vec<usize>,
}

/// Hex SHA-256 of `value` serialised as JSON.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(value)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes `<name>.csv`, `<name>.rules.json` and `<name>.meta.json` into
/// `dir`, returning the CSV path.
pub fn write_outputs(ds: &Dataset, rules: &[DomainRule], meta: &GenerationMeta, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{}.csv", meta.name));
    write_csv(ds, &csv)?;
    let rules_path = dir.join(format!("{}.rules.json", meta.name));
    fs::write(&rules_path, rules_to_json(rules)?).map_err(|e| Error::io(&rules_path, e))?;
    let meta_path = dir.join(format!("{}.meta.json", meta.name));
    fs::write(&meta_path, serde_json::to_string_pretty(meta)?).map_err(|e| Error::io(&meta_path, e))?;
    Ok(csv)
}

/// Splits `n` into per-class quotas proportional to `ratio`; rounding
/// residue goes to the first classes.
pub fn quotas(n: usize, ratio: &[u32]) -> Result<Vec<usize>> {
    let total: u64 = ratio.iter().map(|&r| u64::from(r)).sum();
    if ratio.len() < 2 || ratio.contains(&0) {
        return Err(Error::InvalidConfig(format!("class ratio {ratio:?} needs >= 2 positive parts")));
    }
    let mut q: Vec<usize> = ratio.iter().map(|&r| (n as u64 * u64::from(r) / total) as usize).collect();
    let mut rest = n - q.iter().sum::<usize>();
    for slot in q.iter_mut() {
        if rest == 0 {
            break;
        }
        *slot += 1;
        rest -= 1;
    }
    if q.contains(&0) {
        return Err(Error::InvalidConfig(format!("{n} samples are too few for ratio {ratio:?}")));
    }
    Ok(q)
}

/// The six built-in domains followed by the three shapes, each with the
/// rules its rows satisfy.
pub fn benchmark_suite(seed: u64) -> Result<Vec<(String, Dataset, Vec<DomainRule>)>> {
    let mut out = Vec::new();
    for name in builtin_names() {
        let cfg = builtin(name)?;
        let (ds, rules) = generate_domain(&cfg, seed)?;
        out.push((cfg.name.clone(), ds, rules));
    }
    for kind in ShapeKind::ALL {
        let ds = generate_shape(kind, 600, (5, 1), seed)?;
        out.push((kind.name().to_string(), ds, shape_rules()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_arithmetic() {
        assert_eq!(quotas(1000, &[3, 1]).unwrap(), vec![750, 250]);
        assert_eq!(quotas(600, &[5, 1]).unwrap(), vec![500, 100]);
        assert_eq!(quotas(1000, &[2, 1]).unwrap(), vec![667, 333]);
        assert!(quotas(3, &[5, 1]).is_err());
        assert!(quotas(10, &[1]).is_err());
    }

    #[test]
    fn hash_is_stable_hex() {
        let h = config_hash(&builtin("finance").unwrap()).unwrap();
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&builtin("finance").unwrap()).unwrap());
    }
}
