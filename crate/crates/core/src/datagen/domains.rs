//! Tabular domains described by TOML configs: per-feature distributions, a
//! noisy threshold label rule and the domain rules every row must satisfy.

use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::constraints::DomainRule;
use crate::error::{Error, Result};
use crate::predicate::Op;
use crate::seed;
use crate::tabular::Dataset;

use super::quotas;

const BUILTIN: [(&str, &str); 6] = [
    ("healthcare", include_str!("../../configs/domains/healthcare.toml")),
    ("finance", include_str!("../../configs/domains/finance.toml")),
    ("quality_control", include_str!("../../configs/domains/quality_control.toml")),
    ("fraud_detection", include_str!("../../configs/domains/fraud_detection.toml")),
    ("energy", include_str!("../../configs/domains/energy.toml")),
    ("education", include_str!("../../configs/domains/education.toml")),
];

/// Draw attempts allowed per requested row before giving up.
const ATTEMPTS_PER_ROW: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dist {
    Uniform {
        low: f64,
        high: f64,
    },
    IntUniform {
        low: i64,
        high: i64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    #[serde(rename = "lognormal")]
    LogNormal {
        mu: f64,
        sigma: f64,
    },
}

impl Dist {
    fn sample(&self, rng: &mut seed::Rng) -> Result<f64> {
        let bad = |m: String| Error::InvalidConfig(m);
        Ok(match *self {
            Dist::Uniform { low, high } if low < high => rng.random_range(low..high),
            Dist::IntUniform { low, high } if low <= high => rng.random_range(low..=high) as f64,
            Dist::Normal { mean, sd } => Normal::new(mean, sd).map_err(|e| bad(e.to_string()))?.sample(rng),
            Dist::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).map_err(|e| bad(e.to_string()))?.sample(rng),
            other => return Err(bad(format!("empty distribution support {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureGen {
    pub name: String,
    pub dist: Dist,
    /// Draws outside `[lo, hi]` are rejected.
    #[serde(default)]
    pub range: Option<[f64; 2]>,
}

/// `feature + N(0, noise_sd²) op threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub feature: String,
    pub op: Op,
    pub threshold: f64,
    #[serde(default)]
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    All,
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub feature: String,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
    #[serde(default)]
    pub description: String,
}

/// A generated domain. The label is the last class when the label rule
/// holds and the first class otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub name: String,
    pub n_samples: usize,
    pub class_names: Vec<String>,
    /// Target counts per class, e.g. `[3, 1]`.
    pub class_ratio: Vec<u32>,
    pub label_combine: Combine,
    pub features: Vec<FeatureGen>,
    pub label: Vec<Condition>,
    pub rules: Vec<RuleSpec>,
}

impl DomainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: DomainConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DomainConfig::from_toml_str(&text)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn domain_rules(&self) -> Vec<DomainRule> {
        self.rules
            .iter()
            .map(|r| DomainRule::new(r.feature.clone(), r.lower, r.upper).with_description(r.description.clone()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("domain `{}`: {m}", self.name)));
        if self.class_names.len() != 2 || self.class_ratio.len() != 2 {
            return bad("exactly two classes are supported".into());
        }
        if self.features.is_empty() || self.label.is_empty() {
            return bad("needs features and at least one label condition".into());
        }
        let names = self.feature_names();
        for f in self.label.iter().map(|c| &c.feature).chain(self.rules.iter().map(|r| &r.feature)) {
            if !names.contains(f) {
                return Err(Error::UnknownFeature(f.clone()));
            }
        }
        if self.label.iter().any(|c| c.noise_sd.is_nan() || c.noise_sd < 0.0) {
            return bad("noise_sd must be >= 0".into());
        }
        quotas(self.n_samples, &self.class_ratio)?;
        Ok(())
    }
}

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

/// One of the shipped domains by name.
pub fn builtin(name: &str) -> Result<DomainConfig> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidConfig(format!("no built-in domain `{name}`; known: {:?}", builtin_names())))?;
    DomainConfig::from_toml_str(text)
}

/// Draws rows until every class quota is met. Rows violating a domain rule
/// or a feature range are redrawn, so the result audits clean against the
/// returned rules.
pub fn generate_domain(cfg: &DomainConfig, seed: u64) -> Result<(Dataset, Vec<DomainRule>)> {
    cfg.validate()?;
    let names = cfg.feature_names();
    let index = |f: &str| names.iter().position(|n| n == f).expect("validated");
    let rules: Vec<(usize, DomainRule)> = cfg.domain_rules().into_iter().map(|r| (index(&r.feature), r)).collect();
    let label_rule: Vec<(usize, &Condition, Option<Normal<f64>>)> = cfg
        .label
        .iter()
        .map(|c| (index(&c.feature), c, (c.noise_sd > 0.0).then(|| Normal::new(0.0, c.noise_sd).expect("sd > 0"))))
        .collect();
    let quota = quotas(cfg.n_samples, &cfg.class_ratio)?;
    let mut rng = seed::rng(seed);
    let mut per_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 2];
    let mut attempts = 0usize;
    let budget = ATTEMPTS_PER_ROW * cfg.n_samples;
    while per_class.iter().zip(&quota).any(|(rows, &q)| rows.len() < q) {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Generation(format!(
                "domain `{}`: class quotas {quota:?} not met after {budget} draws",
                cfg.name
            )));
        }
        let mut row = Vec::with_capacity(names.len());
        for f in &cfg.features {
            row.push(f.dist.sample(&mut rng)?);
        }
        let in_range = cfg.features.iter().zip(&row).all(|(f, &v)| f.range.is_none_or(|[lo, hi]| lo <= v && v <= hi));
        if !in_range || rules.iter().any(|(j, r)| !r.allows(row[*j])) {
            continue;
        }
        let mut hits = label_rule.iter().map(|(j, c, noise)| {
            let v = row[*j] + noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
            c.op.holds(v, c.threshold)
        });
        let positive = match cfg.label_combine {
            Combine::All => hits.all(|h| h),
            Combine::Any => hits.any(|h| h),
        };
        let class = usize::from(positive);
        if per_class[class].len() < quota[class] {
            per_class[class].push(row);
        }
    }
    // interleave deterministically so row order carries no label signal
    let mut rows = Vec::with_capacity(cfg.n_samples);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    for (class, chunk) in per_class.into_iter().enumerate() {
        labels.extend(std::iter::repeat_n(class, chunk.len()));
        rows.extend(chunk);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
    let labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let ds = Dataset::new(rows, labels, names, cfg.class_names.clone())?;
    Ok((ds, rules.into_iter().map(|(_, r)| r).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::audit;

    #[test]
    fn every_builtin_generates_clean_data() {
        for name in builtin_names() {
            let cfg = builtin(name).unwrap();
            let (ds, rules) = generate_domain(&cfg, 3).unwrap();
            assert_eq!(ds.n_samples(), cfg.n_samples, "{name}");
            let q = quotas(cfg.n_samples, &cfg.class_ratio).unwrap();
            assert_eq!(ds.class_counts(), q, "{name}");
            assert_eq!(audit(&ds, &rules).unwrap().violation_rate, 0.0, "{name}");
        }
    }

    #[test]
    fn table_sizes() {
        let h = builtin("healthcare").unwrap();
        assert_eq!((h.n_samples, h.features.len()), (1000, 4));
        assert_eq!(quotas(h.n_samples, &h.class_ratio).unwrap(), vec![750, 250]);
        let f = builtin("finance").unwrap();
        assert!(["CreditScore", "Income", "NumChildren"].iter().all(|n| f.feature_names().contains(&n.to_string())));
        assert_eq!(builtin("energy").unwrap().features.len(), 3);
    }

    #[test]
    fn deterministic() {
        let cfg = builtin("fraud_detection").unwrap();
        assert_eq!(generate_domain(&cfg, 8).unwrap().0, generate_domain(&cfg, 8).unwrap().0);
        assert_ne!(generate_domain(&cfg, 8).unwrap().0, generate_domain(&cfg, 9).unwrap().0);
    }

    #[test]
    fn impossible_quota_errors() {
        let mut cfg = builtin("energy").unwrap();
        cfg.label[0].threshold = 1e9;
        cfg.label[0].noise_sd = 0.0;
        cfg.n_samples = 20;
        assert!(matches!(generate_domain(&cfg, 0), Err(Error::Generation(_))));
    }

    #[test]
    fn bad_config_is_rejected() {
        let text = include_str!("../../configs/domains/energy.toml")
            .replace("feature = \"Usage\"\nop", "feature = \"Nope\"\nop");
        assert!(DomainConfig::from_toml_str(&text).is_err());
        assert!(builtin("mars").is_err());
    }
}
