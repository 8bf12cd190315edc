//! Domain rules, the violation space they define, and violation audits.
//!
//! A sample lies in the violation space when it breaks at least one rule;
//! rules are closed intervals, so a value on a bound is valid.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dpg::ClassBounds;
use crate::error::{Error, Result};
use crate::tabular::{ClassId, Dataset};

/// `lower <= x[feature] <= upper`; infinite sides always pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainRule {
    pub feature: String,
    pub lower: f64,
    pub upper: f64,
    pub description: String,
}

impl DomainRule {
    pub fn new(feature: impl Into<String>, lower: Option<f64>, upper: Option<f64>) -> Self {
        DomainRule {
            feature: feature.into(),
            lower: lower.unwrap_or(f64::NEG_INFINITY),
            upper: upper.unwrap_or(f64::INFINITY),
            description: String::new(),
        }
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = d.into();
        self
    }

    pub fn allows(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Serialize, Deserialize)]
struct RuleDoc {
    feature: String,
    lower: Option<f64>,
    upper: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
}

#[derive(Serialize, Deserialize)]
struct RulesDoc {
    rules: Vec<RuleDoc>,
}

pub fn rules_from_json(path: impl AsRef<Path>) -> Result<Vec<DomainRule>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    rules_from_str(&text)
}

/// Parses a rules document, reporting the JSON path of the first offending
/// key.
pub fn rules_from_str(text: &str) -> Result<Vec<DomainRule>> {
    let doc: Value = serde_json::from_str(text)?;
    let schema = |path: String, msg: &str| Error::Schema { path, msg: msg.into() };
    let rules =
        doc.get("rules").and_then(Value::as_array).ok_or_else(|| schema("$.rules".into(), "expected an array"))?;
    let mut out = Vec::with_capacity(rules.len());
    for (i, r) in rules.iter().enumerate() {
        let at = |k: &str| format!("$.rules[{i}].{k}");
        let obj = r.as_object().ok_or_else(|| schema(format!("$.rules[{i}]"), "expected an object"))?;
        let feature =
            obj.get("feature").and_then(Value::as_str).ok_or_else(|| schema(at("feature"), "expected a string"))?;
        let side = |k: &str| -> Result<Option<f64>> {
            match obj.get(k) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => v.as_f64().map(Some).ok_or_else(|| schema(at(k), "expected a number or null")),
            }
        };
        let rule = DomainRule::new(feature, side("lower")?, side("upper")?);
        if rule.lower > rule.upper {
            return Err(schema(format!("$.rules[{i}]"), "lower exceeds upper"));
        }
        let description = match obj.get("description") {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(schema(at("description"), "expected a string")),
        };
        out.push(rule.with_description(description));
    }
    Ok(out)
}

pub fn rules_to_json(rules: &[DomainRule]) -> Result<String> {
    let finite = |v: f64| v.is_finite().then_some(v);
    let doc = RulesDoc {
        rules: rules
            .iter()
            .map(|r| RuleDoc {
                feature: r.feature.clone(),
                lower: finite(r.lower),
                upper: finite(r.upper),
                description: r.description.clone(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// One rule per bounded feature of `class`.
pub fn rules_from_bounds(bounds: &ClassBounds, class: ClassId, feature_names: &[String]) -> Result<Vec<DomainRule>> {
    let m = bounds.classes.get(&class).ok_or(Error::UnknownClass(class))?;
    Ok(m.iter()
        .map(|(&f, iv)| DomainRule {
            feature: feature_names[f].clone(),
            lower: iv.lower,
            upper: iv.upper,
            description: format!("extracted bound for class {class}"),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleViolation {
    pub sample: usize,
    /// Indices into the audited rule list.
    pub rules: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub n_synth: usize,
    pub n_violating_samples: usize,
    pub violations: Vec<SampleViolation>,
    pub violation_rate: f64,
}

impl ViolationReport {
    pub fn empty() -> Self {
        ViolationReport { n_synth: 0, n_violating_samples: 0, violations: Vec::new(), violation_rate: 0.0 }
    }
}

pub fn audit(samples: &Dataset, rules: &[DomainRule]) -> Result<ViolationReport> {
    audit_rows(samples.feature_names(), samples.rows(), rules)
}

/// A sample counts once however many rules it breaks. An empty sample set
/// has rate 0.
pub fn audit_rows<'a>(
    feature_names: &[String],
    rows: impl IntoIterator<Item = &'a [f64]>,
    rules: &[DomainRule],
) -> Result<ViolationReport> {
    let cols: Vec<usize> = rules
        .iter()
        .map(|r| {
            feature_names.iter().position(|n| *n == r.feature).ok_or_else(|| Error::UnknownFeature(r.feature.clone()))
        })
        .collect::<Result<_>>()?;
    let mut n = 0;
    let mut violations = Vec::new();
    for (i, x) in rows.into_iter().enumerate() {
        n += 1;
        let broken: Vec<usize> =
            rules.iter().zip(&cols).enumerate().filter(|(_, (r, &c))| !r.allows(x[c])).map(|(k, _)| k).collect();
        if !broken.is_empty() {
            violations.push(SampleViolation { sample: i, rules: broken });
        }
    }
    let k = violations.len();
    Ok(ViolationReport {
        n_synth: n,
        n_violating_samples: k,
        violations,
        violation_rate: if n == 0 { 0.0 } else { k as f64 / n as f64 },
    })
}

pub fn mean_rate_over_runs(reports: &[ViolationReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Stats("mean of zero violation reports".into()));
    }
    Ok(reports.iter().map(|r| r.violation_rate).sum::<f64>() / reports.len() as f64)
}

/// One summary line of a violation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub method: String,
    pub dataset: String,
    pub level: f64,
    pub rate: f64,
}

pub fn write_summary_csv(rows: &[RateSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["Age".into(), "Income".into()]
    }

    #[test]
    fn clean_samples_rate_zero() {
        let rules = vec![DomainRule::new("Age", Some(18.0), Some(95.0))];
        let rows = [vec![20.0, 1.0], vec![95.0, 2.0]];
        let r = audit_rows(&names(), rows.iter().map(Vec::as_slice), &rules).unwrap();
        assert_eq!(r.violation_rate, 0.0);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn half_violating() {
        let rules = vec![DomainRule::new("Age", Some(0.0), None), DomainRule::new("Income", None, Some(10.0))];
        let rows: Vec<Vec<f64>> = (0..20).map(|i| if i % 2 == 0 { vec![-1.0, 11.0] } else { vec![5.0, 5.0] }).collect();
        let r = audit_rows(&names(), rows.iter().map(Vec::as_slice), &rules).unwrap();
        assert_eq!(r.n_violating_samples, 10);
        assert_eq!(r.violation_rate, 0.5);
        // both rules listed, sample counted once
        assert_eq!(r.violations[0].rules, vec![0, 1]);
    }

    #[test]
    fn unknown_feature_rejected() {
        let rules = vec![DomainRule::new("Height", Some(0.0), None)];
        assert!(matches!(
            audit_rows(&names(), std::iter::empty(), &rules),
            Err(Error::UnknownFeature(f)) if f == "Height"
        ));
    }

    #[test]
    fn parse_rules() {
        let r = rules_from_str(r#"{"rules":[{"feature":"Age","lower":0,"upper":null}]}"#).unwrap();
        assert_eq!(r, vec![DomainRule::new("Age", Some(0.0), None)]);
        assert!(rules_from_str(r#"{"rules":[]}"#).unwrap().is_empty());
        let loan = r#"{"rules":[
            {"feature":"Age","lower":30,"upper":null,"description":"x_1 >= 30"},
            {"feature":"Income","lower":45,"upper":null},
            {"feature":"CreditScore","lower":600,"upper":null},
            {"feature":"Children","lower":null,"upper":3}]}"#;
        assert_eq!(rules_from_str(loan).unwrap().len(), 4);
    }

    #[test]
    fn schema_error_paths() {
        match rules_from_str(r#"{"rules":[{"feature":"a"},{"feature":"b","lower":"zero"}]}"#) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.rules[1].lower"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(rules_from_str(r#"{"rule":[]}"#), Err(Error::Schema { .. })));
    }

    #[test]
    fn rules_json_round_trip() {
        let rules = vec![
            DomainRule::new("Age", Some(18.0), Some(95.0)).with_description("adult"),
            DomainRule::new("Income", Some(0.0), None),
        ];
        assert_eq!(rules_from_str(&rules_to_json(&rules).unwrap()).unwrap(), rules);
    }

    #[test]
    fn mean_rates() {
        let rep = |rate| ViolationReport { violation_rate: rate, ..ViolationReport::empty() };
        assert_eq!(mean_rate_over_runs(&[rep(0.0), rep(0.0), rep(0.0)]).unwrap(), 0.0);
        assert_eq!(mean_rate_over_runs(&[rep(0.4), rep(0.6)]).unwrap(), 0.5);
        assert!(mean_rate_over_runs(&[]).is_err());
    }
}
