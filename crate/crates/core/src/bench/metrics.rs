//! Macro-averaged classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Unweighted means over all `n_classes` classes. A ratio with a zero
/// denominator counts as 0, so absent or never-predicted classes pull the
/// averages down.
pub fn macro_metrics(y_true: &[ClassId], y_pred: &[ClassId], n_classes: usize) -> Result<MacroMetrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), got: y_pred.len() });
    }
    if y_true.is_empty() || n_classes == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut tp = vec![0usize; n_classes];
    let mut predicted = vec![0usize; n_classes];
    let mut actual = vec![0usize; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes {
            return Err(Error::UnknownClass(t));
        }
        if p >= n_classes {
            return Err(Error::UnknownClass(p));
        }
        actual[t] += 1;
        predicted[p] += 1;
        tp[t] += usize::from(t == p);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut f1, mut precision, mut recall) = (0.0, 0.0, 0.0);
    for c in 0..n_classes {
        let p = ratio(tp[c], predicted[c]);
        let r = ratio(tp[c], actual[c]);
        precision += p;
        recall += r;
        f1 += if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    }
    let k = n_classes as f64;
    Ok(MacroMetrics { f1: f1 / k, precision: precision / k, recall: recall / k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_constant_predictors() {
        let m = macro_metrics(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap();
        assert_eq!((m.f1, m.precision, m.recall), (1.0, 1.0, 1.0));
        // always class 0 on a 2:1 set: class 0 gets p=2/3 r=1, class 1 gets 0
        let m = macro_metrics(&[0, 0, 1], &[0, 0, 0], 2).unwrap();
        assert!((m.f1 - 0.4).abs() < 1e-12);
        assert!((m.precision - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.recall, 0.5);
    }

    #[test]
    fn rejects_mismatch_and_unknown() {
        assert!(macro_metrics(&[0], &[0, 1], 2).is_err());
        assert!(macro_metrics(&[0, 2], &[0, 1], 2).is_err());
        assert!(macro_metrics(&[], &[], 2).is_err());
    }
}
