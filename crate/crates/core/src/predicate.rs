use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Split test operator. Trees only emit the canonical pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

impl Op {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Op::Le => value <= threshold,
            Op::Gt => value > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "<=",
            Op::Gt => ">",
        }
    }
}

/// A single axis-aligned test `(feature, op, threshold)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Predicate {
    pub feature: usize,
    pub op: Op,
    pub threshold: f64,
}

impl Predicate {
    pub fn new(feature: usize, op: Op, threshold: f64) -> Self {
        Predicate { feature, op, threshold }
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.op.holds(x[self.feature], self.threshold)
    }

    /// Same predicate with its threshold rounded to `decimals` places.
    pub fn quantized(&self, decimals: u32) -> Predicate {
        Predicate { threshold: quantize(self.threshold, decimals), ..*self }
    }
}

/// Rounds half away from zero to `decimals` places. Idempotent.
pub fn quantize(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let q = (value * scale).round() / scale;
    // -0.0 and 0.0 must key the same node
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

// Equality and ordering go through the threshold's bit pattern so that
// predicates can key ordered maps without NaN ambiguity; thresholds are
// always finite.
impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Predicate {}

impl PartialOrd for Predicate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Predicate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.feature.cmp(&other.feature).then(self.op.cmp(&other.op)).then(self.threshold.total_cmp(&other.threshold))
    }
}

impl std::hash::Hash for Predicate {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.feature.hash(state);
        self.op.hash(state);
        self.threshold.to_bits().hash(state);
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{} {} {}", self.feature, self.op.symbol(), self.threshold)
    }
}
