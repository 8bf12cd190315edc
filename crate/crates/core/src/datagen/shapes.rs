//! Two-dimensional imbalanced shapes in the `[0, 100]²` box. The majority
//! is uniform over the box outside the minority region.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::constraints::DomainRule;
use crate::error::{Error, Result};
use crate::seed;
use crate::tabular::Dataset;

use super::quotas;

pub const BOX: (f64, f64) = (0.0, 100.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Subclus,
    Clover,
    Paw,
}

/// Rectangles `(x0, y0, x1, y1)` of the sub-cluster shape.
const SUBCLUS: [(f64, f64, f64, f64); 5] = [
    (10.0, 15.0, 20.0, 35.0),
    (45.0, 10.0, 55.0, 30.0),
    (80.0, 15.0, 90.0, 35.0),
    (25.0, 60.0, 35.0, 80.0),
    (65.0, 60.0, 75.0, 80.0),
];

/// Petals: ellipses with semi-axes `(a, b)` centred `PETAL_OFFSET` from the
/// clover centre at evenly spaced angles.
const CLOVER_CENTRE: (f64, f64) = (50.0, 50.0);
const PETALS: usize = 5;
const PETAL_OFFSET: f64 = 20.0;
const PETAL_AXES: (f64, f64) = (18.0, 6.0);

/// Discs `(cx, cy, r)`: three toes and a pad.
const PAW: [(f64, f64, f64); 4] = [(28.0, 72.0, 8.0), (50.0, 80.0, 8.0), (72.0, 72.0, 8.0), (50.0, 42.0, 18.0)];

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::Subclus, ShapeKind::Clover, ShapeKind::Paw];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Subclus => "subclus",
            ShapeKind::Clover => "clover",
            ShapeKind::Paw => "paw",
        }
    }

    /// Whether `(x, y)` lies in the minority region.
    pub fn contains(self, x: f64, y: f64) -> bool {
        match self {
            ShapeKind::Subclus => SUBCLUS.iter().any(|&(x0, y0, x1, y1)| x0 <= x && x <= x1 && y0 <= y && y <= y1),
            ShapeKind::Clover => (0..PETALS).any(|k| {
                let t = 2.0 * PI * k as f64 / PETALS as f64;
                let (cx, cy) = (CLOVER_CENTRE.0 + PETAL_OFFSET * t.cos(), CLOVER_CENTRE.1 + PETAL_OFFSET * t.sin());
                let (dx, dy) = (x - cx, y - cy);
                let u = dx * t.cos() + dy * t.sin();
                let v = -dx * t.sin() + dy * t.cos();
                (u / PETAL_AXES.0).powi(2) + (v / PETAL_AXES.1).powi(2) <= 1.0
            }),
            ShapeKind::Paw => PAW.iter().any(|&(cx, cy, r)| (x - cx).powi(2) + (y - cy).powi(2) <= r * r),
        }
    }
}

impl std::str::FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown shape `{s}`")))
    }
}

/// The bounding box as rules on `x` and `y`.
pub fn shape_rules() -> Vec<DomainRule> {
    ["x", "y"].iter().map(|f| DomainRule::new(*f, Some(BOX.0), Some(BOX.1)).with_description("bounding box")).collect()
}

/// `n` points with majority:minority counts following `ratio`; class 0 is
/// `majority`, class 1 `minority`.
pub fn generate_shape(kind: ShapeKind, n: usize, ratio: (u32, u32), seed: u64) -> Result<Dataset> {
    if n < 12 {
        return Err(Error::InvalidConfig(format!("shape datasets need n >= 12, got {n}")));
    }
    let q = quotas(n, &[ratio.0, ratio.1])?;
    let mut rng = seed::rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut filled = [0usize; 2];
    while filled[0] < q[0] || filled[1] < q[1] {
        let x = rng.random_range(BOX.0..=BOX.1);
        let y = rng.random_range(BOX.0..=BOX.1);
        let class = usize::from(kind.contains(x, y));
        if filled[class] < q[class] {
            filled[class] += 1;
            rows.push(vec![x, y]);
            labels.push(class);
        }
    }
    Dataset::new(rows, labels, vec!["x".into(), "y".into()], vec!["majority".into(), "minority".into()])
}
