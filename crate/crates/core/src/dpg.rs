//! Decision Predicate Graph and class-bound extraction.
//!
//! Nodes are split predicates (quantized thresholds) and class leaves. Each
//! `(tree, sample)` traversal adds one to every consecutive pair on its path,
//! including the final predicate → leaf hop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::predicate::{Op, Predicate};
use crate::tabular::{ClassId, Dataset};

pub const DEFAULT_QUANTIZE_DECIMALS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Predicate(Predicate),
    Leaf(ClassId),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DpGraph {
    pub quantize_decimals: u32,
    pub predicate_nodes: BTreeSet<Predicate>,
    pub leaf_nodes: BTreeSet<ClassId>,
    pub edges: BTreeMap<(Node, Node), u64>,
    /// Traversals ending in a leaf of each class.
    pub class_paths: BTreeMap<ClassId, u64>,
    /// For each class, how many of its traversals contain each predicate.
    pub class_support: BTreeMap<ClassId, BTreeMap<Predicate, u64>>,
    pub forest_seed: u64,
}

impl DpGraph {
    fn merge(&mut self, other: DpGraph) {
        self.predicate_nodes.extend(other.predicate_nodes);
        self.leaf_nodes.extend(other.leaf_nodes);
        for (k, w) in other.edges {
            *self.edges.entry(k).or_default() += w;
        }
        for (c, n) in other.class_paths {
            *self.class_paths.entry(c).or_default() += n;
        }
        for (c, sup) in other.class_support {
            let dst = self.class_support.entry(c).or_default();
            for (p, n) in sup {
                *dst.entry(p).or_default() += n;
            }
        }
    }

    /// Total weight of edges entering `node`.
    pub fn in_weight(&self, node: Node) -> u64 {
        self.edges.iter().filter(|((_, to), _)| *to == node).map(|(_, w)| *w).sum()
    }

    /// Graphviz rendering with edge labels set to weights.
    pub fn to_dot(&self, feature_names: &[String], class_names: &[String]) -> String {
        let label = |n: &Node| match n {
            Node::Predicate(p) => format!(
                "{} {} {}",
                feature_names.get(p.feature).map_or_else(|| format!("f{}", p.feature), Clone::clone),
                p.op.symbol(),
                p.threshold
            ),
            Node::Leaf(c) => class_names.get(*c).map_or_else(|| format!("class {c}"), Clone::clone),
        };
        let id = |n: &Node| match n {
            Node::Predicate(p) => {
                format!("p_{}_{}_{}", p.feature, if p.op == Op::Le { "le" } else { "gt" }, p.threshold.to_bits())
            }
            Node::Leaf(c) => format!("leaf_{c}"),
        };
        let mut out = String::from("digraph dpg {\n  rankdir=TB;\n");
        for p in &self.predicate_nodes {
            let n = Node::Predicate(*p);
            let _ = writeln!(out, "  {} [shape=box, label=\"{}\"];", id(&n), label(&n));
        }
        for c in &self.leaf_nodes {
            let n = Node::Leaf(*c);
            let _ = writeln!(out, "  {} [shape=ellipse, style=filled, label=\"{}\"];", id(&n), label(&n));
        }
        for ((a, b), w) in &self.edges {
            let _ = writeln!(out, "  {} -> {} [label=\"{w}\"];", id(a), id(b));
        }
        out.push_str("}\n");
        out
    }
}

/// Routes every training sample through every tree and accumulates the graph.
pub fn build_dpg(forest: &Forest, train: &Dataset, quantize_decimals: u32) -> Result<DpGraph> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.n_features() != forest.n_features {
        return Err(Error::DimensionMismatch { expected: forest.n_features, got: train.n_features() });
    }
    let partials: Vec<DpGraph> = forest
        .trees
        .par_iter()
        .map(|tree| {
            let mut g = DpGraph::default();
            for x in train.rows() {
                let (path, leaf) = tree.route(x);
                let class = tree.leaf_class(leaf).expect("route ends at a leaf");
                let path: Vec<Predicate> = path.iter().map(|p| p.quantized(quantize_decimals)).collect();
                g.leaf_nodes.insert(class);
                *g.class_paths.entry(class).or_default() += 1;
                let distinct: BTreeSet<Predicate> = path.iter().copied().collect();
                let sup = g.class_support.entry(class).or_default();
                for p in distinct {
                    *sup.entry(p).or_default() += 1;
                }
                g.predicate_nodes.extend(path.iter().copied());
                let nodes: Vec<Node> =
                    path.iter().map(|p| Node::Predicate(*p)).chain(std::iter::once(Node::Leaf(class))).collect();
                for w in nodes.windows(2) {
                    *g.edges.entry((w[0], w[1])).or_default() += 1;
                }
            }
            g
        })
        .collect();
    let mut graph = DpGraph { quantize_decimals, forest_seed: forest.config.seed, ..Default::default() };
    for g in partials {
        graph.merge(g);
    }
    Ok(graph)
}

/// Closed interval; infinite sides are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY };

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }

    pub fn finite_sides(&self) -> usize {
        usize::from(self.lower.is_finite()) + usize::from(self.upper.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Per-class feasible boxes. Features missing from a class map are
/// unbounded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassBounds {
    pub n_features: usize,
    pub classes: BTreeMap<ClassId, BTreeMap<usize, Interval>>,
}

impl ClassBounds {
    pub fn new(n_features: usize) -> Self {
        ClassBounds { n_features, classes: BTreeMap::new() }
    }

    pub fn interval(&self, class: ClassId, feature: usize) -> Interval {
        self.classes.get(&class).and_then(|m| m.get(&feature)).copied().unwrap_or(Interval::UNBOUNDED)
    }

    pub fn has_class(&self, class: ClassId) -> bool {
        self.classes.contains_key(&class)
    }

    /// Dense per-feature intervals for `class`.
    pub fn box_for(&self, class: ClassId) -> Result<Vec<Interval>> {
        let m = self.classes.get(&class).ok_or(Error::UnknownClass(class))?;
        Ok((0..self.n_features).map(|f| m.get(&f).copied().unwrap_or(Interval::UNBOUNDED)).collect())
    }
}

/// Outcome of checking one vector against one class box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub satisfied: bool,
    pub violations: Vec<(usize, Side)>,
}

pub fn check_bounds(bounds: &ClassBounds, class: ClassId, x: &[f64]) -> Result<BoundCheck> {
    if x.len() != bounds.n_features {
        return Err(Error::DimensionMismatch { expected: bounds.n_features, got: x.len() });
    }
    let m = bounds.classes.get(&class).ok_or(Error::UnknownClass(class))?;
    let mut violations = Vec::new();
    for (&f, iv) in m {
        if x[f] < iv.lower {
            violations.push((f, Side::Lower));
        }
        if x[f] > iv.upper {
            violations.push((f, Side::Upper));
        }
    }
    Ok(BoundCheck { satisfied: violations.is_empty(), violations })
}

/// Derives one box per class from the predicates on that class's paths.
///
/// For class `c` and feature `f`, among the predicates whose support over
/// `c`-paths is at least `min_support`, the lower bound is the smallest `>`
/// threshold and the upper bound the largest `<=` threshold; a side without
/// such predicates stays infinite. Finite sides are then widened to cover
/// every training sample labelled `c`, so the box always encloses its class.
pub fn extract_class_bounds(dpg: &DpGraph, forest: &Forest, train: &Dataset, min_support: f64) -> Result<ClassBounds> {
    if !(0.0..=1.0).contains(&min_support) {
        return Err(Error::InvalidConfig(format!("min_support must lie in [0,1], got {min_support}")));
    }
    if train.n_features() != forest.n_features {
        return Err(Error::DimensionMismatch { expected: forest.n_features, got: train.n_features() });
    }
    let d = train.n_features();
    let mut bounds = ClassBounds::new(d);
    let counts = train.class_counts();
    for (c, &count) in counts.iter().enumerate() {
        let paths = dpg.class_paths.get(&c).copied().unwrap_or(0);
        if paths == 0 {
            if count > 0 {
                return Err(Error::NoClassPaths(train.class_names()[c].clone()));
            }
            continue;
        }
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        if let Some(sup) = dpg.class_support.get(&c) {
            for (p, &n) in sup {
                if (n as f64) < min_support * paths as f64 {
                    continue;
                }
                match p.op {
                    Op::Gt => lower[p.feature] = lower[p.feature].min(p.threshold),
                    Op::Le => upper[p.feature] = upper[p.feature].max(p.threshold),
                }
            }
        }
        for i in train.indices_of(c) {
            for (f, &v) in train.row(i).iter().enumerate() {
                if lower[f].is_finite() {
                    lower[f] = lower[f].min(v);
                }
                if upper[f].is_finite() {
                    upper[f] = upper[f].max(v);
                }
            }
        }
        let mut m = BTreeMap::new();
        for f in 0..d {
            let iv = Interval {
                lower: if lower[f].is_finite() { lower[f] } else { f64::NEG_INFINITY },
                upper: if upper[f].is_finite() { upper[f] } else { f64::INFINITY },
            };
            if !iv.is_unbounded() {
                m.insert(f, iv);
            }
        }
        bounds.classes.insert(c, m);
    }
    Ok(bounds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintsMetadata {
    pub quantize_decimals: u32,
    pub min_support: f64,
    pub forest_seed: u64,
}

fn bound_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// JSON document of the class bounds keyed by class and feature names;
/// `null` encodes an infinite side.
pub fn export_constraints(
    bounds: &ClassBounds,
    feature_names: &[String],
    class_names: &[String],
    metadata: &ConstraintsMetadata,
) -> Result<Value> {
    if feature_names.len() != bounds.n_features {
        return Err(Error::DimensionMismatch { expected: bounds.n_features, got: feature_names.len() });
    }
    let mut classes = Map::new();
    for (&c, m) in &bounds.classes {
        let name = class_names.get(c).ok_or(Error::UnknownClass(c))?;
        let mut feats = Map::new();
        for (&f, iv) in m {
            feats.insert(
                feature_names[f].clone(),
                json!({"lower": bound_value(iv.lower), "upper": bound_value(iv.upper)}),
            );
        }
        classes.insert(name.clone(), Value::Object(feats));
    }
    Ok(json!({
        "class_bounds": classes,
        "metadata": serde_json::to_value(metadata)?,
    }))
}

/// Inverse of [`export_constraints`].
pub fn import_constraints(
    doc: &Value,
    feature_names: &[String],
    class_names: &[String],
) -> Result<(ClassBounds, Option<ConstraintsMetadata>)> {
    let schema = |path: String, msg: &str| Error::Schema { path, msg: msg.to_string() };
    let classes = doc
        .get("class_bounds")
        .and_then(Value::as_object)
        .ok_or_else(|| schema("$.class_bounds".into(), "expected an object"))?;
    let mut bounds = ClassBounds::new(feature_names.len());
    for (cname, feats) in classes {
        let c = class_names
            .iter()
            .position(|n| n == cname)
            .ok_or_else(|| schema(format!("$.class_bounds.{cname}"), "unknown class"))?;
        let feats = feats.as_object().ok_or_else(|| schema(format!("$.class_bounds.{cname}"), "expected an object"))?;
        let mut m = BTreeMap::new();
        for (fname, iv) in feats {
            let path = format!("$.class_bounds.{cname}.{fname}");
            let f =
                feature_names.iter().position(|n| n == fname).ok_or_else(|| schema(path.clone(), "unknown feature"))?;
            let side = |key: &str, inf: f64| -> Result<f64> {
                match iv.get(key) {
                    None | Some(Value::Null) => Ok(inf),
                    Some(v) => v.as_f64().ok_or_else(|| schema(format!("{path}.{key}"), "expected a number or null")),
                }
            };
            let interval = Interval { lower: side("lower", f64::NEG_INFINITY)?, upper: side("upper", f64::INFINITY)? };
            if interval.lower > interval.upper {
                return Err(schema(path, "lower exceeds upper"));
            }
            m.insert(f, interval);
        }
        bounds.classes.insert(c, m);
    }
    let meta = match doc.get("metadata") {
        Some(v) if !v.is_null() => Some(serde_json::from_value(v.clone())?),
        _ => None,
    };
    Ok((bounds, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{ForestConfig, Tree, TreeNode};
    use crate::tabular::FeatureStats;

    fn stump_forest(threshold: f64) -> Forest {
        Forest {
            trees: vec![Tree {
                nodes: vec![
                    TreeNode::Internal { feature: 0, threshold, left: 1, right: 2 },
                    TreeNode::Leaf { class_counts: vec![2, 0], predicted_class: 0 },
                    TreeNode::Leaf { class_counts: vec![0, 1], predicted_class: 1 },
                ],
            }],
            config: ForestConfig::default(),
            n_features: 1,
            n_classes: 2,
            stats: FeatureStats { min: vec![0.0], max: vec![4.0] },
        }
    }

    fn data(xs: &[f64], labels: Vec<usize>) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect(), labels, vec!["f0".into()], vec!["c0".into(), "c1".into()])
            .unwrap()
    }

    #[test]
    fn single_leaf_forest_graph() {
        let forest = Forest { trees: vec![Tree::leaf(vec![3, 1])], ..stump_forest(0.0) };
        let g = build_dpg(&forest, &data(&[1.0, 2.0], vec![0, 1]), 2).unwrap();
        assert!(g.predicate_nodes.is_empty());
        assert!(g.edges.is_empty());
        assert_eq!(g.leaf_nodes, BTreeSet::from([0]));
    }

    #[test]
    fn stump_edge_weights() {
        let g = build_dpg(&stump_forest(2.5), &data(&[1.0, 2.0, 3.0], vec![0, 0, 1]), 2).unwrap();
        let le = Node::Predicate(Predicate::new(0, Op::Le, 2.5));
        let gt = Node::Predicate(Predicate::new(0, Op::Gt, 2.5));
        assert_eq!(g.edges[&(le, Node::Leaf(0))], 2);
        assert_eq!(g.edges[&(gt, Node::Leaf(1))], 1);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.in_weight(Node::Leaf(0)), 2);
    }

    #[test]
    fn stump_bounds() {
        let train = data(&[1.0, 2.0, 3.0], vec![0, 0, 1]);
        let forest = stump_forest(2.5);
        let g = build_dpg(&forest, &train, 2).unwrap();
        let b = extract_class_bounds(&g, &forest, &train, 0.0).unwrap();
        assert_eq!(b.interval(0, 0), Interval { lower: f64::NEG_INFINITY, upper: 2.5 });
        assert_eq!(b.interval(1, 0), Interval { lower: 2.5, upper: f64::INFINITY });
    }

    #[test]
    fn class_without_paths_is_an_error() {
        let train = data(&[1.0, 2.0, 3.0], vec![0, 0, 1]);
        let forest = Forest { trees: vec![Tree::leaf(vec![2, 1])], ..stump_forest(0.0) };
        let g = build_dpg(&forest, &train, 2).unwrap();
        match extract_class_bounds(&g, &forest, &train, 0.0) {
            Err(Error::NoClassPaths(name)) => assert_eq!(name, "c1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn check_bounds_cases() {
        let names: Vec<String> = ["Age", "Income", "CreditScore", "Children"].map(String::from).to_vec();
        let doc = json!({"class_bounds": {"approved": {
            "Age": {"lower": 30, "upper": null},
            "Income": {"lower": 45, "upper": null},
            "CreditScore": {"lower": 600, "upper": null},
            "Children": {"lower": null, "upper": 3}
        }}});
        let (b, _) = import_constraints(&doc, &names, &["rejected".into(), "approved".into()]).unwrap();
        let ok = check_bounds(&b, 1, &[45.0, 50.0, 620.0, 2.0]).unwrap();
        assert_eq!(ok, BoundCheck { satisfied: true, violations: vec![] });
        let bad = check_bounds(&b, 1, &[52.0, 60.0, 590.0, 3.0]).unwrap();
        assert!(!bad.satisfied);
        assert_eq!(bad.violations, vec![(2, Side::Lower)]);
        // closed interval: on the bound is fine
        assert!(check_bounds(&b, 1, &[30.0, 45.0, 600.0, 3.0]).unwrap().satisfied);
        assert!(matches!(check_bounds(&b, 0, &[0.0; 4]), Err(Error::UnknownClass(0))));
    }

    #[test]
    fn export_import_round_trip() {
        let train = data(&[1.0, 2.0, 3.0], vec![0, 0, 1]);
        let forest = stump_forest(2.5);
        let g = build_dpg(&forest, &train, 2).unwrap();
        let b = extract_class_bounds(&g, &forest, &train, 0.0).unwrap();
        let meta = ConstraintsMetadata { quantize_decimals: 2, min_support: 0.0, forest_seed: 0 };
        let doc = export_constraints(&b, train.feature_names(), train.class_names(), &meta).unwrap();
        assert_eq!(doc["class_bounds"]["c0"]["f0"]["lower"], Value::Null);
        assert_eq!(doc["class_bounds"]["c0"]["f0"]["upper"], json!(2.5));
        let (back, m) = import_constraints(&doc, train.feature_names(), train.class_names()).unwrap();
        assert_eq!(back, b);
        assert_eq!(m, Some(meta));
    }

    #[test]
    fn empty_bounds_export() {
        let meta = ConstraintsMetadata { quantize_decimals: 2, min_support: 0.0, forest_seed: 1 };
        let doc = export_constraints(&ClassBounds::new(0), &[], &[], &meta).unwrap();
        assert_eq!(doc["class_bounds"], json!({}));
        assert!(export_constraints(&ClassBounds::new(2), &["a".into()], &[], &meta).is_err());
    }

    #[test]
    fn import_accepts_negative_lower_on_nonnegative_feature() {
        let doc = json!({"class_bounds": {"positive": {"PetalWidth": {"lower": -0.2, "upper": 0.8}}}});
        let (b, meta) =
            import_constraints(&doc, &["PetalWidth".into()], &["negative".into(), "positive".into()]).unwrap();
        assert_eq!(b.interval(1, 0), Interval { lower: -0.2, upper: 0.8 });
        assert!(meta.is_none());
    }

    #[test]
    fn import_reports_schema_path() {
        let doc = json!({"class_bounds": {"c0": {"f0": {"lower": "x"}}}});
        match import_constraints(&doc, &["f0".into()], &["c0".into()]) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.class_bounds.c0.f0.lower"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dot_output_lists_weights() {
        let train = data(&[1.0, 2.0, 3.0], vec![0, 0, 1]);
        let g = build_dpg(&stump_forest(2.5), &train, 2).unwrap();
        let dot = g.to_dot(train.feature_names(), train.class_names());
        assert!(dot.starts_with("digraph dpg {"));
        assert!(dot.contains("[label=\"2\"]"));
        assert!(dot.contains("f0 <= 2.5"));
    }
}
