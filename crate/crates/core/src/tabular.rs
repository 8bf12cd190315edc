//! Tabular data model: an immutable numeric feature matrix with class labels.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Class identifier: index into [`Dataset::class_names`].
pub type ClassId = usize;

/// Numeric feature matrix (row-major) with integer class labels.
///
/// Every row carries an optional provenance tag: the index of the row in the
/// dataset it was originally loaded or generated as. Synthetic rows carry
/// `None`. Subsetting preserves tags, which lets the benchmark harness prove
/// that test rows never reach a sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_features: usize,
    labels: Vec<ClassId>,
    provenance: Vec<Option<usize>>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    label_name: String,
}

impl Dataset {
    /// Builds a dataset from rows, validating every invariant.
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let d = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset(format!("row {i} has {} values, expected {d}", row.len())));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(values, labels, feature_names, class_names)
    }

    /// Builds a dataset from a row-major value buffer.
    pub fn from_flat(
        values: Vec<f64>,
        labels: Vec<ClassId>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        let provenance = (0..n).map(Some).collect();
        let ds = Dataset {
            values,
            n_features: feature_names.len(),
            labels,
            provenance,
            feature_names,
            class_names,
            label_name: "class".to_string(),
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.values.len() != n * self.n_features {
            return Err(Error::InvalidDataset(format!(
                "{} values do not form {n} rows of {} features",
                self.values.len(),
                self.n_features
            )));
        }
        let mut seen = HashMap::new();
        for (j, name) in self.feature_names.iter().enumerate() {
            if let Some(prev) = seen.insert(name.as_str(), j) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate feature name `{name}` at columns {prev} and {j}"
                )));
            }
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(Error::UnknownClass(bad));
        }
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, feature {}",
                pos / self.n_features.max(1),
                pos % self.n_features.max(1)
            )));
        }
        Ok(())
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.n_samples()).map(move |i| self.row(i))
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features + j]
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    pub fn provenance(&self) -> &[Option<usize>] {
        &self.provenance
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn class_index(&self, name: &str) -> Option<ClassId> {
        self.class_names.iter().position(|n| n == name)
    }

    /// Per-class sample counts, indexed by class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices belonging to `class`, ascending.
    pub fn indices_of(&self, class: ClassId) -> Vec<usize> {
        (0..self.n_samples()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Class with the fewest samples among those present; ties go to the
    /// lowest id.
    pub fn minority_class(&self) -> Option<ClassId> {
        self.class_counts().iter().enumerate().filter(|(_, &c)| c > 0).min_by_key(|(i, &c)| (c, *i)).map(|(i, _)| i)
    }

    /// Rows at `indices` in the given order, provenance preserved.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.n_features;
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            values,
            n_features: d,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Returns a copy with synthetic `rows` appended under `label`.
    pub fn with_appended(&self, rows: &[Vec<f64>], label: ClassId) -> Result<Dataset> {
        if label >= self.n_classes() {
            return Err(Error::UnknownClass(label));
        }
        let mut out = self.clone();
        for row in rows {
            if row.len() != self.n_features {
                return Err(Error::DimensionMismatch { expected: self.n_features, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset("non-finite synthetic value".into()));
            }
            out.values.extend_from_slice(row);
            out.labels.push(label);
            out.provenance.push(None);
        }
        Ok(out)
    }

    /// Requires at least two classes with samples, as every supervised
    /// operation does.
    pub fn require_supervised(&self) -> Result<()> {
        let present = self.class_counts().iter().filter(|&&c| c > 0).count();
        if present < 2 {
            return Err(Error::InvalidDataset(format!(
                "supervised operation needs at least 2 classes, found {present}"
            )));
        }
        Ok(())
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) if s.is_empty() || s == "last" => LabelColumn::Last,
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label)
}

/// Parses a header-first numeric CSV. Class ids follow first appearance.
/// Reported rows are 1-based file lines (the header is line 1); columns are
/// 1-based.
pub fn read_csv<R: Read>(reader: R, label: &LabelColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let label_col = match label {
        LabelColumn::Last => headers.len() - 1,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => return Err(Error::MissingColumn(format!("#{i}"))),
        LabelColumn::Name(name) => {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.clone()))?
        }
    };
    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|(j, _)| *j != label_col).map(|(_, h)| h.clone()).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_ids: HashMap<String, ClassId> = HashMap::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = r + 2;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: line,
                col: record.len().min(headers.len()) + 1,
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_col {
                let next = class_names.len();
                let id = *class_ids.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                labels.push(id);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: line,
                    col: j + 1,
                    msg: format!("`{cell}` is not a decimal number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse { row: line, col: j + 1, msg: format!("`{cell}` is not finite") });
                }
                values.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let label_name = headers[label_col].clone();
    Ok(Dataset::from_flat(values, labels, feature_names, class_names)?.with_label_name(label_name))
}

/// Writes features then the label column (as class names). Floats use the
/// shortest representation that round-trips exactly.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(ds, file)
}

pub fn write_csv_to<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(&ds.label_name);
    wtr.write_record(&header)?;
    for i in 0..ds.n_samples() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(ds.class_names[ds.labels[i]].clone());
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Split fractions and seed for train/test and the internal surrogate
/// holdout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8, holdout_fraction: 0.8, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("train_fraction", self.train_fraction), ("holdout_fraction", self.holdout_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0,1), got {f}")));
            }
        }
        Ok(())
    }
}

/// Stratified train/test split at `spec.train_fraction`.
pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    split_by_fraction(ds, spec.train_fraction, spec.seed)
}

/// Splits a training set into the surrogate-fitting portion
/// (`spec.holdout_fraction`) and the remainder.
pub fn holdout_split(train: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    split_by_fraction(train, spec.holdout_fraction, seed::derive(spec.seed, &[0x401d]))
}

/// Per class: the minority class gets `ceil(f·n_c)` rows in the first
/// partition, every other class `round(f·n_c)`, clamped to `[1, n_c − 1]`.
/// Both partitions keep the original row order.
pub fn split_by_fraction(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("fraction must lie in (0,1), got {fraction}")));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = ds.class_counts();
    if let Some(c) = (0..counts.len()).find(|&c| counts[c] == 1) {
        return Err(Error::TooFewSamples(
            ds.class_names[c].clone(),
            "stratified split needs at least 2 samples per class".into(),
        ));
    }
    let minority = ds.minority_class();
    let mut rng = seed::rng(seed);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for c in 0..counts.len() {
        let mut idx = ds.indices_of(c);
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let exact = fraction * idx.len() as f64;
        let k = if Some(c) == minority { exact.ceil() } else { exact.round() } as usize;
        let k = k.clamp(1, idx.len() - 1);
        first.extend_from_slice(&idx[..k]);
        second.extend_from_slice(&idx[k..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    Ok((ds.subset(&first), ds.subset(&second)))
}

/// Per-feature extrema over a reference dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureStats {
    pub fn range(&self, j: usize) -> f64 {
        self.max[j] - self.min[j]
    }

    pub fn ranges(&self) -> Vec<f64> {
        (0..self.min.len()).map(|j| self.range(j)).collect()
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    /// Elementwise combination with another set of stats.
    pub fn merge(&self, other: &FeatureStats) -> FeatureStats {
        FeatureStats {
            min: self.min.iter().zip(&other.min).map(|(a, b)| a.min(*b)).collect(),
            max: self.max.iter().zip(&other.max).map(|(a, b)| a.max(*b)).collect(),
        }
    }
}

pub fn feature_stats(ds: &Dataset) -> Result<FeatureStats> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut min = ds.row(0).to_vec();
    let mut max = min.clone();
    for row in ds.rows().skip(1) {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(FeatureStats { min, max })
}

/// Majority count divided by minority count over the classes present.
pub fn imbalance_ratio(ds: &Dataset) -> Result<f64> {
    let present: Vec<usize> = ds.class_counts().into_iter().filter(|&c| c > 0).collect();
    if present.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "imbalance ratio needs at least 2 classes, found {}",
            present.len()
        )));
    }
    let max = *present.iter().max().unwrap() as f64;
    let min = *present.iter().min().unwrap() as f64;
    Ok(max / min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(counts: &[usize]) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                rows.push(vec![i as f64, c as f64]);
                labels.push(c);
            }
        }
        let names = (0..counts.len()).map(|c| format!("c{c}")).collect();
        Dataset::new(rows, labels, vec!["a".into(), "b".into()], names).unwrap()
    }

    #[test]
    fn loads_small_file() {
        let csv = "x,y,label\n1,2,a\n3,4,b\n5,6,a\n";
        let ds = read_csv(csv.as_bytes(), &LabelColumn::Last).unwrap();
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.row(2), &[5.0, 6.0]);
        assert_eq!(ds.label_name(), "label");
    }

    #[test]
    fn label_column_by_name_or_index() {
        let csv = "label,x\na,1\nb,2\n";
        let by_name = read_csv(csv.as_bytes(), &LabelColumn::Name("label".into())).unwrap();
        let by_idx = read_csv(csv.as_bytes(), &LabelColumn::Index(0)).unwrap();
        assert_eq!(by_name, by_idx);
        assert_eq!(by_name.feature_names(), &["x".to_string()]);
        let missing = read_csv(csv.as_bytes(), &LabelColumn::Name("nope".into()));
        assert!(matches!(missing, Err(Error::MissingColumn(_))));
    }

    #[test]
    fn rejects_nan_cell_with_position() {
        let csv = "x,y,label\n1,2,a\n3,NaN,b\n";
        match read_csv(csv.as_bytes(), &LabelColumn::Last) {
            Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (3, 2)),
            other => panic!("expected parse error, got {other:?}"),
        }
        let csv = "x,label\nabc,a\n";
        assert!(matches!(read_csv(csv.as_bytes(), &LabelColumn::Last), Err(Error::Parse { row: 2, col: 1, .. })));
    }

    #[test]
    fn empty_file_is_an_error() {
        let csv = "x,label\n";
        assert!(matches!(read_csv(csv.as_bytes(), &LabelColumn::Last), Err(Error::EmptyDataset)));
    }

    #[test]
    fn iris_shaped_file() {
        let mut csv = String::from("SepalLength,SepalWidth,PetalLength,PetalWidth,class\n");
        for i in 0..150 {
            let label = if i < 50 { "positive" } else { "negative" };
            csv.push_str(&format!("{},{},{},{},{label}\n", 5.0 + i as f64 * 0.01, 3.0, 1.4, 0.2));
        }
        let ds = read_csv(csv.as_bytes(), &LabelColumn::Last).unwrap();
        assert_eq!((ds.n_samples(), ds.n_features(), ds.n_classes()), (150, 4, 2));
    }

    #[test]
    fn write_then_read_round_trips() {
        let ds = Dataset::new(
            vec![vec![0.1, 1e-7], vec![123456.789012345, -2.5]],
            vec![1, 0],
            vec!["p".into(), "q".into()],
            vec!["neg".into(), "pos".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &LabelColumn::Last).unwrap();
        for i in 0..2 {
            assert_eq!(back.row(i), ds.row(i));
        }
        // ids are re-assigned by first appearance
        assert_eq!(back.class_names()[back.label(0)], "pos");
    }

    #[test]
    fn rejects_duplicate_feature_names() {
        let r = Dataset::new(vec![vec![1.0, 2.0]], vec![0], vec!["a".into(), "a".into()], vec!["x".into()]);
        assert!(r.is_err());
    }

    #[test]
    fn split_small_imbalanced() {
        let ds = labelled(&[8, 2]);
        let spec = SplitSpec { train_fraction: 0.8, holdout_fraction: 0.8, seed: 3 };
        let (train, test) = stratified_split(&ds, &spec).unwrap();
        let tc = train.class_counts();
        assert!((6..=7).contains(&tc[0]));
        assert!((1..=2).contains(&tc[1]));
        assert_eq!(test.class_counts()[1], 2 - tc[1]);
        assert_eq!(train.n_samples() + test.n_samples(), 10);
    }

    #[test]
    fn split_balanced_hundred() {
        let ds = labelled(&[50, 50]);
        let (train, test) = stratified_split(&ds, &SplitSpec::default()).unwrap();
        // direct count: round(0.8·50) + ceil(0.8·50) = 40 + 40
        assert_eq!(train.n_samples(), 80);
        assert_eq!(test.n_samples(), 20);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let ds = labelled(&[5, 1]);
        match stratified_split(&ds, &SplitSpec::default()) {
            Err(Error::TooFewSamples(name, _)) => assert_eq!(name, "c1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_same_seed_same_partition() {
        let ds = labelled(&[30, 12]);
        let spec = SplitSpec { seed: 11, ..Default::default() };
        let a = stratified_split(&ds, &spec).unwrap();
        let b = stratified_split(&ds, &spec).unwrap();
        assert_eq!(a.0.provenance(), b.0.provenance());
        assert_eq!(a.1.provenance(), b.1.provenance());
    }

    #[test]
    fn stats_basic() {
        let single =
            Dataset::new(vec![vec![1.0, -2.0]], vec![0], vec!["a".into(), "b".into()], vec!["x".into()]).unwrap();
        let s = feature_stats(&single).unwrap();
        assert_eq!(s.min, s.max);
        assert_eq!(s.ranges(), vec![0.0, 0.0]);

        let two = Dataset::new(
            vec![vec![0.0, 1.0], vec![2.0, 3.0]],
            vec![0, 0],
            vec!["a".into(), "b".into()],
            vec!["x".into()],
        )
        .unwrap();
        assert_eq!(feature_stats(&two).unwrap().ranges(), vec![2.0, 2.0]);
    }

    #[test]
    fn stats_of_union_is_merge_of_parts() {
        let ds = labelled(&[7, 5]);
        let a = ds.subset(&[0, 1, 2, 3]);
        let b = ds.subset(&[4, 5, 6, 7, 8, 9, 10, 11]);
        let merged = feature_stats(&a).unwrap().merge(&feature_stats(&b).unwrap());
        assert_eq!(merged, feature_stats(&ds).unwrap());
    }

    #[test]
    fn imbalance_ratio_cases() {
        assert_eq!(imbalance_ratio(&labelled(&[90, 10])).unwrap(), 9.0);
        assert_eq!(imbalance_ratio(&labelled(&[50, 50])).unwrap(), 1.0);
        // ecoli: 301 majority / 35 minority
        let r = imbalance_ratio(&labelled(&[301, 35])).unwrap();
        assert!((r - 8.6).abs() <= 0.05);
        assert!(imbalance_ratio(&labelled(&[10])).is_err());
    }

    #[test]
    fn appended_rows_are_synthetic() {
        let ds = labelled(&[2, 2]);
        let out = ds.with_appended(&[vec![9.0, 9.0]], 1).unwrap();
        assert_eq!(out.n_samples(), 5);
        assert_eq!(out.provenance()[4], None);
        assert_eq!(out.label(4), 1);
    }
}
