//! Delimited data loading, class mapping and stratified splitting.
//!
//! Files are comma separated with a header row; the last column holds the
//! class label and every other column is a numeric feature. One label is
//! designated the minority (positive) class and the other the majority.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty input: no header row")]
    MissingHeader,
    #[error("header must name at least one feature and a label column")]
    NoFeatures,
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: `{value}` is not a finite number")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: unknown label `{label}` (binary data expected)")]
    UnknownLabel { line: usize, label: String },
    #[error("minority label `{0}` does not occur in the data")]
    MinorityLabelNotFound(String),
    #[error("class {class} has {count} rows, at least {required} required")]
    TooFewRows {
        class: Class,
        count: usize,
        required: usize,
    },
    #[error("no registry entry named `{0}`")]
    NotInRegistry(String),
}

/// Class tag of a single example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Minority,
    Majority,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Class::Minority => f.write_str("minority"),
            Class::Majority => f.write_str("majority"),
        }
    }
}

/// A binary classification data set. Features are stored column-major so a
/// terminal node evaluates to a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    labels: Vec<Class>,
}

impl Dataset {
    /// Builds a data set from rows. Panics if rows are ragged, empty of
    /// features, or contain non-finite values.
    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>], labels: Vec<Class>) -> Self {
        assert_eq!(rows.len(), labels.len(), "row/label count mismatch");
        let width = rows.first().map_or(0, Vec::len);
        assert!(width >= 1 || rows.is_empty(), "at least one feature required");
        let mut columns = vec![Vec::with_capacity(rows.len()); width];
        for row in rows {
            assert_eq!(row.len(), width, "ragged rows");
            for (col, &v) in columns.iter_mut().zip(row) {
                assert!(v.is_finite(), "non-finite feature value");
                col.push(v);
            }
        }
        Dataset {
            name: name.into(),
            feature_names: (0..width).map(|j| format!("x{j}")).collect(),
            columns,
            labels,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn minority_count(&self) -> usize {
        self.labels.iter().filter(|&&c| c == Class::Minority).count()
    }

    pub fn majority_count(&self) -> usize {
        self.len() - self.minority_count()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Dataset {
        Dataset {
            name: name.into(),
            feature_names: self.feature_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn class_count(&self, class: Class) -> usize {
        match class {
            Class::Minority => self.minority_count(),
            Class::Majority => self.majority_count(),
        }
    }
}

/// Reads a delimited file and maps `minority_label` to [`Class::Minority`].
pub fn load_delimited(path: impl AsRef<Path>, minority_label: &str) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_delimited(&name, &text, minority_label)
}

/// Parses delimited text; see [`load_delimited`].
///
/// The data must contain exactly two distinct labels. If the designated
/// minority label turns out to be the more frequent class the roles are
/// swapped so that the minority class is never the larger one.
pub fn parse_delimited(name: &str, text: &str, minority_label: &str) -> Result<Dataset, DatasetError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or(DatasetError::MissingHeader)?;
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(DatasetError::NoFeatures);
    }
    let width = header.len() - 1;

    let mut columns = vec![Vec::new(); width];
    let mut raw_labels: Vec<usize> = Vec::new();
    let mut distinct: Vec<String> = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(DatasetError::FieldCount {
                line,
                expected: header.len(),
                found: fields.len(),
            });
        }
        for (j, field) in fields[..width].iter().enumerate() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DatasetError::NonNumeric {
                    line,
                    column: header[j].clone(),
                    value: field.to_string(),
                })?;
            columns[j].push(v);
        }
        let label = fields[width];
        let id = match distinct.iter().position(|d| d == label) {
            Some(id) => id,
            None => {
                let minority_seen = distinct.iter().any(|d| d == minority_label);
                // Room for one other label besides the minority label.
                if distinct.len() == 2 || (distinct.len() == 1 && !minority_seen && label != minority_label) {
                    return Err(DatasetError::UnknownLabel {
                        line,
                        label: label.to_string(),
                    });
                }
                distinct.push(label.to_string());
                distinct.len() - 1
            }
        };
        raw_labels.push(id);
    }

    let minority_id = distinct
        .iter()
        .position(|d| d == minority_label)
        .ok_or_else(|| DatasetError::MinorityLabelNotFound(minority_label.to_string()))?;
    let mut labels: Vec<Class> = raw_labels
        .iter()
        .map(|&id| if id == minority_id { Class::Minority } else { Class::Majority })
        .collect();

    let minority = labels.iter().filter(|&&c| c == Class::Minority).count();
    let majority = labels.len() - minority;
    if majority == 0 {
        return Err(DatasetError::TooFewRows {
            class: Class::Majority,
            count: 0,
            required: 1,
        });
    }
    if minority > majority {
        log::warn!("{name}: label `{minority_label}` is the larger class, swapping class roles");
        for c in &mut labels {
            *c = match c {
                Class::Minority => Class::Majority,
                Class::Majority => Class::Minority,
            };
        }
    }

    Ok(Dataset {
        name: name.to_string(),
        feature_names: header[..width].to_vec(),
        columns,
        labels,
    })
}

/// The small synthetic imbalanced data set shipped with the crate
/// (240 rows, 40 minority, 5 features).
pub fn bundled_toy() -> Dataset {
    const TEXT: &str = include_str!("../data/toy_imbalanced.csv");
    parse_delimited("toy_imbalanced", TEXT, "pos").expect("bundled data set is valid")
}

/// Train/test halves produced by [`stratified_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    /// Set when some class had a single row, so one half lacks that class.
    pub degenerate: bool,
}

/// Seeded 50/50 split that keeps the class ratio in both halves.
///
/// Rows of each class are shuffled and dealt alternately to train and test.
/// An odd minority count leaves the extra row in train; if the majority count
/// is odd as well, its extra row goes to test so that the halves differ in
/// size by at most one. Within each half, rows keep their original relative
/// order.
pub fn stratified_split(data: &Dataset, seed: u64) -> Result<SplitDataset, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::with_capacity(data.len() / 2 + 2);
    let mut test_idx = Vec::with_capacity(data.len() / 2 + 2);
    let mut degenerate = false;
    let mut train_has_surplus = false;
    for class in [Class::Minority, Class::Majority] {
        let count = data.class_count(class);
        if count == 0 {
            return Err(DatasetError::TooFewRows {
                class,
                count,
                required: 1,
            });
        }
        if count < 2 {
            log::warn!(
                "{}: {class} class has a single row, the test half will not contain it",
                data.name()
            );
            degenerate = true;
        }
        let mut rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        rows.shuffle(&mut rng);
        let odd = count % 2 == 1;
        let first = usize::from(train_has_surplus);
        for (k, row) in rows.into_iter().enumerate() {
            if (k + first) % 2 == 0 {
                train_idx.push(row);
            } else {
                test_idx.push(row);
            }
        }
        if odd {
            train_has_surplus = !train_has_surplus;
        }
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SplitDataset {
        train: data.subset(format!("{}-train", data.name()), &train_idx),
        test: data.subset(format!("{}-test", data.name()), &test_idx),
        seed,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureType {
    Real,
    Binary,
}

impl fmt::Display for FeatureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureType::Real => f.write_str("Real"),
            FeatureType::Binary => f.write_str("Binary"),
        }
    }
}

/// Metadata for one benchmark data set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub total: usize,
    pub positive: usize,
    pub negative: usize,
    /// Majority-to-minority ratio as printed, e.g. `1:3`.
    pub imbalance_ratio: &'static str,
    pub feature_count: usize,
    pub feature_type: FeatureType,
}

#[allow(clippy::too_many_arguments)]
const fn entry(
    name: &'static str,
    description: &'static str,
    total: usize,
    positive: usize,
    negative: usize,
    imbalance_ratio: &'static str,
    feature_count: usize,
    feature_type: FeatureType,
) -> RegistryEntry {
    RegistryEntry {
        name,
        description,
        total,
        positive,
        negative,
        imbalance_ratio,
        feature_count,
        feature_type,
    }
}

static ENTRIES: [RegistryEntry; 8] = [
    entry("Ion", "Good/bad (ionosphere radar signal)", 351, 126, 225, "1:3", 34, FeatureType::Real),
    entry("Spect", "Abnormal/normal (cardiac tom. scan)", 267, 55, 212, "1:4", 22, FeatureType::Binary),
    entry("Yeast1", "mit/other (protein sequence)", 1482, 244, 1238, "1:6", 8, FeatureType::Real),
    entry("Yeast2", "me3/other (protein sequence)", 1482, 163, 1319, "1:9", 8, FeatureType::Real),
    entry("Climate", "failure/success (simulation crashes)", 540, 46, 494, "1:12", 18, FeatureType::Real),
    entry(
        "Glass",
        "building windows float proc./other (type of glass)",
        214,
        70,
        144,
        "1:3",
        10,
        FeatureType::Real,
    ),
    entry(
        "Parkinson's",
        "parkinson's disease/healthy (vocal measurements)",
        195,
        48,
        147,
        "1:4",
        22,
        FeatureType::Real,
    ),
    entry("Wine", "wine type 1/other (Alcohol cultivar)", 178, 59, 119, "1:3", 12, FeatureType::Real),
];

/// The benchmark data sets used for the hypervolume experiments.
#[derive(Debug, Clone, Copy)]
pub struct DatasetRegistry {
    entries: &'static [RegistryEntry],
}

pub fn registry() -> DatasetRegistry {
    DatasetRegistry { entries: &ENTRIES }
}

impl DatasetRegistry {
    pub fn entries(&self) -> &'static [RegistryEntry] {
        self.entries
    }

    /// Case-insensitive lookup by name.
    pub fn lookup(&self, name: &str) -> Result<&'static RegistryEntry, DatasetError> {
        self.entries
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| DatasetError::NotInRegistry(name.to_string()))
    }

    /// CSV with header `name,total,pos,neg,ratio,features,type`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,total,pos,neg,ratio,features,type\n");
        for e in self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.name, e.total, e.positive, e.negative, e.imbalance_ratio, e.feature_count, e.feature_type
            ));
        }
        out
    }
}
