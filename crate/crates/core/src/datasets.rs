//! Tabular datasets: the synthetic driver-alertness generator, CSV loaders
//! (yeast and generic labelled files) and seeded train/test splitting.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column order produced by [`generate_alertness`].
pub const ALERTNESS_FEATURES: [&str; 4] = ["heart_rate", "yawning", "looks_straight", "eyes_closed"];
pub const ALERTNESS_LABEL: &str = "alert";

pub const YEAST_FEATURES: [&str; 8] = ["mcg", "gvh", "alm", "mit", "erl", "pox", "vac", "nuc"];

const HR_MIN: u32 = 40;
const HR_MAX: u32 = 160;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("{path}: line {line}: {message}")]
    Malformed { path: String, line: u64, message: String },
    #[error("{0}: dataset is empty")]
    Empty(String),
    #[error("split with test_fraction {fraction} on {n} rows leaves an empty partition")]
    EmptyPartition { n: usize, fraction: f64 },
    #[error("test_fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Binary,
    Multiclass,
}

/// Feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub feature_names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub class_names: Vec<String>,
    pub label_name: String,
    pub task_kind: TaskKind,
}

impl TabularDataset {
    /// Builds a dataset after checking shape, label range and finiteness.
    pub fn new(
        feature_names: Vec<String>,
        x: Array2<f64>,
        y: Vec<usize>,
        class_names: Vec<String>,
        label_name: impl Into<String>,
        task_kind: TaskKind,
    ) -> Result<Self> {
        if x.ncols() != feature_names.len() {
            return Err(DatasetError::Invalid(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if x.nrows() != y.len() {
            return Err(DatasetError::Invalid(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos / x.ncols().max(1), pos % x.ncols().max(1));
            return Err(DatasetError::Invalid(format!("non-finite value at row {r}, column {c}")));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= class_names.len()) {
            return Err(DatasetError::Invalid(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if task_kind == TaskKind::Binary && class_names.len() != 2 {
            return Err(DatasetError::Invalid(format!(
                "binary task needs exactly 2 classes, got {}",
                class_names.len()
            )));
        }
        Ok(Self { feature_names, x, y, class_names, label_name: label_name.into(), task_kind })
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            class_names: self.class_names.clone(),
            label_name: self.label_name.clone(),
            task_kind: self.task_kind,
        }
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    /// CSV text with a header row; labels are written by class name.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.n_samples() * 8 * (self.n_features() + 1));
        out.push_str(&self.feature_names.join(","));
        out.push(',');
        out.push_str(&self.label_name);
        out.push('\n');
        for (row, &label) in self.x.outer_iter().zip(&self.y) {
            for v in row.iter() {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&self.class_names[label]);
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| DatasetError::Io { path: path.display().to_string(), source };
        let mut file = fs::File::create(path).map_err(io_err)?;
        file.write_all(self.to_csv_string().as_bytes()).map_err(io_err)?;
        Ok(())
    }
}

/// Parameters of the synthetic alertness generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertnessGenConfig {
    pub n: usize,
    pub seed: u64,
    pub hr_band_low: u32,
    pub hr_band_high: u32,
}

impl Default for AlertnessGenConfig {
    fn default() -> Self {
        Self { n: 20_000, seed: 42, hr_band_low: 60, hr_band_high: 100 }
    }
}

impl AlertnessGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(DatasetError::InvalidConfig("n must be at least 1".into()));
        }
        if !(HR_MIN <= self.hr_band_low && self.hr_band_low < self.hr_band_high && self.hr_band_high <= HR_MAX) {
            return Err(DatasetError::InvalidConfig(format!(
                "heart-rate band [{}, {}] must satisfy {HR_MIN} <= low < high <= {HR_MAX}",
                self.hr_band_low, self.hr_band_high
            )));
        }
        if self.hr_band_low == HR_MIN && self.hr_band_high == HR_MAX {
            return Err(DatasetError::InvalidConfig(format!(
                "heart-rate band [{HR_MIN}, {HR_MAX}] leaves no out-of-band values"
            )));
        }
        Ok(())
    }
}

/// Ground-truth labelling rule of the alertness task.
///
/// Each argument is an "alert-compatible" indicator. The row is alert when at
/// least three of the four hold, or exactly two hold and one of them is the
/// heart-rate band.
pub fn alert_label(yawning: bool, looks_straight: bool, eyes_closed: bool, hr_in_band: bool) -> bool {
    let sum = yawning as u8 + looks_straight as u8 + eyes_closed as u8 + hr_in_band as u8;
    sum >= 3 || (sum == 2 && hr_in_band)
}

/// Generates the synthetic driver-alertness dataset.
pub fn generate_alertness(cfg: &AlertnessGenConfig) -> Result<TabularDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.hr_band_low, cfg.hr_band_high);
    let below = lo - HR_MIN;
    let outside = below + (HR_MAX - hi);

    let mut x = Array2::<f64>::zeros((cfg.n, 4));
    let mut y = Vec::with_capacity(cfg.n);
    for mut row in x.outer_iter_mut() {
        let in_band = rng.random_bool(0.5);
        let hr = if in_band {
            rng.random_range(lo..=hi)
        } else {
            let k = rng.random_range(0..outside);
            if k < below {
                HR_MIN + k
            } else {
                hi + 1 + (k - below)
            }
        };
        let yawning = rng.random_bool(0.5);
        let looks_straight = rng.random_bool(0.5);
        let eyes_closed = rng.random_bool(0.5);
        row[0] = f64::from(hr);
        row[1] = f64::from(u8::from(yawning));
        row[2] = f64::from(u8::from(looks_straight));
        row[3] = f64::from(u8::from(eyes_closed));
        y.push(usize::from(alert_label(yawning, looks_straight, eyes_closed, in_band)));
    }
    TabularDataset::new(
        ALERTNESS_FEATURES.iter().map(|s| s.to_string()).collect(),
        x,
        y,
        vec!["0".into(), "1".into()],
        ALERTNESS_LABEL,
        TaskKind::Binary,
    )
}

struct RawTable {
    header: Option<Vec<String>>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_raw(path: &Path) -> Result<RawTable> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| DatasetError::Io { path: display.clone(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| DatasetError::Csv { path: display.clone(), source })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    let header = match rows.first() {
        Some((_, first)) if first.iter().all(|f| f.parse::<f64>().is_err()) => Some(rows.remove(0).1),
        _ => None,
    };
    if rows.is_empty() {
        return Err(DatasetError::Empty(display));
    }
    Ok(RawTable { header, rows })
}

fn parse_feature(path: &Path, line: u64, col: usize, field: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DatasetError::Malformed {
            path: path.display().to_string(),
            line,
            message: format!("column {} is not a finite number: {field:?}", col + 1),
        }),
    }
}

/// Loads the yeast protein-localisation CSV.
///
/// Accepts 9 columns (8 features + label) or 10 columns (leading sequence
/// name, dropped). A header row is detected when no field of the first row
/// parses as a number.
pub fn load_yeast_csv(path: impl AsRef<Path>) -> Result<TabularDataset> {
    let path = path.as_ref();
    let table = read_raw(path)?;
    let width = table.rows[0].1.len();
    if width != 9 && width != 10 {
        return Err(DatasetError::Malformed {
            path: path.display().to_string(),
            line: table.rows[0].0,
            message: format!("expected 9 or 10 columns, found {width}"),
        });
    }
    let skip = width - 9;
    let mut values = Vec::with_capacity(table.rows.len() * 8);
    let mut class_names: Vec<String> = Vec::new();
    let mut y = Vec::with_capacity(table.rows.len());
    for (line, fields) in &table.rows {
        if fields.len() != width {
            return Err(DatasetError::Malformed {
                path: path.display().to_string(),
                line: *line,
                message: format!("expected {width} columns, found {}", fields.len()),
            });
        }
        for (col, field) in fields[skip..skip + 8].iter().enumerate() {
            values.push(parse_feature(path, *line, col + skip, field)?);
        }
        let label = &fields[width - 1];
        let idx = match class_names.iter().position(|c| c == label) {
            Some(i) => i,
            None => {
                class_names.push(label.clone());
                class_names.len() - 1
            }
        };
        y.push(idx);
    }
    let n = y.len();
    let x = Array2::from_shape_vec((n, 8), values).expect("row width checked above");
    log::info!("loaded {} yeast rows with {} classes from {}", n, class_names.len(), path.display());
    TabularDataset::new(
        YEAST_FEATURES.iter().map(|s| s.to_string()).collect(),
        x,
        y,
        class_names,
        "localization",
        TaskKind::Multiclass,
    )
}

/// Loads an arbitrary labelled CSV.
///
/// `label_column` names the target column (requires a header); by default the
/// last column is the target. Integer-valued labels are ordered numerically,
/// anything else in first-appearance order. Two classes make a binary task.
pub fn load_labeled_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<TabularDataset> {
    let path = path.as_ref();
    let table = read_raw(path)?;
    let width = table.rows[0].1.len();
    if width < 2 {
        return Err(DatasetError::Malformed {
            path: path.display().to_string(),
            line: table.rows[0].0,
            message: "need at least one feature column and a label column".into(),
        });
    }
    let label_idx = match (label_column, &table.header) {
        (None, _) => width - 1,
        (Some(name), Some(header)) => header.iter().position(|h| h == name).ok_or_else(|| {
            DatasetError::Invalid(format!("label column {name:?} not found in header of {}", path.display()))
        })?,
        (Some(name), None) => {
            return Err(DatasetError::Invalid(format!(
                "label column {name:?} requested but {} has no header",
                path.display()
            )))
        }
    };
    let feature_names: Vec<String> = match &table.header {
        Some(h) if h.len() == width => {
            h.iter().enumerate().filter(|(i, _)| *i != label_idx).map(|(_, s)| s.clone()).collect()
        }
        Some(h) => {
            return Err(DatasetError::Malformed {
                path: path.display().to_string(),
                line: 1,
                message: format!("header has {} columns, data has {width}", h.len()),
            })
        }
        None => (0..width - 1).map(|i| format!("f{i}")).collect(),
    };
    let label_name = table.header.as_ref().map_or_else(|| "label".to_string(), |h| h[label_idx].clone());

    let mut values = Vec::with_capacity(table.rows.len() * (width - 1));
    let mut raw_labels = Vec::with_capacity(table.rows.len());
    for (line, fields) in &table.rows {
        if fields.len() != width {
            return Err(DatasetError::Malformed {
                path: path.display().to_string(),
                line: *line,
                message: format!("expected {width} columns, found {}", fields.len()),
            });
        }
        for (col, field) in fields.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(field.clone());
            } else {
                values.push(parse_feature(path, *line, col, field)?);
            }
        }
    }

    let mut class_names: Vec<String> = Vec::new();
    for l in &raw_labels {
        if !class_names.contains(l) {
            class_names.push(l.clone());
        }
    }
    if class_names.iter().all(|c| c.parse::<i64>().is_ok()) {
        class_names.sort_by_key(|c| c.parse::<i64>().unwrap_or_default());
    }
    let y: Vec<usize> = raw_labels
        .iter()
        .map(|l| class_names.iter().position(|c| c == l).expect("collected above"))
        .collect();
    let n = y.len();
    let x = Array2::from_shape_vec((n, width - 1), values).expect("row width checked above");
    let kind = if class_names.len() == 2 { TaskKind::Binary } else { TaskKind::Multiclass };
    TabularDataset::new(feature_names, x, y, class_names, label_name, kind)
}

/// Seeded shuffle-then-split. The test partition holds `floor(n * test_fraction)` rows.
pub fn train_test_split(
    ds: &TabularDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::BadFraction(test_fraction));
    }
    let n = ds.n_samples();
    let n_test = (n as f64 * test_fraction + 1e-9).floor() as usize;
    if n_test == 0 || n_test >= n {
        return Err(DatasetError::EmptyPartition { n, fraction: test_fraction });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test_idx, train_idx) = perm.split_at(n_test);
    Ok((ds.subset(train_idx), ds.subset(test_idx)))
}

/// Pearson correlation of each feature with the class index.
/// `None` marks a column (or label) with zero variance.
pub fn feature_label_correlation(ds: &TabularDataset) -> Vec<Option<f64>> {
    let labels: Vec<f64> = ds.y.iter().map(|&c| c as f64).collect();
    ds.x.columns().into_iter().map(|col| pearson(&col.to_vec(), &labels)).collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n == 0 || n != b.len() {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        let (du, dv) = (u - ma, v - mb);
        sab += du * dv;
        saa += du * du;
        sbb += dv * dv;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
