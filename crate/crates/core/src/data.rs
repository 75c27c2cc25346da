//! Event records, dataset loading, splitting, and range normalization.
//!
//! Events arrive as ASCII files with one event per line: 12 whitespace
//! separated decimal numbers. The first ten are the image parameters used
//! for classification; the last two (`fEner`, `fTheta`) are simulation
//! bookkeeping and are excluded from [`FeatureVector`]. Class identity is
//! never stored inside the numeric fields — it comes from which file a
//! record was loaded from.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Number of numeric fields per event line.
pub const EVENT_FIELD_COUNT: usize = 12;

/// Number of image parameters used for classification.
pub const FEATURE_COUNT: usize = 10;

/// Field names in file order.
pub const FIELD_NAMES: [&str; EVENT_FIELD_COUNT] = [
    "fLength", "fWidth", "fSize", "fConc", "fConc1", "fAsym", "fM3Long", "fM3Trans", "fAlpha",
    "fDist", "fEner", "fTheta",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("expected {EVENT_FIELD_COUNT} fields, found {found}")]
    FieldCount { found: usize },
    #[error("field {index} ({name}): invalid number {token:?}")]
    InvalidNumber {
        index: usize,
        name: &'static str,
        token: String,
    },
    #[error("field {index} ({name}): non-finite value {value}")]
    NonFinite {
        index: usize,
        name: &'static str,
        value: f64,
    },
    #[error("{path}:{line}: {source}")]
    Line {
        path: String,
        line: usize,
        source: Box<DataError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cannot fit a normalizer on an empty list of vectors")]
    EmptyFit,
    #[error("normalizer bounds invalid at feature {index}: min {min} > max {max}")]
    InvalidBounds { index: usize, min: f64, max: f64 },
}

/// Class identity of an event. `Unknown` covers records whose origin file
/// carries no label (ON data) and unparsed lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Gamma,
    Hadron,
    Unknown,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Gamma => write!(f, "gamma"),
            ClassLabel::Hadron => write!(f, "hadron"),
            ClassLabel::Unknown => write!(f, "unknown"),
        }
    }
}

/// One event: the 12 numeric fields in file order plus a class label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    values: [f64; EVENT_FIELD_COUNT],
    pub label: ClassLabel,
}

impl EventRecord {
    /// Builds a record, rejecting non-finite fields.
    pub fn new(values: [f64; EVENT_FIELD_COUNT], label: ClassLabel) -> Result<Self, DataError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(DataError::NonFinite {
                    index,
                    name: FIELD_NAMES[index],
                    value,
                });
            }
        }
        Ok(EventRecord { values, label })
    }

    pub fn values(&self) -> &[f64; EVENT_FIELD_COUNT] {
        &self.values
    }

    pub fn f_length(&self) -> f64 {
        self.values[0]
    }
    pub fn f_width(&self) -> f64 {
        self.values[1]
    }
    pub fn f_size(&self) -> f64 {
        self.values[2]
    }
    pub fn f_conc(&self) -> f64 {
        self.values[3]
    }
    pub fn f_conc1(&self) -> f64 {
        self.values[4]
    }
    pub fn f_asym(&self) -> f64 {
        self.values[5]
    }
    pub fn f_m3_long(&self) -> f64 {
        self.values[6]
    }
    pub fn f_m3_trans(&self) -> f64 {
        self.values[7]
    }
    pub fn f_alpha(&self) -> f64 {
        self.values[8]
    }
    pub fn f_dist(&self) -> f64 {
        self.values[9]
    }
    pub fn f_ener(&self) -> f64 {
        self.values[10]
    }
    pub fn f_theta(&self) -> f64 {
        self.values[11]
    }

    /// The ten classification features, in file order. `fEner` and `fTheta`
    /// are dropped.
    pub fn features(&self) -> FeatureVector {
        let mut components = [0.0; FEATURE_COUNT];
        components.copy_from_slice(&self.values[..FEATURE_COUNT]);
        FeatureVector(components)
    }

    /// Formats the record back into the ASCII line format. Numbers use the
    /// shortest representation that parses back to the same value, so
    /// `parse_event_line(record.format_line())` round-trips exactly.
    pub fn format_line(&self) -> String {
        let mut line = String::new();
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v}"));
        }
        line
    }
}

/// Parses one event line: 12 whitespace-separated decimal numbers. Any run
/// of spaces or tabs separates fields. The label is set to `Unknown`; the
/// caller stamps the class.
pub fn parse_event_line(line: &str) -> Result<EventRecord, DataError> {
    let mut values = [0.0; EVENT_FIELD_COUNT];
    let mut count = 0;
    for token in line.split_whitespace() {
        if count == EVENT_FIELD_COUNT {
            count += 1;
            break;
        }
        let index = count;
        let value: f64 = token.parse().map_err(|_| DataError::InvalidNumber {
            index,
            name: FIELD_NAMES[index],
            token: token.to_string(),
        })?;
        if !value.is_finite() {
            return Err(DataError::NonFinite {
                index,
                name: FIELD_NAMES[index],
                value,
            });
        }
        values[index] = value;
        count += 1;
    }
    if count != EVENT_FIELD_COUNT {
        return Err(DataError::FieldCount {
            found: line.split_whitespace().count(),
        });
    }
    Ok(EventRecord {
        values,
        label: ClassLabel::Unknown,
    })
}

/// An ordered collection of events plus a provenance tag. Order is stable:
/// records keep file order until an explicitly seeded shuffle.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<EventRecord>,
    pub source: String,
}

impl Dataset {
    pub fn new(records: Vec<EventRecord>, source: impl Into<String>) -> Self {
        Dataset {
            records,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Feature vectors for all records, preserving order.
    pub fn features(&self) -> Vec<FeatureVector> {
        self.records.iter().map(|r| r.features()).collect()
    }

    /// Seeded shuffle followed by a half split: the first `ceil(N/2)`
    /// shuffled records become the training half, the rest the test half.
    /// The two halves together are a permutation of the input.
    pub fn split_half(&self, seed: u64) -> Result<(Dataset, Dataset), DataError> {
        if self.records.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut shuffled = self.records.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        shuffled.shuffle(&mut rng);
        let train_len = shuffled.len().div_ceil(2);
        let test = shuffled.split_off(train_len);
        Ok((
            Dataset::new(shuffled, format!("{}:train", self.source)),
            Dataset::new(test, format!("{}:test", self.source)),
        ))
    }
}

/// Loads a dataset from an ASCII event file, stamping every record with
/// `label`. Blank lines are skipped; any malformed line aborts the load
/// with its 1-based line number.
pub fn load_dataset(path: impl AsRef<Path>, label: ClassLabel) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path_str.clone(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (line_index, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: path_str.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record = parse_event_line(&line).map_err(|source| DataError::Line {
            path: path_str.clone(),
            line: line_index + 1,
            source: Box::new(source),
        })?;
        record.label = label;
        records.push(record);
    }
    Ok(Dataset::new(records, path_str))
}

/// Writes a dataset in the ASCII event format (12 numbers per line).
pub fn write_dataset<W: Write>(w: &mut W, dataset: &Dataset) -> io::Result<()> {
    for record in &dataset.records {
        writeln!(w, "{}", record.format_line())?;
    }
    Ok(())
}

/// The ten classification features of one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn components(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-feature `(min, max)` bounds implementing range normalization: a
/// fitted component maps to `(v - min) / (max - min)`, so values from the
/// fitting set land in `[0, 1]`. Values outside the fitted range are not
/// clamped. A degenerate feature (`max == min`) always normalizes to 0 so
/// constant columns stay inert instead of aborting a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mins: [f64; FEATURE_COUNT],
    maxs: [f64; FEATURE_COUNT],
}

impl Normalizer {
    /// Fits per-feature bounds as the exact extrema of `vectors`.
    pub fn fit(vectors: &[FeatureVector]) -> Result<Normalizer, DataError> {
        if vectors.is_empty() {
            return Err(DataError::EmptyFit);
        }
        let mut mins = *vectors[0].components();
        let mut maxs = mins;
        for v in &vectors[1..] {
            for (i, &c) in v.components().iter().enumerate() {
                if c < mins[i] {
                    mins[i] = c;
                }
                if c > maxs[i] {
                    maxs[i] = c;
                }
            }
        }
        Ok(Normalizer { mins, maxs })
    }

    /// Rebuilds a normalizer from stored bounds (used by model files).
    pub fn from_bounds(
        mins: [f64; FEATURE_COUNT],
        maxs: [f64; FEATURE_COUNT],
    ) -> Result<Normalizer, DataError> {
        for i in 0..FEATURE_COUNT {
            // rejects min > max and NaN in either slot
            if mins[i] > maxs[i] || mins[i].is_nan() || maxs[i].is_nan() {
                return Err(DataError::InvalidBounds {
                    index: i,
                    min: mins[i],
                    max: maxs[i],
                });
            }
        }
        Ok(Normalizer { mins, maxs })
    }

    pub fn mins(&self) -> &[f64; FEATURE_COUNT] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64; FEATURE_COUNT] {
        &self.maxs
    }

    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; FEATURE_COUNT];
        for (i, slot) in out.iter_mut().enumerate() {
            let range = self.maxs[i] - self.mins[i];
            *slot = if range == 0.0 {
                0.0
            } else {
                (v.0[i] - self.mins[i]) / range
            };
        }
        FeatureVector(out)
    }

    pub fn apply_all(&self, vectors: &[FeatureVector]) -> Vec<FeatureVector> {
        vectors.iter().map(|v| self.apply(v)).collect()
    }
}

/// Writes a dataset as CSV: one header line with the ten feature names plus
/// `label`, then the range-normalized features per record.
pub fn write_normalized_csv<W: Write>(
    w: &mut W,
    dataset: &Dataset,
    normalizer: &Normalizer,
) -> io::Result<()> {
    writeln!(w, "{},label", FIELD_NAMES[..FEATURE_COUNT].join(","))?;
    for record in &dataset.records {
        let v = normalizer.apply(&record.features());
        let row: Vec<String> = v.components().iter().map(|c| format!("{c}")).collect();
        writeln!(w, "{},{}", row.join(","), record.label)?;
    }
    Ok(())
}
