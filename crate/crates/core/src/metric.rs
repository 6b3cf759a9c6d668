//! Distance matrices: the compilation target.
//!
//! A [`DistanceMatrix`] holds the target distance between every search symbol
//! (rows) and every stored symbol (columns). Symbols are the unsigned integer
//! values of `bits`-wide bit strings, in ascending numeric order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest symbol width accepted by [`build_dm`].
pub const MAX_BITS: u32 = 8;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("unsupported symbol width {0} (expected 1..={MAX_BITS})")]
    UnsupportedBits(u32),
    #[error("custom distance matrices must be loaded from a file, not built")]
    CustomNotBuildable,
    #[error("custom metric requires a source file")]
    MissingCustomSource,
    #[error("only custom metrics take a source file")]
    UnexpectedCustomSource,
    #[error("distance matrix is empty")]
    Empty,
    #[error("line {line}: expected {expected} entries, found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid entry {token:?} (entries must be nonnegative integers)")]
    InvalidEntry { line: usize, token: String },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Hamming,
    Manhattan,
    SqEuclidean,
    Custom,
}

impl MetricKind {
    pub const BUILT_IN: [MetricKind; 3] = [
        MetricKind::Hamming,
        MetricKind::Manhattan,
        MetricKind::SqEuclidean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Hamming => "hamming",
            MetricKind::Manhattan => "manhattan",
            MetricKind::SqEuclidean => "sq_euclidean",
            MetricKind::Custom => "custom",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hamming" | "hd" => Ok(MetricKind::Hamming),
            "manhattan" | "l1" => Ok(MetricKind::Manhattan),
            "sq_euclidean" | "euclidean" | "l2" => Ok(MetricKind::SqEuclidean),
            "custom" => Ok(MetricKind::Custom),
            _ => Err(MetricError::UnknownMetric(s.to_string())),
        }
    }
}

/// Which distance function to compile, and over how many bits per symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub kind: MetricKind,
    pub bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_source: Option<PathBuf>,
}

impl DistanceSpec {
    pub fn built_in(kind: MetricKind, bits: u32) -> Self {
        DistanceSpec {
            kind,
            bits,
            custom_source: None,
        }
    }

    pub fn custom(source: impl Into<PathBuf>, bits: u32) -> Self {
        DistanceSpec {
            kind: MetricKind::Custom,
            bits,
            custom_source: Some(source.into()),
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.bits == 0 || self.bits > MAX_BITS {
            return Err(MetricError::UnsupportedBits(self.bits));
        }
        match (self.kind, &self.custom_source) {
            (MetricKind::Custom, None) => Err(MetricError::MissingCustomSource),
            (MetricKind::Custom, Some(_)) => Ok(()),
            (_, Some(_)) => Err(MetricError::UnexpectedCustomSource),
            (_, None) => Ok(()),
        }
    }

    /// Builds or loads the matrix this spec describes.
    pub fn resolve(&self) -> Result<DistanceMatrix, MetricError> {
        self.validate()?;
        match &self.custom_source {
            Some(path) => load_custom_dm(path),
            None => build_dm(self),
        }
    }
}

/// Distance between two symbols under a built-in metric.
///
/// # Panics
///
/// Panics for [`MetricKind::Custom`], which has no closed form.
pub fn symbol_distance(kind: MetricKind, search: u32, store: u32) -> u32 {
    match kind {
        MetricKind::Hamming => (search ^ store).count_ones(),
        MetricKind::Manhattan => search.abs_diff(store),
        MetricKind::SqEuclidean => {
            let d = search.abs_diff(store);
            d * d
        }
        MetricKind::Custom => panic!("custom metrics have no closed-form distance"),
    }
}

/// M x N matrix of nonnegative target distances, indexed `[search][store]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self, MetricError> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || cols == 0 {
            return Err(MetricError::Empty);
        }
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(MetricError::Ragged {
                    line: i + 1,
                    expected: cols,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Ok(DistanceMatrix {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    /// Number of search symbols.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of stored symbols.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, search: usize, store: usize) -> u32 {
        self.entries[search * self.cols + store]
    }

    pub fn row(&self, search: usize) -> &[u32] {
        &self.entries[search * self.cols..(search + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn has_zero_diagonal(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| self.get(i, i) == 0)
    }

    /// Renders the matrix in the CSV interchange format, one search row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(u32::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

impl FromStr for DistanceMatrix {
    type Err = MetricError;

    /// Parses comma-separated nonnegative integers, one search row per line.
    /// Blank lines and lines starting with `#` are skipped.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut rows: Vec<Vec<u32>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for token in line.split(',') {
                let token = token.trim();
                let value = token
                    .parse::<u32>()
                    .map_err(|_| MetricError::InvalidEntry {
                        line: idx + 1,
                        token: token.to_string(),
                    })?;
                row.push(value);
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(MetricError::Ragged {
                        line: idx + 1,
                        expected: first.len(),
                        found: row.len(),
                    });
                }
            }
            rows.push(row);
        }
        DistanceMatrix::from_rows(rows)
    }
}

impl fmt::Display for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

/// Builds the distance matrix of a built-in metric over all `2^bits` symbols.
pub fn build_dm(spec: &DistanceSpec) -> Result<DistanceMatrix, MetricError> {
    if spec.kind == MetricKind::Custom {
        return Err(MetricError::CustomNotBuildable);
    }
    spec.validate()?;
    let size = 1usize << spec.bits;
    let mut entries = Vec::with_capacity(size * size);
    for search in 0..size as u32 {
        for store in 0..size as u32 {
            entries.push(symbol_distance(spec.kind, search, store));
        }
    }
    Ok(DistanceMatrix {
        rows: size,
        cols: size,
        entries,
    })
}

/// Loads a custom matrix from a CSV file. Symmetry is not required.
pub fn load_custom_dm(path: &Path) -> Result<DistanceMatrix, MetricError> {
    let text = std::fs::read_to_string(path).map_err(|source| MetricError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(kind: MetricKind, bits: u32) -> DistanceMatrix {
        build_dm(&DistanceSpec::built_in(kind, bits)).unwrap()
    }

    #[test]
    fn hamming_two_bit_matches_reference_table() {
        let m = dm(MetricKind::Hamming, 2);
        assert_eq!(
            m.to_rows(),
            vec![
                vec![0, 1, 1, 2],
                vec![1, 0, 2, 1],
                vec![1, 2, 0, 1],
                vec![2, 1, 1, 0],
            ]
        );
        // search "00" vs store "11"
        assert_eq!(m.get(0b00, 0b11), 2);
    }

    #[test]
    fn manhattan_and_sq_euclidean_entries() {
        assert_eq!(dm(MetricKind::Manhattan, 2).get(1, 3), 2);
        assert_eq!(dm(MetricKind::SqEuclidean, 2).get(0, 3), 9);
        assert_eq!(
            dm(MetricKind::Manhattan, 1).to_rows(),
            vec![vec![0, 1], vec![1, 0]]
        );
    }

    #[test]
    fn built_ins_are_symmetric_with_zero_diagonal_and_bounded() {
        for bits in 1..=4 {
            let top = (1u32 << bits) - 1;
            for kind in MetricKind::BUILT_IN {
                let m = dm(kind, bits);
                assert_eq!(m.rows(), 1 << bits);
                assert!(m.is_symmetric(), "{kind} bits={bits}");
                assert!(m.has_zero_diagonal(), "{kind} bits={bits}");
                let bound = match kind {
                    MetricKind::Hamming => bits,
                    MetricKind::Manhattan => top,
                    _ => top * top,
                };
                assert!(m.max_entry() <= bound);
                assert_eq!(m.max_entry(), bound);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            build_dm(&DistanceSpec::built_in(MetricKind::Hamming, 0)),
            Err(MetricError::UnsupportedBits(0))
        ));
        assert!(matches!(
            build_dm(&DistanceSpec::built_in(MetricKind::Hamming, 9)),
            Err(MetricError::UnsupportedBits(9))
        ));
        assert!(matches!(
            build_dm(&DistanceSpec::custom("x.csv", 2)),
            Err(MetricError::CustomNotBuildable)
        ));
        let spec = DistanceSpec {
            kind: MetricKind::Custom,
            bits: 2,
            custom_source: None,
        };
        assert!(matches!(
            spec.validate(),
            Err(MetricError::MissingCustomSource)
        ));
    }

    #[test]
    fn csv_parsing() {
        let text = "# stored: 00 01 10 11\n0,1,1,2\n1,0,2,1\n1,2,0,1\n2,1,1,0\n";
        let parsed: DistanceMatrix = text.parse().unwrap();
        assert_eq!(parsed, dm(MetricKind::Hamming, 2));
        assert_eq!(parsed.to_csv().parse::<DistanceMatrix>().unwrap(), parsed);

        let one: DistanceMatrix = "0".parse().unwrap();
        assert_eq!((one.rows(), one.cols(), one.get(0, 0)), (1, 1, 0));

        assert!(matches!(
            "0,1\n-1,0".parse::<DistanceMatrix>(),
            Err(MetricError::InvalidEntry { line: 2, .. })
        ));
        assert!(matches!(
            "0,1\n1".parse::<DistanceMatrix>(),
            Err(MetricError::Ragged { line: 2, .. })
        ));
        assert!(matches!(
            "".parse::<DistanceMatrix>(),
            Err(MetricError::Empty)
        ));
        assert!(matches!(
            "# only a header\n".parse::<DistanceMatrix>(),
            Err(MetricError::Empty)
        ));
    }

    #[test]
    fn custom_matrices_need_not_be_symmetric() {
        let m: DistanceMatrix = "0,3\n1,0\n".parse().unwrap();
        assert!(!m.is_symmetric());
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dm.csv");
        std::fs::write(&path, "0,1,1,2\n1,0,2,1\n1,2,0,1\n2,1,1,0\n").unwrap();
        let spec = DistanceSpec::custom(&path, 2);
        assert_eq!(spec.resolve().unwrap(), dm(MetricKind::Hamming, 2));
        assert!(matches!(
            load_custom_dm(&dir.path().join("missing.csv")),
            Err(MetricError::Io { .. })
        ));
    }
}
