use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use super::AppError;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub feature_count: usize,
    pub class_count: usize,
    pub train: Vec<Vec<f64>>,
    pub train_labels: Vec<usize>,
    pub test: Vec<Vec<f64>>,
    pub test_labels: Vec<usize>,
}

impl Dataset {
    /// Checks shapes and infers the class count from the labels.
    pub fn new(
        name: impl Into<String>,
        train: Vec<Vec<f64>>,
        train_labels: Vec<usize>,
        test: Vec<Vec<f64>>,
        test_labels: Vec<usize>,
    ) -> Result<Self, AppError> {
        if train.len() != train_labels.len() || test.len() != test_labels.len() {
            return Err(AppError::Shape("feature and label counts differ".into()));
        }
        let feature_count = train.first().map(Vec::len).unwrap_or(0);
        if feature_count == 0 {
            return Err(AppError::Shape("no training samples".into()));
        }
        if let Some(bad) = train.iter().chain(&test).find(|v| v.len() != feature_count) {
            return Err(AppError::Shape(format!(
                "expected {feature_count} features, found {}",
                bad.len()
            )));
        }
        let class_count = train_labels
            .iter()
            .chain(&test_labels)
            .max()
            .map_or(0, |m| m + 1);
        Ok(Dataset {
            name: name.into(),
            feature_count,
            class_count,
            train,
            train_labels,
            test,
            test_labels,
        })
    }

    /// First `train` training and first `test` test samples.
    pub fn subset(&self, train: usize, test: usize) -> Dataset {
        let train = train.min(self.train.len());
        let test = test.min(self.test.len());
        Dataset {
            name: self.name.clone(),
            feature_count: self.feature_count,
            class_count: self.class_count,
            train: self.train[..train].to_vec(),
            train_labels: self.train_labels[..train].to_vec(),
            test: self.test[..test].to_vec(),
            test_labels: self.test_labels[..test].to_vec(),
        }
    }

    /// A dataset from two CSV files of `features..., label` rows.
    pub fn from_csv(name: &str, train: &Path, test: &Path) -> Result<Dataset, AppError> {
        let (x, y) = load_csv(train)?;
        let (xt, yt) = load_csv(test)?;
        Dataset::new(name, x, y, xt, yt)
    }
}

fn open(path: &Path) -> Result<Vec<u8>, AppError> {
    let io = |source| AppError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(io)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out).map_err(io)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn format_error(path: &Path, message: impl Into<String>) -> AppError {
    AppError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Reads an IDX image file (raw or gzipped) into one row of pixel values per
/// image.
pub fn load_idx_images(path: &Path) -> Result<Vec<Vec<f64>>, AppError> {
    let bytes = open(path)?;
    if bytes.len() < 16 {
        return Err(format_error(path, "truncated header"));
    }
    let magic = be_u32(&bytes, 0);
    if magic != IMAGES_MAGIC {
        return Err(format_error(path, format!("bad image magic {magic:#010x}")));
    }
    let count = be_u32(&bytes, 4) as usize;
    let pixels = be_u32(&bytes, 8) as usize * be_u32(&bytes, 12) as usize;
    let body = &bytes[16..];
    if pixels == 0 || body.len() != count * pixels {
        return Err(format_error(
            path,
            format!(
                "expected {} pixel bytes, found {}",
                count * pixels,
                body.len()
            ),
        ));
    }
    Ok(body
        .chunks(pixels)
        .map(|img| img.iter().map(|&p| p as f64).collect())
        .collect())
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<usize>, AppError> {
    let bytes = open(path)?;
    if bytes.len() < 8 {
        return Err(format_error(path, "truncated header"));
    }
    let magic = be_u32(&bytes, 0);
    if magic != LABELS_MAGIC {
        return Err(format_error(path, format!("bad label magic {magic:#010x}")));
    }
    let count = be_u32(&bytes, 4) as usize;
    if bytes.len() - 8 != count {
        return Err(format_error(
            path,
            format!("expected {count} labels, found {}", bytes.len() - 8),
        ));
    }
    Ok(bytes[8..].iter().map(|&l| l as usize).collect())
}

fn find_file(dir: &Path, stem: &str) -> PathBuf {
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        gz
    } else {
        dir.join(stem)
    }
}

/// Loads the four standard MNIST files from `dir`, gzipped or not.
pub fn load_mnist(dir: &Path) -> Result<Dataset, AppError> {
    let train = load_idx_images(&find_file(dir, "train-images-idx3-ubyte"))?;
    let train_labels = load_idx_labels(&find_file(dir, "train-labels-idx1-ubyte"))?;
    let test = load_idx_images(&find_file(dir, "t10k-images-idx3-ubyte"))?;
    let test_labels = load_idx_labels(&find_file(dir, "t10k-labels-idx1-ubyte"))?;
    Dataset::new("mnist", train, train_labels, test, test_labels)
}

/// Rows of `features..., label`. Blank lines and a non-numeric header line
/// are skipped.
pub fn load_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<usize>), AppError> {
    let bytes = open(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (n, line) in BufReader::new(&bytes[..]).lines().enumerate() {
        let line = line.map_err(|source| AppError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if n == 0 => continue,
            Err(_) => {
                return Err(format_error(
                    path,
                    format!("line {}: non-numeric field", n + 1),
                ))
            }
        };
        if values.len() < 2 {
            return Err(format_error(
                path,
                format!("line {}: need features and a label", n + 1),
            ));
        }
        let label = values[values.len() - 1];
        if label < 0.0 || label.fract() != 0.0 {
            return Err(format_error(
                path,
                format!("line {}: bad label {label}", n + 1),
            ));
        }
        labels.push(label as usize);
        features.push(values[..values.len() - 1].to_vec());
    }
    Ok((features, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let path = dir.join(name);
        File::create(&path).unwrap().write_all(bytes).unwrap();
        path
    }

    fn idx_images(count: u32, side: u32, fill: u8) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend(IMAGES_MAGIC.to_be_bytes());
        b.extend(count.to_be_bytes());
        b.extend(side.to_be_bytes());
        b.extend(side.to_be_bytes());
        b.extend(std::iter::repeat_n(fill, (count * side * side) as usize));
        b
    }

    #[test]
    fn raw_and_gzipped_idx() {
        let dir = tempfile::tempdir().unwrap();
        let raw = idx_images(3, 2, 7);
        let plain = write(dir.path(), "a", &raw);
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&raw).unwrap();
        let gz = write(dir.path(), "a.gz", &enc.finish().unwrap());
        let a = load_idx_images(&plain).unwrap();
        assert_eq!(a, load_idx_images(&gz).unwrap());
        assert_eq!(a.len(), 3);
        assert_eq!(a[0], vec![7.0; 4]);
    }

    #[test]
    fn bad_idx_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut wrong = idx_images(1, 2, 0);
        wrong[3] = 0x01;
        assert!(matches!(
            load_idx_images(&write(dir.path(), "m", &wrong)),
            Err(AppError::Format { .. })
        ));
        let mut short = idx_images(2, 2, 0);
        short.pop();
        assert!(load_idx_images(&write(dir.path(), "s", &short)).is_err());
        let mut labels = LABELS_MAGIC.to_be_bytes().to_vec();
        labels.extend(3u32.to_be_bytes());
        labels.extend([1, 2, 3]);
        assert_eq!(
            load_idx_labels(&write(dir.path(), "l", &labels)).unwrap(),
            vec![1, 2, 3]
        );
        assert!(matches!(
            load_idx_labels(&dir.path().join("missing")),
            Err(AppError::Io { .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", b"f1,f2,label\n0.5,1,2\n\n-1,3.25,0\n");
        let (x, y) = load_csv(&p).unwrap();
        assert_eq!(x, vec![vec![0.5, 1.0], vec![-1.0, 3.25]]);
        assert_eq!(y, vec![2, 0]);
        let bad = write(dir.path(), "b.csv", b"1,2,0\n1,x,0\n");
        assert!(load_csv(&bad).is_err());
        let ds = Dataset::from_csv("toy", &p, &p).unwrap();
        assert_eq!((ds.feature_count, ds.class_count), (2, 3));
    }

    #[test]
    fn ragged_dataset_rejected() {
        let r = Dataset::new(
            "x",
            vec![vec![1.0], vec![1.0, 2.0]],
            vec![0, 1],
            vec![],
            vec![],
        );
        assert!(matches!(r, Err(AppError::Shape(_))));
    }
}
