//! IDX image and label files.
//!
//! Both formats start with a big-endian `u32` magic (2051 for images, 2049 for
//! labels) followed by big-endian `u32` dimension sizes and the raw bytes.

use std::fs;
use std::path::{Path, PathBuf};

use matnet_core::{Dataset, Sample};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

#[derive(Debug, thiserror::Error)]
pub enum MnistError {
    #[error("{file}: bad magic number {found} (expected {expected})")]
    Magic { file: String, expected: u32, found: u32 },
    #[error("{file}: truncated, need {expected} bytes but have {found}")]
    Length {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {label} at index {index} is not a digit")]
    Label { index: usize, label: u8 },
    #[error("class {class}: need {needed} samples, only {available} available")]
    NotEnough { class: u8, needed: usize, available: usize },
    #[error("invalid class list: {0}")]
    Classes(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Images with pixels scaled to `[0, 1]`, and their digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistSet {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl MnistSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

fn read_u32(bytes: &[u8], offset: usize, file: &str) -> Result<u32, MnistError> {
    match bytes.get(offset..offset + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => Err(MnistError::Length {
            file: file.to_owned(),
            expected: offset + 4,
            found: bytes.len(),
        }),
    }
}

fn check_magic(bytes: &[u8], expected: u32, file: &str) -> Result<(), MnistError> {
    let found = read_u32(bytes, 0, file)?;
    if found != expected {
        return Err(MnistError::Magic {
            file: file.to_owned(),
            expected,
            found,
        });
    }
    Ok(())
}

fn body<'a>(bytes: &'a [u8], header: usize, len: usize, file: &str) -> Result<&'a [u8], MnistError> {
    let expected = header + len;
    if bytes.len() < expected {
        return Err(MnistError::Length {
            file: file.to_owned(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(&bytes[header..expected])
}

/// Parses an image file; returns `(images, rows, cols)`.
pub fn parse_images(bytes: &[u8]) -> Result<(Vec<Vec<f64>>, usize, usize), MnistError> {
    const FILE: &str = "images";
    check_magic(bytes, IMAGE_MAGIC, FILE)?;
    let count = read_u32(bytes, 4, FILE)? as usize;
    let rows = read_u32(bytes, 8, FILE)? as usize;
    let cols = read_u32(bytes, 12, FILE)? as usize;
    let pixels = rows * cols;
    let raw = body(bytes, 16, count * pixels, FILE)?;
    let images = if pixels == 0 {
        vec![Vec::new(); count]
    } else {
        raw.chunks_exact(pixels)
            .map(|img| img.iter().map(|&p| f64::from(p) / 255.0).collect())
            .collect()
    };
    Ok((images, rows, cols))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, MnistError> {
    const FILE: &str = "labels";
    check_magic(bytes, LABEL_MAGIC, FILE)?;
    let count = read_u32(bytes, 4, FILE)? as usize;
    let raw = body(bytes, 8, count, FILE)?;
    if let Some(index) = raw.iter().position(|&l| l > 9) {
        return Err(MnistError::Label {
            index,
            label: raw[index],
        });
    }
    Ok(raw.to_vec())
}

pub fn parse(image_bytes: &[u8], label_bytes: &[u8]) -> Result<MnistSet, MnistError> {
    let (images, rows, cols) = parse_images(image_bytes)?;
    let labels = parse_labels(label_bytes)?;
    if images.len() != labels.len() {
        return Err(MnistError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(MnistSet {
        images,
        labels,
        rows,
        cols,
    })
}

fn read(path: &Path) -> Result<Vec<u8>, MnistError> {
    fs::read(path).map_err(|source| MnistError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn mnist_load(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<MnistSet, MnistError> {
    let images = read(images_path.as_ref())?;
    let labels = read(labels_path.as_ref())?;
    parse(&images, &labels).map_err(|e| match e {
        MnistError::Magic { expected, found, .. } => MnistError::Magic {
            file: path_for(expected, &images_path, &labels_path),
            expected,
            found,
        },
        MnistError::Length { file, expected, found } => MnistError::Length {
            file: if file == "images" {
                images_path.as_ref().display().to_string()
            } else {
                labels_path.as_ref().display().to_string()
            },
            expected,
            found,
        },
        other => other,
    })
}

fn path_for(magic: u32, images: &impl AsRef<Path>, labels: &impl AsRef<Path>) -> String {
    if magic == IMAGE_MAGIC {
        images.as_ref().display().to_string()
    } else {
        labels.as_ref().display().to_string()
    }
}

/// IDX image bytes for `images` (row-major `rows x cols` bytes each).
pub fn encode_images(images: &[Vec<u8>], rows: usize, cols: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        assert_eq!(img.len(), rows * cols, "image size must be rows * cols");
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes an image/label file pair.
pub fn write_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    images: &[Vec<u8>],
    labels: &[u8],
    rows: usize,
    cols: usize,
) -> std::io::Result<()> {
    fs::write(images_path, encode_images(images, rows, cols))?;
    fs::write(labels_path, encode_labels(labels))
}

/// The first `per_class` samples of each class in file order, grouped by
/// class in the order of `classes`. Targets are one-hot by position in
/// `classes`.
pub fn mnist_subset(set: &MnistSet, classes: &[u8], per_class: usize) -> Result<Dataset, MnistError> {
    if classes.is_empty() {
        return Err(MnistError::Classes("no classes given".into()));
    }
    if per_class == 0 {
        return Err(MnistError::Classes("per_class must be positive".into()));
    }
    for (i, c) in classes.iter().enumerate() {
        if *c > 9 {
            return Err(MnistError::Classes(format!("{c} is not a digit")));
        }
        if classes[..i].contains(c) {
            return Err(MnistError::Classes(format!("{c} listed twice")));
        }
    }
    let mut samples = Vec::with_capacity(classes.len() * per_class);
    for (k, &class) in classes.iter().enumerate() {
        let mut target = vec![0.0; classes.len()];
        target[k] = 1.0;
        let picked: Vec<usize> = set
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .take(per_class)
            .collect();
        if picked.len() < per_class {
            return Err(MnistError::NotEnough {
                class,
                needed: per_class,
                available: picked.len(),
            });
        }
        samples.extend(
            picked
                .into_iter()
                .map(|i| Sample::new(set.images[i].clone(), target.clone())),
        );
    }
    Ok(Dataset::new(samples).expect("subset samples share widths and are finite"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let images = vec![
            vec![0, 1, 2, 3, 4, 5, 6, 7, 255],
            vec![255, 128, 64, 32, 16, 8, 4, 2, 0],
        ];
        (encode_images(&images, 3, 3), encode_labels(&[7, 2]))
    }

    #[test]
    fn fixture_bytes_are_as_authored() {
        let (img, lab) = fixture();
        assert_eq!(&img[..16], &[0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 3]);
        assert_eq!(lab, vec![0, 0, 8, 1, 0, 0, 0, 2, 7, 2]);
    }

    #[test]
    fn parses_fixture() {
        let (img, lab) = fixture();
        let set = parse(&img, &lab).unwrap();
        assert_eq!((set.rows, set.cols, set.len()), (3, 3, 2));
        assert_eq!(set.images[0][0], 0.0);
        assert_eq!(set.images[0][8], 1.0);
        assert_eq!(set.images[1][1], 128.0 / 255.0);
        assert_eq!(set.labels, vec![7, 2]);
    }

    #[test]
    fn swapped_files_report_observed_magic() {
        let (img, lab) = fixture();
        match parse_labels(&img) {
            Err(MnistError::Magic { found, expected, .. }) => {
                assert_eq!((found, expected), (IMAGE_MAGIC, LABEL_MAGIC));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_images(&lab),
            Err(MnistError::Magic { found: LABEL_MAGIC, .. })
        ));
    }

    #[test]
    fn truncation_is_a_length_error() {
        let (img, lab) = fixture();
        assert!(matches!(
            parse_images(&img[..img.len() - 1]),
            Err(MnistError::Length { .. })
        ));
        assert!(matches!(parse_images(&img[..10]), Err(MnistError::Length { .. })));
        assert!(matches!(parse_labels(&lab[..9]), Err(MnistError::Length { .. })));
        assert!(matches!(parse_labels(&[]), Err(MnistError::Length { .. })));
    }

    #[test]
    fn count_mismatch() {
        let (img, _) = fixture();
        assert!(matches!(
            parse(&img, &encode_labels(&[1])),
            Err(MnistError::CountMismatch { images: 2, labels: 1 })
        ));
    }

    #[test]
    fn subset_one_hot_and_order() {
        let images: Vec<Vec<u8>> = (0..8u8).map(|i| vec![i; 4]).collect();
        let labels = [1, 0, 2, 0, 1, 0, 2, 9];
        let set = parse(&encode_images(&images, 2, 2), &encode_labels(&labels)).unwrap();
        let d = mnist_subset(&set, &[0, 1, 2], 2).unwrap();
        assert_eq!(d.len(), 6);
        let firsts: Vec<f64> = d.iter().map(|s| s.input[0] * 255.0).collect();
        assert_eq!(firsts, vec![1.0, 3.0, 0.0, 4.0, 2.0, 6.0]);
        assert_eq!(d.samples()[0].target, vec![1.0, 0.0, 0.0]);
        assert_eq!(d.samples()[2].target, vec![0.0, 1.0, 0.0]);
        assert_eq!(d.samples()[5].target, vec![0.0, 0.0, 1.0]);
        let d = mnist_subset(&set, &[2, 0], 1).unwrap();
        assert_eq!(d.samples()[0].target, vec![1.0, 0.0]);
    }

    #[test]
    fn subset_errors_name_the_class() {
        let (img, lab) = fixture();
        let set = parse(&img, &lab).unwrap();
        let err = mnist_subset(&set, &[7, 2], 2).unwrap_err();
        assert!(matches!(err, MnistError::NotEnough { class: 7, .. }));
        assert!(err.to_string().contains("class 7"));
        assert!(mnist_subset(&set, &[2, 2], 1).is_err());
        assert!(mnist_subset(&set, &[10], 1).is_err());
    }
}
