//! IDX binary format (MNIST).
//!
//! Big-endian throughout: a 4-byte magic `0x00 0x00 <type> <ndims>`, then
//! `ndims` 32-bit dimension sizes, then the raw unsigned bytes. Images use
//! magic `0x00000803` with dims `(N, rows, cols)`; labels use `0x00000801`
//! with dims `(N)`.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::IdxTruncated {
            path: path.to_path_buf(),
            needed: offset + 4,
            available: bytes.len(),
        })
}

fn header(bytes: &[u8], expected: u32, path: &Path) -> Result<Vec<usize>> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != expected {
        return Err(Error::IdxMagic {
            path: path.to_path_buf(),
            found: magic,
            expected,
        });
    }
    let ndims = (expected & 0xff) as usize;
    (0..ndims)
        .map(|k| read_u32(bytes, 4 + 4 * k, path).map(|v| v as usize))
        .collect()
}

fn payload<'a>(bytes: &'a [u8], dims: &[usize], path: &Path) -> Result<&'a [u8]> {
    let start = 4 + 4 * dims.len();
    let count: usize = dims.iter().product();
    bytes
        .get(start..start + count)
        .ok_or_else(|| Error::IdxTruncated {
            path: path.to_path_buf(),
            needed: start + count,
            available: bytes.len(),
        })
}

/// Returns `(n, rows*cols, pixels scaled to [0,1])`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let dims = header(bytes, IMAGE_MAGIC, path)?;
    let data = payload(bytes, &dims, path)?;
    let pixels = data.iter().map(|&b| b as f64 / 255.0).collect();
    Ok((dims[0], dims[1] * dims[2], pixels))
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    let dims = header(bytes, LABEL_MAGIC, path)?;
    Ok(payload(bytes, &dims, path)?.iter().map(|&b| b as usize).collect())
}

/// Loads an image/label file pair as a 10-class dataset.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes = std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let label_bytes = std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let (n, dim, pixels) = parse_idx_images(&image_bytes, images_path)?;
    let labels = parse_idx_labels(&label_bytes, labels_path)?;
    if n != labels.len() {
        return Err(Error::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    Dataset::new("mnist", dim, 10, pixels, labels)
}

pub fn encode_idx_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let n = pixels.len() / (rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for d in [n, rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn accepts_image_header() {
        let pixels: Vec<u8> = (0..2 * 28 * 28).map(|i| (i % 256) as u8).collect();
        let bytes = encode_idx_images(28, 28, &pixels);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        let (n, dim, data) = parse_idx_images(&bytes, p()).unwrap();
        assert_eq!((n, dim), (2, 784));
        assert_eq!(data[255], 1.0);
        assert!(data.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn accepts_label_header() {
        let bytes = encode_idx_labels(&[3, 1, 4]);
        assert_eq!(&bytes[..4], &[0, 0, 8, 1]);
        assert_eq!(parse_idx_labels(&bytes, p()).unwrap(), vec![3, 1, 4]);
    }

    #[test]
    fn rejects_swapped_magic() {
        let bytes = encode_idx_labels(&[0, 1]);
        assert!(matches!(parse_idx_images(&bytes, p()), Err(Error::IdxMagic { .. })));
    }

    #[test]
    fn rejects_truncation() {
        let mut bytes = encode_idx_images(2, 2, &[1, 2, 3, 4, 5, 6, 7, 8]);
        bytes.truncate(bytes.len() - 1);
        assert!(matches!(parse_idx_images(&bytes, p()), Err(Error::IdxTruncated { .. })));
        assert!(matches!(parse_idx_labels(&[0, 0], p()), Err(Error::IdxTruncated { .. })));
    }

    #[test]
    fn load_rejects_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img");
        let lbl = dir.path().join("lbl");
        std::fs::write(&img, encode_idx_images(2, 2, &[0; 12])).unwrap();
        std::fs::write(&lbl, encode_idx_labels(&[0, 1])).unwrap();
        assert!(matches!(load_idx(&img, &lbl), Err(Error::CountMismatch { images: 3, labels: 2 })));
        std::fs::write(&lbl, encode_idx_labels(&[0, 1, 9])).unwrap();
        let d = load_idx(&img, &lbl).unwrap();
        assert_eq!((d.len(), d.dim(), d.n_classes()), (3, 4, 10));
    }
}
