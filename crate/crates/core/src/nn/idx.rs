//! IDX container reading and writing.
//!
//! Images: big-endian magic `0x00000803`, u32 count, u32 rows, u32 cols, then
//! `count * rows * cols` unsigned bytes. Labels: magic `0x00000801`, u32
//! count, then `count` unsigned bytes.

use std::fs;
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Raw image bytes as stored in an IDX file.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    /// Pixels scaled to `[0, 1]`, one image per row.
    pub fn to_tensor(&self) -> Tensor {
        let data = self.pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
        Tensor::from_vec(self.count, self.rows * self.cols, data).expect("validated on parse")
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Truncated {
            expected: offset + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let expected = count
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| Error::Shape("IDX dimensions overflow".into()))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..expected].to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let expected = count + 8;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..expected].to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for n in [images.count, images.rows, images.cols] {
        out.extend_from_slice(&(n as u32).to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Loads an image file and its label file, scaling pixels to `[0, 1]`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<(Tensor, Vec<usize>)> {
    let images = parse_images(&fs::read(images_path)?)?;
    let labels = parse_labels(&fs::read(labels_path)?)?;
    if images.count != labels.len() {
        return Err(Error::DimensionMismatch {
            images: images.count,
            labels: labels.len(),
        });
    }
    Ok((
        images.to_tensor(),
        labels.into_iter().map(usize::from).collect(),
    ))
}

pub fn write_images(path: &Path, images: &IdxImages) -> Result<()> {
    fs::write(path, encode_images(images))?;
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[u8]) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> IdxImages {
        IdxImages {
            count: 2,
            rows: 2,
            cols: 2,
            pixels: vec![0, 255, 0, 255, 255, 0, 255, 0],
        }
    }

    #[test]
    fn scales_pixels() {
        let parsed = parse_images(&encode_images(&two_by_two())).unwrap();
        let t = parsed.to_tensor();
        assert_eq!(t.row(0), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(t.row(1), &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn reads_labels() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 2, 3, 7];
        assert_eq!(parse_labels(&bytes).unwrap(), vec![3, 7]);
    }

    #[test]
    fn distinct_errors() {
        let mut bad = encode_images(&two_by_two());
        bad[3] = 0x01;
        assert!(matches!(parse_images(&bad), Err(Error::BadMagic { found: 0x801, .. })));

        let full = encode_images(&two_by_two());
        assert!(matches!(
            parse_images(&full[..full.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(parse_images(&full[..6]), Err(Error::Truncated { .. })));
        assert!(matches!(
            parse_labels(&[0, 0, 8, 1, 0, 0, 0, 3, 1]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn count_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let images = IdxImages {
            count: 3,
            rows: 2,
            cols: 2,
            pixels: vec![0; 12],
        };
        let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
        write_images(&ip, &images).unwrap();
        write_labels(&lp, &[1, 2]).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(Error::DimensionMismatch { images: 3, labels: 2 })
        ));
    }
}
