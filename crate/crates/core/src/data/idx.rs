//! IDX container (big-endian): images carry magic `0x00000803` and dims
//! `[count, rows, cols]`, labels carry `0x00000801` and `[count]`, followed
//! by raw `u8` payload. Pixels are scaled by 1/255 on load and rounded
//! back on write, so write(load(f)) reproduces `f` byte for byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::dataset::LabeledDataset;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_header<'a>(bytes: &'a [u8], what: &'static str, magic: u32, ndims: usize) -> Result<(Vec<usize>, &'a [u8])> {
    let header_len = 4 + 4 * ndims;
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            what,
            needed: header_len,
            found: bytes.len(),
        });
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    if found != magic {
        return Err(Error::BadMagic {
            what,
            expected: magic,
            found,
        });
    }
    if bytes.len() < header_len {
        return Err(Error::Truncated {
            what,
            needed: header_len,
            found: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[4..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let payload_len = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or(Error::Malformed {
        what,
        reason: "dimensions overflow".into(),
    })?;
    let payload = &bytes[header_len..];
    if payload.len() < payload_len {
        return Err(Error::Truncated {
            what,
            needed: header_len + payload_len,
            found: bytes.len(),
        });
    }
    if payload.len() > payload_len {
        return Err(Error::Malformed {
            what,
            reason: format!("{} trailing bytes", payload.len() - payload_len),
        });
    }
    Ok((dims, payload))
}

/// Returns `(count, [rows, cols], raw pixels)`.
pub fn decode_idx_images(bytes: &[u8]) -> Result<(usize, Vec<usize>, Vec<u8>)> {
    let (dims, payload) = read_header(bytes, "idx images", IDX_IMAGES_MAGIC, 3)?;
    Ok((dims[0], dims[1..].to_vec(), payload.to_vec()))
}

pub fn decode_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (_, payload) = read_header(bytes, "idx labels", IDX_LABELS_MAGIC, 1)?;
    Ok(payload.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn scale(raw: &[u8]) -> Vec<f64> {
    raw.iter().map(|&b| f64::from(b) / 255.0).collect()
}

/// Loads an image file on its own, as flat `[0, 1]` pixels with shape `[rows, cols]`.
pub fn load_idx_images(images_path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let (count, shape, raw) = decode_idx_images(&read(images_path.as_ref())?)?;
    let d: usize = shape.iter().product();
    let images = if d == 0 {
        vec![Vec::new(); count]
    } else {
        raw.chunks_exact(d).map(scale).collect()
    };
    Ok((shape, images))
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let (count, shape, raw) = decode_idx_images(&read(images_path.as_ref())?)?;
    let labels = decode_idx_labels(&read(labels_path.as_ref())?)?;
    if count != labels.len() {
        return Err(Error::CountMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    LabeledDataset::new(shape, scale(&raw), labels)
}

pub fn encode_idx_images(ds: &LabeledDataset) -> Result<Vec<u8>> {
    let shape = ds.image_shape();
    if shape.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "idx image files hold [rows, cols] images, got {shape:?}"
        )));
    }
    let mut out = Vec::with_capacity(16 + ds.pixels().len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for d in [ds.len(), shape[0], shape[1]] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend(ds.pixels().iter().map(|&v| (v * 255.0).round() as u8));
    Ok(out)
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_idx(ds: &LabeledDataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    fs::write(ip, encode_idx_images(ds)?).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, encode_idx_labels(ds.labels())).map_err(|e| Error::io(lp, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn image_bytes(count: u32, rows: u32, cols: u32, payload: &[u8]) -> Vec<u8> {
        let mut v = vec![0, 0, 8, 3];
        for d in [count, rows, cols] {
            v.extend_from_slice(&d.to_be_bytes());
        }
        v.extend_from_slice(payload);
        v
    }

    fn label_bytes(labels: &[u8]) -> Vec<u8> {
        let mut v = vec![0, 0, 8, 1];
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    #[test]
    fn hand_built_pair_loads() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
        fs::write(&ip, image_bytes(2, 2, 2, &[0, 1, 2, 255, 255, 0, 51, 102])).unwrap();
        fs::write(&lp, label_bytes(&[7, 3])).unwrap();
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.image_shape(), &[2, 2]);
        assert_eq!(ds.image(0), &[0.0, 1.0 / 255.0, 2.0 / 255.0, 1.0]);
        assert_eq!(ds.image(1), &[1.0, 0.0, 0.2, 0.4]);
        assert_eq!(ds.labels(), &[7, 3]);

        let (op, olp) = (dir.path().join("o.idx"), dir.path().join("ol.idx"));
        write_idx(&ds, &op, &olp).unwrap();
        assert_eq!(fs::read(&op).unwrap(), fs::read(&ip).unwrap());
        assert_eq!(fs::read(&olp).unwrap(), fs::read(&lp).unwrap());
    }

    #[test]
    fn labels_in_image_slot_is_bad_magic() {
        let err = decode_idx_images(&label_bytes(&[1, 2])).unwrap_err();
        assert!(matches!(err, Error::BadMagic { found: 0x801, .. }), "{err}");
    }

    #[test]
    fn empty_and_short_files_are_truncation() {
        assert!(matches!(decode_idx_images(&[]), Err(Error::Truncated { .. })));
        assert!(matches!(decode_idx_labels(&[]), Err(Error::Truncated { .. })));
        let short = image_bytes(2, 2, 2, &[0; 7]);
        assert!(matches!(decode_idx_images(&short), Err(Error::Truncated { .. })));
    }

    #[test]
    fn count_mismatch_is_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
        fs::write(&ip, image_bytes(2, 1, 1, &[0, 1])).unwrap();
        fs::write(&lp, label_bytes(&[1, 2, 3])).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(Error::CountMismatch { images: 2, labels: 3 })
        ));
    }

    proptest! {
        #[test]
        fn byte_round_trip(rows in 1u32..6, cols in 1u32..6, count in 1u32..5, seed in any::<u64>()) {
            let n = (rows * cols * count) as usize;
            let payload: Vec<u8> = (0..n).map(|i| (crate::rng::derive_seed(seed, i as u64) & 0xff) as u8).collect();
            let labels: Vec<u8> = (0..count).map(|i| (i % 10) as u8).collect();
            let img = image_bytes(count, rows, cols, &payload);
            let (c, shape, raw) = decode_idx_images(&img).unwrap();
            let ds = LabeledDataset::new(shape, scale(&raw), labels.clone()).unwrap();
            prop_assert_eq!(c, count as usize);
            prop_assert_eq!(encode_idx_images(&ds).unwrap(), img);
            prop_assert_eq!(encode_idx_labels(ds.labels()), label_bytes(&labels));
        }
    }
}
