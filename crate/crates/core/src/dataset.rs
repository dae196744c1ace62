//! Raw IDX (MNIST) image and label files.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::codec::GrayImage;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const MNIST_SIDE: usize = 28;
pub const MNIST_CLASSES: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub image: GrayImage,
    pub label: u8,
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Idx {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            reason: reason.into(),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let start = self.pos;
        let chunk = self
            .bytes
            .get(start..start + 4)
            .ok_or_else(|| self.fail(start, format!("file ends inside the {what} field")))?;
        self.pos += 4;
        Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32("magic number")?;
        if found != expected {
            return Err(self.fail(0, format!("magic {found:#010x}, expected {expected:#010x}")));
        }
        Ok(())
    }

    /// The remaining `len` bytes, which must be exactly the rest of the file.
    fn body(&self, len: u64) -> Result<&'a [u8]> {
        let available = (self.bytes.len() - self.pos) as u64;
        if available < len {
            return Err(self.fail(
                self.bytes.len(),
                format!("truncated: header promises {len} data bytes, file has {available}"),
            ));
        }
        if available > len {
            return Err(self.fail(
                self.pos + len as usize,
                format!("{} unexpected trailing bytes", available - len),
            ));
        }
        Ok(&self.bytes[self.pos..])
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn parse_idx_images(path: &Path, bytes: &[u8]) -> Result<Vec<GrayImage>> {
    let mut r = Reader { path, bytes, pos: 0 };
    r.magic(IMAGE_MAGIC)?;
    let count = r.u32("image count")?;
    let rows = r.u32("row count")?;
    let cols = r.u32("column count")?;
    if rows as usize != MNIST_SIDE || cols as usize != MNIST_SIDE {
        return Err(r.fail(8, format!("images are {rows}x{cols}, expected 28x28")));
    }
    let side = MNIST_SIDE;
    let body = r.body(u64::from(count) * (side * side) as u64)?;
    Ok(body
        .chunks_exact(side * side)
        .map(|px| GrayImage::new(side, px.to_vec()).expect("chunk is side*side"))
        .collect())
}

pub fn parse_idx_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { path, bytes, pos: 0 };
    r.magic(LABEL_MAGIC)?;
    let count = r.u32("label count")?;
    let body = r.body(u64::from(count))?;
    if let Some(i) = body.iter().position(|&l| l >= MNIST_CLASSES) {
        return Err(r.fail(8 + i, format!("label {} is outside 0..=9", body[i])));
    }
    Ok(body.to_vec())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<GrayImage>> {
    let path = path.as_ref();
    parse_idx_images(path, &read(path)?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_idx_labels(path, &read(path)?)
}

/// Zips images with labels positionally.
pub fn pair(images: Vec<GrayImage>, labels: Vec<u8>) -> Result<Vec<LabeledImage>> {
    if images.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    Ok(images
        .into_iter()
        .zip(labels)
        .map(|(image, label)| LabeledImage { image, label })
        .collect())
}

pub fn load_labeled(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Vec<LabeledImage>> {
    pair(load_idx_images(images)?, load_idx_labels(labels)?)
}

pub fn idx_images_bytes(images: &[GrayImage]) -> Vec<u8> {
    let side = images.first().map_or(MNIST_SIDE, GrayImage::width) as u32;
    let mut out = Vec::with_capacity(16 + images.len() * (side * side) as usize);
    for word in [IMAGE_MAGIC, images.len() as u32, side, side] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for image in images {
        out.extend_from_slice(image.pixels());
    }
    out
}

pub fn idx_labels_bytes(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_idx_images(path: impl AsRef<Path>, images: &[GrayImage]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, idx_images_bytes(images)).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, idx_labels_bytes(labels)).map_err(|e| Error::io(path, e))
}

/// First `n` items, optionally after a seeded Fisher–Yates shuffle.
pub fn take_subset<T: Clone>(data: &[T], n: usize, shuffle_seed: Option<u64>) -> Result<Vec<T>> {
    if n > data.len() {
        return Err(Error::Dimension(format!(
            "requested {n} items from a set of {}",
            data.len()
        )));
    }
    match shuffle_seed {
        None => Ok(data[..n].to_vec()),
        Some(seed) => {
            let mut all = data.to_vec();
            all.shuffle(&mut rng::stream(seed, Stream::Subset));
            all.truncate(n);
            Ok(all)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_images() -> Vec<GrayImage> {
        vec![
            GrayImage::new(28, (0..784).map(|i| (i % 256) as u8).collect()).unwrap(),
            GrayImage::filled(28, 200),
        ]
    }

    fn offset(e: Error) -> u64 {
        match e {
            Error::Idx { offset, .. } => offset,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn images_roundtrip() {
        let images = two_images();
        let bytes = idx_images_bytes(&images);
        assert_eq!(bytes.len(), 16 + 2 * 784);
        assert_eq!(parse_idx_images(Path::new("x"), &bytes).unwrap(), images);
    }

    #[test]
    fn labels_roundtrip() {
        let bytes = idx_labels_bytes(&[3, 9]);
        assert_eq!(parse_idx_labels(Path::new("x"), &bytes).unwrap(), vec![3, 9]);
    }

    #[test]
    fn empty_files_fail_at_offset_zero() {
        assert_eq!(offset(parse_idx_images(Path::new("x"), &[]).unwrap_err()), 0);
        assert_eq!(offset(parse_idx_labels(Path::new("x"), &[]).unwrap_err()), 0);
    }

    #[test]
    fn wrong_magic() {
        let bytes = idx_labels_bytes(&[1]);
        assert!(parse_idx_images(Path::new("x"), &bytes).is_err());
        let bytes = idx_images_bytes(&two_images());
        assert!(parse_idx_labels(Path::new("x"), &bytes).is_err());
    }

    #[test]
    fn truncation_and_trailing_bytes() {
        let mut bytes = idx_images_bytes(&two_images());
        bytes.pop();
        assert_eq!(offset(parse_idx_images(Path::new("x"), &bytes).unwrap_err()), bytes.len() as u64);
        bytes.extend_from_slice(&[0, 0]);
        assert_eq!(offset(parse_idx_images(Path::new("x"), &bytes).unwrap_err()), 16 + 2 * 784);

        let mut labels = idx_labels_bytes(&[1, 2, 3]);
        labels.truncate(10);
        assert!(parse_idx_labels(Path::new("x"), &labels).is_err());
    }

    #[test]
    fn huge_count_is_bounded_by_file_size() {
        let mut bytes = idx_images_bytes(&two_images());
        bytes[4..8].copy_from_slice(&u32::MAX.to_be_bytes());
        assert!(parse_idx_images(Path::new("x"), &bytes).is_err());
    }

    #[test]
    fn non_mnist_geometry() {
        let images = vec![GrayImage::filled(4, 1)];
        assert_eq!(offset(parse_idx_images(Path::new("x"), &idx_images_bytes(&images)).unwrap_err()), 8);
    }

    #[test]
    fn out_of_range_label() {
        let bytes = idx_labels_bytes(&[1, 10]);
        assert_eq!(offset(parse_idx_labels(Path::new("x"), &bytes).unwrap_err()), 9);
    }

    #[test]
    fn pairing_requires_equal_lengths() {
        assert!(pair(two_images(), vec![1]).is_err());
        assert_eq!(pair(two_images(), vec![1, 2]).unwrap()[1].label, 2);
    }

    #[test]
    fn subsets() {
        let data: Vec<u32> = (0..50).collect();
        assert!(take_subset(&data, 0, None).unwrap().is_empty());
        assert_eq!(take_subset(&data, 50, None).unwrap(), data);
        let a = take_subset(&data, 20, Some(3)).unwrap();
        assert_eq!(a, take_subset(&data, 20, Some(3)).unwrap());
        assert_ne!(a, take_subset(&data, 20, Some(4)).unwrap());
        assert_ne!(a, data[..20]);
        assert!(take_subset(&data, 51, None).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let images = two_images();
        write_idx_images(dir.path().join("i"), &images).unwrap();
        write_idx_labels(dir.path().join("l"), &[4, 7]).unwrap();
        let data = load_labeled(dir.path().join("i"), dir.path().join("l")).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].image, images[0]);
        assert_eq!(data[1].label, 7);
        assert!(matches!(load_idx_images(dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
