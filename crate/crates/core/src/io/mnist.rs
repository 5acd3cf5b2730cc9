use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{KppcaError, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            KppcaError::Truncated(format!(
                "{} file ends at byte {} (needed {} more)",
                self.what,
                self.bytes.len(),
                n
            ))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

fn check_magic(c: &mut Cursor<'_>, expected: u32) -> Result<()> {
    let found = c.u32()?;
    if found != expected {
        return Err(KppcaError::BadMagic { expected, found });
    }
    Ok(())
}

/// Parses big-endian IDX image and label buffers.
///
/// Pixels are scaled to `[0, 1]`. Samples whose label is not in `filter`
/// are skipped, and at most `limit` samples are kept, in file order.
pub fn parse_mnist_idx(
    images: &[u8],
    labels: &[u8],
    filter: Option<&[u8]>,
    limit: Option<usize>,
) -> Result<(DMatrix<f64>, Vec<u8>)> {
    let mut img = Cursor {
        bytes: images,
        pos: 0,
        what: "image",
    };
    check_magic(&mut img, IMAGE_MAGIC)?;
    let count = img.u32()? as usize;
    let rows = img.u32()? as usize;
    let cols = img.u32()? as usize;
    let pixels = rows * cols;

    let mut lab = Cursor {
        bytes: labels,
        pos: 0,
        what: "label",
    };
    check_magic(&mut lab, LABEL_MAGIC)?;
    let label_count = lab.u32()? as usize;
    if label_count != count {
        return Err(KppcaError::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let all_labels = lab.take(count)?;
    let all_pixels = img.take(count * pixels)?;

    let limit = limit.unwrap_or(usize::MAX);
    let mut data = Vec::new();
    let mut kept = Vec::new();
    for (i, &label) in all_labels.iter().enumerate() {
        if kept.len() >= limit {
            break;
        }
        if filter.is_some_and(|f| !f.contains(&label)) {
            continue;
        }
        data.extend(
            all_pixels[i * pixels..(i + 1) * pixels]
                .iter()
                .map(|&b| b as f64 / 255.0),
        );
        kept.push(label);
    }
    Ok((DMatrix::from_vec(pixels, kept.len(), data), kept))
}

pub fn load_mnist_idx(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    filter: Option<&[u8]>,
    limit: Option<usize>,
) -> Result<(DMatrix<f64>, Vec<u8>)> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let ib = fs::read(ip).map_err(|e| KppcaError::io(ip, e))?;
    let lb = fs::read(lp).map_err(|e| KppcaError::io(lp, e))?;
    parse_mnist_idx(&ib, &lb, filter, limit)
}
