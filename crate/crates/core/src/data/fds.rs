//! FDS container, little-endian:
//!
//! ```text
//! "FDS1" | u32 version | u32 N, H, W, C, K
//! K x (u32 cardinality | u16 name length | UTF-8 name)
//! N*H*W*C u8 image bytes (N x H x W x C order)
//! N*K u32 factor values
//! u32 CRC-32 of every preceding byte
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{FactorDataset, FactorSpec};
use crate::error::{Error, FormatError, Result};
use crate::nets::ImageDims;

pub const FDS_MAGIC: [u8; 4] = *b"FDS1";
pub const FDS_VERSION: u32 = 1;

fn u32_at(buf: &[u8], pos: &mut usize, what: &'static str) -> Result<u32, FormatError> {
    let b = buf.get(*pos..*pos + 4).ok_or(FormatError::Truncated(what))?;
    *pos += 4;
    Ok(u32::from_le_bytes(b.try_into().unwrap()))
}

fn u16_at(buf: &[u8], pos: &mut usize, what: &'static str) -> Result<u16, FormatError> {
    let b = buf.get(*pos..*pos + 2).ok_or(FormatError::Truncated(what))?;
    *pos += 2;
    Ok(u16::from_le_bytes(b.try_into().unwrap()))
}

fn bytes_at<'a>(buf: &'a [u8], pos: &mut usize, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
    let end = pos.checked_add(n).ok_or(FormatError::Truncated(what))?;
    let b = buf.get(*pos..end).ok_or(FormatError::Truncated(what))?;
    *pos = end;
    Ok(b)
}

pub fn write_fds(ds: &FactorDataset, mut out: impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(64 + ds.images().len() + 4 * ds.factors().values().len());
    buf.extend_from_slice(&FDS_MAGIC);
    buf.extend_from_slice(&FDS_VERSION.to_le_bytes());
    let d = ds.dims;
    for v in [ds.len(), d.height, d.width, d.channels, ds.spec.len()] {
        let v = u32::try_from(v).map_err(|_| Error::Data(format!("dimension {v} exceeds u32")))?;
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for (name, &card) in ds.spec.names.iter().zip(&ds.spec.cardinalities) {
        let len = u16::try_from(name.len()).map_err(|_| Error::Data(format!("factor name too long: {name}")))?;
        buf.extend_from_slice(&(card as u32).to_le_bytes());
        buf.extend_from_slice(&len.to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
    }
    buf.extend_from_slice(ds.images());
    for v in ds.factors().values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_fds(mut input: impl Read) -> Result<FactorDataset> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf).map_err(FormatError::from)?;
    let mut pos = 0;
    let magic = bytes_at(&buf, &mut pos, 4, "magic")?;
    if magic != FDS_MAGIC {
        let mut found = [0u8; 4];
        found.copy_from_slice(magic);
        return Err(FormatError::BadMagic {
            expected: FDS_MAGIC,
            found,
        }
        .into());
    }
    let version = u32_at(&buf, &mut pos, "version")?;
    if version != FDS_VERSION {
        return Err(FormatError::VersionMismatch {
            expected: FDS_VERSION,
            found: version,
        }
        .into());
    }
    let mut hdr = [0usize; 5];
    for h in hdr.iter_mut() {
        *h = u32_at(&buf, &mut pos, "header")? as usize;
    }
    let [n, h, w, c, k] = hdr;
    let mut names = Vec::with_capacity(k);
    let mut cards = Vec::with_capacity(k);
    for _ in 0..k {
        cards.push(u32_at(&buf, &mut pos, "factor cardinality")? as usize);
        let len = u16_at(&buf, &mut pos, "factor name length")? as usize;
        let raw = bytes_at(&buf, &mut pos, len, "factor name")?;
        names.push(
            String::from_utf8(raw.to_vec()).map_err(|_| FormatError::Malformed("factor name is not UTF-8".into()))?,
        );
    }
    let img_len = n
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(c))
        .ok_or(FormatError::Truncated("image payload"))?;
    let images = bytes_at(&buf, &mut pos, img_len, "image payload")?.to_vec();
    let fac_len = n
        .checked_mul(k)
        .and_then(|v| v.checked_mul(4))
        .ok_or(FormatError::Truncated("factor table"))?;
    let factors: Vec<u32> = bytes_at(&buf, &mut pos, fac_len, "factor table")?
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let body = pos;
    let stored = u32_at(&buf, &mut pos, "checksum")?;
    let computed = crc32fast::hash(&buf[..body]);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed }.into());
    }
    if pos != buf.len() {
        return Err(FormatError::Malformed(format!("{} trailing bytes", buf.len() - pos)).into());
    }
    let spec = FactorSpec::new(names, cards).map_err(|e| FormatError::Malformed(e.to_string()))?;
    FactorDataset::new(spec, ImageDims::new(h, w, c), images, factors)
        .map_err(|e| FormatError::Malformed(e.to_string()).into())
}

pub fn save_fds(ds: &FactorDataset, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_fds(ds, std::io::BufWriter::new(f))
}

pub fn load_fds(path: impl AsRef<Path>) -> Result<FactorDataset> {
    let f = std::fs::File::open(path)?;
    read_fds(std::io::BufReader::new(f))
}
