//! LVAE checkpoint container, little-endian:
//!
//! ```text
//! "LVAE" | u32 version | u32 scalar tag | u32 arch tag
//! u32 latent | u32 H | u32 W | u32 C | u32 hidden | u64 iteration
//! u32 regime tag | u32 regularizer tag | f64 beta | f64 s0 | f64 s1 | f64 log_decoder_sigma
//! u8 has_controller [ 8 x f64: kl_set k_p k_i integral beta_min beta_max beta_floor beta_current ]
//! u32 tensor count, then per tensor: u32 rank | rank x u32 dims | f64 data
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! Parameters are stored as f64 regardless of the model's scalar type; f32
//! values widen and narrow back exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::losses::{ControllerState, LossWeights, Regime, SigmaRegularizer};
use crate::nets::{Arch, ImageDims, VaeModel};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"LVAE";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A model together with the loss state it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T: Scalar = f64> {
    pub model: VaeModel<T>,
    pub weights: LossWeights<T>,
    pub iteration: u64,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Config(format!("size {v} exceeds u32")))?;
        self.u32(v);
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).ok_or(FormatError::Truncated(what))?;
        let b = self.buf.get(self.pos..end).ok_or(FormatError::Truncated(what))?;
        self.pos = end;
        Ok(b)
    }
    fn u8(&mut self, what: &'static str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &'static str) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    FormatError::Malformed(msg.into()).into()
}

pub fn write_checkpoint<T: Scalar>(ck: &Checkpoint<T>, mut out: impl Write) -> Result<()> {
    let m = &ck.model;
    let w = &ck.weights;
    let mut b = Writer(Vec::new());
    b.0.extend_from_slice(&CHECKPOINT_MAGIC);
    b.u32(CHECKPOINT_VERSION);
    b.u32(T::TAG as u32);
    b.u32(m.arch.tag());
    for v in [m.latent, m.dims.height, m.dims.width, m.dims.channels, m.hidden] {
        b.len(v)?;
    }
    b.u64(ck.iteration);
    b.u32(w.regime.tag());
    b.u32(match w.regularizer {
        SigmaRegularizer::Squared => 0,
        SigmaRegularizer::Log => 1,
    });
    b.f64(w.beta);
    for v in [w.s0, w.s1, w.log_decoder_sigma] {
        b.f64(v.as_f64());
    }
    match &w.controller {
        None => b.u8(0),
        Some(c) => {
            b.u8(1);
            for v in [
                c.kl_set,
                c.k_p,
                c.k_i,
                c.integral,
                c.beta_min,
                c.beta_max,
                c.beta_floor,
                c.beta_current,
            ] {
                b.f64(v);
            }
        }
    }
    b.len(m.params().len())?;
    for p in m.params() {
        b.len(p.rank())?;
        for &d in p.shape() {
            b.len(d)?;
        }
        for v in p.data() {
            b.f64(v.as_f64());
        }
    }
    let crc = crc32fast::hash(&b.0);
    b.u32(crc);
    out.write_all(&b.0)?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar>(mut input: impl Read) -> Result<Checkpoint<T>> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf).map_err(FormatError::from)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(FormatError::BadMagic {
            expected: CHECKPOINT_MAGIC,
            found: magic.try_into().unwrap(),
        }
        .into());
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(FormatError::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: version,
        }
        .into());
    }
    // Verify the trailer before interpreting the body.
    if buf.len() < 12 {
        return Err(FormatError::Truncated("checksum").into());
    }
    let body = buf.len() - 4;
    let stored = u32::from_le_bytes(buf[body..].try_into().unwrap());
    let computed = crc32fast::hash(&buf[..body]);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed }.into());
    }
    let mut r = Reader {
        buf: &buf[..body],
        pos: 8,
    };

    let scalar = r.u32("scalar tag")?;
    if scalar != T::TAG as u32 {
        return Err(malformed(format!(
            "checkpoint scalar tag {scalar} does not match requested {}",
            T::TAG
        )));
    }
    let arch = r.u32("arch tag")?;
    let arch = Arch::from_tag(arch).ok_or_else(|| malformed(format!("unknown arch tag {arch}")))?;
    let mut dims = [0usize; 5];
    for d in dims.iter_mut() {
        *d = r.u32("model dims")? as usize;
    }
    let [latent, h, wd, c, hidden] = dims;
    let iteration = r.u64("iteration")?;
    let regime = r.u32("regime tag")?;
    let regime = Regime::from_tag(regime).ok_or_else(|| malformed(format!("unknown regime tag {regime}")))?;
    let regularizer = match r.u32("regularizer tag")? {
        0 => SigmaRegularizer::Squared,
        1 => SigmaRegularizer::Log,
        t => return Err(malformed(format!("unknown regularizer tag {t}"))),
    };
    let beta = r.f64("beta")?;
    let s0 = T::lit(r.f64("s0")?);
    let s1 = T::lit(r.f64("s1")?);
    let log_decoder_sigma = T::lit(r.f64("log_decoder_sigma")?);
    let controller = match r.u8("controller flag")? {
        0 => None,
        1 => {
            let mut v = [0.0; 8];
            for x in v.iter_mut() {
                *x = r.f64("controller")?;
            }
            Some(ControllerState {
                kl_set: v[0],
                k_p: v[1],
                k_i: v[2],
                integral: v[3],
                beta_min: v[4],
                beta_max: v[5],
                beta_floor: v[6],
                beta_current: v[7],
            })
        }
        f => return Err(malformed(format!("bad controller flag {f}"))),
    };
    let count = r.u32("tensor count")? as usize;
    let mut params = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rank = r.u32("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(r.u32("tensor shape")? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or(FormatError::Truncated("tensor data"))?;
        let raw = r.take(
            n.checked_mul(8).ok_or(FormatError::Truncated("tensor data"))?,
            "tensor data",
        )?;
        let data = raw
            .chunks_exact(8)
            .map(|b| T::lit(f64::from_le_bytes(b.try_into().unwrap())))
            .collect();
        params.push(Tensor::new(shape, data).map_err(|e| malformed(e.to_string()))?);
    }
    if r.pos != body {
        return Err(malformed(format!("{} unread bytes before checksum", body - r.pos)));
    }
    let model = VaeModel::from_parts(arch, latent, ImageDims::new(h, wd, c), hidden, params)
        .map_err(|e| malformed(e.to_string()))?;
    let weights = LossWeights {
        regime,
        beta,
        s0,
        s1,
        log_decoder_sigma,
        controller,
        regularizer,
    };
    Ok(Checkpoint {
        model,
        weights,
        iteration,
    })
}

pub fn save_checkpoint<T: Scalar>(ck: &Checkpoint<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(ck, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Checkpoint<T>> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}
