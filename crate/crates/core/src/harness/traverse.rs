//! Latent traversal grids and their binary PGM / PPM encoding.

use std::path::Path;

use crate::data::FactorDataset;
use crate::error::{Error, Result};
use crate::nets::VaeModel;
use crate::tensor::Tensor;

/// An 8-bit image in row-major `height x width x channels` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
    /// Size of one tile.
    pub tile: (usize, usize),
}

impl ImageGrid {
    /// Binary PGM (`P5`) for one channel, PPM (`P6`) for three.
    pub fn to_pnm(&self) -> Result<Vec<u8>> {
        let magic = match self.channels {
            1 => "P5",
            3 => "P6",
            c => return Err(Error::Config(format!("cannot encode {c}-channel image as PGM/PPM"))),
        };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        Ok(out)
    }

    pub fn extension(&self) -> &'static str {
        if self.channels == 1 {
            "pgm"
        } else {
            "ppm"
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_pnm()?)?;
        Ok(())
    }

    /// Pixels of tile (`row`, `col`) in `H x W x C` order.
    pub fn tile_pixels(&self, row: usize, col: usize) -> Vec<u8> {
        let (th, tw) = self.tile;
        let c = self.channels;
        let mut out = Vec::with_capacity(th * tw * c);
        for y in 0..th {
            let start = ((row * th + y) * self.width + col * tw) * c;
            out.extend_from_slice(&self.pixels[start..start + tw * c]);
        }
        out
    }
}

/// Encodes each sample to its mean code, sweeps coordinate `dim` over `steps`
/// evenly spaced values in `[lo, hi]`, and tiles the decodings with one row
/// per sample and one column per step.
pub fn traverse(
    model: &VaeModel<f64>,
    ds: &FactorDataset,
    samples: &[usize],
    dim: usize,
    range: (f64, f64),
    steps: usize,
) -> Result<ImageGrid> {
    if dim >= model.latent {
        return Err(Error::Config(format!(
            "dimension {dim} out of range for latent size {}",
            model.latent
        )));
    }
    if steps == 0 || samples.is_empty() {
        return Err(Error::Config("traversal needs at least one sample and one step".into()));
    }
    if let Some(&bad) = samples.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::Data(format!(
            "sample index {bad} out of range for {} images",
            ds.len()
        )));
    }
    if ds.dims != model.dims {
        return Err(Error::Data(format!(
            "model expects {:?} images, dataset has {:?}",
            model.dims, ds.dims
        )));
    }
    let (lo, hi) = range;
    let l = model.latent;
    let mu = model.encode_mean(&ds.batch::<f64>(samples))?;
    let mut codes = Vec::with_capacity(samples.len() * steps * l);
    for s in 0..samples.len() {
        for k in 0..steps {
            let v = if steps == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (steps - 1) as f64
            };
            let mut z = mu.data()[s * l..(s + 1) * l].to_vec();
            z[dim] = v;
            codes.extend(z);
        }
    }
    let out = model.decode_values(&Tensor::new([samples.len() * steps, l], codes)?)?;
    let d = model.dims;
    let (th, tw, c) = (d.height, d.width, d.channels);
    let width = steps * tw;
    let height = samples.len() * th;
    let mut pixels = vec![0u8; width * height * c];
    for (t, img) in out.data().chunks(d.pixels()).enumerate() {
        let (row, col) = (t / steps, t % steps);
        for ch in 0..c {
            for y in 0..th {
                for x in 0..tw {
                    let v = img[(ch * th + y) * tw + x];
                    let px = ((row * th + y) * width + col * tw + x) * c + ch;
                    pixels[px] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                }
            }
        }
    }
    Ok(ImageGrid {
        width,
        height,
        channels: c,
        pixels,
        tile: (th, tw),
    })
}
