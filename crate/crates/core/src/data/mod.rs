//! Factor-labelled image datasets: the procedural generator, the FDS
//! container, train/val/test splits and the fixed-factor pair sampler.

mod fds;
mod render;

pub use fds::{load_fds, read_fds, save_fds, write_fds, FDS_MAGIC, FDS_VERSION};
pub use render::{generate_minidsprites, GeneratorConfig, SHRUNK_SUFFIX};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nets::ImageDims;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Names and cardinalities of the ground-truth factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSpec {
    pub names: Vec<String>,
    pub cardinalities: Vec<usize>,
}

impl FactorSpec {
    pub fn new(names: Vec<String>, cardinalities: Vec<usize>) -> Result<Self> {
        if names.is_empty() || names.len() != cardinalities.len() {
            return Err(Error::Data(
                "factor names and cardinalities must be non-empty and aligned".into(),
            ));
        }
        if cardinalities.contains(&0) {
            return Err(Error::Data("factor cardinalities must be positive".into()));
        }
        Ok(Self { names, cardinalities })
    }

    /// shape:3, scale:4, orientation:8, posX:8, posY:8.
    pub fn minidsprites() -> Self {
        let names = ["shape", "scale", "orientation", "posX", "posY"]
            .map(String::from)
            .to_vec();
        Self {
            names,
            cardinalities: vec![3, 4, 8, 8, 8],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn combinations(&self) -> usize {
        self.cardinalities.iter().product()
    }

    /// Mixed-radix decoding of a combination number, last factor fastest.
    pub fn combination(&self, mut index: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.len()];
        for k in (0..self.len()).rev() {
            out[k] = (index % self.cardinalities[k]) as u32;
            index /= self.cardinalities[k];
        }
        out
    }
}

/// Row-major `N x K` table of factor indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorTable {
    k: usize,
    values: Vec<u32>,
    cardinalities: Vec<usize>,
}

impl FactorTable {
    pub fn new(cardinalities: Vec<usize>, values: Vec<u32>) -> Result<Self> {
        let k = cardinalities.len();
        if k == 0 || !values.len().is_multiple_of(k) {
            return Err(Error::Data(format!(
                "{} factor values do not form rows of {k}",
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if *v as usize >= cardinalities[i % k] {
                return Err(Error::Data(format!(
                    "factor {} value {v} at row {} exceeds cardinality {}",
                    i % k,
                    i / k,
                    cardinalities[i % k]
                )));
            }
        }
        Ok(Self {
            k,
            values,
            cardinalities,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn num_factors(&self) -> usize {
        self.k
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn get(&self, row: usize, factor: usize) -> u32 {
        self.values[row * self.k + factor]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.values[row * self.k..(row + 1) * self.k]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Column `factor` as a vector.
    pub fn column(&self, factor: usize) -> Vec<u32> {
        (0..self.rows()).map(|r| self.get(r, factor)).collect()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.k);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self {
            k: self.k,
            values,
            cardinalities: self.cardinalities.clone(),
        }
    }

    /// Rows grouped by the value of each factor: `groups[k][v]`.
    pub fn index(&self) -> FactorIndex {
        let groups = (0..self.k)
            .map(|f| {
                let mut g = vec![Vec::new(); self.cardinalities[f]];
                for r in 0..self.rows() {
                    g[self.get(r, f) as usize].push(r);
                }
                g
            })
            .collect();
        FactorIndex { groups }
    }
}

/// Row lists per (factor, value), built once per table.
#[derive(Debug, Clone)]
pub struct FactorIndex {
    groups: Vec<Vec<Vec<usize>>>,
}

impl FactorIndex {
    pub fn rows_with(&self, factor: usize, value: u32) -> &[usize] {
        &self.groups[factor][value as usize]
    }

    pub fn num_factors(&self) -> usize {
        self.groups.len()
    }

    /// Values of `factor` that occur in at least `min` rows.
    pub fn populated_values(&self, factor: usize, min: usize) -> Vec<u32> {
        self.groups[factor]
            .iter()
            .enumerate()
            .filter(|(_, rows)| rows.len() >= min)
            .map(|(v, _)| v as u32)
            .collect()
    }
}

/// Images (`N x H x W x C`, 8-bit) with their factor labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorDataset {
    pub spec: FactorSpec,
    pub dims: ImageDims,
    images: Vec<u8>,
    factors: FactorTable,
}

impl FactorDataset {
    pub fn new(spec: FactorSpec, dims: ImageDims, images: Vec<u8>, factors: Vec<u32>) -> Result<Self> {
        let table = FactorTable::new(spec.cardinalities.clone(), factors)?;
        if images.len() != table.rows() * dims.pixels() {
            return Err(Error::Data(format!(
                "{} image bytes do not match {} rows of {}x{}x{}",
                images.len(),
                table.rows(),
                dims.height,
                dims.width,
                dims.channels
            )));
        }
        Ok(Self {
            spec,
            dims,
            images,
            factors: table,
        })
    }

    pub fn len(&self) -> usize {
        self.factors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn factors(&self) -> &FactorTable {
        &self.factors
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    /// Raw `H x W x C` bytes of one image.
    pub fn image(&self, i: usize) -> &[u8] {
        let p = self.dims.pixels();
        &self.images[i * p..(i + 1) * p]
    }

    /// `(batch, C*H*W)` model input in channel-major order, scaled to [0, 1].
    pub fn batch<T: Scalar>(&self, indices: &[usize]) -> Tensor<T> {
        let ImageDims {
            height,
            width,
            channels,
        } = self.dims;
        let p = self.dims.pixels();
        let scale = T::lit(1.0 / 255.0);
        let mut data = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            let img = self.image(i);
            for c in 0..channels {
                for y in 0..height {
                    for x in 0..width {
                        data.push(T::lit(img[(y * width + x) * channels + c] as f64) * scale);
                    }
                }
            }
        }
        Tensor::new([indices.len(), p], data).expect("batch shape")
    }
}

/// Train / validation / test row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle followed by a floor-based partition: the train share is
/// `floor(r0 * N)`, validation takes `floor(rest * r1 / (r1 + r2))`, and the
/// test split gets the remainder.
pub fn split(n: usize, ratios: (f64, f64, f64), rng: &mut impl Rng) -> Result<SplitIndices> {
    let (r0, r1, r2) = ratios;
    if [r0, r1, r2].iter().any(|r| !(*r >= 0.0)) || ((r0 + r1 + r2) - 1.0).abs() > 1e-9 {
        return Err(Error::Data(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let n_train = ((r0 * n as f64) + 1e-9).floor() as usize;
    let rest = n - n_train.min(n);
    let n_val = if r1 + r2 > 0.0 {
        ((rest as f64 * r1 / (r1 + r2)) + 1e-9).floor() as usize
    } else {
        0
    };
    let n_test = rest - n_val;
    for (name, r, size) in [("train", r0, n_train), ("val", r1, n_val), ("test", r2, n_test)] {
        if r > 0.0 && size == 0 {
            return Err(Error::Data(format!("{name} split is empty for N = {n}")));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        val,
        test,
    })
}

/// `batch` pairs `(i, j)` of rows sharing the value of `factor`. The first row
/// is uniform over the table; the second is uniform over rows sharing its value.
pub fn sample_fixed_factor_batch(
    table: &FactorTable,
    index: &FactorIndex,
    factor: usize,
    batch: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>> {
    if factor >= table.num_factors() {
        return Err(Error::Data(format!(
            "factor {factor} out of range for {} factors",
            table.num_factors()
        )));
    }
    if table.rows() == 0 {
        return Err(Error::Data("cannot sample pairs from an empty table".into()));
    }
    Ok((0..batch)
        .map(|_| {
            let i = rng.random_range(0..table.rows());
            let same = index.rows_with(factor, table.get(i, factor));
            (i, same[rng.random_range(0..same.len())])
        })
        .collect())
}
