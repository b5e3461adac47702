//! Procedural dSprites-style renderer: white square / ellipse / heart
//! silhouettes on black, swept over scale, orientation and position.
//!
//! Shapes are defined inside the unit disc and scaled by a radius `r` in
//! pixels. Shape centres sit on integer pixel corners and move in whole-pixel
//! steps, so a position step is an exact translation of the raster. Every
//! radius is at most a quarter of the image side and the position grid keeps
//! centres at least that far from the border, so silhouettes are never clipped.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;

use super::{FactorDataset, FactorSpec};
use crate::error::{Error, Result};
use crate::nets::ImageDims;
use crate::seed::{self, Stream};

/// Appended to a position factor's name when its grid could not use whole
/// pixel steps and was compressed to fractional spacing.
pub const SHRUNK_SUFFIX: &str = ":shrunk";

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub image_size: usize,
    /// Factors in the order shape, scale, orientation, posX, posY.
    pub spec: FactorSpec,
    /// `None` renders every combination exactly once; `Some(n)` draws `n`
    /// combinations uniformly at random with `seed`.
    pub samples: Option<usize>,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            image_size: 16,
            spec: FactorSpec::minidsprites(),
            samples: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Square,
    Ellipse,
    Heart,
}

impl Shape {
    fn from_index(i: u32) -> Self {
        match i {
            0 => Shape::Square,
            1 => Shape::Ellipse,
            _ => Shape::Heart,
        }
    }

    /// Inside test in unit-disc coordinates, `v` pointing up.
    fn contains(self, u: f64, v: f64) -> bool {
        match self {
            Shape::Square => u.abs() <= FRAC_1_SQRT_2 && v.abs() <= FRAC_1_SQRT_2,
            Shape::Ellipse => u * u + (2.0 * v) * (2.0 * v) <= 1.0,
            Shape::Heart => {
                // (x² + y² - 1)³ - x² y³ <= 0, shrunk and recentred into the disc
                let x = u / HEART_SCALE;
                let y = v / HEART_SCALE + HEART_SHIFT;
                let q = x * x + y * y - 1.0;
                q * q * q - x * x * y * y * y <= 0.0
            }
        }
    }
}

const HEART_SCALE: f64 = 0.75;
const HEART_SHIFT: f64 = 0.1;

/// Pixel geometry of one axis of the position grid.
#[derive(Debug, Clone, Copy)]
struct PositionGrid {
    first: f64,
    step: f64,
    shrunk: bool,
}

impl PositionGrid {
    fn new(size: usize, margin: usize, count: usize) -> Self {
        let span = size - 2 * margin;
        if count <= 1 {
            return Self {
                first: (size / 2) as f64,
                step: 0.0,
                shrunk: false,
            };
        }
        let step = span / (count - 1);
        if step >= 1 {
            let slack = span - step * (count - 1);
            Self {
                first: (margin + slack / 2) as f64,
                step: step as f64,
                shrunk: false,
            }
        } else {
            Self {
                first: margin as f64,
                step: span as f64 / (count - 1) as f64,
                shrunk: true,
            }
        }
    }

    fn at(&self, i: u32) -> f64 {
        self.first + self.step * i as f64
    }
}

fn check_spec(cfg: &GeneratorConfig) -> Result<()> {
    if cfg.image_size < 8 {
        return Err(Error::Config(format!(
            "image_size must be >= 8, got {}",
            cfg.image_size
        )));
    }
    if cfg.spec.len() != 5 {
        return Err(Error::Config(
            "generator expects five factors: shape, scale, orientation, posX, posY".into(),
        ));
    }
    if cfg.spec.cardinalities[0] > 3 {
        return Err(Error::Config("at most three shapes (square, ellipse, heart)".into()));
    }
    Ok(())
}

/// Renders the mini-dSprites factor dataset described by `cfg`.
pub fn generate_minidsprites(cfg: &GeneratorConfig) -> Result<FactorDataset> {
    check_spec(cfg)?;
    let size = cfg.image_size;
    let card = &cfg.spec.cardinalities;
    let max_radius = size as f64 / 4.0;
    let margin = size.div_ceil(4);
    let grid_x = PositionGrid::new(size, margin, card[3]);
    let grid_y = PositionGrid::new(size, margin, card[4]);

    let combos: Vec<Vec<u32>> = match cfg.samples {
        None => (0..cfg.spec.combinations()).map(|i| cfg.spec.combination(i)).collect(),
        Some(n) => {
            let mut rng = seed::rng(cfg.seed, Stream::Generator);
            (0..n)
                .map(|_| cfg.spec.combination(rng.random_range(0..cfg.spec.combinations())))
                .collect()
        }
    };

    let mut images = Vec::with_capacity(combos.len() * size * size);
    for f in &combos {
        let shape = Shape::from_index(f[0]);
        let radius = if card[1] > 1 {
            max_radius * (0.5 + 0.5 * f[1] as f64 / (card[1] - 1) as f64)
        } else {
            max_radius
        };
        let theta = 2.0 * PI * f[2] as f64 / card[2] as f64;
        let (sin, cos) = theta.sin_cos();
        let (cx, cy) = (grid_x.at(f[3]), grid_y.at(f[4]));
        for py in 0..size {
            for px in 0..size {
                let dx = (px as f64 + 0.5 - cx) / radius;
                // image rows grow downward; shape coordinates point up
                let dy = (cy - (py as f64 + 0.5)) / radius;
                let u = cos * dx + sin * dy;
                let v = -sin * dx + cos * dy;
                images.push(if shape.contains(u, v) { 255 } else { 0 });
            }
        }
    }

    let mut spec = cfg.spec.clone();
    for (k, grid) in [(3, grid_x), (4, grid_y)] {
        if grid.shrunk && !spec.names[k].ends_with(SHRUNK_SUFFIX) {
            log::warn!(
                "{} grid does not fit whole-pixel steps; spacing compressed",
                spec.names[k]
            );
            spec.names[k].push_str(SHRUNK_SUFFIX);
        }
    }
    let factors = combos.into_iter().flatten().collect();
    FactorDataset::new(spec, ImageDims::new(size, size, 1), images, factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> FactorDataset {
        generate_minidsprites(&GeneratorConfig::default()).unwrap()
    }

    fn find(ds: &FactorDataset, f: [u32; 5]) -> usize {
        (0..ds.len()).find(|&i| ds.factors().row(i) == f).unwrap()
    }

    #[test]
    fn default_grid_is_exhaustive() {
        let ds = full();
        assert_eq!(ds.len(), 6144);
        let mut rows: Vec<&[u32]> = (0..ds.len()).map(|i| ds.factors().row(i)).collect();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), 6144);
        assert_eq!(ds.spec, FactorSpec::minidsprites());
    }

    #[test]
    fn every_image_has_foreground_and_stays_in_bounds() {
        let ds = full();
        for i in 0..ds.len() {
            let img = ds.image(i);
            assert!(img.contains(&255), "empty image {i}");
            assert!(img.iter().all(|&p| p == 0 || p == 255));
        }
    }

    #[test]
    fn generation_is_bit_identical() {
        assert_eq!(full().images(), full().images());
    }

    #[test]
    fn square_quarter_turn_symmetry() {
        let ds = full();
        for scale in 0..4 {
            let a = find(&ds, [0, scale, 0, 3, 4]);
            let b = find(&ds, [0, scale, 2, 3, 4]);
            assert_eq!(ds.image(a), ds.image(b));
        }
    }

    #[test]
    fn posx_step_is_exact_translation() {
        let ds = full();
        for shape in 0..3 {
            let a = ds.image(find(&ds, [shape, 3, 1, 2, 5]));
            let b = ds.image(find(&ds, [shape, 3, 1, 3, 5]));
            for y in 0..16 {
                for x in 1..16 {
                    assert_eq!(b[y * 16 + x], a[y * 16 + x - 1]);
                }
                assert_eq!(a[y * 16 + 15], 0);
            }
        }
    }

    #[test]
    fn shapes_are_distinct() {
        let ds = full();
        let imgs: Vec<&[u8]> = (0..3).map(|s| ds.image(find(&ds, [s, 3, 1, 4, 4]))).collect();
        assert_ne!(imgs[0], imgs[1]);
        assert_ne!(imgs[1], imgs[2]);
        assert_ne!(imgs[0], imgs[2]);
    }

    #[test]
    fn crowded_grid_is_flagged_not_clipped() {
        let spec = FactorSpec::new(
            ["shape", "scale", "orientation", "posX", "posY"]
                .map(String::from)
                .to_vec(),
            vec![1, 1, 1, 12, 2],
        )
        .unwrap();
        let cfg = GeneratorConfig {
            image_size: 8,
            spec,
            ..Default::default()
        };
        let ds = generate_minidsprites(&cfg).unwrap();
        assert_eq!(ds.spec.names[3], "posX:shrunk");
        assert_eq!(ds.spec.names[4], "posY");
    }

    #[test]
    fn subsample_mode_uses_seed() {
        let cfg = GeneratorConfig {
            samples: Some(50),
            seed: 4,
            ..Default::default()
        };
        let a = generate_minidsprites(&cfg).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a, generate_minidsprites(&cfg).unwrap());
        let b = generate_minidsprites(&GeneratorConfig { seed: 5, ..cfg }).unwrap();
        assert_ne!(a.factors(), b.factors());
    }

    #[test]
    fn rejects_tiny_images_and_bad_specs() {
        let cfg = GeneratorConfig {
            image_size: 7,
            ..Default::default()
        };
        assert!(generate_minidsprites(&cfg).is_err());
        let spec = FactorSpec::new(vec!["a".into()], vec![2]).unwrap();
        assert!(generate_minidsprites(&GeneratorConfig {
            spec,
            ..Default::default()
        })
        .is_err());
    }
}
