//! Semantic-map feature extraction and the segmentation-corruption model.
//!
//! A semantic map is split into a 3x2 region grid (near-left, near-center,
//! near-right, far-left, far-center, far-right); each region contributes a
//! 5-class count histogram with road-line counts weighted by 20, and the
//! concatenation is divided by its l1 norm to form the state vector.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{StateVector, NUM_CLASSES, STATE_DIM};

/// Histogram weight applied to road-line pixels, compensating their low
/// density in the rendered view.
pub const ROAD_LINE_WEIGHT: f64 = 20.0;

/// The five semantic categories, in fixed histogram-slot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SemanticClass {
    Road,
    RoadLine,
    OffRoad,
    StaticObject,
    DynamicObject,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; NUM_CLASSES] = [
        SemanticClass::Road,
        SemanticClass::RoadLine,
        SemanticClass::OffRoad,
        SemanticClass::StaticObject,
        SemanticClass::DynamicObject,
    ];

    /// Palette code used by the text-grid debug format.
    pub fn code(self) -> u8 {
        match self {
            SemanticClass::Road => 0,
            SemanticClass::RoadLine => 1,
            SemanticClass::OffRoad => 2,
            SemanticClass::StaticObject => 3,
            SemanticClass::DynamicObject => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        SemanticClass::ALL.get(code as usize).copied()
    }

    fn index(self) -> usize {
        self.code() as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("semantic map dimensions must be positive, got {width}x{height}")]
    EmptyMap { width: usize, height: usize },
    #[error(
        "region grid needs width divisible by 3 and height divisible by 2, got {width}x{height}"
    )]
    BadRegionGrid { width: usize, height: usize },
    #[error("text grid row {row} is malformed: {reason}")]
    BadTextGrid { row: usize, reason: String },
    #[error("invalid noise config: {0}")]
    BadNoiseConfig(String),
}

/// Row-major grid of semantic classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticMap {
    width: usize,
    height: usize,
    cells: Vec<SemanticClass>,
}

impl SemanticMap {
    /// Uniform map of the given class. Any positive dimensions are allowed;
    /// the 3x2 region grid is only required by [`extract_state`].
    pub fn filled(width: usize, height: usize, class: SemanticClass) -> Result<Self, PerceptionError> {
        if width == 0 || height == 0 {
            return Err(PerceptionError::EmptyMap { width, height });
        }
        Ok(Self {
            width,
            height,
            cells: vec![class; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> SemanticClass {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, class: SemanticClass) {
        self.cells[y * self.width + x] = class;
    }

    pub fn cells(&self) -> &[SemanticClass] {
        &self.cells
    }

    /// Fraction of pixels with the given class.
    pub fn class_fraction(&self, class: SemanticClass) -> f64 {
        let count = self.cells.iter().filter(|c| **c == class).count();
        count as f64 / self.cells.len() as f64
    }

    /// Debug serialization: one digit per pixel, one row per line.
    /// Palette: Road=0, RoadLine=1, OffRoad=2, StaticObject=3, DynamicObject=4.
    pub fn to_text_grid(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(char::from(b'0' + self.get(x, y).code()));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text-grid format produced by [`Self::to_text_grid`].
    pub fn from_text_grid(text: &str) -> Result<Self, PerceptionError> {
        let mut rows: Vec<Vec<SemanticClass>> = Vec::new();
        for (row, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut cells = Vec::with_capacity(line.len());
            for ch in line.chars() {
                let code = (ch as u32).wrapping_sub('0' as u32);
                let class = u8::try_from(code)
                    .ok()
                    .and_then(SemanticClass::from_code)
                    .ok_or_else(|| PerceptionError::BadTextGrid {
                        row,
                        reason: format!("unexpected character {ch:?}"),
                    })?;
                cells.push(class);
            }
            if let Some(first) = rows.first() {
                if first.len() != cells.len() {
                    return Err(PerceptionError::BadTextGrid {
                        row,
                        reason: format!("width {} differs from {}", cells.len(), first.len()),
                    });
                }
            }
            rows.push(cells);
        }
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || height == 0 {
            return Err(PerceptionError::EmptyMap { width, height });
        }
        Ok(Self {
            width,
            height,
            cells: rows.into_iter().flatten().collect(),
        })
    }
}

/// Converts a semantic map into the l1-normalized 30-dimensional state.
///
/// Regions are the 3x2 grid of equal cells (left/center/right thirds by
/// column, near = bottom half, far = top half), ordered near-left,
/// near-center, near-right, far-left, far-center, far-right.
pub fn extract_state(map: &SemanticMap) -> Result<StateVector, PerceptionError> {
    if map.width % 3 != 0 || map.height % 2 != 0 {
        return Err(PerceptionError::BadRegionGrid {
            width: map.width,
            height: map.height,
        });
    }
    let region_w = map.width / 3;
    let region_h = map.height / 2;
    let mut weights = [0.0f64; STATE_DIM];
    for y in 0..map.height {
        // Image row 0 is the far edge of the view; near regions come first.
        let band = if y >= region_h { 0 } else { 1 };
        for x in 0..map.width {
            let region = band * 3 + x / region_w;
            let class = map.get(x, y);
            let w = if class == SemanticClass::RoadLine {
                ROAD_LINE_WEIGHT
            } else {
                1.0
            };
            weights[region * NUM_CLASSES + class.index()] += w;
        }
    }
    // Every pixel carries a class, so the total weight is always positive.
    StateVector::from_weights(&weights)
        .map_err(|e| unreachable!("semantic map produced degenerate weights: {e}"))
}

/// Fraction of pixels labeled road.
pub fn road_view(map: &SemanticMap) -> f64 {
    map.class_fraction(SemanticClass::Road)
}

/// Parametric corruption emulating an estimated segmentation: independent
/// per-pixel class flips plus spurious small-object blobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per-pixel probability of flipping to a uniformly random other class.
    pub flip_prob: f64,
    /// Expected number of spurious object blobs per frame (Poisson rate).
    pub blob_rate: f64,
    /// Pixels per blob; blobs are squares of side ~sqrt(blob_size).
    pub blob_size: u32,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            flip_prob: 0.0,
            blob_rate: 0.0,
            blob_size: 9,
        }
    }
}

impl NoiseConfig {
    pub fn new(flip_prob: f64, blob_rate: f64, blob_size: u32) -> Result<Self, PerceptionError> {
        let cfg = Self {
            flip_prob,
            blob_rate,
            blob_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if !self.flip_prob.is_finite() || !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(PerceptionError::BadNoiseConfig(format!(
                "flip_prob must be in [0, 1], got {}",
                self.flip_prob
            )));
        }
        if !self.blob_rate.is_finite() || self.blob_rate < 0.0 {
            return Err(PerceptionError::BadNoiseConfig(format!(
                "blob_rate must be >= 0, got {}",
                self.blob_rate
            )));
        }
        if self.blob_size == 0 {
            return Err(PerceptionError::BadNoiseConfig(
                "blob_size must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_noop(&self) -> bool {
        self.flip_prob == 0.0 && self.blob_rate == 0.0
    }
}

/// Applies the corruption model. Deterministic given the rng state: pixel
/// flips are drawn row-major first, then the blob count and per-blob
/// position/class draws.
pub fn corrupt(map: &SemanticMap, cfg: &NoiseConfig, rng: &mut impl Rng) -> SemanticMap {
    let mut out = map.clone();
    if cfg.flip_prob > 0.0 {
        for cell in out.cells.iter_mut() {
            if rng.gen::<f64>() < cfg.flip_prob {
                // Uniformly random *different* class.
                let shift = rng.gen_range(0..NUM_CLASSES - 1);
                let idx = cell.index();
                let new = if shift >= idx { shift + 1 } else { shift };
                *cell = SemanticClass::ALL[new];
            }
        }
    }
    if cfg.blob_rate > 0.0 {
        let poisson = Poisson::new(cfg.blob_rate).expect("validated blob rate");
        let count = poisson.sample(rng) as usize;
        let side = ((cfg.blob_size as f64).sqrt().round() as usize).max(1);
        let side_x = side.min(out.width);
        let side_y = side.min(out.height);
        for _ in 0..count {
            let x0 = rng.gen_range(0..=out.width - side_x);
            let y0 = rng.gen_range(0..=out.height - side_y);
            let class = if rng.gen_bool(0.5) {
                SemanticClass::StaticObject
            } else {
                SemanticClass::DynamicObject
            };
            for y in y0..y0 + side_y {
                for x in x0..x0 + side_x {
                    out.set(x, y, class);
                }
            }
        }
    }
    out
}
