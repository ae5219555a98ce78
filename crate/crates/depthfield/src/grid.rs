use crate::error::{Error, Result};

/// Row-major scalar field on the pixel grid. Backing storage for brightness,
/// depth, inverse depth, flow components and data terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        ScalarGrid {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        ScalarGrid {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Invalid(format!(
                "grid data length {} does not match {width}x{height}",
                values.len()
            )));
        }
        Ok(ScalarGrid {
            width,
            height,
            values,
        })
    }

    /// Builds a grid by evaluating `f(i, j)` at every pixel, row-parallel.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut g = ScalarGrid::zeros(width, height);
        g.fill_rows(|j, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        });
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.width && j < self.height);
        self.values[j * self.width + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.width && j < self.height);
        self.values[j * self.width + i] = v;
    }

    /// Clamped accessor: indices outside the grid replicate the nearest edge pixel.
    #[inline]
    pub fn at_clamped(&self, i: isize, j: isize) -> f64 {
        let ci = i.clamp(0, self.width as isize - 1) as usize;
        let cj = j.clamp(0, self.height as isize - 1) as usize;
        self.at(ci, cj)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.width..(j + 1) * self.width]
    }

    /// Writes every row with `f(j, row)`, rows dispatched in parallel.
    /// Each output value must depend only on `j` and the row contents produced
    /// by `f`, so parallel and serial execution are bit-identical.
    pub fn fill_rows(&mut self, f: impl Fn(usize, &mut [f64]) + Sync) {
        use rayon::prelude::*;
        let w = self.width;
        self.values
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarGrid {
        ScalarGrid {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_same_dims(&self, other: &ScalarGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        Ok(())
    }
}

/// Scalar image of received brightness, one real value per pixel.
pub type BrightnessField = ScalarGrid;

/// Per-pixel distance from the optical center to the scene, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthField {
    pub values: ScalarGrid,
}

impl DepthField {
    pub fn constant(width: usize, height: usize, depth: f64) -> Self {
        DepthField {
            values: ScalarGrid::constant(width, height, depth),
        }
    }

    /// Pointwise reciprocal, with a floor keeping the result finite.
    pub fn to_gamma(&self, min_depth: f64) -> GammaField {
        GammaField {
            values: self.values.map(|d| 1.0 / d.max(min_depth)),
        }
    }
}

/// Per-pixel inverse depth, 1/meters.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaField {
    pub values: ScalarGrid,
}

impl GammaField {
    pub fn constant(width: usize, height: usize, gamma: f64) -> Self {
        GammaField {
            values: ScalarGrid::constant(width, height, gamma),
        }
    }

    /// Pointwise reciprocal, clamping inverse depth away from zero first.
    pub fn to_depth(&self, min_gamma: f64) -> DepthField {
        DepthField {
            values: self.values.map(|g| 1.0 / g.max(min_gamma)),
        }
    }
}
