//! Axis-aligned occupancy rasters with cell-center sampling, plus the
//! exact Euclidean distance transform used for disk dilation.

use crate::error::{Error, Result};
use crate::geom::{BoundingBox, Point2};

/// An occupancy grid. Cell `(i, j)` has its center at
/// `origin + (i * spacing, j * spacing)`; a bit records a predicate value
/// at that center.
#[derive(Debug, Clone)]
pub struct BitRaster {
    pub origin: Point2,
    pub spacing: f64,
    pub width: usize,
    pub height: usize,
    bits: Vec<u64>,
}

impl BitRaster {
    pub fn new(origin: Point2, spacing: f64, width: usize, height: usize) -> Result<Self> {
        if spacing <= 0.0 {
            return Err(Error::Domain("raster spacing must be positive".into()));
        }
        let words = (width * height).div_ceil(64);
        Ok(BitRaster {
            origin,
            spacing,
            width,
            height,
            bits: vec![0u64; words],
        })
    }

    /// Raster covering `window` at the given spacing, cell centers starting
    /// on `window.min`.
    pub fn covering(window: &BoundingBox, spacing: f64) -> Result<Self> {
        if !window.is_valid() {
            return Err(Error::Domain("invalid raster window".into()));
        }
        let width = ((window.max.x - window.min.x) / spacing).ceil() as usize + 1;
        let height = ((window.max.y - window.min.y) / spacing).ceil() as usize + 1;
        BitRaster::new(window.min, spacing, width, height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        let k = self.index(i, j);
        (self.bits[k >> 6] >> (k & 63)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let k = self.index(i, j);
        if v {
            self.bits[k >> 6] |= 1 << (k & 63);
        } else {
            self.bits[k >> 6] &= !(1 << (k & 63));
        }
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.spacing,
            self.origin.y + j as f64 * self.spacing,
        )
    }

    /// Evaluate a predicate at every cell center.
    pub fn fill(&mut self, mut pred: impl FnMut(Point2) -> bool) {
        for j in 0..self.height {
            for i in 0..self.width {
                let v = pred(self.cell_center(i, j));
                self.set(i, j, v);
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn same_geometry(&self, other: &BitRaster) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.spacing == other.spacing
            && self.origin == other.origin
    }

    pub fn union(&self, other: &BitRaster) -> Result<BitRaster> {
        if !self.same_geometry(other) {
            return Err(Error::Domain("raster geometry mismatch".into()));
        }
        let mut out = self.clone();
        for (w, o) in out.bits.iter_mut().zip(other.bits.iter()) {
            *w |= o;
        }
        Ok(out)
    }

    pub fn intersection(&self, other: &BitRaster) -> Result<BitRaster> {
        if !self.same_geometry(other) {
            return Err(Error::Domain("raster geometry mismatch".into()));
        }
        let mut out = self.clone();
        for (w, o) in out.bits.iter_mut().zip(other.bits.iter()) {
            *w &= o;
        }
        Ok(out)
    }

    /// Cells set in `self` but not in `other`.
    pub fn difference_cells(&self, other: &BitRaster) -> Result<Vec<(usize, usize)>> {
        if !self.same_geometry(other) {
            return Err(Error::Domain("raster geometry mismatch".into()));
        }
        let mut out = Vec::new();
        for j in 0..self.height {
            for i in 0..self.width {
                if self.get(i, j) && !other.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        Ok(out)
    }

    pub fn is_subset_of(&self, other: &BitRaster) -> Result<bool> {
        Ok(self.difference_cells(other)?.is_empty())
    }

    /// Exact squared Euclidean distance (in cell units) from every cell to
    /// the occupied set; `i64::MAX` where the raster is empty.
    pub fn squared_distance_transform(&self) -> Vec<i64> {
        let (w, h) = (self.width, self.height);
        let inf = i64::MAX / 4;
        // Vertical pass: squared distance to the nearest occupied cell in
        // the same column.
        let mut col = vec![inf; w * h];
        for i in 0..w {
            let mut last: Option<i64> = None;
            for j in 0..h {
                if self.get(i, j) {
                    last = Some(j as i64);
                    col[j * w + i] = 0;
                } else if let Some(l) = last {
                    let d = j as i64 - l;
                    col[j * w + i] = d * d;
                }
            }
            last = None;
            for j in (0..h).rev() {
                if self.get(i, j) {
                    last = Some(j as i64);
                } else if let Some(l) = last {
                    let d = l - j as i64;
                    col[j * w + i] = col[j * w + i].min(d * d);
                }
            }
        }
        // Horizontal pass: lower envelope of parabolas (Felzenszwalb).
        let mut out = vec![inf; w * h];
        let mut v = vec![0usize; w + 1];
        let mut z = vec![0f64; w + 2];
        for j in 0..h {
            let f = |q: usize| col[j * w + q] as f64;
            let mut k = 0usize;
            v[0] = 0;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            for q in 1..w {
                if col[j * w + q] >= inf {
                    continue;
                }
                loop {
                    let p = v[k];
                    let denom = 2.0 * (q as f64 - p as f64);
                    let s = ((f(q) + (q * q) as f64) - (f(p) + (p * p) as f64)) / denom;
                    if s <= z[k] {
                        if k == 0 {
                            v[0] = q;
                            z[0] = f64::NEG_INFINITY;
                            z[1] = f64::INFINITY;
                            break;
                        }
                        k -= 1;
                    } else {
                        k += 1;
                        v[k] = q;
                        z[k] = s;
                        z[k + 1] = f64::INFINITY;
                        break;
                    }
                }
            }
            if col[j * w + v[0]] >= inf && k == 0 {
                // Entire row empty in the column pass.
                let all_empty = (0..w).all(|q| col[j * w + q] >= inf);
                if all_empty {
                    continue;
                }
            }
            let mut kk = 0usize;
            for q in 0..w {
                while z[kk + 1] < q as f64 {
                    kk += 1;
                }
                let p = v[kk] as i64;
                let g = col[j * w + v[kk]];
                if g < inf {
                    let dx = q as i64 - p;
                    out[j * w + q] = dx * dx + g;
                }
            }
        }
        out
    }

    /// Morphological dilation by a closed Euclidean disk of radius `s`
    /// (world units), exact at cell-center resolution: a cell is set iff
    /// some occupied cell center lies within distance `s` of its center.
    /// `s = 0` is the identity.
    pub fn dilate(&self, s: f64) -> Result<BitRaster> {
        if s < 0.0 {
            return Err(Error::Domain("dilation radius must be nonnegative".into()));
        }
        let mut out = BitRaster::new(self.origin, self.spacing, self.width, self.height)?;
        let dt = self.squared_distance_transform();
        let cells = s / self.spacing;
        let limit = cells * cells;
        for j in 0..self.height {
            for i in 0..self.width {
                let d2 = dt[j * self.width + i];
                if (d2 as f64) <= limit {
                    out.set(i, j, true);
                }
            }
        }
        Ok(out)
    }
}
