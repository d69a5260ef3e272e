//! Uniform spatial grids `r_p = h p` with `p in {-P/2, ..., P/2 - 1}^d` and
//! `h = 2 r_M / P`, stored row-major with the first axis slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Points per axis, `P`.
    pub size: usize,
    /// Half width `r_M` of the covered cube `[-r_M, r_M)^d`.
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, size: usize, half_width: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) && dim != 1 {
            return Err(Error::invalid(format!("unsupported dimension {dim}")));
        }
        if size < 2 || size % 2 != 0 {
            return Err(Error::invalid(format!("grid size must be even and at least 2, got {size}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid("grid half width must be positive"));
        }
        Ok(Grid { dim, size, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.size as f64
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.size; self.dim]
    }

    /// Signed multi-index `p` of a flat position.
    pub fn index(&self, flat: usize) -> Vec<i64> {
        let mut p = vec![0i64; self.dim];
        let mut rem = flat;
        let half = (self.size / 2) as i64;
        for k in (0..self.dim).rev() {
            p[k] = (rem % self.size) as i64 - half;
            rem /= self.size;
        }
        p
    }

    /// Flat position of a signed multi-index, if it lies on the grid.
    pub fn flat(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.dim {
            return None;
        }
        let half = (self.size / 2) as i64;
        let mut flat = 0usize;
        for &pk in p {
            let i = pk + half;
            if i < 0 || i >= self.size as i64 {
                return None;
            }
            flat = flat * self.size + i as usize;
        }
        Some(flat)
    }

    /// Physical position `r_p`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.index(flat).into_iter().map(|p| p as f64 * h).collect()
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }
}
