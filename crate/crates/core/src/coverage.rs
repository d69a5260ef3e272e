//! Fourier coverage and the Banach indicatrix `Card(T^{-1}(y))`, estimated by
//! counting sign changes of `|y + k0 R s| - k0` along the path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ExperimentPath;

/// Cell-centred grid on `[-extent, extent]^d` with `q` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub dim: usize,
    pub q: usize,
    pub extent: f64,
}

impl FieldGrid {
    pub fn new(dim: usize, q: usize, extent: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::invalid(format!("unsupported dimension {dim}")));
        }
        if q == 0 || !(extent > 0.0) {
            return Err(Error::invalid("frequency grid needs q >= 1 and a positive extent"));
        }
        Ok(FieldGrid { dim, q, extent })
    }

    /// Grid just covering the ball `|y| <= 2 k_max` of a path.
    pub fn for_path(path: &ExperimentPath, q: usize) -> Result<Self> {
        FieldGrid::new(path.dim(), q, 2.0 * path.k_max())
    }

    pub fn len(&self) -> usize {
        self.q.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell(&self) -> f64 {
        2.0 * self.extent / self.q as f64
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        let mut rem = flat;
        let h = self.cell();
        for k in (0..self.dim).rev() {
            p[k] = -self.extent + ((rem % self.q) as f64 + 0.5) * h;
            rem /= self.q;
        }
        p
    }

    /// Cell containing `y`, if any.
    pub fn nearest(&self, y: &[f64]) -> Option<usize> {
        if y.len() != self.dim {
            return None;
        }
        let h = self.cell();
        let mut flat = 0;
        for &v in y {
            let i = ((v + self.extent) / h).floor();
            if !(i >= 0.0 && i < self.q as f64) {
                return None;
            }
            flat = flat * self.q + i as usize;
        }
        Some(flat)
    }

    /// Flat index of the point reflection `-y` of a node.
    pub fn reflected(&self, flat: usize) -> usize {
        let mut out = 0;
        let mut stride = self.len();
        let mut rem = flat;
        for _ in 0..self.dim {
            stride /= self.q;
            let i = rem / stride;
            rem %= stride;
            out = out * self.q + (self.q - 1 - i);
        }
        out
    }
}

/// Integer field on a [`FieldGrid`]: indicatrix estimates or a 0/1 mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatrixField {
    pub grid: FieldGrid,
    pub sym: bool,
    pub values: Vec<u32>,
}

impl IndicatrixField {
    /// Value of the cell containing `y`; zero outside the grid.
    pub fn lookup(&self, y: &[f64]) -> u32 {
        self.grid.nearest(y).map_or(0, |i| self.values[i])
    }

    /// Like [`lookup`](Self::lookup), but an empty cell defers to the
    /// closest nonempty cell among its immediate neighbours. Quadrature
    /// nodes on the rim of the coverage often land in cells the estimator
    /// left empty.
    pub fn lookup_hit(&self, y: &[f64]) -> u32 {
        let v = self.lookup(y);
        if v > 0 || self.grid.nearest(y).is_none() {
            return v;
        }
        let h = self.grid.cell();
        let d = self.grid.dim;
        let mut best = (f64::INFINITY, 0);
        let mut probe = vec![0.0; d];
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            for k in 0..d {
                probe[k] = y[k] + h * ((c % 3) as f64 - 1.0);
                c /= 3;
            }
            if let Some(i) = self.grid.nearest(&probe) {
                if self.values[i] > 0 {
                    let dist: f64 = self.grid.point(i).iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                    if dist < best.0 {
                        best = (dist, self.values[i]);
                    }
                }
            }
        }
        best.1
    }

    pub fn mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v >= 1).collect()
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0).count()
    }
}

/// `(|y + k0 R s| - k0, y . R e_d > -k0 s . e_d)` at time `t`.
pub fn hit_function(y: &[f64], t: f64, path: &ExperimentPath) -> Result<(f64, bool)> {
    let frame = path.frame(t)?;
    let d = frame.dim();
    if y.len() != d {
        return Err(Error::SizeMismatch { expected: d, actual: y.len() });
    }
    let c = frame.sphere_offset();
    let normal = frame.plane_normal();
    let signed = y.iter().zip(c.iter()).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt() - frame.k0;
    let along: f64 = y.iter().zip(normal.iter()).map(|(a, b)| a * b).sum();
    Ok((signed, along > -frame.k0 * frame.incidence[d - 1]))
}

/// Sphere data of the path at uniformly spaced times on each piece,
/// endpoints included.
struct HitTable {
    dim: usize,
    /// Per piece: `(k0 R s, k0, R e_d, -k0 s_d)` per sample.
    pieces: Vec<Vec<(Vec<f64>, f64, Vec<f64>, f64)>>,
}

impl HitTable {
    fn new(path: &ExperimentPath, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("indicatrix estimation needs N >= 2"));
        }
        let d = path.dim();
        let pieces = path
            .pieces()
            .iter()
            .map(|piece| {
                (0..=n)
                    .map(|k| {
                        let t = piece.start + (piece.end - piece.start) * k as f64 / n as f64;
                        let m = &*piece.model;
                        let r = m.rotation(t);
                        let s = m.incidence(t);
                        let k0 = m.wavenumber(t);
                        let c = (k0 * (&r * &s)).as_slice().to_vec();
                        let normal = r.column(d - 1).iter().copied().collect();
                        (c, k0, normal, -k0 * s[d - 1])
                    })
                    .collect()
            })
            .collect();
        Ok(HitTable { dim: d, pieces })
    }

    fn sample(&self, y: &[f64], entry: &(Vec<f64>, f64, Vec<f64>, f64)) -> (f64, bool) {
        let (c, k0, normal, threshold) = entry;
        let mut r2 = 0.0;
        let mut along = 0.0;
        for k in 0..self.dim {
            r2 += (y[k] + c[k]) * (y[k] + c[k]);
            along += y[k] * normal[k];
        }
        (r2.sqrt() - k0, along > *threshold)
    }

    /// Sign-change count at `y`, rounded from half steps.
    fn count(&self, y: &[f64]) -> u32 {
        let mut half_steps = 0u32;
        for samples in &self.pieces {
            let mut prev = 0i32;
            for (k, entry) in samples.iter().enumerate() {
                let (signed, visible) = self.sample(y, entry);
                let sign = if signed > 0.0 {
                    1
                } else if signed < 0.0 {
                    -1
                } else {
                    0
                };
                if k > 0 && visible {
                    half_steps += (sign - prev).unsigned_abs();
                }
                prev = sign;
            }
        }
        half_steps.div_ceil(2)
    }

    /// Whether `y` lies within `tol` of a visible hemisphere at any sample.
    fn near_shell(&self, y: &[f64], tol: f64) -> bool {
        self.pieces.iter().flatten().any(|entry| {
            let (signed, visible) = self.sample(y, entry);
            visible && signed.abs() <= tol
        })
    }
}

fn negated(y: &[f64]) -> Vec<f64> {
    y.iter().map(|v| -v).collect()
}

/// Estimate of `Card(T^{-1}(y))` from `N` uniform steps per smooth piece.
/// With `sym` the count for `T_sym` is returned, i.e. the counts at `y` and
/// `-y` added.
pub fn indicatrix_estimate(y: &[f64], path: &ExperimentPath, n: usize, sym: bool) -> Result<u32> {
    if y.len() != path.dim() {
        return Err(Error::SizeMismatch { expected: path.dim(), actual: y.len() });
    }
    let table = HitTable::new(path, n)?;
    let mut v = table.count(y);
    if sym {
        v += table.count(&negated(y));
    }
    Ok(v)
}

/// Indicatrix estimates at every node of `grid`.
pub fn indicatrix_field(path: &ExperimentPath, grid: FieldGrid, n: usize, sym: bool) -> Result<IndicatrixField> {
    if grid.dim != path.dim() {
        return Err(Error::SizeMismatch { expected: path.dim(), actual: grid.dim });
    }
    let table = HitTable::new(path, n)?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let y = grid.point(flat);
            let mut v = table.count(&y);
            if sym {
                v += table.count(&negated(&y));
            }
            v
        })
        .collect();
    Ok(IndicatrixField { grid, sym, values })
}

/// 0/1 raster of the coverage: nodes with a positive indicatrix estimate,
/// plus nodes within half a cell of a sampled hemisphere so that paths
/// without sign changes still rasterize their shells. With `sym` the mask is
/// united with its point reflection.
pub fn coverage_mask(path: &ExperimentPath, grid: FieldGrid, sym: bool, n: usize) -> Result<IndicatrixField> {
    if grid.dim != path.dim() {
        return Err(Error::SizeMismatch { expected: path.dim(), actual: grid.dim });
    }
    if grid.extent < 2.0 * path.k_max() {
        return Err(Error::invalid("frequency grid must cover the ball of radius 2 k_max"));
    }
    let table = HitTable::new(path, n)?;
    let tol = 0.5 * grid.cell();
    let mut values: Vec<u32> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let y = grid.point(flat);
            u32::from(table.count(&y) > 0 || table.near_shell(&y, tol))
        })
        .collect();
    if sym {
        let reflected: Vec<u32> = (0..grid.len()).map(|i| values[grid.reflected(i)]).collect();
        for (v, r) in values.iter_mut().zip(reflected) {
            *v = (*v).max(r);
        }
    }
    Ok(IndicatrixField { grid, sym, values })
}

fn inside_disk(y: &[f64], centre: [f64; 2], radius: f64) -> bool {
    (y[0] - centre[0]).powi(2) + (y[1] - centre[1]).powi(2) < radius * radius
}

/// Indicatrix of the two-part angle scan: the number of the disks
/// `B_{k0}(+-k0 e_1)`, `B_{k0}(+-k0 e_2)` containing `y`.
pub fn indicatrix_analytic_anglerot(y: &[f64], k0: f64) -> u32 {
    [[k0, 0.0], [-k0, 0.0], [0.0, k0], [0.0, -k0]]
        .iter()
        .filter(|c| inside_disk(y, **c, k0))
        .count() as u32
}

/// Indicatrix of the dual-axis 3D rotation: the number of the solid horn
/// tori about the first and second axes containing `y`.
pub fn indicatrix_analytic_dual_axis(y: &[f64], k0: f64) -> u32 {
    let torus = |axial: f64, a: f64, b: f64| {
        let radial = (a * a + b * b).sqrt();
        (radial - k0).powi(2) + axial * axial < k0 * k0
    };
    u32::from(torus(y[0], y[1], y[2])) + u32::from(torus(y[1], y[0], y[2]))
}
