use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::fields::green_function;
use super::phantom::Phantom;
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::geometry::{ExperimentPath, Frame};
use crate::ndft::{ndft_forward, NodeSet};
use crate::sampling::{frequency_nodes, FrequencyNode, SamplingPlan, XGrid};

/// Transverse Fourier data `F~u_{t_n}(k0(t_n) x_m, r_M)`, stored `n`-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    pub plan: SamplingPlan,
    pub r_m: f64,
    pub data: Vec<Complex64>,
    /// False for nodes dropped next to the ring `|x| = k0`.
    pub valid: Vec<bool>,
}

impl Sinogram {
    pub fn zeros(plan: SamplingPlan, r_m: f64) -> Self {
        let n = plan.len();
        Sinogram { plan, r_m, data: vec![Complex64::default(); n], valid: vec![true; n] }
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.data[n * self.plan.n_x() + m]
    }

    pub fn dim(&self) -> usize {
        self.plan.dim
    }
}

/// Object support moved into the laboratory frame: for the motion
/// `Psi_t(r) = R r - d` the support ball is centred at `R^T d`.
fn moved_centre(frame: &Frame) -> Vec<f64> {
    (frame.rotation.transpose() * &frame.translation).as_slice().to_vec()
}

fn check_plane(phantom: &Phantom, path: &ExperimentPath, times: &[f64], r_m: f64) -> Result<()> {
    let d = phantom.dim();
    for &t in times {
        let top = moved_centre(&path.frame(t)?)[d - 1] + phantom.support_radius();
        if top >= r_m {
            return Err(Error::domain(format!(
                "measurement plane r_M = {r_m} meets the object support at t = {t}"
            )));
        }
    }
    Ok(())
}

/// Scattered field at `detectors` by midpoint quadrature of the Born
/// convolution `u_t = G * (k0^2 (f o Psi_t) u_inc)`. Costs one pass over the
/// support per detector point.
pub fn born_forward_direct(
    phantom: &Phantom,
    path: &ExperimentPath,
    t: f64,
    detectors: &[Vec<f64>],
) -> Result<Vec<Complex64>> {
    let d = phantom.dim();
    if path.dim() != d {
        return Err(Error::SizeMismatch { expected: d, actual: path.dim() });
    }
    let frame = path.frame(t)?;
    let centre = moved_centre(&frame);
    let top = centre[d - 1] + phantom.support_radius();
    for r in detectors {
        if r.len() != d {
            return Err(Error::SizeMismatch { expected: d, actual: r.len() });
        }
        if r[d - 1] <= top {
            return Err(Error::domain(format!("detector point {r:?} is not above the object support")));
        }
    }
    let k0 = frame.k0;
    let rt = frame.rotation.transpose();
    let grid = phantom.grid();
    let scale = grid.cell_volume() * k0 * k0;
    // Voxel q sits at R^T (q + d) in the laboratory frame.
    let sources: Vec<(Vec<f64>, Complex64)> = phantom
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != Complex64::default())
        .map(|(flat, v)| {
            let q = nalgebra::DVector::from_vec(grid.point(flat)) + &frame.translation;
            let r = &rt * q;
            let inc = Complex64::from_polar(1.0, k0 * r.dot(&frame.incidence));
            (r.as_slice().to_vec(), scale * v * inc)
        })
        .collect();
    detectors
        .par_iter()
        .map(|det| {
            let mut sum = Complex64::default();
            let mut diff = vec![0.0; d];
            for (r, w) in &sources {
                for k in 0..d {
                    diff[k] = det[k] - r[k];
                }
                sum += w * green_function(&diff, k0)?;
            }
            Ok(sum)
        })
        .collect()
}

/// `sqrt(pi/2) i e^{i kappa r_M} k0^2 / kappa`, the factor relating the
/// transverse field spectrum to `F f` on the coverage hemisphere.
pub(crate) fn fdt_factor(kappa: f64, k0: f64, r_m: f64) -> Complex64 {
    (PI / 2.0).sqrt() * Complex64::i() * Complex64::from_polar(1.0, kappa * r_m) * k0 * k0 / kappa
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// NDFT node set `-h T(z)` for the phantom grid spacing `h`.
pub(crate) fn node_set(nodes: &[FrequencyNode], dim: usize, size: usize, scale: f64) -> Result<NodeSet> {
    let pts = nodes.iter().flat_map(|n| n.y.iter().map(move |v| scale * v)).collect();
    NodeSet::new(dim, size, pts)
}

/// Discrete forward model: the FDT with `F f` replaced by the midpoint rule
/// on the phantom grid, evaluated as one NDFT over all nodes.
pub fn forward_ndft(
    phantom: &Phantom,
    path: &ExperimentPath,
    m: usize,
    n: usize,
    r_m: f64,
    x_grid: XGrid,
) -> Result<Sinogram> {
    let plan = SamplingPlan::new(path, m, n, x_grid)?;
    forward_ndft_plan(phantom, path, plan, r_m)
}

pub fn forward_ndft_plan(phantom: &Phantom, path: &ExperimentPath, plan: SamplingPlan, r_m: f64) -> Result<Sinogram> {
    let d = phantom.dim();
    if path.dim() != d {
        return Err(Error::SizeMismatch { expected: d, actual: path.dim() });
    }
    check_plane(phantom, path, &plan.times, r_m)?;
    let (nodes, valid) = frequency_nodes(&plan, path)?;
    let mut sino = Sinogram::zeros(plan, r_m);
    sino.valid = valid;
    if nodes.is_empty() {
        return Ok(sino);
    }
    let grid = phantom.grid();
    let h = grid.spacing();
    let set = node_set(&nodes, d, grid.size, -h)?;
    let sums = ndft_forward(phantom.values(), &set)?;
    let norm = (2.0 * PI).powf(-(d as f64) / 2.0) * grid.cell_volume();
    for (node, sum) in nodes.iter().zip(sums) {
        let shift = Complex64::from_polar(1.0, -dot(&node.translation, &node.y));
        sino.data[node.index] = norm * fdt_factor(node.kappa, node.k0, r_m) * sum * shift;
    }
    Ok(sino)
}

/// A square patch of the measurement plane `r_d = r_M` sampled on a uniform
/// grid, with a cosine taper towards its edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorPlane {
    pub dim: usize,
    pub offset: f64,
    pub half_length: f64,
    pub spacing: f64,
    /// Fraction of the half length covered by the taper at each end.
    #[serde(default)]
    pub taper: f64,
}

impl DetectorPlane {
    pub fn samples_per_axis(&self) -> usize {
        (2.0 * self.half_length / self.spacing).round() as usize
    }

    fn coordinate(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing
    }

    fn weight_1d(&self, j: usize) -> f64 {
        let edge = self.half_length - self.coordinate(j).abs();
        let band = self.taper * self.half_length;
        if band <= 0.0 || edge >= band {
            1.0
        } else {
            0.5 - 0.5 * (PI * edge.max(0.0) / band).cos()
        }
    }

    fn multi_index(&self, flat: usize) -> Vec<usize> {
        let n = self.samples_per_axis();
        let mut idx = vec![0; self.dim - 1];
        let mut rem = flat;
        for k in (0..self.dim - 1).rev() {
            idx[k] = rem % n;
            rem /= n;
        }
        idx
    }

    /// Detector positions, first transverse axis slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let count = self.samples_per_axis().pow(self.dim as u32 - 1);
        (0..count)
            .map(|flat| {
                let mut p: Vec<f64> = self.multi_index(flat).into_iter().map(|j| self.coordinate(j)).collect();
                p.push(self.offset);
                p
            })
            .collect()
    }

    fn window(&self, flat: usize) -> f64 {
        self.multi_index(flat).into_iter().map(|j| self.weight_1d(j)).product()
    }

    fn check(&self, samples: &[Complex64]) -> Result<()> {
        let count = self.samples_per_axis().pow(self.dim as u32 - 1);
        if samples.len() != count {
            return Err(Error::SizeMismatch { expected: count, actual: samples.len() });
        }
        Ok(())
    }

    fn norm(&self) -> f64 {
        let q = (self.dim - 1) as i32;
        (2.0 * PI).powf(-(q as f64) / 2.0) * self.spacing.powi(q)
    }

    /// Riemann sum for the transverse Fourier transform at arbitrary `xs`.
    pub fn transverse_spectrum(&self, samples: &[Complex64], xs: &[Vec<f64>]) -> Result<Vec<Complex64>> {
        self.check(samples)?;
        let points = self.points();
        let weighted: Vec<Complex64> = samples.iter().enumerate().map(|(j, u)| u * self.window(j)).collect();
        let norm = self.norm();
        Ok(xs
            .par_iter()
            .map(|x| {
                let s: Complex64 = points
                    .iter()
                    .zip(&weighted)
                    .map(|(p, u)| u * Complex64::from_polar(1.0, -dot(x, p)))
                    .sum();
                norm * s
            })
            .collect())
    }

    /// The same Riemann sum on the FFT frequency grid `2 pi k / (n spacing)`.
    pub fn transverse_fft(&self, samples: &[Complex64]) -> Result<(Vec<Vec<f64>>, Vec<Complex64>)> {
        self.check(samples)?;
        let n = self.samples_per_axis();
        let q = self.dim - 1;
        let mut data: Vec<Complex64> = samples.iter().enumerate().map(|(j, u)| u * self.window(j)).collect();
        fft_nd(&mut data, &vec![n; q], FftDirection::Forward);
        let freq = |k: usize| {
            let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * kk / (n as f64 * self.spacing)
        };
        let norm = self.norm();
        let mut xs = Vec::with_capacity(data.len());
        for (flat, v) in data.iter_mut().enumerate() {
            let x: Vec<f64> = self.multi_index(flat).into_iter().map(freq).collect();
            // Samples start at -half_length, not at the origin.
            let phase: f64 = x.iter().map(|xi| xi * self.half_length).sum();
            *v *= norm * Complex64::from_polar(1.0, phase);
            xs.push(x);
        }
        Ok((xs, data))
    }
}

/// Sinogram from [`born_forward_direct`] followed by a direct transverse
/// Fourier transform over `plane`. Slow; meant as an oracle for small grids.
pub fn forward_direct_sinogram(
    phantom: &Phantom,
    path: &ExperimentPath,
    plan: SamplingPlan,
    plane: &DetectorPlane,
) -> Result<Sinogram> {
    if plane.dim != phantom.dim() {
        return Err(Error::SizeMismatch { expected: phantom.dim(), actual: plane.dim });
    }
    check_plane(phantom, path, &plan.times, plane.offset)?;
    let (nodes, valid) = frequency_nodes(&plan, path)?;
    let mut sino = Sinogram::zeros(plan, plane.offset);
    sino.valid = valid;
    let detectors = plane.points();
    for (n, &t) in sino.plan.times.clone().iter().enumerate() {
        let at_t: Vec<&FrequencyNode> = nodes.iter().filter(|node| node.index / sino.plan.n_x() == n).collect();
        if at_t.is_empty() {
            continue;
        }
        let u = born_forward_direct(phantom, path, t, &detectors)?;
        let xs: Vec<Vec<f64>> = at_t.iter().map(|node| node.x.clone()).collect();
        for (node, v) in at_t.iter().zip(plane.transverse_spectrum(&u, &xs)?) {
            sino.data[node.index] = v;
        }
    }
    Ok(sino)
}
