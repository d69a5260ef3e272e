//! Reconstruction: discrete filtered backpropagation (plain and symmetrized),
//! inverse NDFT by conjugate gradients, and the masked-DFT projection `f_Y`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::coverage::IndicatrixField;
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::geometry::ExperimentPath;
use crate::grid::Grid;
use crate::ndft::{cg_normal_solve, ndft_adjoint, CgOptions};
use crate::sampling::{frequency_nodes, FrequencyNode};
use crate::scattering::{fdt_factor, node_set, Phantom, Sinogram};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bp,
    BpSym,
    InverseNdft,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bp => "bp",
            Method::BpSym => "bp-sym",
            Method::InverseNdft => "inverse-ndft",
            Method::Oracle => "oracle",
        }
    }
}

/// Reconstructed potential on the evaluation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub method: Method,
    pub params: BTreeMap<String, serde_json::Value>,
    /// False when an iterative solver stopped before its tolerance.
    pub converged: bool,
    /// `|A f_k - g|` per CG iteration (inverse NDFT only).
    pub residual_history: Vec<f64>,
}

impl Volume {
    fn new(grid: Grid, values: Vec<Complex64>, method: Method) -> Self {
        Volume { grid, values, method, params: BTreeMap::new(), converged: true, residual_history: Vec::new() }
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// Source of the Banach indicatrix at quadrature nodes.
#[derive(Clone, Copy)]
pub enum CardSource<'a> {
    /// Cell of an estimated field containing the node; empty cells fall back
    /// to their neighbours and finally to 1.
    Field(&'a IndicatrixField),
    Constant(u32),
    Function(&'a (dyn Fn(&[f64]) -> u32 + Sync)),
}

impl CardSource<'_> {
    fn card(&self, y: &[f64]) -> Result<u32> {
        let c = match self {
            CardSource::Field(field) => match field.grid.nearest(y) {
                Some(_) => field.lookup_hit(y).max(1),
                None => 0,
            },
            CardSource::Constant(c) => *c,
            CardSource::Function(f) => f(y),
        };
        if c == 0 {
            return Err(Error::domain(format!("indicatrix vanishes at the covered frequency {y:?}")));
        }
        Ok(c)
    }
}

/// Backpropagation weight of one node, without the data and the
/// translation phase:
/// `(2 pi)^{-(1+d)/2} w 2 kappa |det grad T| / (k0^2 i e^{i kappa r_M} Card)`.
pub fn node_weight(node: &FrequencyNode, card: u32, r_m: f64) -> Complex64 {
    let d = node.y.len() as f64;
    let num = (2.0 * PI).powf(-(1.0 + d) / 2.0) * node.weight * 2.0 * node.kappa * node.jac;
    let den = node.k0 * node.k0 * Complex64::i() * Complex64::from_polar(1.0, node.kappa * r_m) * card as f64;
    num / den
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_inputs(sino: &Sinogram, path: &ExperimentPath, grid: &Grid) -> Result<()> {
    if sino.dim() != path.dim() || grid.dim != path.dim() {
        return Err(Error::SizeMismatch { expected: path.dim(), actual: sino.dim() });
    }
    if sino.data.len() != sino.plan.len() {
        return Err(Error::SizeMismatch { expected: sino.plan.len(), actual: sino.data.len() });
    }
    if sino.data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("sinogram contains non-finite values".into()));
    }
    Ok(())
}

fn backpropagate_raw(sino: &Sinogram, path: &ExperimentPath, grid: Grid, card: CardSource) -> Result<Vec<Complex64>> {
    check_inputs(sino, path, &grid)?;
    let (nodes, _) = frequency_nodes(&sino.plan, path)?;
    if nodes.is_empty() {
        return Ok(vec![Complex64::default(); grid.len()]);
    }
    let weighted: Vec<Complex64> = nodes
        .par_iter()
        .map(|node| {
            let c = card.card(&node.y)?;
            let shift = Complex64::from_polar(1.0, dot(&node.y, &node.translation));
            Ok(node_weight(node, c, sino.r_m) * shift * sino.data[node.index])
        })
        .collect::<Result<_>>()?;
    let set = node_set(&nodes, grid.dim, grid.size, grid.spacing())?;
    ndft_adjoint(&weighted, &set)
}

/// Discrete filtered backpropagation `f_Y` on the `P^d` grid of half width
/// `r_M`.
pub fn backpropagate(sino: &Sinogram, path: &ExperimentPath, p: usize, card: CardSource) -> Result<Volume> {
    let grid = Grid::new(path.dim(), p, sino.r_m)?;
    backpropagate_on(sino, path, grid, card)
}

pub fn backpropagate_on(sino: &Sinogram, path: &ExperimentPath, grid: Grid, card: CardSource) -> Result<Volume> {
    let values = backpropagate_raw(sino, path, grid, card)?;
    Ok(Volume::new(grid, values, Method::Bp))
}

/// Symmetrized backpropagation `f_{Y_sym} = 2 Re(...)` with the indicatrix
/// of `T_sym`; exactly real.
pub fn backpropagate_sym(sino: &Sinogram, path: &ExperimentPath, p: usize, card_sym: CardSource) -> Result<Volume> {
    let grid = Grid::new(path.dim(), p, sino.r_m)?;
    backpropagate_sym_on(sino, path, grid, card_sym)
}

pub fn backpropagate_sym_on(sino: &Sinogram, path: &ExperimentPath, grid: Grid, card_sym: CardSource) -> Result<Volume> {
    let values = backpropagate_raw(sino, path, grid, card_sym)?
        .into_iter()
        .map(|v| Complex64::new(2.0 * v.re, 0.0))
        .collect();
    Ok(Volume::new(grid, values, Method::BpSym))
}

/// `F^{-1}(1_Y F f)` on the phantom grid: the discrete Fourier transform of
/// the phantom with every frequency outside the mask removed.
pub fn fy_oracle(phantom: &Phantom, mask: &IndicatrixField) -> Result<Volume> {
    let grid = *phantom.grid();
    if mask.grid.dim != grid.dim {
        return Err(Error::SizeMismatch { expected: grid.dim, actual: mask.grid.dim });
    }
    let p = grid.size;
    let shape = grid.shape();
    let mut data = phantom.values().to_vec();
    fft_nd(&mut data, &shape, FftDirection::Forward);
    // FFT bin k holds frequency 2 pi q / (P h) with q = k or k - P.
    let step = 2.0 * PI / (p as f64 * grid.spacing());
    let mut y = vec![0.0; grid.dim];
    for (flat, v) in data.iter_mut().enumerate() {
        let mut rem = flat;
        for k in (0..grid.dim).rev() {
            let bin = rem % p;
            rem /= p;
            let q = if bin < p / 2 { bin as f64 } else { bin as f64 - p as f64 };
            y[k] = q * step;
        }
        if mask.lookup(&y) == 0 {
            *v = Complex64::default();
        }
    }
    fft_nd(&mut data, &shape, FftDirection::Inverse);
    let scale = 1.0 / grid.len() as f64;
    for v in &mut data {
        *v *= scale;
    }
    Ok(Volume::new(grid, data, Method::Oracle))
}

/// Least squares inversion of the discrete forward model by CG on the
/// normal equations.
pub fn inverse_ndft_reconstruct(
    sino: &Sinogram,
    path: &ExperimentPath,
    p: usize,
    options: CgOptions,
) -> Result<Volume> {
    let grid = Grid::new(path.dim(), p, sino.r_m)?;
    check_inputs(sino, path, &grid)?;
    let (nodes, _) = frequency_nodes(&sino.plan, path)?;
    if nodes.is_empty() {
        return Err(Error::domain("no quadrature node survives the ring cutoff"));
    }
    let d = grid.dim as f64;
    let norm = (2.0 * PI).powf(d / 2.0) / grid.cell_volume();
    let g: Vec<Complex64> = nodes
        .iter()
        .map(|node| {
            let shift = Complex64::from_polar(1.0, dot(&node.translation, &node.y));
            norm * sino.data[node.index] * shift / fdt_factor(node.kappa, node.k0, sino.r_m)
        })
        .collect();
    let set = node_set(&nodes, grid.dim, grid.size, -grid.spacing())?;
    let outcome = cg_normal_solve(&set, &g, options)?;
    let mut vol = Volume::new(grid, outcome.solution, Method::InverseNdft)
        .with_param("cg_iterations", outcome.iterations)
        .with_param("cg_tol", options.tol);
    vol.converged = outcome.converged;
    vol.residual_history = outcome.residual_history;
    Ok(vol)
}
