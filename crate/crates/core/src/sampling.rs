//! Quadrature nodes `z_{m,n} = (k0(t_n) x_m, t_n)` in the measurement domain
//! and their images `y = T(z)` in Fourier space.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ExperimentPath, RING_CUTOFF};

/// Layout of the normalized transverse frequencies `x_m` in `[-1, 1]^{d-1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XGrid {
    /// `(2/M) {-M/2, ..., M/2 - 1}` with weight `2/M`.
    #[default]
    Uniform,
    /// `cos(pi m / M)`, `m = 0..M`, weighted by the cell length
    /// `(x_{m-1} - x_{m+1}) / 2`.
    Chebyshev,
}

impl XGrid {
    /// One-dimensional nodes and weights.
    pub fn nodes_1d(self, m: usize) -> (Vec<f64>, Vec<f64>) {
        let mf = m as f64;
        match self {
            XGrid::Uniform => {
                let nodes = (0..m).map(|i| 2.0 * (i as f64 - (m / 2) as f64) / mf).collect();
                (nodes, vec![2.0 / mf; m])
            }
            XGrid::Chebyshev => {
                let nodes = (0..m).map(|i| (PI * i as f64 / mf).cos()).collect();
                let weights = (0..m).map(|i| (PI * i as f64 / mf).sin() * (PI / mf).sin()).collect();
                (nodes, weights)
            }
        }
    }
}

/// Time nodes: midpoints of `n_i` equal cells on every smooth piece, with
/// `n_i` proportional to the piece length. Returns nodes and cell lengths.
pub fn time_nodes(path: &ExperimentPath, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let pieces = path.pieces();
    if n < pieces.len() {
        return Err(Error::invalid(format!(
            "need at least one time sample per smooth piece ({} pieces, N = {n})",
            pieces.len()
        )));
    }
    let horizon = path.horizon();
    // Largest remainder apportionment with one node per piece guaranteed.
    let spare = n - pieces.len();
    let shares: Vec<f64> = pieces.iter().map(|p| spare as f64 * (p.end - p.start) / horizon).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| 1 + s.floor() as usize).collect();
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())));
    let mut missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }
    let mut times = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (piece, &c) in pieces.iter().zip(&counts) {
        let dt = (piece.end - piece.start) / c as f64;
        for k in 0..c {
            times.push(piece.start + (k as f64 + 0.5) * dt);
            weights.push(dt);
        }
    }
    Ok((times, weights))
}

/// Normalized transverse nodes and time nodes of an acquisition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub dim: usize,
    /// Samples per transverse axis.
    pub m: usize,
    pub x_grid: XGrid,
    /// `M^{d-1}` normalized nodes, first axis slowest.
    pub nodes_x: Vec<Vec<f64>>,
    pub x_weights: Vec<f64>,
    pub times: Vec<f64>,
    pub time_weights: Vec<f64>,
}

impl SamplingPlan {
    pub fn new(path: &ExperimentPath, m: usize, n: usize, x_grid: XGrid) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("need at least two transverse samples"));
        }
        let dim = path.dim();
        let (nodes_1d, weights_1d) = x_grid.nodes_1d(m);
        let count = m.pow(dim as u32 - 1);
        let mut nodes_x = Vec::with_capacity(count);
        let mut x_weights = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            let mut x = vec![0.0; dim - 1];
            let mut w = 1.0;
            for k in (0..dim - 1).rev() {
                x[k] = nodes_1d[rem % m];
                w *= weights_1d[rem % m];
                rem /= m;
            }
            nodes_x.push(x);
            x_weights.push(w);
        }
        let (times, time_weights) = time_nodes(path, n)?;
        Ok(SamplingPlan { dim, m, x_grid, nodes_x, x_weights, times, time_weights })
    }

    pub fn n_x(&self) -> usize {
        self.nodes_x.len()
    }

    pub fn n_t(&self) -> usize {
        self.times.len()
    }

    pub fn len(&self) -> usize {
        self.n_x() * self.n_t()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A quadrature node and its image in Fourier space.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyNode {
    /// Flat sinogram position `n * n_x + m`.
    pub index: usize,
    pub t: f64,
    pub k0: f64,
    /// Transverse frequency `k0(t) x_m`.
    pub x: Vec<f64>,
    /// `T(x, t)`.
    pub y: Vec<f64>,
    pub kappa: f64,
    /// `|det grad T|`.
    pub jac: f64,
    /// Quadrature weight in `(x, t)`: `k0^{d-1} w_x w_t`.
    pub weight: f64,
    pub translation: Vec<f64>,
}

/// Evaluate every node of the plan. Nodes too close to the ring
/// `|x| = k0` are dropped; the returned mask flags the kept ones.
pub fn frequency_nodes(plan: &SamplingPlan, path: &ExperimentPath) -> Result<(Vec<FrequencyNode>, Vec<bool>)> {
    if plan.dim != path.dim() {
        return Err(Error::SizeMismatch { expected: path.dim(), actual: plan.dim });
    }
    let nx = plan.n_x();
    let per_time: Vec<Vec<Option<FrequencyNode>>> = plan
        .times
        .par_iter()
        .enumerate()
        .map(|(n, &t)| -> Result<Vec<Option<FrequencyNode>>> {
            let frame = path.frame(t)?;
            let scale = frame.k0.powi(plan.dim as i32 - 1) * plan.time_weights[n];
            plan.nodes_x
                .iter()
                .enumerate()
                .map(|(m, xn)| {
                    let r2: f64 = xn.iter().map(|v| v * v).sum();
                    if r2.sqrt() >= 1.0 - RING_CUTOFF {
                        return Ok(None);
                    }
                    let x: Vec<f64> = xn.iter().map(|v| frame.k0 * v).collect();
                    let y = frame.transform(&x)?;
                    Ok(Some(FrequencyNode {
                        index: n * nx + m,
                        t,
                        k0: frame.k0,
                        kappa: frame.k0 * (1.0 - r2).sqrt(),
                        jac: frame.jacobian_det(&x)?.abs(),
                        weight: scale * plan.x_weights[m],
                        x,
                        y: y.as_slice().to_vec(),
                        translation: frame.translation.as_slice().to_vec(),
                    }))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut nodes = Vec::with_capacity(plan.len());
    let mut valid = vec![false; plan.len()];
    for node in per_time.into_iter().flatten().flatten() {
        valid[node.index] = true;
        nodes.push(node);
    }
    Ok((nodes, valid))
}
