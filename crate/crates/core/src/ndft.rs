//! Nonuniform discrete Fourier transforms on the index grid
//! `I_P^d = {-P/2, ..., P/2 - 1}^d` and a conjugate gradient solver for the
//! associated least squares problem.
//!
//! `A f` and `A* a` both use the kernel `e^{+i y.p}`; the true Hermitian
//! adjoint `A^H` uses `e^{-i y.p}`. Node coordinates are dimensionless.
//!
//! Every transform here is a direct summation. Outputs do not depend on the
//! rayon thread count: each forward output is a single sequential sum, and the
//! adjoint reduces a fixed number of node blocks in a fixed order.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Number of node blocks reduced by the adjoint transforms.
const ADJOINT_BLOCKS: usize = 32;

/// Frequency nodes `y_j` for the transforms on a `P^d` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    dim: usize,
    size: usize,
    points: Vec<f64>,
}

impl NodeSet {
    /// `points` holds `J * dim` coordinates, node-major.
    pub fn new(dim: usize, size: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || size == 0 || size % 2 != 0 {
            return Err(Error::invalid(format!(
                "grid size must be positive and even, dimension positive (P = {size}, d = {dim})"
            )));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(Error::invalid("node coordinates must form at least one full point"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("node coordinates must be finite"));
        }
        Ok(NodeSet { dim, size, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid size `P` per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of grid values `P^d`.
    pub fn grid_len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    /// `phases[k * P + i] = e^{i sign y_k (i - P/2)}`.
    fn phases(&self, j: usize, sign: f64, phases: &mut [Complex64]) {
        let p = self.size;
        let half = (p / 2) as f64;
        for (k, &y) in self.point(j).iter().enumerate() {
            for i in 0..p {
                phases[k * p + i] = Complex64::from_polar(1.0, sign * y * (i as f64 - half));
            }
        }
    }
}

/// Contract a row-major `P^d` array against per-axis phase vectors.
fn contract(f: &[Complex64], phases: &[Complex64], p: usize, dim: usize) -> Complex64 {
    match dim {
        1 => f.iter().zip(phases).map(|(a, b)| a * b).sum(),
        _ => {
            // Contract the last axis, then recurse on the leading ones.
            let outer = f.len() / p;
            let last = &phases[(dim - 1) * p..dim * p];
            let mut reduced = Vec::with_capacity(outer);
            for row in f.chunks_exact(p) {
                reduced.push(row.iter().zip(last).map(|(a, b)| a * b).sum::<Complex64>());
            }
            contract(&reduced, phases, p, dim - 1)
        }
    }
}

/// Add `c * (phase_0 outer ... outer phase_{d-1})` into a row-major array.
fn spread(out: &mut [Complex64], c: Complex64, phases: &[Complex64], p: usize, dim: usize) {
    if dim == 1 {
        for (o, ph) in out.iter_mut().zip(&phases[..p]) {
            *o += c * ph;
        }
        return;
    }
    let stride = out.len() / p;
    for (i, block) in out.chunks_exact_mut(stride).enumerate() {
        spread(block, c * phases[i], &phases[p..], p, dim - 1);
    }
}

fn check_grid(f: &[Complex64], nodes: &NodeSet) -> Result<()> {
    if f.len() != nodes.grid_len() {
        return Err(Error::SizeMismatch { expected: nodes.grid_len(), actual: f.len() });
    }
    Ok(())
}

fn check_nodes(a: &[Complex64], nodes: &NodeSet) -> Result<()> {
    if a.len() != nodes.len() {
        return Err(Error::SizeMismatch { expected: nodes.len(), actual: a.len() });
    }
    Ok(())
}

/// `(A f)_j = sum_p f_p e^{i y_j . p}`.
pub fn ndft_forward(f: &[Complex64], nodes: &NodeSet) -> Result<Vec<Complex64>> {
    check_grid(f, nodes)?;
    let (p, dim) = (nodes.size, nodes.dim);
    Ok((0..nodes.len())
        .into_par_iter()
        .map_init(
            || vec![Complex64::default(); p * dim],
            |phases, j| {
                nodes.phases(j, 1.0, phases);
                contract(f, phases, p, dim)
            },
        )
        .collect())
}

fn adjoint_with_sign(a: &[Complex64], nodes: &NodeSet, sign: f64) -> Result<Vec<Complex64>> {
    check_nodes(a, nodes)?;
    let (p, dim, n) = (nodes.size, nodes.dim, nodes.grid_len());
    let block = nodes.len().div_ceil(ADJOINT_BLOCKS).max(1);
    let partials: Vec<Vec<Complex64>> = (0..nodes.len())
        .step_by(block)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let mut out = vec![Complex64::default(); n];
            let mut phases = vec![Complex64::default(); p * dim];
            for j in start..(start + block).min(nodes.len()) {
                if a[j] == Complex64::default() {
                    continue;
                }
                nodes.phases(j, sign, &mut phases);
                spread(&mut out, a[j], &phases, p, dim);
            }
            out
        })
        .collect();
    let mut total = vec![Complex64::default(); n];
    for part in &partials {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    Ok(total)
}

/// `(A* a)_p = sum_j a_j e^{i y_j . p}`, the backpropagation-side operator.
pub fn ndft_adjoint(a: &[Complex64], nodes: &NodeSet) -> Result<Vec<Complex64>> {
    adjoint_with_sign(a, nodes, 1.0)
}

/// `(A^H a)_p = sum_j a_j e^{-i y_j . p}`, the adjoint of [`ndft_forward`]
/// under the standard inner products.
pub fn ndft_adjoint_hermitian(a: &[Complex64], nodes: &NodeSet) -> Result<Vec<Complex64>> {
    adjoint_with_sign(a, nodes, -1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    pub max_iter: usize,
    /// Stop once `|A^H (A f - g)| / |A^H g| <= tol`.
    pub tol: f64,
    /// Restrict the unknown to real vectors.
    pub real_constraint: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { max_iter: 500, tol: 1e-6, real_constraint: false }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    /// Iterate with the smallest data residual.
    pub solution: Vec<Complex64>,
    /// `|A f_k - g|` for `k = 0, 1, ...`.
    pub residual_history: Vec<f64>,
    /// Relative normal-equation residual per iteration.
    pub normal_residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

fn project_real(v: &mut [Complex64]) {
    for c in v {
        c.im = 0.0;
    }
}

/// Least squares solution of `A f = g` by conjugate gradients on the normal
/// equations (CGLS). With `real_constraint` the iteration runs on the real
/// normal equations `Re(A^H A) f = Re(A^H g)` and every iterate is real.
pub fn cg_normal_solve(nodes: &NodeSet, g: &[Complex64], options: CgOptions) -> Result<CgOutcome> {
    check_nodes(g, nodes)?;
    if g.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numerical("data vector contains non-finite values".into()));
    }
    if !(options.tol > 0.0) {
        return Err(Error::invalid("CG tolerance must be positive"));
    }
    let n = nodes.grid_len();
    let mut x = vec![Complex64::default(); n];
    let mut r = g.to_vec();
    let mut z = ndft_adjoint_hermitian(&r, nodes)?;
    if options.real_constraint {
        project_real(&mut z);
    }
    let mut gamma = norm_sqr(&z);
    let reference = gamma.sqrt();
    let mut residual_history = vec![norm_sqr(&r).sqrt()];
    let mut normal_residual_history = vec![1.0];
    if reference == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            residual_history,
            normal_residual_history: vec![0.0],
            iterations: 0,
            converged: true,
        });
    }
    let mut p = z.clone();
    let mut best = (residual_history[0], x.clone());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let q = ndft_forward(&p, nodes)?;
        let qq = norm_sqr(&q);
        if qq == 0.0 || !qq.is_finite() {
            break;
        }
        let alpha = gamma / qq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        if options.real_constraint {
            project_real(&mut x);
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        z = ndft_adjoint_hermitian(&r, nodes)?;
        if options.real_constraint {
            project_real(&mut z);
        }
        let gamma_next = norm_sqr(&z);
        let res = norm_sqr(&r).sqrt();
        residual_history.push(res);
        let rel = gamma_next.sqrt() / reference;
        normal_residual_history.push(rel);
        if res < best.0 {
            best = (res, x.clone());
        }
        if rel <= options.tol {
            converged = true;
            break;
        }
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if !converged {
        log::warn!(
            "CG stopped after {iterations} iterations at relative normal residual {:.3e}",
            normal_residual_history.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(CgOutcome {
        solution: best.1,
        residual_history,
        normal_residual_history,
        iterations,
        converged,
    })
}
