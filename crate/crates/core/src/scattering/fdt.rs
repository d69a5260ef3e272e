use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::forward::{born_forward_direct, fdt_factor, DetectorPlane};
use super::phantom::Phantom;
use crate::error::{Error, Result};
use crate::geometry::{kappa, ExperimentPath, RING_CUTOFF};

/// `(2 pi)^{-d/2} int f(r) e^{-i y.r} dr` by the midpoint rule on the
/// phantom grid, optionally restricted to the voxels accepted by `keep`.
fn fourier_sum(phantom: &Phantom, y: &[f64], keep: impl Fn(&[f64]) -> bool) -> Complex64 {
    let grid = phantom.grid();
    let d = grid.dim;
    let mut sum = Complex64::default();
    for (flat, v) in phantom.values().iter().enumerate() {
        if *v == Complex64::default() {
            continue;
        }
        let r = grid.point(flat);
        if keep(&r) {
            let phase: f64 = r.iter().zip(y).map(|(a, b)| a * b).sum();
            sum += v * Complex64::from_polar(1.0, -phase);
        }
    }
    (2.0 * PI).powf(-(d as f64) / 2.0) * grid.cell_volume() * sum
}

/// Direct quadrature of the Fourier transform `F f(y)`.
pub fn fourier_transform_direct(phantom: &Phantom, y: &[f64]) -> Complex64 {
    fourier_sum(phantom, y, |_| true)
}

/// Transverse spectrum of the field radiated by the source `g` on the plane
/// `r_d`, with the source split into the parts below and above the plane.
pub fn generalized_fdt_rhs(g: &Phantom, x: &[f64], r_d: f64, k0: f64) -> Result<Complex64> {
    let d = g.dim();
    if x.len() + 1 != d {
        return Err(Error::SizeMismatch { expected: d - 1, actual: x.len() });
    }
    let kap = kappa(x, k0);
    if kap.norm() <= RING_CUTOFF * k0 {
        return Err(Error::domain("transverse frequency lies on the singular ring |x| = k0"));
    }
    let i = Complex64::i();
    // The Fourier transform is evaluated at (x, +-kappa) with complex kappa
    // off the ball, so do the sums by hand.
    let grid = g.grid();
    let mut below = Complex64::default();
    let mut above = Complex64::default();
    for (flat, v) in g.values().iter().enumerate() {
        if *v == Complex64::default() {
            continue;
        }
        let r = grid.point(flat);
        let transverse: f64 = r.iter().zip(x).map(|(a, b)| a * b).sum();
        let rd = r[d - 1];
        if rd >= r_d {
            above += v * (-i * (transverse - kap * rd)).exp();
        } else {
            below += v * (-i * (transverse + kap * rd)).exp();
        }
    }
    let norm = (2.0 * PI).powf(-(d as f64) / 2.0) * grid.cell_volume();
    Ok((PI / 2.0).sqrt() * i / kap
        * norm
        * ((i * kap * r_d).exp() * below + (-i * kap * r_d).exp() * above))
}

#[derive(Clone, Debug, Serialize)]
pub struct FdtRow {
    pub x: Vec<f64>,
    pub measured: Complex64,
    pub predicted: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FdtReport {
    pub t: f64,
    pub k0: f64,
    pub rows: Vec<FdtRow>,
    /// `|measured - predicted|_2 / |predicted|_2` over all rows.
    pub relative_l2: f64,
}

/// Compare the FFT of simulated detector samples with the diffraction
/// theorem prediction at all FFT frequencies with `|x| <= max_ratio k0`.
pub fn fdt_check(
    phantom: &Phantom,
    path: &ExperimentPath,
    t: f64,
    plane: &DetectorPlane,
    max_ratio: f64,
) -> Result<FdtReport> {
    let frame = path.frame(t)?;
    let k0 = frame.k0;
    let u = born_forward_direct(phantom, path, t, &plane.points())?;
    let (xs, spectrum) = plane.transverse_fft(&u)?;
    let rows: Vec<FdtRow> = xs
        .into_par_iter()
        .zip(spectrum)
        .filter(|(x, _)| x.iter().map(|v| v * v).sum::<f64>().sqrt() <= max_ratio * k0)
        .map(|(x, measured)| {
            let y = frame.transform(&x)?;
            let kap = kappa(&x, k0).re;
            let shift = Complex64::from_polar(1.0, -frame.translation.dot(&y));
            let predicted =
                fdt_factor(kap, k0, plane.offset) * fourier_transform_direct(phantom, y.as_slice()) * shift;
            Ok(FdtRow { x, measured, predicted })
        })
        .collect::<Result<_>>()?;
    let num: f64 = rows.iter().map(|r| (r.measured - r.predicted).norm_sqr()).sum();
    let den: f64 = rows.iter().map(|r| r.predicted.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::Numerical("predicted spectrum vanishes; nothing to compare".into()));
    }
    Ok(FdtReport { t, k0, rows, relative_l2: (num / den).sqrt() })
}
