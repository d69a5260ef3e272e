//! Image quality metrics for comparing reconstructions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value written in place of an infinite PSNR.
pub const PSNR_CAP_DB: f64 = 300.0;

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
}

fn check_shapes(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { expected: a.len(), actual: b.len() });
    }
    if a.is_empty() {
        return Err(Error::invalid("empty image"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("image contains non-finite values".into()));
    }
    Ok(())
}

fn peak(reference: &[f64]) -> Result<f64> {
    let (lo, hi) = reference.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi > lo {
        Ok(hi - lo)
    } else {
        Err(Error::domain("reference image is constant"))
    }
}

pub fn mse(reference: &[f64], candidate: &[f64]) -> Result<f64> {
    check_shapes(reference, candidate)?;
    Ok(reference.iter().zip(candidate).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / reference.len() as f64)
}

/// PSNR in dB with the dynamic range of the reference as peak; `+inf` for
/// identical images.
pub fn psnr(reference: &[f64], candidate: &[f64]) -> Result<f64> {
    let err = mse(reference, candidate)?;
    let peak = peak(reference)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / err).log10())
}

fn gaussian_window() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Mean SSIM over all fully contained 11x11 windows of the trailing two
/// axes; leading axes are treated as a stack of slices.
pub fn ssim(reference: &[f64], candidate: &[f64], shape: &[usize]) -> Result<f64> {
    check_shapes(reference, candidate)?;
    ssim_with_peak(reference, candidate, shape, peak(reference)?)
}

pub fn ssim_with_peak(reference: &[f64], candidate: &[f64], shape: &[usize], peak: f64) -> Result<f64> {
    check_shapes(reference, candidate)?;
    if shape.iter().product::<usize>() != reference.len() {
        return Err(Error::SizeMismatch { expected: shape.iter().product(), actual: reference.len() });
    }
    let (rows, cols) = match shape {
        [n] => (1, *n),
        [.., r, c] => (*r, *c),
        [] => return Err(Error::invalid("empty shape")),
    };
    if rows < WINDOW || cols < WINDOW {
        return Err(Error::invalid(format!("ssim needs images of at least {WINDOW} x {WINDOW}")));
    }
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let w = gaussian_window();
    let slice = rows * cols;
    let (wr, wc) = (rows - WINDOW + 1, cols - WINDOW + 1);
    let total: f64 = (0..reference.len() / slice)
        .into_par_iter()
        .flat_map(|s| (0..wr * wc).into_par_iter().map(move |k| (s, k / wc, k % wc)))
        .map(|(s, i0, j0)| {
            let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (di, wi) in w.iter().enumerate() {
                for (dj, wj) in w.iter().enumerate() {
                    let idx = s * slice + (i0 + di) * cols + j0 + dj;
                    let (a, b, g) = (reference[idx], candidate[idx], wi * wj);
                    ma += g * a;
                    mb += g * b;
                    aa += g * a * a;
                    bb += g * b * b;
                    ab += g * a * b;
                }
            }
            let (va, vb, cov) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / (wr * wc * (reference.len() / slice)) as f64)
}

/// All three metrics, with the PSNR capped for serialization.
pub fn compare(reference: &[f64], candidate: &[f64], shape: &[usize]) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr_db: psnr(reference, candidate)?.min(PSNR_CAP_DB),
        ssim: ssim(reference, candidate, shape)?,
        mse: mse(reference, candidate)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn checkerboard(n: usize) -> Vec<f64> {
        (0..n * n).map(|k| ((k / n + k % n) % 2) as f64).collect()
    }

    #[test]
    fn psnr_cases() {
        let r = checkerboard(16);
        assert_eq!(psnr(&r, &r).unwrap(), f64::INFINITY);
        let half = vec![0.5; 256];
        assert!((psnr(&r, &half).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        let shifted: Vec<f64> = r.iter().map(|v| v + 0.1).collect();
        assert!((psnr(&r, &shifted).unwrap() + 20.0 * 0.1f64.log10()).abs() < 1e-9);
        assert!(psnr(&[1.0; 4], &[0.0; 4]).is_err());
        assert!(psnr(&r, &r[..10]).is_err());
    }

    #[test]
    fn ssim_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = [32, 32];
        let r: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!((ssim(&r, &r, &shape).unwrap() - 1.0).abs() < 1e-12);
        let checker: Vec<f64> = (0..1024).map(|k| ((k / 32 + k % 32) % 2) as f64 - 0.5).collect();
        let neg: Vec<f64> = checker.iter().map(|v| -v).collect();
        let v = ssim(&checker, &neg, &shape).unwrap();
        assert!(v < -0.9, "{v}");
        let noise: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(ssim(&r, &noise, &shape).unwrap().abs() < 0.2);
        assert!(ssim(&r[..100], &r[..100], &[10, 10]).is_err());
        assert!(ssim(&[2.0; 144], &[2.0; 144], &[12, 12]).is_err());
    }

    #[test]
    fn report_caps_psnr() {
        let r = checkerboard(12);
        let rep = compare(&r, &r, &[12, 12]).unwrap();
        assert_eq!(rep.psnr_db, PSNR_CAP_DB);
        assert_eq!(rep.mse, 0.0);
        assert!(serde_json::to_string(&rep).unwrap().contains("psnr_db"));
    }
}
