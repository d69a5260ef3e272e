//! Unnormalized multidimensional FFTs on row-major arrays.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Transform `data` (row-major, `shape`) along every axis in place.
/// The forward direction uses the kernel `e^{-2 pi i jk/n}`.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len(), "array length does not match shape");
    let mut planner = FftPlanner::new();
    let mut buf = Vec::new();
    let mut stride = total;
    for &n in shape {
        stride /= n;
        let fft = planner.plan_fft(n, direction);
        buf.resize(n, Complex64::default());
        let block = n * stride;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                for k in 0..n {
                    buf[k] = data[base + offset + k * stride];
                }
                fft.process(&mut buf);
                for k in 0..n {
                    data[base + offset + k * stride] = buf[k];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn matches_direct_2d() {
        let shape = [3, 4];
        let data: Vec<Complex64> = (0..12).map(|k| Complex64::new(k as f64, (k * k) as f64 * 0.1)).collect();
        let mut out = data.clone();
        fft_nd(&mut out, &shape, FftDirection::Forward);
        for a in 0..3 {
            for b in 0..4 {
                let mut s = Complex64::default();
                for p in 0..3 {
                    for q in 0..4 {
                        let ph = -2.0 * PI * ((a * p) as f64 / 3.0 + (b * q) as f64 / 4.0);
                        s += data[p * 4 + q] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((out[a * 4 + b] - s).norm() < 1e-10);
            }
        }
        fft_nd(&mut out, &shape, FftDirection::Inverse);
        for (o, d) in out.iter().zip(&data) {
            assert!((o / 12.0 - d).norm() < 1e-12);
        }
    }
}
