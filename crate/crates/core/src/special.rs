//! Bessel functions of order zero and the outgoing Hankel function.
//!
//! Power series below [`SERIES_LIMIT`], Hankel asymptotic expansion above.
//! Both branches agree to ~1e-11 at the switch point.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        j0_series(x)
    } else {
        let (p, q) = asymptotic_pq(x);
        let chi = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Bessel function of the second kind, order zero. Requires `x > 0`.
pub fn bessel_y0(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NAN;
    }
    if x < SERIES_LIMIT {
        y0_series(x)
    } else {
        let (p, q) = asymptotic_pq(x);
        let chi = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * chi.sin() + q * chi.cos())
    }
}

/// Hankel function of the first kind, order zero: `J0(x) + i Y0(x)`.
pub fn hankel1_0(x: f64) -> Complex64 {
    Complex64::new(bessel_j0(x), bessel_y0(x))
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && kf > q.sqrt() {
            break;
        }
    }
    sum
}

fn y0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        // (-1)^(k+1) H_k q^k / (k!)^2 = -H_k * term
        let contrib = -harmonic * term;
        tail += contrib;
        if contrib.abs() < 1e-18 && kf > q.sqrt() {
            break;
        }
    }
    (2.0 / PI) * (((0.5 * x).ln() + EULER_GAMMA) * j0_series(x) + tail)
}

/// Auxiliary asymptotic series `P0(x)`, `Q0(x)`, truncated at the smallest term.
fn asymptotic_pq(x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut b = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        b *= odd * odd / (k as f64 * 8.0 * x);
        if b > prev {
            break;
        }
        prev = b;
        // P collects even orders with sign (-1)^(k/2); Q odd orders with (-1)^((k+1)/2).
        match k % 4 {
            0 => p += b,
            1 => q -= b,
            2 => p -= b,
            _ => q += b,
        }
        if b < 1e-17 {
            break;
        }
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_y0(1.0) - 0.088_256_964_215_676_96).abs() < 1e-14);
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(20.0) - 0.167_024_664_340_583_1).abs() < 1e-10);
        assert!((bessel_y0(20.0) - 0.062_640_596_809_383_9).abs() < 1e-10);
        assert!((bessel_j0(2.404_825_557_695_773) ).abs() < 1e-13);
    }

    #[test]
    fn branches_agree_at_switch() {
        for &x in &[11.0, 12.0, 13.0] {
            let (p, q) = asymptotic_pq(x);
            let chi = x - FRAC_PI_4;
            let amp = (2.0 / (PI * x)).sqrt();
            let ja = amp * (p * chi.cos() - q * chi.sin());
            let ya = amp * (p * chi.sin() + q * chi.cos());
            assert!((ja - j0_series(x)).abs() < 1e-10, "J0 at {x}");
            assert!((ya - y0_series(x)).abs() < 1e-10, "Y0 at {x}");
        }
    }

    #[test]
    fn wronskian() {
        // J1 = -J0', Y1 = -Y0'; J1 Y0 - J0 Y1 = 2 / (pi x)
        for &x in &[0.3, 1.7, 5.0, 9.5, 14.0, 40.0] {
            let h = 1e-5;
            let j1 = -(bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            let y1 = -(bessel_y0(x + h) - bessel_y0(x - h)) / (2.0 * h);
            let w = j1 * bessel_y0(x) - bessel_j0(x) * y1;
            assert!((w - 2.0 / (PI * x)).abs() < 1e-8, "x = {x}: {w}");
        }
    }
}
