use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::hankel1_0;

/// Outgoing free-space Green's function of `-(Delta + k0^2)` in `d = 1, 2, 3`.
pub fn green_function(r: &[f64], k0: f64) -> Result<Complex64> {
    let dist = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dist == 0.0 {
        return Err(Error::domain("Green's function is singular at r = 0"));
    }
    let i = Complex64::i();
    match r.len() {
        1 => Ok(i * Complex64::from_polar(1.0, k0 * dist) / (2.0 * k0)),
        2 => Ok(i / 4.0 * hankel1_0(k0 * dist)),
        3 => Ok(Complex64::from_polar(1.0, k0 * dist) / (4.0 * PI * dist)),
        d => Err(Error::invalid(format!("no Green's function for dimension {d}"))),
    }
}

/// Incident plane wave `e^{i k0 s . r}`.
pub fn plane_wave(r: &[f64], k0: f64, s: &[f64]) -> Complex64 {
    let phase: f64 = r.iter().zip(s).map(|(a, b)| a * b).sum();
    Complex64::from_polar(1.0, k0 * phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_reference_values() {
        let g3 = green_function(&[0.0, 0.6, 0.8], 2.0 * PI).unwrap();
        assert!((g3 - Complex64::new(1.0 / (4.0 * PI), 0.0)).norm() < 1e-15);
        let g1 = green_function(&[0.5], 1.0).unwrap();
        let expect = Complex64::new(0.0, 0.5) * Complex64::new(0.5f64.cos(), 0.5f64.sin());
        assert!((g1 - expect).norm() < 1e-15);
        let g2 = green_function(&[0.6, 0.8], 1.0).unwrap();
        assert!((g2.re + 0.088256964215677 / 4.0).abs() < 1e-9);
        assert!((g2.im - 0.765197686557967 / 4.0).abs() < 1e-9);
        assert!(green_function(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn plane_wave_values() {
        assert_eq!(plane_wave(&[0.0, 0.0], 3.0, &[0.0, 1.0]), Complex64::new(1.0, 0.0));
        let k0 = 2.5;
        let q = plane_wave(&[0.0, PI / (2.0 * k0)], k0, &[0.0, 1.0]);
        assert!((q - Complex64::i()).norm() < 1e-15);
        let v = plane_wave(&[1.3, -7.1, 0.2], 9.0, &[0.6, 0.0, 0.8]);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }
}
