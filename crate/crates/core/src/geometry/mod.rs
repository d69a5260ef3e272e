//! Acquisition geometry: the branch function `kappa`, the hemisphere maps
//! `h+-`, the coordinate transformation `T` (and its odd extension), and the
//! Jacobian determinant of `T` for piecewise smooth experiment paths.

mod families;
mod path;
mod spec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use families::{
    rotation_2d, rotation_about_axis, AngleScanCircular, AngleScanLinear, FnPath, Fixed,
    LinearTranslation, Rotation2d, Rotation3dAxis, WavenumberSweepLinear,
};
pub use path::{ExperimentPath, Frame, PathModel, Piece};
pub use spec::{PathSpec, RotationSpec, TranslationSpec};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Transverse frequencies with `|x| >= (1 - RING_CUTOFF) k0` are dropped from
/// every quadrature (`1 / kappa` blows up on the ring `|x| = k0`).
pub const RING_CUTOFF: f64 = 1e-9;

/// `sqrt(k0^2 - |x|^2)` inside the ball of radius `k0`, `i sqrt(|x|^2 - k0^2)`
/// outside. Real and imaginary parts are never negative.
pub fn kappa(x: &[f64], k0: f64) -> Complex64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let k2 = k0 * k0;
    if r2 <= k2 {
        Complex64::new((k2 - r2).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (r2 - k2).sqrt())
    }
}

/// Real part of [`kappa`] for `|x| <= k0`.
pub(crate) fn kappa_real(x: &[f64], k0: f64) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (k0 * k0 - r2).max(0.0).sqrt()
}

/// Point `(x, sign * kappa(x))` on the sphere of radius `k0`.
pub fn hemisphere_h(x: &[f64], k0: f64, sign: f64) -> Result<Vector> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 > k0 * k0 {
        return Err(Error::domain(format!(
            "evanescent node: |x| = {} exceeds k0 = {k0}",
            r2.sqrt()
        )));
    }
    let mut out = Vector::zeros(x.len() + 1);
    out.rows_mut(0, x.len()).copy_from_slice(x);
    out[x.len()] = sign.signum() * kappa_real(x, k0);
    Ok(out)
}

/// `T(x, t) = R(t) (h+(x) - k0(t) s(t))`.
pub fn transform_t(x: &[f64], t: f64, path: &ExperimentPath) -> Result<Vector> {
    path.frame(t)?.transform(x)
}

/// Odd extension of [`transform_t`] to `t in [-L, L]`: `sgn(t) T(x, |t|)`,
/// with `sgn(0) = 0`.
pub fn transform_tsym(x: &[f64], t: f64, path: &ExperimentPath) -> Result<Vector> {
    let y = transform_t(x, t.abs(), path)?;
    Ok(if t > 0.0 {
        y
    } else if t < 0.0 {
        -y
    } else {
        Vector::zeros(y.len())
    })
}

/// Analytic Jacobian determinant of `T` at `(x, t)`.
pub fn jacobian_det(x: &[f64], t: f64, path: &ExperimentPath) -> Result<f64> {
    path.frame(t)?.jacobian_det(x)
}

/// Jacobian determinant of `T` assembled from central differences with step
/// `eps` in every coordinate. Independent of [`jacobian_det`]; used to check it.
pub fn jacobian_det_fd(x: &[f64], t: f64, path: &ExperimentPath, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let piece = path.piece_at(t)?;
    if t - eps < piece.start || t + eps > piece.end {
        return Err(Error::domain(format!(
            "stencil [{}, {}] straddles a breakpoint of the path",
            t - eps,
            t + eps
        )));
    }
    let d = path.dim();
    if x.len() + 1 != d {
        return Err(Error::SizeMismatch { expected: d - 1, actual: x.len() });
    }
    let eval = |xx: &[f64], tt: f64| piece.frame(tt, path.horizon()).transform(xx);
    let mut jac = Matrix::zeros(d, d);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for i in 0..d - 1 {
        xp[i] = x[i] + eps;
        xm[i] = x[i] - eps;
        let col = (eval(&xp, t)? - eval(&xm, t)?) / (2.0 * eps);
        jac.set_column(i, &col);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    let col = (eval(x, t + eps)? - eval(x, t - eps)?) / (2.0 * eps);
    jac.set_column(d - 1, &col);
    Ok(jac.determinant())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn rot2d(incidence: [f64; 2], k0: f64) -> ExperimentPath {
        ExperimentPath::single(
            2.0 * PI,
            Rotation2d::new(1.0, 0.0, incidence.to_vec(), k0).into_model(),
        )
        .unwrap()
    }

    #[test]
    fn kappa_cases() {
        assert_eq!(kappa(&[0.0], 2.0 * PI), Complex64::new(2.0 * PI, 0.0));
        assert_eq!(kappa(&[3.0], 3.0), Complex64::new(0.0, 0.0));
        let ev = kappa(&[2f64.sqrt()], 1.0);
        assert!(ev.re == 0.0 && (ev.im - 1.0).abs() < 1e-15);
        assert!((kappa(&[3.0, 0.0], 5.0).re - 4.0).abs() < 1e-15);
    }

    #[test]
    fn hemisphere_points() {
        let k0 = 2.0 * PI;
        let p = hemisphere_h(&[0.0], k0, 1.0).unwrap();
        assert_eq!(p.as_slice(), &[0.0, k0]);
        let eq = hemisphere_h(&[k0, 0.0], k0, 1.0).unwrap();
        assert_eq!(eq.as_slice(), &[k0, 0.0, 0.0]);
        let low = hemisphere_h(&[3.0, 0.0], 5.0, -1.0).unwrap();
        assert_eq!(low.as_slice(), &[3.0, 0.0, -4.0]);
        assert!(matches!(hemisphere_h(&[6.0], 5.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn transform_examples() {
        let fixed = |s: Vec<f64>, angle: f64| {
            ExperimentPath::single(
                1.0,
                Fixed::new(2, rotation_2d(angle), s, 1.0).into_model(),
            )
            .unwrap()
        };
        let y = transform_t(&[0.0], 0.5, &fixed(vec![0.0, 1.0], 0.0)).unwrap();
        assert!(y.norm() < 1e-15);
        let y = transform_t(&[0.0], 0.5, &fixed(vec![1.0, 0.0], 0.0)).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
        let y = transform_t(&[0.0], 0.5, &fixed(vec![0.0, 1.0], FRAC_PI_2)).unwrap();
        assert!(y.norm() < 1e-15);
        assert!(transform_t(&[1.0], 0.5, &fixed(vec![0.0, 1.0], 0.0)).is_err());
    }

    #[test]
    fn tsym_is_odd() {
        let path = rot2d([1.0, 0.0], 2.0);
        assert_eq!(transform_tsym(&[0.3], 0.0, &path).unwrap().norm(), 0.0);
        for &(x, t) in &[(0.3, 1.0), (-1.2, 4.0), (1.9, 0.1)] {
            let a = transform_tsym(&[x], t, &path).unwrap();
            let b = transform_tsym(&[x], -t, &path).unwrap();
            assert_eq!(a, -b);
            assert_eq!(a, transform_t(&[x], t, &path).unwrap());
        }
    }

    #[test]
    fn closed_form_rotation_jacobians() {
        let k0 = 2.0 * PI;
        let up = rot2d([0.0, 1.0], k0);
        let side = rot2d([1.0, 0.0], k0);
        for &x in &[-5.0, -1.0, 0.25, 3.0, 6.0] {
            let kap = (k0 * k0 - x * x).sqrt();
            let a = jacobian_det(&[x], 1.3, &up).unwrap();
            assert!((a - k0 * x / kap).abs() < 1e-12 * (1.0 + a.abs()));
            let b = jacobian_det(&[x], 1.3, &side).unwrap();
            assert!((b + k0).abs() < 1e-12 * k0);
        }
    }

    #[test]
    fn constant_path_has_zero_jacobian() {
        let path = ExperimentPath::single(
            1.0,
            Fixed::new(2, rotation_2d(0.4), vec![0.6, 0.8], 3.0).into_model(),
        )
        .unwrap();
        assert_eq!(jacobian_det(&[1.0], 0.5, &path).unwrap(), 0.0);
        assert!(jacobian_det_fd(&[1.0], 0.5, &path, 1e-5).unwrap().abs() < 1e-8);
    }

    #[test]
    fn fd_rejects_breakpoint_stencil() {
        let spec: PathSpec = serde_json::from_str(
            r#"{"family":"piecewise","horizon":2.0,"breakpoints":[1.0],"pieces":[
                {"family":"rotation-2d","k0":1.0,"incidence":[0.0,1.0]},
                {"family":"rotation-2d","k0":1.0,"incidence":[1.0,0.0]}]}"#,
        )
        .unwrap();
        let path = spec.build().unwrap();
        assert!(jacobian_det_fd(&[0.1], 1.0 - 1e-6, &path, 1e-5).is_err());
        assert!(jacobian_det_fd(&[0.1], 0.5, &path, 1e-5).is_ok());
    }

    #[test]
    fn singular_ring_rejected() {
        let path = rot2d([0.0, 1.0], 1.0);
        assert!(jacobian_det(&[1.0], 0.5, &path).is_err());
    }
}
