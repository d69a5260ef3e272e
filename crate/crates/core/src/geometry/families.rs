//! Built-in path families. Each is one smooth piece; combine them with
//! breakpoints through [`ExperimentPath::new`](super::ExperimentPath::new).

use std::fmt;
use std::sync::Arc;

use super::{Matrix, PathModel, Vector};

/// Counter-clockwise planar rotation by `angle`.
pub fn rotation_2d(angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn generator(axis: usize) -> Matrix {
    let mut k = Matrix::zeros(3, 3);
    let (i, j) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    k[(j, i)] = 1.0;
    k[(i, j)] = -1.0;
    k
}

/// Right-handed rotation about coordinate axis `axis` (0, 1 or 2) in 3D.
pub fn rotation_about_axis(axis: usize, angle: f64) -> Matrix {
    let k = generator(axis);
    let (s, c) = angle.sin_cos();
    Matrix::identity(3, 3) + s * &k + (1.0 - c) * (&k * &k)
}

/// `d(t) = origin + velocity * t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTranslation {
    pub origin: Vector,
    pub velocity: Vector,
}

impl LinearTranslation {
    pub fn zero(dim: usize) -> Self {
        LinearTranslation { origin: Vector::zeros(dim), velocity: Vector::zeros(dim) }
    }

    fn at(&self, t: f64) -> Vector {
        &self.origin + t * &self.velocity
    }
}

fn unit(v: Vec<f64>) -> Vector {
    let v = Vector::from_vec(v);
    let n = v.norm();
    v / n
}

macro_rules! into_model {
    ($ty:ty) => {
        impl $ty {
            pub fn into_model(self) -> Arc<dyn PathModel> {
                Arc::new(self)
            }

            pub fn with_translation(mut self, translation: LinearTranslation) -> Self {
                self.translation = translation;
                self
            }
        }
    };
}

/// No time dependence at all.
#[derive(Clone, Debug)]
pub struct Fixed {
    pub rotation: Matrix,
    pub incidence: Vector,
    pub k0: f64,
    pub translation: LinearTranslation,
}

impl Fixed {
    pub fn new(dim: usize, rotation: Matrix, incidence: Vec<f64>, k0: f64) -> Self {
        Fixed {
            rotation,
            incidence: unit(incidence),
            k0,
            translation: LinearTranslation::zero(dim),
        }
    }
}
into_model!(Fixed);

impl PathModel for Fixed {
    fn dim(&self) -> usize {
        self.incidence.len()
    }
    fn rotation(&self, _t: f64) -> Matrix {
        self.rotation.clone()
    }
    fn incidence(&self, _t: f64) -> Vector {
        self.incidence.clone()
    }
    fn translation(&self, t: f64) -> Vector {
        self.translation.at(t)
    }
    fn wavenumber(&self, _t: f64) -> f64 {
        self.k0
    }
    fn rotation_rate(&self, _t: f64) -> Option<Matrix> {
        Some(Matrix::zeros(self.dim(), self.dim()))
    }
    fn incidence_rate(&self, _t: f64) -> Option<Vector> {
        Some(Vector::zeros(self.dim()))
    }
    fn wavenumber_rate(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
    fn wavenumber_max(&self, _a: f64, _b: f64) -> f64 {
        self.k0
    }
    fn label(&self) -> String {
        "fixed".into()
    }
}

/// 2D angle scan with `s(t) = (offset + slope t, 1) / |(offset + slope t, 1)|`
/// and a fixed object orientation.
#[derive(Clone, Debug)]
pub struct AngleScanLinear {
    pub offset: f64,
    pub slope: f64,
    pub rotation: Matrix,
    pub k0: f64,
    pub translation: LinearTranslation,
}

impl AngleScanLinear {
    pub fn new(offset: f64, slope: f64, rotation_angle: f64, k0: f64) -> Self {
        AngleScanLinear {
            offset,
            slope,
            rotation: rotation_2d(rotation_angle),
            k0,
            translation: LinearTranslation::zero(2),
        }
    }
}
into_model!(AngleScanLinear);

impl PathModel for AngleScanLinear {
    fn dim(&self) -> usize {
        2
    }
    fn rotation(&self, _t: f64) -> Matrix {
        self.rotation.clone()
    }
    fn incidence(&self, t: f64) -> Vector {
        unit(vec![self.offset + self.slope * t, 1.0])
    }
    fn translation(&self, t: f64) -> Vector {
        self.translation.at(t)
    }
    fn wavenumber(&self, _t: f64) -> f64 {
        self.k0
    }
    fn rotation_rate(&self, _t: f64) -> Option<Matrix> {
        Some(Matrix::zeros(2, 2))
    }
    fn incidence_rate(&self, t: f64) -> Option<Vector> {
        // d/dt (v / |v|) = (v' - s (s . v')) / |v| with v' = (slope, 0)
        let a = self.offset + self.slope * t;
        let norm = (a * a + 1.0).sqrt();
        let s = Vector::from_vec(vec![a / norm, 1.0 / norm]);
        let dv = Vector::from_vec(vec![self.slope, 0.0]);
        let proj = s.dot(&dv);
        Some((dv - proj * s) / norm)
    }
    fn wavenumber_rate(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
    fn wavenumber_max(&self, _a: f64, _b: f64) -> f64 {
        self.k0
    }
    fn label(&self) -> String {
        "angle-scan-linear".into()
    }
}

/// 2D angle scan with `s(t) = (cos(phase + rate t), sin(phase + rate t))`.
#[derive(Clone, Debug)]
pub struct AngleScanCircular {
    pub phase: f64,
    pub rate: f64,
    pub rotation: Matrix,
    pub k0: f64,
    pub translation: LinearTranslation,
}

impl AngleScanCircular {
    pub fn new(phase: f64, rate: f64, rotation_angle: f64, k0: f64) -> Self {
        AngleScanCircular {
            phase,
            rate,
            rotation: rotation_2d(rotation_angle),
            k0,
            translation: LinearTranslation::zero(2),
        }
    }
}
into_model!(AngleScanCircular);

impl PathModel for AngleScanCircular {
    fn dim(&self) -> usize {
        2
    }
    fn rotation(&self, _t: f64) -> Matrix {
        self.rotation.clone()
    }
    fn incidence(&self, t: f64) -> Vector {
        let (s, c) = (self.phase + self.rate * t).sin_cos();
        Vector::from_vec(vec![c, s])
    }
    fn translation(&self, t: f64) -> Vector {
        self.translation.at(t)
    }
    fn wavenumber(&self, _t: f64) -> f64 {
        self.k0
    }
    fn rotation_rate(&self, _t: f64) -> Option<Matrix> {
        Some(Matrix::zeros(2, 2))
    }
    fn incidence_rate(&self, t: f64) -> Option<Vector> {
        let (s, c) = (self.phase + self.rate * t).sin_cos();
        Some(Vector::from_vec(vec![-self.rate * s, self.rate * c]))
    }
    fn wavenumber_rate(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
    fn wavenumber_max(&self, _a: f64, _b: f64) -> f64 {
        self.k0
    }
    fn label(&self) -> String {
        "angle-scan-circular".into()
    }
}

/// Planar object rotation `R(t) = rot(phase + rate t)` under fixed illumination.
#[derive(Clone, Debug)]
pub struct Rotation2d {
    pub rate: f64,
    pub phase: f64,
    pub incidence: Vector,
    pub k0: f64,
    pub translation: LinearTranslation,
}

impl Rotation2d {
    pub fn new(rate: f64, phase: f64, incidence: Vec<f64>, k0: f64) -> Self {
        Rotation2d {
            rate,
            phase,
            incidence: unit(incidence),
            k0,
            translation: LinearTranslation::zero(2),
        }
    }
}
into_model!(Rotation2d);

impl PathModel for Rotation2d {
    fn dim(&self) -> usize {
        2
    }
    fn rotation(&self, t: f64) -> Matrix {
        rotation_2d(self.phase + self.rate * t)
    }
    fn incidence(&self, _t: f64) -> Vector {
        self.incidence.clone()
    }
    fn translation(&self, t: f64) -> Vector {
        self.translation.at(t)
    }
    fn wavenumber(&self, _t: f64) -> f64 {
        self.k0
    }
    fn rotation_rate(&self, t: f64) -> Option<Matrix> {
        let j = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        Some(self.rate * self.rotation(t) * j)
    }
    fn incidence_rate(&self, _t: f64) -> Option<Vector> {
        Some(Vector::zeros(2))
    }
    fn wavenumber_rate(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
    fn wavenumber_max(&self, _a: f64, _b: f64) -> f64 {
        self.k0
    }
    fn label(&self) -> String {
        "rotation-2d".into()
    }
}

/// 3D rotation about a coordinate axis, `R(t) = exp((phase + rate t) K_axis)`.
#[derive(Clone, Debug)]
pub struct Rotation3dAxis {
    pub axis: usize,
    pub rate: f64,
    pub phase: f64,
    pub incidence: Vector,
    pub k0: f64,
    pub translation: LinearTranslation,
}

impl Rotation3dAxis {
    pub fn new(axis: usize, rate: f64, phase: f64, incidence: Vec<f64>, k0: f64) -> Self {
        Rotation3dAxis {
            axis,
            rate,
            phase,
            incidence: unit(incidence),
            k0,
            translation: LinearTranslation::zero(3),
        }
    }
}
into_model!(Rotation3dAxis);

impl PathModel for Rotation3dAxis {
    fn dim(&self) -> usize {
        3
    }
    fn rotation(&self, t: f64) -> Matrix {
        rotation_about_axis(self.axis, self.phase + self.rate * t)
    }
    fn incidence(&self, _t: f64) -> Vector {
        self.incidence.clone()
    }
    fn translation(&self, t: f64) -> Vector {
        self.translation.at(t)
    }
    fn wavenumber(&self, _t: f64) -> f64 {
        self.k0
    }
    fn rotation_rate(&self, t: f64) -> Option<Matrix> {
        Some(self.rate * generator(self.axis) * self.rotation(t))
    }
    fn incidence_rate(&self, _t: f64) -> Option<Vector> {
        Some(Vector::zeros(3))
    }
    fn wavenumber_rate(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
    fn wavenumber_max(&self, _a: f64, _b: f64) -> f64 {
        self.k0
    }
    fn label(&self) -> String {
        format!("rotation-3d-axis{}", self.axis)
    }
}

/// Fixed geometry with `k0(t) = k_start + rate t`.
#[derive(Clone, Debug)]
pub struct WavenumberSweepLinear {
    pub k_start: f64,
    pub rate: f64,
    pub rotation: Matrix,
    pub incidence: Vector,
    pub translation: LinearTranslation,
}

impl WavenumberSweepLinear {
    pub fn new(k_start: f64, rate: f64, rotation: Matrix, incidence: Vec<f64>) -> Self {
        let dim = incidence.len();
        WavenumberSweepLinear {
            k_start,
            rate,
            rotation,
            incidence: unit(incidence),
            translation: LinearTranslation::zero(dim),
        }
    }
}
into_model!(WavenumberSweepLinear);

impl PathModel for WavenumberSweepLinear {
    fn dim(&self) -> usize {
        self.incidence.len()
    }
    fn rotation(&self, _t: f64) -> Matrix {
        self.rotation.clone()
    }
    fn incidence(&self, _t: f64) -> Vector {
        self.incidence.clone()
    }
    fn translation(&self, t: f64) -> Vector {
        self.translation.at(t)
    }
    fn wavenumber(&self, t: f64) -> f64 {
        self.k_start + self.rate * t
    }
    fn rotation_rate(&self, _t: f64) -> Option<Matrix> {
        Some(Matrix::zeros(self.dim(), self.dim()))
    }
    fn incidence_rate(&self, _t: f64) -> Option<Vector> {
        Some(Vector::zeros(self.dim()))
    }
    fn wavenumber_rate(&self, _t: f64) -> Option<f64> {
        Some(self.rate)
    }
    fn wavenumber_max(&self, a: f64, b: f64) -> f64 {
        self.wavenumber(a).max(self.wavenumber(b))
    }
    fn label(&self) -> String {
        "wavenumber-sweep-linear".into()
    }
}

type MatFn = Arc<dyn Fn(f64) -> Matrix + Send + Sync>;
type VecFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Path built from arbitrary closures. Derivatives default to finite
/// differences unless supplied.
#[derive(Clone)]
pub struct FnPath {
    pub dim: usize,
    pub rotation: MatFn,
    pub incidence: VecFn,
    pub translation: VecFn,
    pub wavenumber: ScalarFn,
    pub rotation_rate: Option<MatFn>,
    pub incidence_rate: Option<VecFn>,
    pub wavenumber_rate: Option<ScalarFn>,
}

impl fmt::Debug for FnPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPath").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl FnPath {
    pub fn new(
        dim: usize,
        rotation: impl Fn(f64) -> Matrix + Send + Sync + 'static,
        incidence: impl Fn(f64) -> Vector + Send + Sync + 'static,
        wavenumber: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FnPath {
            dim,
            rotation: Arc::new(rotation),
            incidence: Arc::new(incidence),
            translation: Arc::new(move |_| Vector::zeros(dim)),
            wavenumber: Arc::new(wavenumber),
            rotation_rate: None,
            incidence_rate: None,
            wavenumber_rate: None,
        }
    }

    pub fn into_model(self) -> Arc<dyn PathModel> {
        Arc::new(self)
    }
}

impl PathModel for FnPath {
    fn dim(&self) -> usize {
        self.dim
    }
    fn rotation(&self, t: f64) -> Matrix {
        (self.rotation)(t)
    }
    fn incidence(&self, t: f64) -> Vector {
        (self.incidence)(t)
    }
    fn translation(&self, t: f64) -> Vector {
        (self.translation)(t)
    }
    fn wavenumber(&self, t: f64) -> f64 {
        (self.wavenumber)(t)
    }
    fn rotation_rate(&self, t: f64) -> Option<Matrix> {
        self.rotation_rate.as_ref().map(|f| f(t))
    }
    fn incidence_rate(&self, t: f64) -> Option<Vector> {
        self.incidence_rate.as_ref().map(|f| f(t))
    }
    fn wavenumber_rate(&self, t: f64) -> Option<f64> {
        self.wavenumber_rate.as_ref().map(|f| f(t))
    }
}
