use std::fmt;
use std::sync::Arc;

use super::{kappa_real, Matrix, Vector};
use crate::error::{Error, Result};

/// One smooth piece of an acquisition schedule.
///
/// Implementations return the object rotation `R(t)`, the incidence
/// direction `s(t)`, the translation `d(t)` and the wave number `k0(t)`.
/// Analytic derivatives are optional; missing ones fall back to central
/// differences with step `1e-6 * L`.
pub trait PathModel: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn rotation(&self, t: f64) -> Matrix;
    fn incidence(&self, t: f64) -> Vector;
    fn translation(&self, t: f64) -> Vector;
    fn wavenumber(&self, t: f64) -> f64;

    fn rotation_rate(&self, _t: f64) -> Option<Matrix> {
        None
    }
    fn incidence_rate(&self, _t: f64) -> Option<Vector> {
        None
    }
    fn wavenumber_rate(&self, _t: f64) -> Option<f64> {
        None
    }

    /// Upper bound of `k0` on `[a, b]`. Default samples densely.
    fn wavenumber_max(&self, a: f64, b: f64) -> f64 {
        let n = 1024;
        (0..=n)
            .map(|i| self.wavenumber(a + (b - a) * i as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn label(&self) -> String {
        "custom".to_string()
    }
}

/// A model restricted to the closed interval `[start, end]`.
#[derive(Clone, Debug)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub model: Arc<dyn PathModel>,
}

/// Every time-dependent quantity of the experiment at a single `t`, with
/// first derivatives.
#[derive(Clone, Debug)]
pub struct Frame {
    pub t: f64,
    pub k0: f64,
    pub dk0: f64,
    pub rotation: Matrix,
    pub drotation: Matrix,
    pub incidence: Vector,
    pub dincidence: Vector,
    pub translation: Vector,
}

impl Piece {
    /// Evaluate the piece at `t`; `horizon` scales the finite-difference step.
    pub fn frame(&self, t: f64, horizon: f64) -> Frame {
        let m = &*self.model;
        let eps = 1e-6 * horizon;
        // Central differences, switched to one-sided steps at the piece ends.
        let (lo, hi) = if t - eps < self.start {
            (t, t + eps)
        } else if t + eps > self.end {
            (t - eps, t)
        } else {
            (t - eps, t + eps)
        };
        let span = hi - lo;
        let dk0 = m
            .wavenumber_rate(t)
            .unwrap_or_else(|| (m.wavenumber(hi) - m.wavenumber(lo)) / span);
        let drotation = m
            .rotation_rate(t)
            .unwrap_or_else(|| (m.rotation(hi) - m.rotation(lo)) / span);
        let dincidence = m
            .incidence_rate(t)
            .unwrap_or_else(|| (m.incidence(hi) - m.incidence(lo)) / span);
        Frame {
            t,
            k0: m.wavenumber(t),
            dk0,
            rotation: m.rotation(t),
            drotation,
            incidence: m.incidence(t),
            dincidence,
            translation: m.translation(t),
        }
    }
}

impl Frame {
    pub fn dim(&self) -> usize {
        self.incidence.len()
    }

    fn check_x(&self, x: &[f64]) -> Result<f64> {
        if x.len() + 1 != self.dim() {
            return Err(Error::SizeMismatch { expected: self.dim() - 1, actual: x.len() });
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 >= self.k0 * self.k0 {
            return Err(Error::domain(format!(
                "|x| = {} is not below k0 = {} at t = {}",
                r2.sqrt(),
                self.k0,
                self.t
            )));
        }
        Ok(kappa_real(x, self.k0))
    }

    /// `h+(x) - k0 s` in the object-fixed frame (before rotation).
    pub fn unrotated(&self, x: &[f64]) -> Result<Vector> {
        let kap = self.check_x(x)?;
        let d = self.dim();
        let mut v = -self.k0 * &self.incidence;
        for (i, xi) in x.iter().enumerate() {
            v[i] += xi;
        }
        v[d - 1] += kap;
        Ok(v)
    }

    /// `T(x, t) = R (h+(x) - k0 s)`.
    pub fn transform(&self, x: &[f64]) -> Result<Vector> {
        Ok(&self.rotation * self.unrotated(x)?)
    }

    /// `(k0 k0' - R h . (k0 R s)') / kappa`.
    pub fn jacobian_det(&self, x: &[f64]) -> Result<f64> {
        let kap = self.check_x(x)?;
        if kap <= 0.0 {
            return Err(Error::domain("kappa vanishes: Jacobian is singular"));
        }
        let d = self.dim();
        let mut h = Vector::zeros(d);
        h.rows_mut(0, d - 1).copy_from_slice(x);
        h[d - 1] = kap;
        let rh = &self.rotation * h;
        let rs = &self.rotation * &self.incidence;
        let drs = &self.drotation * &self.incidence + &self.rotation * &self.dincidence;
        let d_k0rs = self.dk0 * rs + self.k0 * drs;
        Ok((self.k0 * self.dk0 - rh.dot(&d_k0rs)) / kap)
    }

    /// `k0 R s`: the centre of the coverage sphere at this time is its negative.
    pub fn sphere_offset(&self) -> Vector {
        self.k0 * (&self.rotation * &self.incidence)
    }

    /// `R e_d`: normal of the measurement plane in Fourier coordinates.
    pub fn plane_normal(&self) -> Vector {
        self.rotation.column(self.dim() - 1).into_owned()
    }
}

/// Piecewise smooth acquisition schedule on `[0, L]`.
#[derive(Clone)]
pub struct ExperimentPath {
    dim: usize,
    horizon: f64,
    pieces: Vec<Piece>,
    k_max: f64,
    label: String,
}

impl fmt::Debug for ExperimentPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExperimentPath")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("breakpoints", &self.breakpoints())
            .field("k_max", &self.k_max)
            .field("label", &self.label)
            .finish()
    }
}

const ORTHO_TOL: f64 = 1e-12;
const PROBES_PER_PIECE: usize = 17;

impl ExperimentPath {
    /// Builds a path from `breakpoints.len() + 1` models, one per smooth piece.
    pub fn new(
        horizon: f64,
        breakpoints: Vec<f64>,
        models: Vec<Arc<dyn PathModel>>,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        if models.len() != breakpoints.len() + 1 {
            return Err(Error::config(format!(
                "{} breakpoints require {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                models.len()
            )));
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b < horizon) {
                return Err(Error::config(format!(
                    "breakpoints must be sorted inside (0, {horizon}), got {breakpoints:?}"
                )));
            }
            prev = b;
        }
        let dim = models[0].dim();
        if !(2..=3).contains(&dim) {
            return Err(Error::config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if models.iter().any(|m| m.dim() != dim) {
            return Err(Error::config("all pieces must share one dimension"));
        }
        let mut edges = vec![0.0];
        edges.extend_from_slice(&breakpoints);
        edges.push(horizon);
        let pieces: Vec<Piece> = models
            .into_iter()
            .enumerate()
            .map(|(i, model)| Piece { start: edges[i], end: edges[i + 1], model })
            .collect();
        let k_max = pieces
            .iter()
            .map(|p| p.model.wavenumber_max(p.start, p.end))
            .fold(f64::NEG_INFINITY, f64::max);
        let label = pieces
            .iter()
            .map(|p| p.model.label())
            .collect::<Vec<_>>()
            .join("|");
        let path = ExperimentPath { dim, horizon, pieces, k_max, label };
        path.validate()?;
        Ok(path)
    }

    pub fn single(horizon: f64, model: Arc<dyn PathModel>) -> Result<Self> {
        Self::new(horizon, Vec::new(), vec![model])
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        let eye = Matrix::identity(d, d);
        for (pi, piece) in self.pieces.iter().enumerate() {
            for j in 0..PROBES_PER_PIECE {
                let t = piece.start + (piece.end - piece.start) * j as f64 / (PROBES_PER_PIECE - 1) as f64;
                let m = &piece.model;
                let r = m.rotation(t);
                let s = m.incidence(t);
                let k0 = m.wavenumber(t);
                if r.nrows() != d || r.ncols() != d || s.len() != d || m.translation(t).len() != d {
                    return Err(Error::config(format!("piece {pi}: inconsistent dimensions")));
                }
                let ortho = (r.transpose() * &r - &eye).amax();
                let det = r.determinant();
                if ortho > ORTHO_TOL || (det - 1.0).abs() > ORTHO_TOL {
                    return Err(Error::config(format!(
                        "piece {pi}: R({t}) is not a rotation (|RtR - I| = {ortho:e}, det = {det})"
                    )));
                }
                if (s.norm() - 1.0).abs() > ORTHO_TOL {
                    return Err(Error::config(format!("piece {pi}: |s({t})| = {} != 1", s.norm())));
                }
                if !(k0 > 0.0) || !k0.is_finite() {
                    return Err(Error::config(format!("piece {pi}: k0({t}) = {k0} must be positive")));
                }
            }
            self.probe_smoothness(pi, piece)?;
        }
        Ok(())
    }

    /// Compares analytic derivatives against central differences (when the
    /// model supplies them) and checks continuity of the quantities inside
    /// the piece.
    fn probe_smoothness(&self, pi: usize, piece: &Piece) -> Result<()> {
        let m = &piece.model;
        let len = piece.end - piece.start;
        let h = 1e-5 * len;
        for j in 1..PROBES_PER_PIECE - 1 {
            let t = piece.start + len * j as f64 / (PROBES_PER_PIECE - 1) as f64;
            let fd_k = (m.wavenumber(t + h) - m.wavenumber(t - h)) / (2.0 * h);
            let fd_r = (m.rotation(t + h) - m.rotation(t - h)) / (2.0 * h);
            let fd_s = (m.incidence(t + h) - m.incidence(t - h)) / (2.0 * h);
            let scale = |a: f64| 1e-4 * (1.0 + a.abs());
            if let Some(dk) = m.wavenumber_rate(t) {
                if (dk - fd_k).abs() > scale(dk) {
                    return Err(Error::config(format!(
                        "piece {pi}: k0' = {dk} disagrees with finite differences ({fd_k}) at t = {t}"
                    )));
                }
            }
            if let Some(dr) = m.rotation_rate(t) {
                if (&dr - &fd_r).amax() > scale(dr.amax()) {
                    return Err(Error::config(format!("piece {pi}: R' inconsistent at t = {t}")));
                }
            }
            if let Some(ds) = m.incidence_rate(t) {
                if (&ds - &fd_s).amax() > scale(ds.amax()) {
                    return Err(Error::config(format!("piece {pi}: s' inconsistent at t = {t}")));
                }
            }
            // Halving the step must not change a derivative of a C1 function much.
            let fd_k2 = (m.wavenumber(t + 2.0 * h) - m.wavenumber(t - 2.0 * h)) / (4.0 * h);
            if (fd_k2 - fd_k).abs() > 1e-3 * (1.0 + fd_k.abs()) {
                return Err(Error::config(format!("piece {pi}: k0 is not smooth near t = {t}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.start).collect()
    }

    /// Index of the piece owning `t`; breakpoints belong to the right piece.
    pub fn piece_index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(self.pieces.iter().rposition(|p| p.start <= t).unwrap_or(0))
    }

    pub fn piece_at(&self, t: f64) -> Result<&Piece> {
        Ok(&self.pieces[self.piece_index(t)?])
    }

    pub fn frame(&self, t: f64) -> Result<Frame> {
        Ok(self.piece_at(t)?.frame(t, self.horizon))
    }
}
