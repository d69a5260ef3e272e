//! JSON descriptions of experiment paths.
//!
//! ```json
//! {"family": "rotation-2d", "horizon": 6.283185307179586, "k0": 6.283185307179586,
//!  "incidence": [1.0, 0.0]}
//! ```
//!
//! Sub-paths of a `piecewise` path are evaluated at the global time `t`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::families::*;
use super::{ExperimentPath, Matrix, PathModel, Vector};
use crate::error::{Error, Result};

/// Fixed orientation: planar angle in 2D, axis plus angle in 3D.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSpec {
    #[serde(default)]
    pub axis: Option<usize>,
    #[serde(default)]
    pub angle: f64,
}

impl RotationSpec {
    fn matrix(&self, dim: usize) -> Result<Matrix> {
        match (dim, self.axis) {
            (2, None) => Ok(rotation_2d(self.angle)),
            (2, Some(_)) => Err(Error::config("2D rotations take no axis")),
            (3, None) if self.angle == 0.0 => Ok(Matrix::identity(3, 3)),
            (3, Some(a)) if a < 3 => Ok(rotation_about_axis(a, self.angle)),
            _ => Err(Error::config("3D rotations need an axis in {0, 1, 2}")),
        }
    }
}

/// `d(t) = origin + velocity t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationSpec {
    pub origin: Vec<f64>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
}

impl TranslationSpec {
    fn build(&self, dim: usize) -> Result<LinearTranslation> {
        let velocity = self.velocity.clone().unwrap_or_else(|| vec![0.0; dim]);
        if self.origin.len() != dim || velocity.len() != dim {
            return Err(Error::config(format!("translation vectors must have length {dim}")));
        }
        Ok(LinearTranslation {
            origin: Vector::from_vec(self.origin.clone()),
            velocity: Vector::from_vec(velocity),
        })
    }
}

fn default_slope() -> f64 {
    1.0
}

fn default_rate() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathSpec {
    Fixed {
        #[serde(default)]
        horizon: Option<f64>,
        k0: f64,
        incidence: Vec<f64>,
        #[serde(default)]
        rotation: RotationSpec,
        #[serde(default)]
        translation: Option<TranslationSpec>,
    },
    AngleScanLinear {
        #[serde(default)]
        horizon: Option<f64>,
        k0: f64,
        offset: f64,
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default)]
        rotation: RotationSpec,
        #[serde(default)]
        translation: Option<TranslationSpec>,
    },
    AngleScanCircular {
        #[serde(default)]
        horizon: Option<f64>,
        k0: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "default_rate")]
        rate: f64,
        #[serde(default)]
        rotation: RotationSpec,
        #[serde(default)]
        translation: Option<TranslationSpec>,
    },
    #[serde(rename = "rotation-2d")]
    Rotation2d {
        #[serde(default)]
        horizon: Option<f64>,
        k0: f64,
        incidence: Vec<f64>,
        #[serde(default = "default_rate")]
        rate: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        translation: Option<TranslationSpec>,
    },
    #[serde(rename = "rotation-3d-axis")]
    Rotation3dAxis {
        #[serde(default)]
        horizon: Option<f64>,
        k0: f64,
        incidence: Vec<f64>,
        axis: usize,
        #[serde(default = "default_rate")]
        rate: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        translation: Option<TranslationSpec>,
    },
    WavenumberSweepLinear {
        #[serde(default)]
        horizon: Option<f64>,
        k_start: f64,
        rate: f64,
        incidence: Vec<f64>,
        #[serde(default)]
        rotation: RotationSpec,
        #[serde(default)]
        translation: Option<TranslationSpec>,
    },
    Piecewise {
        horizon: f64,
        breakpoints: Vec<f64>,
        pieces: Vec<PathSpec>,
    },
}

fn check_unit(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::config(format!("incidence must have length {dim}")));
    }
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::config("incidence must be a nonzero vector"));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive, got {v}")))
    }
}

impl PathSpec {
    fn horizon(&self) -> Option<f64> {
        match self {
            PathSpec::Fixed { horizon, .. }
            | PathSpec::AngleScanLinear { horizon, .. }
            | PathSpec::AngleScanCircular { horizon, .. }
            | PathSpec::Rotation2d { horizon, .. }
            | PathSpec::Rotation3dAxis { horizon, .. }
            | PathSpec::WavenumberSweepLinear { horizon, .. } => *horizon,
            PathSpec::Piecewise { horizon, .. } => Some(*horizon),
        }
    }

    /// Spatial dimension implied by the description.
    pub fn dim(&self) -> usize {
        match self {
            PathSpec::Fixed { incidence, .. }
            | PathSpec::WavenumberSweepLinear { incidence, .. } => incidence.len(),
            PathSpec::AngleScanLinear { .. }
            | PathSpec::AngleScanCircular { .. }
            | PathSpec::Rotation2d { .. } => 2,
            PathSpec::Rotation3dAxis { .. } => 3,
            PathSpec::Piecewise { pieces, .. } => pieces.first().map_or(0, PathSpec::dim),
        }
    }

    fn model(&self) -> Result<Arc<dyn PathModel>> {
        let dim = self.dim();
        let translation = |t: &Option<TranslationSpec>| -> Result<LinearTranslation> {
            t.as_ref().map_or(Ok(LinearTranslation::zero(dim)), |t| t.build(dim))
        };
        Ok(match self {
            PathSpec::Fixed { k0, incidence, rotation, translation: tr, .. } => {
                positive("k0", *k0)?;
                check_unit(incidence, dim)?;
                Fixed::new(dim, rotation.matrix(dim)?, incidence.clone(), *k0)
                    .with_translation(translation(tr)?)
                    .into_model()
            }
            PathSpec::AngleScanLinear { k0, offset, slope, rotation, translation: tr, .. } => {
                positive("k0", *k0)?;
                AngleScanLinear {
                    offset: *offset,
                    slope: *slope,
                    rotation: rotation.matrix(2)?,
                    k0: *k0,
                    translation: translation(tr)?,
                }
                .into_model()
            }
            PathSpec::AngleScanCircular { k0, phase, rate, rotation, translation: tr, .. } => {
                positive("k0", *k0)?;
                AngleScanCircular {
                    phase: *phase,
                    rate: *rate,
                    rotation: rotation.matrix(2)?,
                    k0: *k0,
                    translation: translation(tr)?,
                }
                .into_model()
            }
            PathSpec::Rotation2d { k0, incidence, rate, phase, translation: tr, .. } => {
                positive("k0", *k0)?;
                check_unit(incidence, 2)?;
                Rotation2d::new(*rate, *phase, incidence.clone(), *k0)
                    .with_translation(translation(tr)?)
                    .into_model()
            }
            PathSpec::Rotation3dAxis { k0, incidence, axis, rate, phase, translation: tr, .. } => {
                positive("k0", *k0)?;
                check_unit(incidence, 3)?;
                if *axis > 2 {
                    return Err(Error::config("rotation axis must be 0, 1 or 2"));
                }
                Rotation3dAxis::new(*axis, *rate, *phase, incidence.clone(), *k0)
                    .with_translation(translation(tr)?)
                    .into_model()
            }
            PathSpec::WavenumberSweepLinear { k_start, rate, incidence, rotation, translation: tr, .. } => {
                positive("k_start", *k_start)?;
                check_unit(incidence, dim)?;
                WavenumberSweepLinear::new(*k_start, *rate, rotation.matrix(dim)?, incidence.clone())
                    .with_translation(translation(tr)?)
                    .into_model()
            }
            PathSpec::Piecewise { .. } => {
                return Err(Error::config("piecewise paths cannot be nested"));
            }
        })
    }

    /// Validates the description and builds the path.
    pub fn build(&self) -> Result<ExperimentPath> {
        match self {
            PathSpec::Piecewise { horizon, breakpoints, pieces } => {
                positive("horizon", *horizon)?;
                let models = pieces.iter().map(PathSpec::model).collect::<Result<Vec<_>>>()?;
                let path = ExperimentPath::new(*horizon, breakpoints.clone(), models)?;
                check_sweep(&path)?;
                Ok(path)
            }
            other => {
                let horizon = other
                    .horizon()
                    .ok_or_else(|| Error::config("path needs a positive horizon"))?;
                positive("horizon", horizon)?;
                let path = ExperimentPath::single(horizon, other.model()?)?;
                check_sweep(&path)?;
                Ok(path)
            }
        }
    }
}

/// Linear sweeps must keep `k0` positive over their whole piece.
fn check_sweep(path: &ExperimentPath) -> Result<()> {
    for p in path.pieces() {
        for t in [p.start, p.end] {
            let k = p.model.wavenumber(t);
            if !(k > 0.0) {
                return Err(Error::config(format!("k0({t}) = {k} is not positive")));
            }
        }
    }
    Ok(())
}
