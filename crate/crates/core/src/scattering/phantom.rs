use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Scattering potential sampled on a [`Grid`], supported in the ball of
/// radius `support_radius < r_M` about the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    grid: Grid,
    support_radius: f64,
    values: Vec<Complex64>,
}

impl Phantom {
    /// Voxels outside the support ball are set to zero (with a warning when
    /// any of them carried mass).
    pub fn new(grid: Grid, support_radius: f64, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), actual: values.len() });
        }
        if !(support_radius > 0.0) || support_radius >= grid.half_width {
            return Err(Error::domain(format!(
                "support radius {support_radius} must lie in (0, r_M = {})",
                grid.half_width
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical("phantom contains non-finite values".into()));
        }
        let mut cleared = 0usize;
        for (flat, v) in values.iter_mut().enumerate() {
            let r2: f64 = grid.point(flat).iter().map(|c| c * c).sum();
            if r2 > support_radius * support_radius && *v != Complex64::default() {
                *v = Complex64::default();
                cleared += 1;
            }
        }
        if cleared > 0 {
            log::warn!("zeroed {cleared} voxels outside the support radius {support_radius}");
        }
        Ok(Phantom { grid, support_radius, values })
    }

    pub fn zeros(grid: Grid, support_radius: f64) -> Result<Self> {
        Phantom::new(grid, support_radius, vec![Complex64::default(); grid.len()])
    }

    pub fn from_spec(spec: &PhantomSpec, grid: Grid) -> Result<Self> {
        spec.validate(grid.dim)?;
        let values = (0..grid.len()).map(|flat| spec.value(&grid, flat)).collect();
        Phantom::new(grid, spec.support_radius(&grid), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn scaled(&self, c: Complex64) -> Phantom {
        Phantom {
            grid: self.grid,
            support_radius: self.support_radius,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Built-in phantom generators. Centres and lengths are physical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomSpec {
    /// Truncated at `support_radius`, by default `|center| + 5 sigma`.
    GaussianBlob {
        center: Vec<f64>,
        sigma: f64,
        amplitude: f64,
        #[serde(default)]
        support_radius: Option<f64>,
    },
    Disk {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
    /// `angle` turns the ellipse in the plane of the first two axes.
    Ellipse {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
        #[serde(default)]
        angle: f64,
        amplitude: f64,
    },
    /// Sum of its parts.
    Composite { parts: Vec<PhantomSpec> },
    /// One nonzero voxel at the signed grid index.
    SingleVoxel { index: Vec<i64>, amplitude: f64 },
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl PhantomSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        let check_len = |v: &[f64], what: &str| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(Error::config(format!("phantom {what} must have {dim} entries")))
            }
        };
        match self {
            PhantomSpec::GaussianBlob { center, sigma, support_radius, .. } => {
                check_len(center, "center")?;
                if !(*sigma > 0.0) || support_radius.is_some_and(|r| !(r > 0.0)) {
                    return Err(Error::config("gaussian sigma and support radius must be positive"));
                }
            }
            PhantomSpec::Disk { center, radius, .. } => {
                check_len(center, "center")?;
                if !(*radius > 0.0) {
                    return Err(Error::config("disk radius must be positive"));
                }
            }
            PhantomSpec::Ellipse { center, semi_axes, .. } => {
                check_len(center, "center")?;
                check_len(semi_axes, "semi_axes")?;
                if semi_axes.iter().any(|a| !(*a > 0.0)) {
                    return Err(Error::config("ellipse semi axes must be positive"));
                }
            }
            PhantomSpec::Composite { parts } => {
                if parts.is_empty() {
                    return Err(Error::config("composite phantom needs at least one part"));
                }
                for p in parts {
                    p.validate(dim)?;
                }
            }
            PhantomSpec::SingleVoxel { index, .. } => {
                if index.len() != dim {
                    return Err(Error::config(format!("voxel index must have {dim} entries")));
                }
            }
        }
        Ok(())
    }

    /// Radius of a centred ball containing the generated support.
    pub fn support_radius(&self, grid: &Grid) -> f64 {
        match self {
            PhantomSpec::GaussianBlob { center, sigma, support_radius, .. } => {
                support_radius.unwrap_or(norm(center) + 5.0 * sigma)
            }
            PhantomSpec::Disk { center, radius, .. } => norm(center) + radius,
            PhantomSpec::Ellipse { center, semi_axes, .. } => {
                norm(center) + semi_axes.iter().cloned().fold(0.0, f64::max)
            }
            PhantomSpec::Composite { parts } => {
                parts.iter().map(|p| p.support_radius(grid)).fold(0.0, f64::max)
            }
            PhantomSpec::SingleVoxel { index, .. } => {
                let h = grid.spacing();
                norm(&index.iter().map(|&i| i as f64 * h).collect::<Vec<_>>()) + 0.5 * h
            }
        }
    }

    fn value(&self, grid: &Grid, flat: usize) -> Complex64 {
        let r = grid.point(flat);
        let re = match self {
            PhantomSpec::GaussianBlob { center, sigma, amplitude, .. } => {
                let d2: f64 = r.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-d2 / (2.0 * sigma * sigma)).exp()
            }
            PhantomSpec::Disk { center, radius, amplitude } => {
                let d2: f64 = r.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 <= radius * radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            PhantomSpec::Ellipse { center, semi_axes, angle, amplitude } => {
                let mut u: Vec<f64> = r.iter().zip(center).map(|(a, b)| a - b).collect();
                let (sn, cs) = angle.sin_cos();
                let (a, b) = (u[0], u[1]);
                u[0] = cs * a + sn * b;
                u[1] = -sn * a + cs * b;
                let q: f64 = u.iter().zip(semi_axes).map(|(v, s)| (v / s) * (v / s)).sum();
                if q <= 1.0 {
                    *amplitude
                } else {
                    0.0
                }
            }
            PhantomSpec::Composite { parts } => {
                return parts.iter().map(|p| p.value(grid, flat)).sum();
            }
            PhantomSpec::SingleVoxel { index, amplitude } => {
                if grid.flat(index) == Some(flat) {
                    *amplitude
                } else {
                    0.0
                }
            }
        };
        Complex64::new(re, 0.0)
    }
}
