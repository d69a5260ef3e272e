//! Experiment description shared by all command line steps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coverage::FieldGrid;
use crate::error::{Error, Result};
use crate::geometry::{ExperimentPath, PathSpec};
use crate::grid::Grid;
use crate::ndft::CgOptions;
use crate::recon::Method;
use crate::sampling::{SamplingPlan, XGrid};
use crate::scattering::{DetectorPlane, PhantomSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub real_constraint: bool,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    500
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig { tol: default_tol(), max_iter: default_max_iter(), real_constraint: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatrixConfig {
    /// Cells per axis of the frequency grid.
    #[serde(rename = "Q")]
    pub q: usize,
    /// Time samples of the estimator; 4 N when absent.
    #[serde(rename = "N_est", default)]
    pub n_est: Option<usize>,
    #[serde(default)]
    pub sym: bool,
}

/// Detector patch and evaluation points for the diffraction theorem check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdtConfig {
    pub times: Vec<f64>,
    #[serde(default = "default_ratio")]
    pub max_ratio: f64,
}

fn default_ratio() -> f64 {
    0.7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "r_M")]
    pub r_m: f64,
    #[serde(default)]
    pub x_grid: XGrid,
    pub path: PathSpec,
    pub phantom: PhantomSpec,
    pub method: Method,
    #[serde(default)]
    pub cg: CgConfig,
    pub indicatrix: IndicatrixConfig,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of complex Gaussian noise added to simulated data,
    /// relative to the largest data modulus.
    #[serde(default)]
    pub noise: f64,
    /// Detector patch used by `simulate --oracle` and `fdt-check`.
    #[serde(default)]
    pub detector: Option<DetectorPlane>,
    #[serde(default)]
    pub fdt: Option<FdtConfig>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::config(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if self.path.dim() != self.dim {
            return Err(Error::config(format!("path is {}-dimensional, dim is {}", self.path.dim(), self.dim)));
        }
        if self.p < 2 || self.p % 2 != 0 {
            return Err(Error::config("P must be even and at least 2"));
        }
        if self.m < 2 || self.n < 1 {
            return Err(Error::config("M must be at least 2 and N at least 1"));
        }
        positive("r_M", self.r_m)?;
        positive("cg.tol", self.cg.tol)?;
        if self.cg.max_iter == 0 || self.indicatrix.q == 0 || self.indicatrix.n_est == Some(0) {
            return Err(Error::config("cg.max_iter, indicatrix.Q and indicatrix.N_est must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::config("noise must be nonnegative"));
        }
        if let Some(d) = &self.detector {
            if d.dim != self.dim {
                return Err(Error::config("detector dim differs from dim"));
            }
            positive("detector.half_length", d.half_length)?;
            positive("detector.spacing", d.spacing)?;
            if !(0.0..=1.0).contains(&d.taper) {
                return Err(Error::config("detector.taper must lie in [0, 1]"));
            }
        }
        if let Some(f) = &self.fdt {
            positive("fdt.max_ratio", f.max_ratio)?;
        }
        self.build_path()?;
        Ok(())
    }

    pub fn build_path(&self) -> Result<ExperimentPath> {
        self.path.build()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.p, self.r_m)
    }

    pub fn plan(&self, path: &ExperimentPath) -> Result<SamplingPlan> {
        SamplingPlan::new(path, self.m, self.n, self.x_grid)
    }

    pub fn field_grid(&self, path: &ExperimentPath) -> Result<FieldGrid> {
        FieldGrid::for_path(path, self.indicatrix.q)
    }

    pub fn n_est(&self) -> usize {
        self.indicatrix.n_est.unwrap_or(4 * self.n)
    }

    pub fn cg_options(&self) -> CgOptions {
        CgOptions { max_iter: self.cg.max_iter, tol: self.cg.tol, real_constraint: self.cg.real_constraint }
    }

    /// The configured detector, or a patch on `r_d = r_M` wide enough for
    /// the diffraction theorem check at moderate accuracy.
    pub fn detector(&self) -> DetectorPlane {
        self.detector.unwrap_or(DetectorPlane {
            dim: self.dim,
            offset: self.r_m,
            half_length: 10.0 * self.r_m,
            spacing: self.r_m / 16.0,
            taper: 0.25,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "dim": 2, "P": 16, "M": 32, "N": 32, "r_M": 3.0,
            "path": {"family": "rotation-2d", "horizon": 6.283185307179586, "k0": 6.283185307179586, "incidence": [1, 0]},
            "phantom": {"kind": "disk", "center": [0, 0], "radius": 1.0, "amplitude": 1.0},
            "method": "bp",
            "indicatrix": {"Q": 64}
        })
    }

    #[test]
    fn parses_defaults() {
        let cfg = ExperimentConfig::from_json(&base().to_string()).unwrap();
        assert_eq!(cfg.x_grid, XGrid::Uniform);
        assert_eq!(cfg.n_est(), 128);
        assert_eq!(cfg.cg, CgConfig::default());
        assert_eq!(cfg.detector().offset, 3.0);
    }

    #[test]
    fn rejects_bad_documents() {
        let mut cases = Vec::new();
        let mut v = base();
        v["bogus"] = 1.into();
        cases.push(v);
        let mut v = base();
        v["r_M"] = (-1.0).into();
        cases.push(v);
        let mut v = base();
        v["P"] = 15.into();
        cases.push(v);
        let mut v = base();
        v["dim"] = 3.into();
        cases.push(v);
        let mut v = base();
        v["method"] = "fbp".into();
        cases.push(v);
        let mut v = base();
        v["cg"] = serde_json::json!({"tol": 0.0});
        cases.push(v);
        for c in cases {
            let err = ExperimentConfig::from_json(&c.to_string()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{c}: {err}");
        }
    }
}
