//! The pipeline steps behind the `difftomo` binary. Every step reads and
//! writes files so that steps compose through a shell.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::coverage::{coverage_mask, indicatrix_field, FieldGrid, IndicatrixField};
use crate::error::{Error, Result};
use crate::geometry::ExperimentPath;
use crate::io::{write_pgm, NbinArray};
use crate::metrics::{mse, psnr, ssim, MetricReport, PSNR_CAP_DB};
use crate::recon::{
    backpropagate, backpropagate_sym, fy_oracle, inverse_ndft_reconstruct, CardSource, Method, Volume,
};
use crate::sampling::frequency_nodes;
use crate::scattering::{fdt_check, forward_direct_sinogram, forward_ndft_plan, FdtReport, Phantom, Sinogram};

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn kind_of(a: &NbinArray) -> String {
    a.meta.get("kind").and_then(|v| v.as_str()).unwrap_or("").to_string()
}

fn expect_kind(a: &NbinArray, kind: &str, path: &Path) -> Result<()> {
    let found = kind_of(a);
    if found == kind {
        Ok(())
    } else {
        Err(Error::Format(format!("{} holds a {found:?} array, expected {kind:?}", path.display())))
    }
}

pub fn phantom_array(phantom: &Phantom) -> Result<NbinArray> {
    NbinArray::complex(phantom.grid().shape(), phantom.values().to_vec())?
        .with_meta("kind", "phantom")?
        .with_meta("r_M", phantom.grid().half_width)?
        .with_meta("support_radius", phantom.support_radius())
}

pub fn read_phantom(path: &Path, cfg: &ExperimentConfig) -> Result<Phantom> {
    let a = NbinArray::read(path)?;
    expect_kind(&a, "phantom", path)?;
    let grid = cfg.grid()?;
    if a.shape != grid.shape() {
        return Err(Error::SizeMismatch { expected: grid.len(), actual: a.data.len() });
    }
    let r_m: f64 = a.meta_as("r_M")?;
    if r_m != cfg.r_m {
        return Err(Error::Format(format!("phantom was generated for r_M = {r_m}, config has {}", cfg.r_m)));
    }
    Phantom::new(grid, a.meta_as("support_radius")?, a.data.to_complex())
}

/// `phantom.nbin` and its preview.
pub fn cmd_phantom(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let phantom = Phantom::from_spec(&cfg.phantom, cfg.grid()?)?;
    let file = out.join("phantom.nbin");
    phantom_array(&phantom)?.write(&file)?;
    write_pgm(&out.join("phantom.pgm"), &phantom.real_part(), &phantom.grid().shape())?;
    Ok(file)
}

fn sinogram_shape(sino: &Sinogram) -> Vec<usize> {
    vec![sino.plan.n_t(), sino.plan.n_x()]
}

pub fn sinogram_array(sino: &Sinogram, cfg: &ExperimentConfig) -> Result<NbinArray> {
    NbinArray::complex(sinogram_shape(sino), sino.data.clone())?
        .with_meta("kind", "sinogram")?
        .with_meta("r_M", sino.r_m)?
        .with_meta("M", cfg.m)?
        .with_meta("N", cfg.n)?
        .with_meta("x_grid", cfg.x_grid)?
        .with_meta("path", &cfg.path)
}

pub fn read_sinogram(path: &Path, cfg: &ExperimentConfig, exp: &ExperimentPath) -> Result<Sinogram> {
    let a = NbinArray::read(path)?;
    expect_kind(&a, "sinogram", path)?;
    let plan = cfg.plan(exp)?;
    let (m, n): (usize, usize) = (a.meta_as("M")?, a.meta_as("N")?);
    if m != cfg.m || n != cfg.n || a.meta_as::<crate::sampling::XGrid>("x_grid")? != cfg.x_grid {
        return Err(Error::Format("sinogram was sampled with a different M, N or x_grid".into()));
    }
    if a.meta_as::<serde_json::Value>("path")? != serde_json::to_value(&cfg.path)? {
        return Err(Error::Format("sinogram was simulated for a different path".into()));
    }
    let (_, valid) = frequency_nodes(&plan, exp)?;
    let sino = Sinogram { plan, r_m: a.meta_as("r_M")?, data: a.data.to_complex(), valid };
    if a.shape != sinogram_shape(&sino) {
        return Err(Error::SizeMismatch { expected: sino.plan.len(), actual: sino.data.len() });
    }
    Ok(sino)
}

fn add_noise(sino: &mut Sinogram, level: f64, seed: u64) {
    if level == 0.0 {
        return;
    }
    let peak = sino.data.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let sigma = level * peak / 2f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (v, ok) in sino.data.iter_mut().zip(&sino.valid) {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if *ok {
            *v += sigma * Complex64::new(re, im);
        }
    }
}

/// Simulate Born data for the configured phantom (or the one in
/// `phantom_file`). With `oracle` the field is computed by direct
/// quadrature on the detector patch instead of the NDFT.
pub fn cmd_simulate(cfg: &ExperimentConfig, phantom_file: Option<&Path>, out: &Path, oracle: bool) -> Result<PathBuf> {
    ensure_dir(out)?;
    let exp = cfg.build_path()?;
    let phantom = match phantom_file {
        Some(p) => read_phantom(p, cfg)?,
        None => Phantom::from_spec(&cfg.phantom, cfg.grid()?)?,
    };
    let plan = cfg.plan(&exp)?;
    let mut sino = if oracle {
        let plane = cfg.detector();
        if plane.offset != cfg.r_m {
            return Err(Error::config("the detector offset must equal r_M"));
        }
        forward_direct_sinogram(&phantom, &exp, plan, &plane)?
    } else {
        forward_ndft_plan(&phantom, &exp, plan, cfg.r_m)?
    };
    add_noise(&mut sino, cfg.noise, cfg.seed);
    let file = out.join("sinogram.nbin");
    sinogram_array(&sino, cfg)?.with_meta("oracle", oracle)?.write(&file)?;
    Ok(file)
}

pub fn field_array(field: &IndicatrixField, kind: &str) -> Result<NbinArray> {
    let g = field.grid;
    NbinArray::real(vec![g.q; g.dim], field.values.iter().map(|&v| v as f64).collect())?
        .with_meta("kind", kind)?
        .with_meta("extent", g.extent)?
        .with_meta("sym", field.sym)
}

pub fn read_field(path: &Path) -> Result<IndicatrixField> {
    let a = NbinArray::read(path)?;
    let kind = kind_of(&a);
    if kind != "indicatrix" && kind != "coverage" {
        return Err(Error::Format(format!("{} holds no indicatrix field", path.display())));
    }
    let grid = FieldGrid::new(a.shape.len(), a.shape[0], a.meta_as("extent")?)?;
    if a.shape.iter().any(|&q| q != grid.q) {
        return Err(Error::Format("indicatrix grids must be cubic".into()));
    }
    let values = a
        .data
        .real_part()
        .into_iter()
        .map(|v| if v >= 0.0 && v.fract() == 0.0 { Ok(v as u32) } else { Err(Error::Format(format!("bad count {v}"))) })
        .collect::<Result<_>>()?;
    Ok(IndicatrixField { grid, sym: a.meta_as("sym")?, values })
}

fn write_field(field: &IndicatrixField, kind: &str, out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let file = out.join(format!("{kind}.nbin"));
    field_array(field, kind)?.write(&file)?;
    let shape = vec![field.grid.q; field.grid.dim];
    let values: Vec<f64> = field.values.iter().map(|&v| v as f64).collect();
    write_pgm(&out.join(format!("{kind}.pgm")), &values, &shape)?;
    Ok(file)
}

/// Estimated Banach indicatrix on the configured frequency grid.
pub fn cmd_indicatrix(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let exp = cfg.build_path()?;
    let field = indicatrix_field(&exp, cfg.field_grid(&exp)?, cfg.n_est(), cfg.indicatrix.sym)?;
    write_field(&field, "indicatrix", out)
}

/// Rasterized Fourier coverage.
pub fn cmd_coverage(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let exp = cfg.build_path()?;
    let mask = coverage_mask(&exp, cfg.field_grid(&exp)?, cfg.indicatrix.sym, cfg.n_est())?;
    write_field(&mask, "coverage", out)
}

pub fn volume_array(vol: &Volume) -> Result<NbinArray> {
    NbinArray::complex(vol.grid.shape(), vol.values.clone())?
        .with_meta("kind", "volume")?
        .with_meta("method", vol.method)?
        .with_meta("r_M", vol.grid.half_width)?
        .with_meta("converged", vol.converged)?
        .with_meta("params", &vol.params)
}

/// Metrics with an SSIM of NaN (`null` in JSON) for images too small for
/// its window.
pub fn metric_report(reference: &[f64], candidate: &[f64], shape: &[usize]) -> Result<MetricReport> {
    let p = psnr(reference, candidate)?;
    let s = match ssim(reference, candidate, shape) {
        Ok(s) => s,
        Err(Error::InvalidArgument(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok(MetricReport { psnr_db: p.min(PSNR_CAP_DB), ssim: s, mse: mse(reference, candidate)? })
}

pub struct ReconstructInputs<'a> {
    pub sinogram: Option<&'a Path>,
    pub indicatrix: Option<&'a Path>,
    pub truth: Option<&'a Path>,
}

fn card_field(cfg: &ExperimentConfig, exp: &ExperimentPath, file: Option<&Path>, sym: bool) -> Result<IndicatrixField> {
    let field = match file {
        Some(p) => read_field(p)?,
        None => indicatrix_field(exp, cfg.field_grid(exp)?, cfg.n_est(), sym)?,
    };
    if field.sym != sym {
        return Err(Error::config(format!("{} needs an indicatrix with sym = {sym}", cfg.method.as_str())));
    }
    Ok(field)
}

/// Reconstruct with the configured method and write `volume.nbin`, a
/// preview, `residuals.csv` for the inverse NDFT and `metrics.json` when
/// a ground truth is given.
pub fn cmd_reconstruct(cfg: &ExperimentConfig, inputs: ReconstructInputs, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let exp = cfg.build_path()?;
    let truth = inputs.truth.map(|p| read_phantom(p, cfg)).transpose()?;
    let sino = || -> Result<Sinogram> {
        let file = inputs.sinogram.ok_or_else(|| Error::config("this method needs --sinogram"))?;
        read_sinogram(file, cfg, &exp)
    };
    let vol = match cfg.method {
        Method::Bp => {
            let card = card_field(cfg, &exp, inputs.indicatrix, false)?;
            backpropagate(&sino()?, &exp, cfg.p, CardSource::Field(&card))?
        }
        Method::BpSym => {
            let card = card_field(cfg, &exp, inputs.indicatrix, true)?;
            backpropagate_sym(&sino()?, &exp, cfg.p, CardSource::Field(&card))?
        }
        Method::InverseNdft => inverse_ndft_reconstruct(&sino()?, &exp, cfg.p, cfg.cg_options())?,
        Method::Oracle => {
            let phantom = match &truth {
                Some(t) => t.clone(),
                None => Phantom::from_spec(&cfg.phantom, cfg.grid()?)?,
            };
            let mask = match inputs.indicatrix {
                Some(p) => read_field(p)?,
                None => coverage_mask(&exp, cfg.field_grid(&exp)?, cfg.indicatrix.sym, cfg.n_est())?,
            };
            fy_oracle(&phantom, &mask)?
        }
    };
    let vol = vol
        .with_param("path", serde_json::to_value(&cfg.path)?)
        .with_param("M", cfg.m)
        .with_param("N", cfg.n)
        .with_param("tol", cfg.cg.tol);
    let mut files = vec![out.join("volume.nbin")];
    volume_array(&vol)?.write(&files[0])?;
    let shape = vol.grid.shape();
    if vol.grid.dim >= 2 {
        files.push(out.join("volume.pgm"));
        write_pgm(&files[1], &vol.real_part(), &shape)?;
    }
    if cfg.method == Method::InverseNdft {
        let file = out.join("residuals.csv");
        let mut text = String::from("iteration,residual\n");
        for (i, r) in vol.residual_history.iter().enumerate() {
            text.push_str(&format!("{},{r:e}\n", i + 1));
        }
        fs::write(&file, text)?;
        files.push(file);
    }
    if let Some(t) = truth {
        let report = metric_report(&t.real_part(), &vol.real_part(), &shape)?;
        let file = out.join("metrics.json");
        fs::write(&file, serde_json::to_string_pretty(&report)?)?;
        files.push(file);
    }
    Ok(files)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareEntry {
    pub file: String,
    #[serde(flatten)]
    pub report: MetricReport,
}

/// PSNR, SSIM and MSE of each volume's real part against the reference,
/// best PSNR first.
pub fn cmd_compare(volumes: &[PathBuf], reference: &Path) -> Result<Vec<CompareEntry>> {
    let r = NbinArray::read(reference)?;
    let reference_values = r.data.real_part();
    let mut entries = Vec::with_capacity(volumes.len());
    for v in volumes {
        let a = NbinArray::read(v)?;
        if a.shape != r.shape {
            return Err(Error::SizeMismatch { expected: r.data.len(), actual: a.data.len() });
        }
        let report = metric_report(&reference_values, &a.data.real_part(), &r.shape)?;
        entries.push(CompareEntry { file: v.display().to_string(), report });
    }
    entries.sort_by(|a, b| b.report.psnr_db.total_cmp(&a.report.psnr_db));
    Ok(entries)
}

/// Diffraction theorem check at the configured times (default `t = 0`).
pub fn cmd_fdt_check(cfg: &ExperimentConfig) -> Result<Vec<FdtReport>> {
    let exp = cfg.build_path()?;
    let phantom = Phantom::from_spec(&cfg.phantom, cfg.grid()?)?;
    let plane = cfg.detector();
    let (times, ratio) = match &cfg.fdt {
        Some(f) => (f.times.clone(), f.max_ratio),
        None => (vec![0.0], 0.7),
    };
    times.iter().map(|&t| fdt_check(&phantom, &exp, t, &plane, ratio)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(
            &serde_json::json!({
                "dim": 2, "P": 16, "M": 24, "N": 24, "r_M": 3.0,
                "path": {"family": "rotation-2d", "horizon": 6.283185307179586, "k0": 4.0, "incidence": [1, 0]},
                "phantom": {"kind": "gaussian-blob", "center": [0.2, 0], "sigma": 0.5, "amplitude": 1.0, "support_radius": 2.5},
                "method": method,
                "cg": {"tol": 1e-4, "max_iter": 50},
                "indicatrix": {"Q": 32}
            })
            .to_string(),
        )
        .unwrap()
    }

    #[test]
    fn pipeline_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("inverse-ndft");
        let ph = cmd_phantom(&cfg, dir.path()).unwrap();
        let sino = cmd_simulate(&cfg, Some(&ph), dir.path(), false).unwrap();
        let again = cmd_simulate(&cfg, None, &dir.path().join("b"), false).unwrap();
        assert_eq!(fs::read(&sino).unwrap(), fs::read(&again).unwrap());
        let inputs = ReconstructInputs { sinogram: Some(&sino), indicatrix: None, truth: Some(&ph) };
        let files = cmd_reconstruct(&cfg, inputs, dir.path()).unwrap();
        assert!(files.iter().any(|f| f.ends_with("residuals.csv")));
        let csv = fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
        assert!(csv.starts_with("iteration,residual\n") && csv.lines().count() > 1);
        let table = cmd_compare(&[files[0].clone(), ph.clone()], &ph).unwrap();
        assert_eq!(table[0].report.psnr_db, PSNR_CAP_DB);
        assert!(table[0].file.ends_with("phantom.nbin"));
    }

    #[test]
    fn sym_volume_is_real_and_fields_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("bp-sym");
        let sino = cmd_simulate(&cfg, None, dir.path(), false).unwrap();
        let mut sym_cfg = cfg.clone();
        sym_cfg.indicatrix.sym = true;
        let field_file = cmd_indicatrix(&sym_cfg, dir.path()).unwrap();
        let field = read_field(&field_file).unwrap();
        assert!(field.sym);
        let inputs = ReconstructInputs { sinogram: Some(&sino), indicatrix: Some(&field_file), truth: None };
        let files = cmd_reconstruct(&cfg, inputs, dir.path()).unwrap();
        let v = NbinArray::read(&files[0]).unwrap();
        assert!(v.data.to_complex().iter().all(|c| c.im == 0.0));
        let plain = cmd_indicatrix(&cfg, &dir.path().join("plain")).unwrap();
        let inputs = ReconstructInputs { sinogram: Some(&sino), indicatrix: Some(&plain), truth: None };
        assert!(cmd_reconstruct(&cfg, inputs, dir.path()).is_err());
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("bp");
        let sino = cmd_simulate(&cfg, None, dir.path(), false).unwrap();
        let mut other = cfg.clone();
        other.m = 20;
        let exp = other.build_path().unwrap();
        assert!(read_sinogram(&sino, &other, &exp).is_err());
        assert!(read_phantom(&sino, &cfg).is_err());
        let small = NbinArray::real(vec![4, 4], vec![1.0; 16]).unwrap();
        let f = dir.path().join("small.nbin");
        small.write(&f).unwrap();
        let vol = cmd_phantom(&cfg, dir.path()).unwrap();
        assert!(cmd_compare(&[f], &vol).is_err());
    }
}
