use std::f64::consts::PI;
use std::time::{Duration, Instant};

use difftomo::coverage::{
    coverage_mask, indicatrix_analytic_anglerot, indicatrix_field, FieldGrid, IndicatrixField,
};
use difftomo::geometry::{jacobian_det, jacobian_det_fd, transform_t, ExperimentPath, PathSpec};
use difftomo::grid::Grid;
use difftomo::metrics::psnr;
use difftomo::ndft::{ndft_adjoint_hermitian, ndft_forward, CgOptions, NodeSet};
use difftomo::recon::{backpropagate, backpropagate_sym, fy_oracle, inverse_ndft_reconstruct, CardSource};
use difftomo::sampling::XGrid;
use difftomo::scattering::{
    fdt_check, forward_ndft, generalized_fdt_rhs, DetectorPlane, Phantom, PhantomSpec,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{FftDirection, FftPlanner};
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn path(doc: serde_json::Value) -> ExperimentPath {
    serde_json::from_value::<PathSpec>(doc).unwrap().build().unwrap()
}

fn rotation(incidence: [f64; 2], horizon: f64, k0: f64) -> ExperimentPath {
    path(json!({"family": "rotation-2d", "horizon": horizon, "k0": k0, "incidence": incidence}))
}

fn two_scans(k0: f64) -> ExperimentPath {
    path(json!({
        "family": "piecewise", "horizon": 2.0 * PI, "breakpoints": [PI],
        "pieces": [
            {"family": "angle-scan-circular", "k0": k0},
            {"family": "angle-scan-circular", "k0": k0, "phase": -PI, "rotation": {"angle": PI / 2.0}}
        ]
    }))
}

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn c1_adjointness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<f64> = (0..1000).map(|_| rng.random_range(-PI..PI)).collect();
    let nodes = NodeSet::new(2, 16, pts).unwrap();
    let f = random_complex(&mut rng, 256);
    let a = random_complex(&mut rng, 500);
    let af = ndft_forward(&f, &nodes).unwrap();
    let aha = ndft_adjoint_hermitian(&a, &nodes).unwrap();
    let lhs: Complex64 = af.iter().zip(&a).map(|(x, y)| x * y.conj()).sum();
    let rhs: Complex64 = f.iter().zip(&aha).map(|(x, y)| x * y.conj()).sum();
    let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let err = (lhs - rhs).norm() / (norm(&f) * norm(&a));
    outcome(err <= 1e-10, format!("relative defect {err:.2e}"))
}

fn c2_equispaced() -> Outcome {
    let p = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_complex(&mut rng, p);
    let pts: Vec<f64> = (0..p).map(|j| 2.0 * PI * j as f64 / p as f64).collect();
    let nodes = NodeSet::new(1, p, pts).unwrap();
    let got = ndft_forward(&f, &nodes).unwrap();
    let mut want = f.clone();
    FftPlanner::new().plan_fft(p, FftDirection::Inverse).process(&mut want);
    // Grid index k carries the coordinate k - P/2, hence the (-1)^j shift.
    let err = got
        .iter()
        .zip(&want)
        .enumerate()
        .map(|(j, (g, w))| (g - w * if j % 2 == 0 { 1.0 } else { -1.0 }).norm())
        .fold(0.0, f64::max);
    outcome(err <= 1e-12, format!("max deviation {err:.2e}"))
}

fn c3_jacobian_fd() -> Outcome {
    let k0 = 2.0 * PI;
    let families = [
        ("rotation-2d", rotation([0.6, 0.8], 2.0 * PI, k0)),
        ("angle-scan", path(json!({"family": "angle-scan-circular", "horizon": PI, "k0": k0, "rate": 0.7,
                                    "rotation": {"angle": 0.4}}))),
        ("k0-sweep", path(json!({"family": "wavenumber-sweep-linear", "horizon": 1.0, "k_start": 3.0,
                                  "rate": 2.0, "incidence": [0.0, 1.0], "rotation": {"angle": 0.3}}))),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for (_, p) in &families {
        for _ in 0..1000 {
            let eps = 1e-5;
            let t = rng.random_range(eps..p.horizon() - eps);
            let k = p.frame(t).unwrap().k0;
            let x = [rng.random_range(-0.95..0.95) * k];
            let exact = jacobian_det(&x, t, p).unwrap();
            let fd = jacobian_det_fd(&x, t, p, eps).unwrap();
            worst = worst.max((exact - fd).abs() / exact.abs().max(1e-3));
        }
    }
    outcome(worst <= 1e-5, format!("worst relative error {worst:.2e} over 3000 samples"))
}

fn c4_closed_form_jacobians() -> Outcome {
    let k0 = 2.0 * PI;
    let trans = rotation([0.0, 1.0], 2.0 * PI, k0);
    let refl = rotation([1.0, 0.0], 2.0 * PI, k0);
    let mut worst: f64 = 0.0;
    for i in 1..200 {
        let x = k0 * (-1.0 + 2.0 * i as f64 / 200.0) * 0.999;
        let t = 0.031 * i as f64;
        let kap = (k0 * k0 - x * x).sqrt();
        let a = jacobian_det(&[x], t, &trans).unwrap().abs();
        let b = jacobian_det(&[x], t, &refl).unwrap().abs();
        let want_a = k0 * x.abs() / kap;
        worst = worst.max((a - want_a).abs() / want_a.max(1.0)).max((b - k0).abs() / k0);
    }
    outcome(worst <= 1e-12, format!("worst relative error {worst:.2e}"))
}

fn c5_fdt() -> Outcome {
    let k0 = 2.0 * PI;
    let r_m = 20.0;
    let grid = Grid::new(2, 64, r_m).unwrap();
    let spec = PhantomSpec::GaussianBlob { center: vec![0.5, -0.3], sigma: 1.0, amplitude: 1.0, support_radius: None };
    let phantom = Phantom::from_spec(&spec, grid).unwrap();
    let p = rotation([0.0, 1.0], 2.0 * PI, k0);
    let plane = DetectorPlane { dim: 2, offset: r_m, half_length: 200.0, spacing: 0.25, taper: 0.25 };
    let mut worst: f64 = 0.0;
    for t in [0.0, 1.1, 2.6] {
        worst = worst.max(fdt_check(&phantom, &p, t, &plane, 0.7).unwrap().relative_l2);
    }
    outcome(worst <= 0.03, format!("worst relative l2 {worst:.2e} over 3 angles"))
}

fn c6_fdt_split() -> Outcome {
    let grid = Grid::new(2, 16, 4.0).unwrap();
    let h = grid.spacing();
    let voxels = [([2i64, -3i64], Complex64::new(0.7, 0.2)), ([-1, 2], Complex64::new(-0.4, 1.1))];
    let mut values = vec![Complex64::default(); grid.len()];
    for (idx, v) in &voxels {
        values[grid.flat(idx).unwrap()] = *v;
    }
    let source = Phantom::new(grid, 3.5, values).unwrap();
    let k0 = 2.0;
    let r_d = 0.3 * h;
    let mut worst: f64 = 0.0;
    for x in [-1.6, -0.5, 0.0, 0.9, 1.7, 2.5, 3.2] {
        let got = generalized_fdt_rhs(&source, &[x], r_d, k0).unwrap();
        let kap = if x * x < k0 * k0 {
            Complex64::new((k0 * k0 - x * x).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (x * x - k0 * k0).sqrt())
        };
        // A single voxel radiates sqrt(pi/2) i / kappa e^{-i x r_1} e^{i kappa |r_2 - r_d|}.
        let mut want = Complex64::default();
        for (idx, v) in &voxels {
            let r = [idx[0] as f64 * h, idx[1] as f64 * h];
            let phase = Complex64::i() * (kap * (r[1] - r_d).abs() - x * r[0]);
            want += (PI / 2.0).sqrt() * Complex64::i() / kap * h * h / (2.0 * PI) * v * phase.exp();
        }
        worst = worst.max((got - want).norm() / want.norm());
    }
    outcome(worst <= 1e-10, format!("worst relative deviation {worst:.2e}"))
}

fn gaussian(grid: Grid, sigma: f64, support: f64) -> Phantom {
    let spec = PhantomSpec::GaussianBlob { center: vec![0.25, -0.15], sigma, amplitude: 1.0, support_radius: Some(support) };
    Phantom::from_spec(&spec, grid).unwrap()
}

fn c7_bp_oracle() -> Outcome {
    let k0 = 2.0 * PI;
    let r_m = 3.0;
    let p = rotation([1.0, 0.0], 2.0 * PI, k0);
    let grid = Grid::new(2, 32, r_m).unwrap();
    let phantom = gaussian(grid, 0.4, 2.5);
    let fg = FieldGrid::for_path(&p, 128).unwrap();
    let card = indicatrix_field(&p, fg, 1024, false).unwrap();
    let mask = coverage_mask(&p, fg, false, 1024).unwrap();
    let oracle = fy_oracle(&phantom, &mask).unwrap();
    let err = |x_grid| {
        let sino = forward_ndft(&phantom, &p, 256, 256, r_m, x_grid).unwrap();
        let bp = backpropagate(&sino, &p, 32, CardSource::Field(&card)).unwrap();
        rel_l2(&bp.values, &oracle.values)
    };
    // The uniform x grid resolves the low frequencies of the reflection
    // geometry only at first order; its error is reported, not asserted.
    let (cheb, uniform) = (err(XGrid::Chebyshev), err(XGrid::Uniform));
    outcome(cheb <= 0.05, format!("relative l2 to the masked oracle {cheb:.2e} (chebyshev), {uniform:.2e} (uniform)"))
}

fn c8_indicatrix() -> Outcome {
    let k0 = 2.0 * PI;
    let p = two_scans(k0);
    let fg = FieldGrid::for_path(&p, 128).unwrap();
    let field = indicatrix_field(&p, fg, 2048, false).unwrap();
    let band = 2.0 * fg.cell();
    let centres = [[k0, 0.0], [-k0, 0.0], [0.0, k0], [0.0, -k0]];
    let (mut agree, mut total) = (0usize, 0usize);
    for i in 0..fg.len() {
        let y = fg.point(i);
        let near = centres.iter().any(|c| (((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2)).sqrt() - k0).abs() < band);
        if near {
            continue;
        }
        total += 1;
        agree += usize::from(field.values[i] == indicatrix_analytic_anglerot(&y, k0));
    }
    let rate = agree as f64 / total as f64;
    outcome(rate >= 0.98, format!("agreement {:.2}% on {total} interior nodes", 100.0 * rate))
}

fn c9_symmetrization() -> Outcome {
    let k0 = 2.0 * PI;
    let r_m = 3.0;
    let grid = Grid::new(2, 32, r_m).unwrap();
    let phantom = gaussian(grid, 0.4, 2.5);
    let mut detail = Vec::new();
    let mut pass = true;
    for (label, horizon, factor) in [("half turn", PI, 2.0), ("full turn", 2.0 * PI, 1.0)] {
        let p = rotation([1.0, 0.0], horizon, k0);
        let sino = forward_ndft(&phantom, &p, 128, 128, r_m, XGrid::Uniform).unwrap();
        let fg = FieldGrid::for_path(&p, 128).unwrap();
        let card = indicatrix_field(&p, fg, 1024, false).unwrap();
        let card_sym = indicatrix_field(&p, fg, 1024, true).unwrap();
        let plain = backpropagate(&sino, &p, 32, CardSource::Field(&card)).unwrap();
        let sym = backpropagate_sym(&sino, &p, 32, CardSource::Field(&card_sym)).unwrap();
        let want: Vec<Complex64> = plain.values.iter().map(|v| Complex64::new(factor * v.re, 0.0)).collect();
        let err = rel_l2(&sym.values, &want);
        pass &= err <= 1e-8;
        detail.push(format!("{label} {err:.2e}"));
    }
    outcome(pass, detail.join(", "))
}

fn union(a: &IndicatrixField, b: &IndicatrixField) -> IndicatrixField {
    let values = a.values.iter().zip(&b.values).map(|(x, y)| u32::from(*x > 0 || *y > 0)).collect();
    IndicatrixField { grid: a.grid, sym: false, values }
}

fn c10_monotone() -> Outcome {
    let k0 = 2.0 * PI;
    let grid = Grid::new(2, 32, 3.0).unwrap();
    let disks = PhantomSpec::Composite {
        parts: vec![
            PhantomSpec::Disk { center: vec![0.0, 0.0], radius: 1.8, amplitude: 1.0 },
            PhantomSpec::Disk { center: vec![0.6, 0.4], radius: 0.5, amplitude: -0.5 },
        ],
    };
    let phantom = Phantom::from_spec(&disks, grid).unwrap();
    let fg = FieldGrid::new(2, 128, 4.0 * k0).unwrap();
    let masks: Vec<IndicatrixField> = [PI / 2.0, PI, 2.0 * PI]
        .iter()
        .map(|&h| coverage_mask(&rotation([0.0, 1.0], h, k0), fg, false, 512).unwrap())
        .collect();
    let m1 = masks[0].clone();
    let m2 = union(&m1, &masks[1]);
    let m3 = union(&m2, &masks[2]);
    let errs: Vec<f64> = [&m1, &m2, &m3]
        .iter()
        .map(|m| {
            let v = fy_oracle(&phantom, m).unwrap();
            v.values.iter().zip(phantom.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    let pass = errs[1] <= errs[0] && errs[2] <= errs[1];
    outcome(pass, format!("errors {:.4} >= {:.4} >= {:.4}", errs[0], errs[1], errs[2]))
}

fn c11_indicatrix_needed() -> Outcome {
    let k0 = 2.0 * PI;
    let r_m = 3.0;
    let p = two_scans(k0);
    let grid = Grid::new(2, 48, r_m).unwrap();
    let spec = PhantomSpec::Composite {
        parts: vec![
            PhantomSpec::Disk { center: vec![0.0, 0.0], radius: 1.6, amplitude: 1.0 },
            PhantomSpec::Disk { center: vec![-0.5, 0.4], radius: 0.45, amplitude: 0.6 },
            PhantomSpec::Disk { center: vec![0.6, -0.3], radius: 0.3, amplitude: -0.5 },
        ],
    };
    let phantom = Phantom::from_spec(&spec, grid).unwrap();
    let sino = forward_ndft(&phantom, &p, 256, 256, r_m, XGrid::Uniform).unwrap();
    let fg = FieldGrid::for_path(&p, 128).unwrap();
    let card = indicatrix_field(&p, fg, 2048, false).unwrap();
    let with = backpropagate(&sino, &p, 48, CardSource::Field(&card)).unwrap();
    let without = backpropagate(&sino, &p, 48, CardSource::Constant(1)).unwrap();
    let reference = phantom.real_part();
    let a = psnr(&reference, &with.real_part()).unwrap();
    let b = psnr(&reference, &without.real_part()).unwrap();
    outcome(a >= b + 1.0, format!("PSNR {a:.2} dB with indicatrix, {b:.2} dB with Card = 1"))
}

fn c12_inverse_ndft() -> Outcome {
    let k0 = 2.0 * PI;
    let r_m = 3.0;
    let p = rotation([1.0, 0.0], 2.0 * PI, k0);
    let grid = Grid::new(2, 24, r_m).unwrap();
    let phantom = gaussian(grid, 0.45, 2.5);
    let sino = forward_ndft(&phantom, &p, 96, 96, r_m, XGrid::Uniform).unwrap();
    let options = CgOptions { max_iter: 400, tol: 1e-8, real_constraint: false };
    let vol = inverse_ndft_reconstruct(&sino, &p, 24, options).unwrap();
    let err = rel_l2(&vol.values, phantom.values());
    let iters = vol.residual_history.len();
    outcome(err <= 0.01, format!("relative l2 {err:.2e} after {iters} CG iterations"))
}

fn c13_coverage_bound() -> Outcome {
    let docs = [
        json!({"family": "fixed", "horizon": 1.0, "k0": 3.0, "incidence": [0.0, 1.0]}),
        json!({"family": "angle-scan-linear", "horizon": 2.4, "k0": 2.0 * PI, "offset": -1.2}),
        json!({"family": "angle-scan-circular", "horizon": PI, "k0": 2.0 * PI}),
        json!({"family": "rotation-2d", "horizon": 2.0 * PI, "k0": 2.0 * PI, "incidence": [1.0, 0.0],
               "translation": {"origin": [0.3, 0.1], "velocity": [0.1, 0.0]}}),
        json!({"family": "rotation-3d-axis", "horizon": 2.0 * PI, "k0": 5.0, "incidence": [0.0, 0.0, 1.0], "axis": 0}),
        json!({"family": "wavenumber-sweep-linear", "horizon": 2.0, "k_start": 1.0, "rate": 2.0,
               "incidence": [0.0, 0.0, 1.0]}),
        json!({"family": "piecewise", "horizon": 2.0 * PI, "breakpoints": [PI], "pieces": [
            {"family": "angle-scan-circular", "k0": 2.0 * PI},
            {"family": "angle-scan-circular", "k0": 2.0 * PI, "phase": -PI, "rotation": {"angle": PI / 2.0}}]}),
    ];
    let paths: Vec<ExperimentPath> = docs.into_iter().map(path).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..100_000 {
        let p = &paths[i % paths.len()];
        let t = rng.random_range(0.0..p.horizon());
        let k = p.frame(t).unwrap().k0;
        let x: Vec<f64> = loop {
            let x: Vec<f64> = (0..p.dim() - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            if x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                break x.iter().map(|v| v * k).collect();
            }
        };
        let y = transform_t(&x, t, p).unwrap();
        worst = worst.max(y.norm() - 2.0 * p.k_max());
    }
    outcome(worst <= 1e-9, format!("max |y| - 2 k_max = {worst:.2e}"))
}

#[test]
fn acceptance() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, u64, Check); 13] = [
        ("NDFT adjointness", 1, c1_adjointness),
        ("NDFT equals the equispaced DFT", 1, c2_equispaced),
        ("Jacobian against finite differences", 5, c3_jacobian_fd),
        ("closed-form Jacobians", 1, c4_closed_form_jacobians),
        ("Fourier diffraction theorem", 60, c5_fdt),
        ("split diffraction theorem", 1, c6_fdt_split),
        ("backpropagation matches the masked oracle", 120, c7_bp_oracle),
        ("indicatrix estimator against the four disks", 30, c8_indicatrix),
        ("symmetrization identities", 60, c9_symmetrization),
        ("projection monotonicity", 10, c10_monotone),
        ("indicatrix improves PSNR", 300, c11_indicatrix_needed),
        ("inverse NDFT round trip", 300, c12_inverse_ndft),
        ("coverage bound", 5, c13_coverage_bound),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = out.pass && in_time;
        println!(
            "{} {:>2} {name}: {} ({:.2} s of {budget} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
