use std::path::Path;
use std::process::Command;

use difftomo::io::NbinArray;
use serde_json::json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_difftomo"))
}

fn config(dir: &Path, name: &str, phantom: serde_json::Value, method: &str) -> std::path::PathBuf {
    let doc = json!({
        "dim": 2, "P": 16, "M": 24, "N": 24, "r_M": 3.0,
        "path": {"family": "rotation-2d", "horizon": std::f64::consts::TAU, "k0": 4.0, "incidence": [0.0, 1.0]},
        "phantom": phantom,
        "method": method,
        "indicatrix": {"Q": 32},
        "detector": {"dim": 2, "offset": 3.0, "half_length": 200.0, "spacing": 0.25, "taper": 0.25}
    });
    let file = dir.join(name);
    std::fs::write(&file, doc.to_string()).unwrap();
    file
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let disk = json!({"kind": "disk", "center": [0.0, 0.0], "radius": 1.0, "amplitude": 1.0});
    let good = config(dir.path(), "good.json", disk.clone(), "bp");
    assert_eq!(run(&["phantom", "--config", good.to_str().unwrap(), "--out", d]).0, 0);

    let mut bad: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    bad["unknown"] = json!(1);
    let bad_file = dir.path().join("bad.json");
    std::fs::write(&bad_file, bad.to_string()).unwrap();
    assert_eq!(run(&["phantom", "--config", bad_file.to_str().unwrap(), "--out", d]).0, 2);

    let wide = json!({"kind": "disk", "center": [0.0, 0.0], "radius": 3.5, "amplitude": 1.0});
    let wide_file = config(dir.path(), "wide.json", wide, "bp");
    assert_eq!(run(&["phantom", "--config", wide_file.to_str().unwrap(), "--out", d]).0, 3);

    assert_eq!(run(&["phantom", "--config", "/nonexistent/config.json", "--out", d]).0, 4);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn simulate_variants() {
    let dir = tempfile::tempdir().unwrap();
    let zero = json!({"kind": "disk", "center": [0.0, 0.0], "radius": 1.0, "amplitude": 0.0});
    let zero_cfg = config(dir.path(), "zero.json", zero, "bp");
    let out = dir.path().join("zero");
    let (code, stdout) = run(&["simulate", "--config", zero_cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let sino = NbinArray::read(Path::new(stdout.trim())).unwrap();
    assert!(sino.data.to_complex().iter().all(|c| c.norm() == 0.0));

    // Direct quadrature against the NDFT for one voxel.
    let voxel = json!({"kind": "single-voxel", "index": [1, -1], "amplitude": 1.0});
    let cfg = config(dir.path(), "voxel.json", voxel, "bp");
    let fast = dir.path().join("fast");
    let slow = dir.path().join("slow");
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["simulate", "--config", c, "--out", fast.to_str().unwrap()]).0, 0);
    assert_eq!(run(&["--threads", "2", "simulate", "--oracle", "--config", c, "--out", slow.to_str().unwrap()]).0, 0);
    let a = NbinArray::read(&fast.join("sinogram.nbin")).unwrap().data.to_complex();
    let b = NbinArray::read(&slow.join("sinogram.nbin")).unwrap().data.to_complex();
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    assert!((num / den).sqrt() < 0.03, "{}", (num / den).sqrt());
}

#[test]
fn reconstruct_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let blob = json!({"kind": "gaussian-blob", "center": [0.2, 0.0], "sigma": 0.5, "amplitude": 1.0, "support_radius": 2.5});
    let cfg = config(dir.path(), "c.json", blob.clone(), "bp-sym");
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["phantom", "--config", c, "--out", d]).0, 0);
    assert_eq!(run(&["simulate", "--config", c, "--out", d]).0, 0);
    let sino = dir.path().join("sinogram.nbin");
    let truth = dir.path().join("phantom.nbin");
    let (code, stdout) = run(&[
        "reconstruct", "--config", c, "--out", d,
        "--sinogram", sino.to_str().unwrap(), "--truth", truth.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("metrics.json"));
    let vol = NbinArray::read(&dir.path().join("volume.nbin")).unwrap();
    assert!(vol.data.to_complex().iter().all(|v| v.im == 0.0));
    let pgm = std::fs::read(dir.path().join("volume.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n16 16\n255\n"));

    let (code, stdout) = run(&[
        "compare", "--reference", truth.to_str().unwrap(), "--out", d,
        dir.path().join("volume.nbin").to_str().unwrap(), truth.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let table: Vec<serde_json::Value> = serde_json::from_str(&stdout).unwrap();
    assert_eq!(table[0]["psnr_db"], json!(300.0));
    assert!(table[0]["psnr_db"].as_f64() >= table[1]["psnr_db"].as_f64());

    let (code, stdout) = run(&["indicatrix", "--config", c, "--out", d]);
    assert_eq!(code, 0);
    let field = NbinArray::read(Path::new(stdout.trim())).unwrap();
    assert_eq!(field.shape, vec![32, 32]);
}
