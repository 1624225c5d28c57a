use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fluidbound(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluidbound"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("FLUIDBOUND_THREADS")
        .output()
        .expect("spawn fluidbound")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn copy_bound_values_and_guard() {
    let dir = tempfile::tempdir().unwrap();
    let o = fluidbound(dir.path(), &["copy-bound", "--eps0", "0.1", "--epsf", "0.5", "--delta", "0.1"]);
    assert_eq!(code(&o), 0);
    assert!((stdout(&o).parse::<f64>().unwrap() - 9.0).abs() < 1e-12);
    let o = fluidbound(
        dir.path(),
        &["copy-bound", "--eps0", "0.1", "--epsf", "0.5", "--delta", "0.1", "--kind", "history", "--T", "3"],
    );
    assert!((stdout(&o).parse::<f64>().unwrap() - 3.0).abs() < 1e-12);
    let o = fluidbound(dir.path(), &["copy-bound", "--eps0", "0.1", "--epsf", "0.5", "--delta", "0.25"]);
    assert_eq!(stdout(&o).parse::<f64>().unwrap(), 0.0);
    for delta in ["0.26", "0.3"] {
        let o = fluidbound(dir.path(), &["copy-bound", "--eps0", "0.1", "--epsf", "0.5", "--delta", delta]);
        assert_eq!(code(&o), 2, "delta = {delta}");
    }
    let o = fluidbound(dir.path(), &["copy-bound", "--eps0", "0.1", "--epsf", "0.5", "--delta", "0.1", "--kind", "history"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fluidbound(dir.path(), &["bogus"])), 2);
    assert_eq!(code(&fluidbound(dir.path(), &["growth-bounds"])), 2);
    assert_eq!(code(&fluidbound(dir.path(), &["growth-bounds", "--m", "5", "--k-max", "7"])), 2);
    assert_eq!(code(&fluidbound(dir.path(), &["bound-curves", "--eps", "1e-3", "--n-samples", "2"])), 2);
    assert_eq!(
        code(&fluidbound(dir.path(), &["scaling", "--kappa", "1e-6", "--k-exp", "2", "--eps-list", "1e-3,1e-4"])),
        2
    );
    assert_eq!(code(&fluidbound(dir.path(), &["euler-sim", "--grid-n", "32", "--t-max", "0.1"])), 2);

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = fluidbound(&blocker.join("sub"), &["growth-bounds", "--m", "4"]);
    assert_eq!(code(&o), 3);

    let o = fluidbound(dir.path(), &["euler-sim", "--dt", "0.5", "--t-max", "1"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn identical_flags_give_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["bound-curves", "--eps", "1e-3", "--n-samples", "200"];
    assert_eq!(code(&fluidbound(a.path(), &args)), 0);
    assert_eq!(code(&fluidbound(b.path(), &args)), 0);
    let read = |d: &Path| fs::read(d.join("bound_curves.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let ma = manifest(&a.path().join("bound_curves.manifest.json"));
    let mb = manifest(&b.path().join("bound_curves.manifest.json"));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["parameters"]["kappa_source"], "envelope");
}

#[test]
fn config_file_sits_beneath_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(&cfg, "# cutoff sweep\nm = 81\nk_min = 60\nk_max = 70\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = fluidbound(dir.path(), &["--config", cfg, "growth-bounds", "--k-max", "65"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("growth_bounds.csv")).unwrap();
    let ks: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ks.first(), Some(&"60"));
    assert_eq!(ks.last(), Some(&"65"));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fluidbound"))
        .args(["--out", dir.path().to_str().unwrap(), "growth-bounds", "--m", "10"])
        .env("FLUIDBOUND_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(manifest(&dir.path().join("growth_bounds.manifest.json"))["parameters"]["threads"], 2);
}

#[test]
fn csv_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fluidbound(d, &["growth-bounds", "--m", "3"])), 0);
    assert_eq!(header(&d.join("growth_bounds.csv")), "m,k,u0,gamma_l,gamma_u,gamma_root,unstable");
    assert_eq!(code(&fluidbound(d, &["bound-curves", "--kappa", "1e-6", "--eps", "1e-3", "--n-samples", "16"])), 0);
    assert_eq!(header(&d.join("bound_curves.csv")), "t,f,g,h,H_tilde,H");
    assert_eq!(code(&fluidbound(d, &["eigenmode", "--j-max", "32"])), 2);
    assert_eq!(code(&fluidbound(d, &["eigenmode", "--j-max", "64"])), 0);
    assert_eq!(header(&d.join("eigenmode.csv")), "j,re_c,im_c,re_b,im_b");

    assert_eq!(code(&fluidbound(d, &["scaling", "--eps-list", "1e-4"])), 0);
    let text = fs::read_to_string(d.join("scaling.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,max_one_minus_H_tilde,t_star,fitted_slope"));
    assert!(lines.next().unwrap().ends_with(','));

    assert_eq!(code(&fluidbound(d, &["kdv", "--delta", "0", "--t-final", "5", "--samples", "5"])), 0);
    let text = fs::read_to_string(d.join("kdv.csv")).unwrap();
    assert!(text.starts_with("t,overlap_analytic,overlap_numeric,deviation,norm_drift\n"));
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[1] - 1.0).abs() < 1e-12 && (cells[2] - 1.0).abs() < 1e-12);
        assert!(cells[4] <= 1e-7);
        let mantissa = line.split(',').next().unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 18);
    }
}

#[test]
fn unperturbed_euler_run_keeps_unit_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let o = fluidbound(dir.path(), &["euler-sim", "--eps", "0", "--t-max", "0.1", "--sample-every", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("overlap.csv")).unwrap();
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| head.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!((r[col("overlap_nonlinear")].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert!(r[col("eta_l2")].parse::<f64>().unwrap() <= 1e-15);
        assert!(r[col("H_tilde")].is_empty());
    }
}
