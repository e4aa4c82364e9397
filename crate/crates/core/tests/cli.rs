use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn psa(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_psa")).args(args).arg("--out").arg(dir).env("PSA_LOG", "quiet").output().unwrap()
}

#[test]
fn compare_writes_profile_with_exact_header() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("contact.toml");
    let res = psa(&["compare", "--config", cfg.to_str().unwrap()], out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.path().join("contact_profile.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,c_exact,u_exact,c_scheme,u_scheme"));
    let xs: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(xs[0], 0.0);
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
    assert!(*xs.last().unwrap() >= 0.1 && *xs.last().unwrap() < 0.101);
    // no exponent notation anywhere
    assert!(!text.contains('e') || text.lines().skip(1).all(|l| !l.contains('e')));
}

#[test]
fn every_subcommand_succeeds_on_adsorption() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("langmuir_adsorption.toml");
    for cmd in ["simulate", "exact", "compare", "sweep"] {
        let res = psa(&[cmd, "--config", cfg.to_str().unwrap()], out.path());
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let sweep = std::fs::read_to_string(out.path().join("langmuir_adsorption_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
    assert!(sweep.lines().nth(1).unwrap().ends_with(",n/a"));
    let exact = std::fs::read_to_string(out.path().join("langmuir_adsorption_exact.csv")).unwrap();
    assert_eq!(exact.lines().count(), 1 + 1001);
}

#[test]
fn config_error_exits_with_one() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\ntype = \"inert_rational\"\nk1 = 1.0\n[data]\nc_minus = 0.2\nc_plus = 0.7\n")
        .unwrap();
    let res = psa(&["compare", "--config", cfg.to_str().unwrap()], out.path());
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("data.u_plus required"));
    let res = psa(&["compare", "--config", "/nonexistent/run.toml"], out.path());
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn numeric_failure_exits_with_two() {
    // BET data beyond the validity interval of the isotherm
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("pole.toml");
    std::fs::write(
        &cfg,
        "[model]\ntype = \"bet\"\nq = 1\nk = 10\ninv_cs = 1.3\n[data]\nc_minus = 0.1\nc_plus = 0.9\nu_plus = 1\n",
    )
    .unwrap();
    let res = psa(&["exact", "--config", cfg.to_str().unwrap()], out.path());
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn usage_errors() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(psa(&["bogus"], out.path()).status.code(), Some(1));
    let help = Command::new(env!("CARGO_BIN_EXE_psa")).arg("--help").output().unwrap();
    assert!(help.status.success());
}

#[test]
fn compare_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = configs().join("langmuir_desorption.toml");
    for d in [&a, &b] {
        assert!(psa(&["compare", "--config", cfg.to_str().unwrap()], d.path()).status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("langmuir_desorption_profile.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
