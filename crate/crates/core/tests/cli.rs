use std::path::Path;
use std::process::{Command, Output};

fn swaplight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swaplight"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&swaplight(&["validate", &scenario("fig5_mode_spectrum.toml")])), 0);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "name = \"b\"\nkind = \"mode_spectrum\"\n[couplings]\ngamma_sw_per_s = 175.0\nxi_squared = 1.5\n",
    )
    .unwrap();
    let o = swaplight(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("couplings.xi_squared"));
    assert_eq!(code(&swaplight(&["validate", "/nonexistent/x.toml"])), 1);
}

#[test]
fn run_guards_output_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let cfg = scenario("fig5_mode_spectrum.toml");
    let args = ["run", cfg.as_str(), "--cycles", "40", "--out", out];
    assert_eq!(code(&swaplight(&args)), 0);
    let first = std::fs::read(dir.path().join("run/manifest.json")).unwrap();
    let records = std::fs::read(dir.path().join("run/records.splt")).unwrap();

    let o = swaplight(&args);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));

    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&swaplight(&forced)), 0);
    assert_eq!(std::fs::read(dir.path().join("run/manifest.json")).unwrap(), first);
    assert_eq!(std::fs::read(dir.path().join("run/records.splt")).unwrap(), records);

    let rec = dir.path().join("run/records.splt");
    assert_eq!(code(&swaplight(&["analyze", rec.to_str().unwrap()])), 0);
    assert!(dir.path().join("run/analysis/report.json").exists());
}

#[test]
fn analyze_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.splt");
    std::fs::write(&junk, b"not a record file").unwrap();
    assert_eq!(code(&swaplight(&["analyze", junk.to_str().unwrap()])), 2);
}
