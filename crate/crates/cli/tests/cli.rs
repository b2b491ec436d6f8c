use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn isp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("isp runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn forward_then_invert_the_same_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = isp(&["forward", "--order", "3", "--grid-size", "300", "--num-eigenvalues", "3"], out);
    assert!(o.status.success(), "{}", stderr(&o));
    let data: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("spectral_data.json")).unwrap()).unwrap();
    assert_eq!(data["n"], 3);
    assert_eq!(data["N"], 3);
    assert_eq!(data["data"].as_array().unwrap().len(), 6);

    let file = out.join("spectral_data.json");
    let o = isp(&["invert", file.to_str().unwrap(), "--order", "3", "--grid-size", "300"], out);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("invert_report.csv")).unwrap();
    assert!(report.contains("omega,0"), "{report}");
    assert!(report.contains("acceptance"), "report lists tolerances: {report}");
    let coefficients = fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(coefficients.starts_with("x,sigma_re,sigma_im,p1_re,p1_im"));
    assert_eq!(coefficients.lines().count(), 302);
}

#[test]
fn forward_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["forward", "--order", "2", "--grid-size", "250", "--num-eigenvalues", "2", "--model", "rough-sigma"];
    assert!(isp(&args, a.path()).status.success());
    assert!(isp(&args, b.path()).status.success());
    assert_eq!(
        fs::read(a.path().join("spectral_data.json")).unwrap(),
        fs::read(b.path().join("spectral_data.json")).unwrap()
    );
}

#[test]
fn roundtrip_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = isp(
        &[
            "roundtrip",
            "--order",
            "2",
            "--grid-size",
            "400",
            "--num-eigenvalues",
            "3",
            "--perturb",
            "l=1..2,mag=1e-3",
            "--seed",
            "7",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("(pass)"));
    let report = fs::read_to_string(dir.path().join("roundtrip_report.csv")).unwrap();
    assert!(report.contains("passed,true"));
    assert!(report.contains("seed,7"));
    assert!(dir.path().join("perturbed_data.json").exists());
}

#[test]
fn stability_sweep_writes_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let o = isp(
        &["stability-sweep", "--order", "2", "--grid-size", "300", "--num-eigenvalues", "3", "--scales", "1e-4,2e-4,4e-4"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let script = fs::read_to_string(dir.path().join("stability.gp")).unwrap();
    assert!(script.contains("stability.csv"));
}

#[test]
fn invalid_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["forward", "--order", "1"][..],
        &["forward", "--grid-size", "50"],
        &["forward", "--model", "no-such-preset"],
        &["roundtrip", "--perturb", "l=1,mag=nan"],
        &["roundtrip", "--tol", "acceptance=abc"],
        &["frobnicate"],
    ] {
        let o = isp(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn malformed_data_file_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, "{\"n\": 3, \"N\": 1, \"data\": []}").unwrap();
    let o = isp(&["invert", file.to_str().unwrap(), "--order", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("expected 2 entries"));
}

#[test]
fn order_mismatch_between_data_and_model_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert!(isp(&["forward", "--order", "2", "--grid-size", "250", "--num-eigenvalues", "2"], out).status.success());
    let file = out.join("spectral_data.json");
    let o = isp(&["invert", file.to_str().unwrap(), "--order", "3", "--grid-size", "250"], out);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn coincident_eigenvalues_name_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s1.json");
    let data = serde_json::json!({
        "n": 2, "N": 2,
        "data": [
            {"l": 1, "k": 1, "lambda": [-9.0, 0.0], "beta": [19.0, 0.0]},
            {"l": 2, "k": 1, "lambda": [-9.0, 0.0], "beta": [79.0, 0.0]},
        ]
    });
    fs::write(&file, data.to_string()).unwrap();
    let o = isp(&["invert", file.to_str().unwrap(), "--order", "2", "--grid-size", "250"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(S-1)"), "{}", stderr(&o));
}
