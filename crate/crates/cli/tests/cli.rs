use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cheeger-lab");

fn lab(cwd: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env_remove("CHEEGER_OUT")
        .output()
        .expect("spawn cheeger-lab")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn verify_value(dir: &Path, check: &str) -> f64 {
    let text = std::fs::read_to_string(dir.join("verify.csv")).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{check},"))).unwrap();
    line.split(',').nth(1).unwrap().parse().unwrap()
}

const SMALL_DISK: &str = r#"
[grid]
n = 32

[domain]
shape = "disk"
radius = 0.4

[verify]
enabled = true
seed = 11
budget = 300
"#;

#[test]
fn disk_ratio_near_analytic() {
    let tmp = tempfile::tempdir().unwrap();
    let radius = 0.35;
    let s = write(
        tmp.path(),
        "disk.toml",
        &format!("[grid]\nn = 128\n[domain]\nshape = \"disk\"\nradius = {radius}\n[verify]\nenabled = true\nseed = 5\n"),
    );
    let o = lab(tmp.path(), &["verify", "--scenario", s.to_str().unwrap(), "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ratio = verify_value(&tmp.path().join("run"), "ratio");
    let target = 2.0 / radius;
    assert!((ratio - target).abs() < 0.05 * target, "ratio {ratio} vs {target}");
}

#[test]
fn alpha_out_of_range_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(tmp.path(), "bad.toml", "[grid]\nn = 8\n[domain]\nshape = \"square\"\n[problem]\nalpha = 2.5\n");
    let o = lab(tmp.path(), &["solve", "--scenario", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("alpha out of [1, 1*)") && err.contains("problem.alpha"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(tmp.path(), "disk.toml", SMALL_DISK);
    let s = s.to_str().unwrap();
    for out in ["a", "b"] {
        let o = lab(tmp.path(), &["all", "--scenario", s, "--out", out, "--threads", "3"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = csv_files(&tmp.path().join("a"));
    assert!(a.contains_key("verify.csv") && a.contains_key("trace.csv"));
    assert_eq!(a, csv_files(&tmp.path().join("b")));
}

#[test]
fn manifest_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "mask.txt", "0110\n1111\n1111\n0110\n");
    let s = write(
        tmp.path(),
        "masked.toml",
        "[domain]\nshape = \"mask\"\nmask = \"mask.txt\"\n[weights]\nf = \"radial\"\nf_b = 2.0\n[verify]\nenabled = true\nseed = 3\n",
    );
    let o = lab(tmp.path(), &["all", "--scenario", s.to_str().unwrap(), "--out", "first"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = tmp.path().join("first");
    let manifest = std::fs::read_to_string(first.join("manifest.toml")).unwrap();

    // Rerun from the manifest somewhere else: it references the mask by absolute path.
    let elsewhere = tempfile::tempdir().unwrap();
    let m = write(elsewhere.path(), "manifest.toml", &manifest);
    let o = lab(elsewhere.path(), &["all", "--scenario", m.to_str().unwrap(), "--out", "second"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second = elsewhere.path().join("second");
    assert_eq!(csv_files(&first), csv_files(&second));
    assert!(csv_files(&first).contains_key("oracle.csv"));

    let hash = |text: &str| text.lines().find(|l| l.starts_with("inputs_sha256")).unwrap().to_string();
    assert_eq!(hash(&manifest), hash(&std::fs::read_to_string(second.join("manifest.toml")).unwrap()));
}

#[test]
fn artifacts_stay_in_the_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(tmp.path(), "disk.toml", SMALL_DISK);
    let o = lab(tmp.path(), &["all", "--scenario", s.to_str().unwrap(), "--out", "only"]);
    assert!(o.status.success());
    let mut top: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    top.sort();
    assert_eq!(top, ["disk.toml", "only"]);
    for e in std::fs::read_dir(tmp.path().join("only")).unwrap() {
        assert!(e.unwrap().file_type().unwrap().is_file());
    }
}

#[test]
fn batch_uses_subdirectories_and_env_override() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "one.toml", "[grid]\nn = 12\n[domain]\nshape = \"square\"\n");
    let b = write(tmp.path(), "two.toml", "[grid]\nn = 12\n[domain]\nshape = \"annulus\"\ninner = 0.1\nouter = 0.45\n");
    let o = Command::new(BIN)
        .args(["solve", "--scenario", a.to_str().unwrap(), "--scenario", b.to_str().unwrap()])
        .current_dir(tmp.path())
        .env("CHEEGER_OUT", "batch")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("batch/one/minimizer.pgm").is_file());
    assert!(tmp.path().join("batch/two/minimizer.pgm").is_file());
}

#[test]
fn stage_failures_have_distinct_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let big = write(tmp.path(), "big.toml", "[grid]\nn = 8\n[domain]\nshape = \"square\"\n");
    let o = lab(tmp.path(), &["oracle", "--scenario", big.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6), "{}", String::from_utf8_lossy(&o.stderr));

    let cantor = write(tmp.path(), "c.toml", "[grid]\nn = 8\n[domain]\nshape = \"square\"\n");
    let o = lab(tmp.path(), &["cantor", "--scenario", cantor.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = lab(tmp.path(), &["verify", "--scenario", big.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("verify.seed"));

    let o = lab(tmp.path(), &["verify", "--scenario", big.to_str().unwrap(), "--seed", "1", "--out", "seeded"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let missing = write(tmp.path(), "m.toml", "[domain]\nshape = \"mask\"\nmask = \"nope.pgm\"\n");
    let o = lab(tmp.path(), &["solve", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain.mask"));

    let o = lab(tmp.path(), &["--scenario", "absent.toml"]);
    assert_eq!(o.status.code(), Some(1));

    let o = lab(tmp.path(), &["solve", "--stage", "cantor", "--scenario", big.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parse_errors_point_at_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(tmp.path(), "typo.toml", "[grid]\nn = 8\n\n[domain]\nshape = \"disc\"\n");
    let o = lab(tmp.path(), &["solve", "--scenario", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("disc"), "{err}");
}

#[test]
fn cantor_stage_reports_every_depth() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(
        tmp.path(),
        "cantor.toml",
        "[cantor]\nepsilon = 0.2\ndepth = 6\nresolution = 129\nprobe = true\n",
    );
    let o = lab(tmp.path(), &["run", "--stage", "cantor", "--scenario", s.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(tmp.path().join("out/cantor.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6 + 2);
    assert_eq!(rows[0][0], "0");
    assert!(!rows[0][2].is_empty());
    // Depth 6 removes segments far below the cell size, so no raster value.
    assert!(rows[6][2].is_empty());
    assert_eq!(rows[7][0], "limit");
    assert!(tmp.path().join("out/cantor_probe.csv").is_file());
    assert!(tmp.path().join("out/cantor_domain.pgm").is_file());
}
