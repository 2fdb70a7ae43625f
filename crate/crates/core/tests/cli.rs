//! End-to-end runs of the `relu-gd-lab` binary: exit codes, determinism,
//! job-count handling and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_RUN: &str = r#"
master_seed = 5

[instance]
d = 3
b_v = 0.5
opt = 1e-2

[gd]
t_max = 300
holdout_n = 500
records = 30

[init]
restarts = 2
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_relu-gd-lab"));
    c.env_remove("RELU_GD_LAB_JOBS");
    c
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut c = bin();
    c.args(args).arg("--out").arg(out);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV file: everything after the metadata lines and header.
fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    lines.next().expect("header");
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| !l.starts_with('#')).expect("header");
    line.split(',').map(str::to_string).collect()
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(csv_files(&p));
            } else if p.extension().is_some_and(|x| x == "csv" || x == "tmp") {
                out.push(p);
            }
        }
    }
    out
}

#[test]
fn help_exits_zero() {
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["run", "sweep", "verify-lemmas", "estimate-regularity", "init-study"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RUN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = run(&["run"], Some(&cfg), &a);
    assert_eq!(code(&oa), 0, "{}", stderr(&oa));
    let ob = run(&["run", "--jobs", "1"], Some(&cfg), &b);
    assert_eq!(code(&ob), 0, "{}", stderr(&ob));
    for f in ["summary.csv", "restarts.csv", "trajectory.csv"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    assert_eq!(data_rows(&a.join("summary.csv")).len(), 1);
    assert_eq!(data_rows(&a.join("restarts.csv")).len(), 2);
}

#[test]
fn seed_flag_changes_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RUN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&["run"], Some(&cfg), &a)), 0);
    assert_eq!(code(&run(&["run", "--seed", "6"], Some(&cfg), &b)), 0);
    assert_ne!(
        fs::read(a.join("restarts.csv")).unwrap(),
        fs::read(b.join("restarts.csv")).unwrap()
    );
}

#[test]
fn jobs_env_var_is_read() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RUN);
    let bad = bin()
        .env("RELU_GD_LAB_JOBS", "lots")
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
    let good = bin()
        .env("RELU_GD_LAB_JOBS", "2")
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("y"))
        .output()
        .unwrap();
    assert_eq!(code(&good), 0, "{}", stderr(&good));
}

#[test]
fn zero_jobs_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["run", "--jobs", "0"], None, tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_config_reports_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[instance]\nfamily = \"cauchy\"\n");
    let o = run(&["run"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[gd]\nstep_size = 0.1\n");
    let o = run(&["run"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("step_size"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["run"], Some(&tmp.path().join("nope.toml")), &tmp.path().join("out"));
    assert_eq!(code(&o), 2);
}

#[test]
fn exact_oracle_on_uniform_marginal_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[instance]\nfamily = \"uniform\"\nd = 2\nopt = 1e-2\n\n[gd]\ngrad_source = \"population_exact\"\nt_max = 10\n",
    );
    let o = run(&["run"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn verify_lemmas_on_non_gaussian_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[instance]\nfamily = \"laplace\"\n\n[lemmas]\npoints = 20\n");
    let o = run(&["verify-lemmas"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn failed_sweep_removes_partial_output() {
    let tmp = TempDir::new().unwrap();
    // Gaussian cells succeed and write files before the uniform cell is
    // rejected by the exact oracle.
    let cfg = write_config(
        tmp.path(),
        "[sweep]\nfamilies = [\"gaussian\", \"uniform\"]\nd = [2]\nopt = [1e-2]\nb_v = [0.0]\n\n[gd]\nt_max = 50\n\n[init]\nrestarts = 1\n",
    );
    let out = tmp.path().join("out");
    let o = run(&["sweep", "--jobs", "1"], Some(&cfg), &out);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(csv_files(&out).is_empty(), "left behind {:?}", csv_files(&out));
}

#[test]
fn sweep_writes_one_row_per_cell_and_replicate() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sweep]\nd = [2, 3]\nopt = [1e-2]\nb_v = [0.0, 1.0]\nreplicates = 2\n\n[gd]\nt_max = 100\nholdout_n = 200\n\n[init]\nrestarts = 2\n\n[output]\ntrajectories = false\n",
    );
    let out = tmp.path().join("out");
    let o = run(&["sweep"], Some(&cfg), &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_rows(&out.join("summary.csv"));
    assert_eq!(rows.len(), 8);
    let agg_header = header(&out.join("aggregate.csv"));
    assert!(agg_header.iter().any(|h| h.contains("median")), "{agg_header:?}");
    assert_eq!(data_rows(&out.join("aggregate.csv")).len(), 2);
    assert!(out.join("cells").read_dir().unwrap().count() == 8);
}

#[test]
fn verify_lemmas_passes_small_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[lemmas]\npoints = 200\nmc_samples = 2000\n");
    let out = tmp.path().join("out");
    let o = run(&["verify-lemmas"], Some(&cfg), &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("lemmas").join("jointprob.csv").exists());
    assert!(out.join("lemmas").join("summary.csv").exists());
}

#[test]
fn verify_lemmas_exits_1_on_violation() {
    let tmp = TempDir::new().unwrap();
    // Requiring the loss identity to zero standard errors cannot hold.
    let cfg = write_config(
        tmp.path(),
        "[lemmas]\nlemmas = [\"loss_decomposition\"]\npoints = 20\nmc_samples = 1000\nidentity_se = 0.0\n",
    );
    let o = run(&["verify-lemmas"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn estimate_regularity_writes_one_file_per_family_and_dim() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[regularity]\nfamilies = [\"gaussian\", \"uniform\"]\nd = [1, 2]\ntrials = 2\nn = 20000\n");
    let out = tmp.path().join("out");
    let o = run(&["estimate-regularity"], Some(&cfg), &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv_files(&out.join("regularity")).len(), 4);
}

#[test]
fn init_study_reports_ratio_column() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[init_study]\nd = [2]\nb_v = [0.0]\ntrials = 500\nunknown_trials = 2000\n");
    let out = tmp.path().join("out");
    let o = run(&["init-study"], Some(&cfg), &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = out.join("init_study.csv");
    let h = header(&path);
    let rate = h.iter().position(|c| c == "rate").unwrap();
    let ratio = h.iter().position(|c| c == "ratio_to_known").unwrap();
    let rows = data_rows(&path);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let x: f64 = r[rate].parse().unwrap();
        assert!((0.0..=1.0).contains(&x));
    }
    assert!(rows[1][ratio].parse::<f64>().is_ok());
}
