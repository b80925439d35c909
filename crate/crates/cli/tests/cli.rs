use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cosdyn");

fn scenario(weight: &str, k: &str, extra: &str) -> String {
    format!(
        "command = \"check\"\n\n[space]\nkind = \"lp\"\np = 2\n\n[map]\nkind = \"shift\"\na = [1]\n\n[weight]\n{weight}\n\n[k]\n{k}\n\n{extra}\n"
    )
}

const HALF_LINE: &str = "kind = \"halfline\"\nthreshold = 0\nlow = \"1/2\"\nhigh = \"2\"";

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn cosdyn(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, sub: &str, config: &Path, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out_dir = dir.join(out);
    let mut args = vec![sub, config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    (cosdyn(&args), out_dir)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn verdict_of(report: &Value, id: &str) -> String {
    report["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["condition_id"] == id)
        .unwrap_or_else(|| panic!("{id} missing"))["verdict"]
        .as_str()
        .unwrap()
        .to_string()
}

fn decay_rows(dir: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(dir.join("decay.csv")).unwrap();
    reader.records().map(Result::unwrap).collect()
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/report.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn chaotic_half_line_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &scenario(HALF_LINE, "range = [-2, 2]", ""));
    let (out, dir) = run_in(tmp.path(), "check", &cfg, "o", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir);
    assert_eq!(verdict_of(&r, "Cor3.9-ii"), "SatisfiedWithWitness");
    assert_eq!(verdict_of(&r, "Thm3.8-ii"), "SatisfiedWithWitness");
    assert_eq!(r["schema_version"], "1.0");
    assert!(schema().is_valid(&r));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["config"].as_str().unwrap().contains("halfline"));
}

#[test]
fn doubling_weight_is_refuted_with_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &scenario("kind = \"constant\"\nvalue = \"2\"", "range = [0, 0]", ""));
    let (out, dir) = run_in(tmp.path(), "run", &cfg, "o", &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir);
    assert_eq!(verdict_of(&r, "Cor3.2-bounds"), "RefutedWithCertificate");
    assert!(schema().is_valid(&r));
    // backward column doubles each row
    let rows = decay_rows(&dir);
    for pair in rows.windows(2) {
        let a: f64 = pair[0][1].parse().unwrap();
        let b: f64 = pair[1][1].parse().unwrap();
        assert_eq!(b, 2.0 * a);
    }
}

#[test]
fn missing_weight_exits_two_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let text = scenario(HALF_LINE, "range = [0, 1]", "").replace("[weight]", "[unused]");
    let cfg = write_config(tmp.path(), "s.toml", &text);
    let (out, _) = run_in(tmp.path(), "run", &cfg, "o", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("s.toml:") && err.contains("weight"), "{err}");
}

#[test]
fn bad_value_error_names_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = scenario("kind = \"constant\"\nvalue = \"0\"", "range = [0, 1]", "");
    let cfg = write_config(tmp.path(), "s.toml", &text);
    let (out, _) = run_in(tmp.path(), "run", &cfg, "o", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    let line = text.lines().position(|l| l == "[weight]").unwrap() + 1;
    assert!(err.contains(&format!("s.toml:{line}:")), "{err}");
}

#[test]
fn unwritable_output_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &scenario(HALF_LINE, "range = [0, 0]", ""));
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = cosdyn(&["check", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &scenario(HALF_LINE, "range = [-2, 2]", ""));
    let (out, dir) = run_in(tmp.path(), "check", &cfg, "o", &["--budget-n", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&dir)["status"], "inconclusive");
}

#[test]
fn decay_table_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &scenario(HALF_LINE, "range = [0, 0]", "[scan]\nn_max = 12"));
    let (out, dir) = run_in(tmp.path(), "run", &cfg, "o", &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = decay_rows(&dir);
    assert_eq!(rows.len(), 12);
    assert_eq!(&rows[9][0], "10");
    assert_eq!(rows[9][1].parse::<f64>().unwrap(), 2f64.powi(-10));
    assert_eq!(&rows[9][1], "9.7656250000000000e-4");

    let text = scenario("kind = \"constant\"\nvalue = \"1\"", "range = [-1, 1]", "[scan]\nn_max = 6").replace("kind = \"lp\"\np = 2", "kind = \"lp\"\np = 1");
    let cfg = write_config(tmp.path(), "u.toml", &text);
    let (_, dir) = run_in(tmp.path(), "run", &cfg, "u", &[]);
    for row in decay_rows(&dir) {
        assert_eq!(&row[1], "3.0000000000000000e0");
        assert_eq!(&row[2], "3.0000000000000000e0");
        assert_eq!(&row[5], "3");
    }
}

#[test]
fn float_mode_has_no_exact_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &scenario(HALF_LINE, "range = [0, 0]", "[scan]\nn_max = 3"));
    let (_, dir) = run_in(tmp.path(), "run", &cfg, "o", &["--mode", "float"]);
    let header = fs::read_to_string(dir.join("decay.csv")).unwrap();
    assert!(!header.lines().next().unwrap().contains("_exact"));
    assert_eq!(report(&dir)["mode"], "float");
}

#[test]
fn reruns_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &scenario(HALF_LINE, "range = [-2, 2]", ""));
    let (_, a) = run_in(tmp.path(), "check", &cfg, "a", &[]);
    let (_, b) = run_in(tmp.path(), "check", &cfg, "b", &[]);
    assert_eq!(fs::read(a.join("decay.csv")).unwrap(), fs::read(b.join("decay.csv")).unwrap());
    assert_eq!(report(&a), report(&b));
}

#[test]
fn witness_and_periodic_demos() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = "[witness]\nn = 40\nf = { range = [-1, 1] }\ng = { range = [-1, 1] }\ntrace_n = [0, 20, 40]\n\n\
                 [periodic]\nn = 10\ntruncation = 12\nf = { range = [0, 0] }\n";
    let cfg = write_config(tmp.path(), "s.toml", &scenario(HALF_LINE, "range = [-2, 2]", extra));
    let (out, dir) = run_in(tmp.path(), "demo-witness", &cfg, "w", &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir);
    assert!(schema().is_valid(&r));
    let t = &r["transition"];
    assert!(t["dist_to_f"].as_str().unwrap().parse::<f64>().unwrap() <= 1e-6);
    assert!(t["dist_image_to_g"].as_str().unwrap().parse::<f64>().unwrap() <= 1e-6);
    assert_eq!(t["trace"].as_array().unwrap().len(), 6);

    let (out, dir) = run_in(tmp.path(), "demo-periodic", &cfg, "p", &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir);
    assert!(schema().is_valid(&r));
    let p = &r["periodic"];
    assert_eq!(p["truncation"], 12);
    for res in p["residuals"].as_array().unwrap() {
        let v: f64 = res["residual"].as_str().unwrap().parse().unwrap();
        assert!(v <= res["edge_bound"].as_f64().unwrap() * (1.0 + 1e-9));
    }
}

#[test]
fn periodic_demo_refuses_growing_weight() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = "[periodic]\nn = 3\ntruncation = 6\n";
    let cfg = write_config(tmp.path(), "s.toml", &scenario("kind = \"constant\"\nvalue = \"2\"", "range = [0, 0]", extra));
    let (out, dir) = run_in(tmp.path(), "demo-periodic", &cfg, "p", &[]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&dir);
    assert!(r["periodic"]["refused"].as_str().unwrap().contains("decay"));
    assert!(schema().is_valid(&r));
}

#[test]
fn sweep_writes_cells_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = "[scan]\nn_max = 5\nseries_terms = 2\n\n[sweep]\nparallel = true\n\n[sweep.grid]\nlow = [\"1/2\", \"3/2\"]\nhigh = [\"2\"]\n";
    let text = scenario(HALF_LINE, "range = [0, 1]", extra).replace("command = \"check\"", "command = \"sweep\"");
    let cfg = write_config(tmp.path(), "s.toml", &text);
    let (out, dir) = run_in(tmp.path(), "run", &cfg, "o", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().nth(2).unwrap().contains("Cor3.2-bounds"));
    let v = schema();
    for cell in ["cell_000", "cell_001"] {
        assert!(v.is_valid(&report(&dir.join("cells").join(cell))));
    }
    assert!(v.is_valid(&report(&dir)));
}
