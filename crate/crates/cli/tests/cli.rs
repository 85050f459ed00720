use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn forward_flat_center_row_is_all_ones() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["forward"], &scenario("flat_disk.toml"), tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let data: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("data.json")).unwrap()).unwrap();
    let row = data["r_vectors"][0].as_array().unwrap();
    assert_eq!(row.len(), 64);
    for v in row {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(data["sources"][0][0].as_f64(), Some(0.0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
}

#[test]
fn same_seed_gives_identical_bytes() {
    for (cmd, file) in [("forward", "flat_disk.toml"), ("geodesy", "flat_disk.toml")] {
        let a = TempDir::new().unwrap();
        let b = TempDir::new().unwrap();
        assert_eq!(code(&run(&[cmd], &scenario(file), a.path())), 0);
        assert_eq!(code(&run(&[cmd, "--threads", "1"], &scenario(file), b.path())), 0);
        assert_eq!(files(a.path()), files(b.path()), "{cmd}");
    }
}

#[test]
fn seed_override_changes_sources() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run(&["forward"], &scenario("flat_disk.toml"), a.path());
    run(&["forward", "--seed", "99"], &scenario("flat_disk.toml"), b.path());
    assert_ne!(fs::read(a.path().join("data.json")).unwrap(), fs::read(b.path().join("data.json")).unwrap());
}

#[test]
fn csv_floats_round_trip() {
    let tmp = TempDir::new().unwrap();
    run(&["forward"], &scenario("flat_disk.toml"), tmp.path());
    let (_, rows) = read_csv(&tmp.path().join("r_stats.csv"));
    for cell in rows.iter().flat_map(|r| r[1..].iter()) {
        let v: f64 = cell.parse().unwrap();
        assert_eq!(format!("{v:.16e}"), *cell);
    }
}

#[test]
fn blind_strips_ground_truth() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["forward", "--blind"], &scenario("flat_disk.toml"), tmp.path());
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(tmp.path().join("data.json")).unwrap();
    assert!(!text.contains("sources"));
    let (h, rows) = read_csv(&tmp.path().join("r_stats.csv"));
    assert!(rows.iter().all(|r| r[column(&h, "x1")].is_empty()));

    let rec = TempDir::new().unwrap();
    let data = tmp.path().join("data.json");
    let o = run(&["recover", "--blind", "--data", data.to_str().unwrap()], &scenario("flat_disk.toml"), rec.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let (h, rows) = read_csv(&rec.path().join("norm_recovery.csv"));
    assert!(rows.iter().all(|r| r[column(&h, "truth")].is_empty()));
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run(&["forward"], &scenario("malformed.toml"), tmp.path())), 2);
    assert_eq!(code(&run(&["forward"], &scenario("missing.toml"), tmp.path())), 2);
    // elastic scenario has no metric or domain
    assert_eq!(code(&run(&["forward"], &scenario("elastic.toml"), tmp.path())), 2);

    let bad = tmp.path().join("unknown_key.toml");
    let text = fs::read_to_string(scenario("flat_disk.toml")).unwrap() + "\nbogus = 1\n";
    fs::write(&bad, text).unwrap();
    assert_eq!(code(&run(&["forward"], &bad, tmp.path())), 2);

    let out = Command::new(env!("CARGO_BIN_EXE_finsler")).arg("forward").output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn recover_flat_and_randers() {
    for (file, tol) in [("flat_disk.toml", 1e-2), ("randers_disk.toml", 2e-2)] {
        let tmp = TempDir::new().unwrap();
        let o = run(&["recover"], &scenario(file), tmp.path());
        assert_eq!(code(&o), 0, "{file}: {}", String::from_utf8_lossy(&o.stdout));
        let (h, rows) = read_csv(&tmp.path().join("norm_recovery.csv"));
        let e = column(&h, "rel_error");
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r[e].parse::<f64>().unwrap() <= tol));
        let (h, rows) = read_csv(&tmp.path().join("charts.csv"));
        assert!(rows.iter().all(|r| r[column(&h, "det")].parse::<f64>().unwrap().abs() > 1e-6));
        let (h, rows) = read_csv(&tmp.path().join("matching.csv"));
        assert!(rows.iter().all(|r| r[column(&h, "row")] == r[column(&h, "matched_source")]));
    }
}

#[test]
fn nonunique_flat_is_impossible() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["nonunique"], &scenario("flat_disk.toml"), tmp.path());
    assert_eq!(code(&o), 3);
    let rep = fs::read_to_string(tmp.path().join("report.json")).unwrap();
    assert!(rep.contains("impossible"));
}

#[test]
fn nonunique_negative_control_fails() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["nonunique"], &scenario("bump_control.toml"), tmp.path());
    assert_eq!(code(&o), 4);
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], false);
    assert!(rep["matrix_diff"].as_f64().unwrap() > rep["bound"].as_f64().unwrap());
}

#[test]
fn elastic_media() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["elastic"], &scenario("elastic.toml"), tmp.path());
    assert_eq!(code(&o), 0);
    let (h, rows) = read_csv(&tmp.path().join("travel_times.csv"));
    for r in &rows {
        let v = |name: &str| r[column(&h, name)].parse::<f64>().unwrap();
        assert!((v("qp_speed") - 2.0).abs() < 1e-12);
        assert!((v("qs1_speed") - 1.0).abs() < 1e-12);
        assert!((v("qs2_speed") - 1.0).abs() < 1e-12);
        assert!((v("travel_time") - 0.5).abs() < 1e-12);
    }

    let ti = scenario("ti.json");
    let o = run(&["elastic", "--stiffness", ti.to_str().unwrap()], &scenario("elastic.toml"), tmp.path());
    assert_eq!(code(&o), 0);

    let deg = scenario("degenerate.json");
    let o = run(&["elastic", "--stiffness", deg.to_str().unwrap()], &scenario("elastic.toml"), tmp.path());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not separated"));
}

#[test]
fn geodesy_focal_columns() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run(&["geodesy"], &scenario("flat_disk.toml"), tmp.path())), 0);
    let (h, rows) = read_csv(&tmp.path().join("cut_focal.csv"));
    let f = column(&h, "tau_f");
    assert!(rows.iter().all(|r| (r[f].parse::<f64>().unwrap() - 1.0).abs() <= 1e-3));
    assert!(tmp.path().join("trajectory_0000.csv").exists());

    let st = TempDir::new().unwrap();
    assert_eq!(code(&run(&["geodesy"], &scenario("stadium.toml"), st.path())), 0);
    let (h, rows) = read_csv(&st.path().join("cut_focal.csv"));
    let (f, z2) = (column(&h, "tau_f"), column(&h, "z2"));
    // nodes on the straight sides
    let flat: Vec<_> = rows
        .iter()
        .filter(|r| (r[z2].parse::<f64>().unwrap().abs() - 0.5).abs() < 1e-12)
        .collect();
    assert!(!flat.is_empty());
    assert!(flat.iter().all(|r| r[f].is_empty()));
}

#[test]
fn bump_disk_pair_and_boundary_cuts() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["nonunique"], &scenario("bump_disk.toml"), tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let pair: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("pair.json")).unwrap()).unwrap();
    assert!(pair["amplitude"].as_f64().unwrap() > 0.0);

    let g = TempDir::new().unwrap();
    assert_eq!(code(&run(&["geodesy"], &scenario("bump_disk.toml"), g.path())), 0);
    let (h, rows) = read_csv(&g.path().join("cut_focal.csv"));
    assert!(rows.iter().all(|r| r[column(&h, "bd_before_focal")] == "true"));
}
