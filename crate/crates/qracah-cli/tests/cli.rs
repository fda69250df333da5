use std::process::{Command, Output};

fn qracah(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qracah")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bad_parameters_exit_with_2() {
    let o = qracah(&["prelimit-table", "--q", "3/2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q must lie in (0,1)"));
    assert_eq!(qracah(&["densities", "--kappa", "-1"]).status.code(), Some(2));
}

#[test]
fn oversized_requests_exit_with_3() {
    assert_eq!(qracah(&["prelimit-table", "--L", "400"]).status.code(), Some(3));
    assert_eq!(qracah(&["sample", "--chains", "100000"]).status.code(), Some(3));
}

#[test]
fn csv_starts_with_build_and_config() {
    let o = qracah(&["limit-table", "--M", "12..13", "--pairs", "0,0"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("# qracah-cli "));
    assert!(lines[1].starts_with("# config: {"));
    assert!(lines[1].contains("\"command\":\"limit-table\""));
    let header = lines.iter().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(*header, "M,s,t,value,truncated,last_increment,ratio,digits");
    assert!(out.contains("12,0,0,4.6719254"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["sample", "--T", "24", "--S", "12", "--N", "12", "--chains", "4", "--steps", "50", "--seed", "9"];
    let a = qracah(&args);
    let b = qracah(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c =
        qracah(&["sample", "--T", "24", "--S", "12", "--N", "12", "--chains", "4", "--steps", "50", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn out_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("densities.json");
    std::fs::write(&path, "stale").unwrap();
    let o = qracah(&["densities", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["command"], "densities");
    assert!(doc["rows"][0][2].as_str().unwrap().starts_with("0.345174"));
    // only the target remains in the directory
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn verify_reports_json() {
    let o = qracah(&["verify", "concentration"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["command"], "verify");
    let rows = doc["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[1] == "true"));
}

#[test]
fn sample_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let bc = dir.path().join("bc.txt");
    let svg = dir.path().join("svg");
    let o = qracah(&[
        "sample",
        "--T",
        "24",
        "--S",
        "12",
        "--N",
        "12",
        "--chains",
        "3",
        "--steps",
        "40",
        "--barcodes",
        bc.to_str().unwrap(),
        "--svg-dir",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rec = std::fs::read_to_string(&bc).unwrap();
    assert_eq!(rec.lines().count(), 4);
    assert!(rec.lines().skip(1).all(|l| l.len() == 24 && l.chars().all(|c| c == '0' || c == '1')));
    assert_eq!(std::fs::read_dir(&svg).unwrap().count(), 3);
    let out = stdout(&o);
    assert!(out.contains("\neven,") && out.contains("\nodd,"));
}

#[test]
fn render_svg_refuses_other_formats() {
    let o = qracah(&["render-svg", "--T", "8", "--S", "4", "--N", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("<svg"));
    assert_eq!(qracah(&["render-svg", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn listed_command_names_are_accepted() {
    let o = qracah(&["eq77", "--q", "1/7", "--kappa", "4.3", "--M", "20"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("rho_odd,6.548257222716712"));
    assert!(qracah(&["verify", "appendixA"]).status.success());
}
