use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dectlink"));
    cmd.env_remove("DECTLINK_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

fn write_capture(dir: &Path, stem: &str, meta: &str, body: &str) -> PathBuf {
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, body).unwrap();
    fs::write(dir.join(format!("{stem}.meta")), meta).unwrap();
    csv
}

const HEADER: &str = "seq,pcc_rssi_dbm,pdc_rssi_dbm,snr_db,pcc_crc_ok,pdc_crc_ok\n";

fn meta(request_count: u64) -> String {
    format!(
        "location_id=t\ndistance_m=25\nenvironment=los-indoor\np_tx_dbm=0\nrequest_count={request_count}\n"
    )
}

#[test]
fn eval_fspl() {
    let out = ok(&["model", "eval", "--model", "fspl", "--d", "2294"]);
    assert!(out.starts_with("fspl: 105.23 dB"), "{out}");
    assert!(!out.contains("flag:"));
}

#[test]
fn eval_hata_reports_flags_and_correction() {
    let out = ok(&[
        "model",
        "eval",
        "--model",
        "okumura-hata",
        "--d",
        "2470",
        "--h-tx",
        "10",
        "--h-rx",
        "1.5",
    ]);
    assert!(out.contains("# height correction: small-medium"), "{out}");
    assert!(out.contains("flag:"), "{out}");
    assert!(
        out.lines()
            .any(|l| l.starts_with("flag:") && l.contains("frequency")),
        "{out}"
    );
}

#[test]
fn two_ray_without_geometry_is_a_usage_error() {
    let out = run(&["model", "eval", "--model", "two-ray", "--d", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("h_tx_m"));
}

#[test]
fn unknown_model_and_bad_distance_exit_2() {
    assert_eq!(
        run(&["model", "eval", "--model", "nope", "--d", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["model", "eval", "--model", "fspl", "--d", "-5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["plan", "--nonsense"]).status.code(), Some(2));
}

#[test]
fn sweep_endpoints_and_shape() {
    let out = ok(&[
        "model", "sweep", "--models", "inh-los", "--start", "10", "--end", "100", "--points", "10",
    ]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0], ["distance_m", "inh-los_db"]);
    assert_eq!(rows[1][0], "10.00");
    assert_eq!(rows[10][0], "100.00");
    let first: f64 = rows[1][1].parse().unwrap();
    let last: f64 = rows[10][1].parse().unwrap();
    assert!((last - first - 17.3).abs() < 0.011);

    let all = ok(&[
        "model", "sweep", "--models", "all", "--h-tx", "10", "--h-rx", "1.5", "--start", "1",
        "--end", "10", "--points", "2",
    ]);
    let rows = csv_rows(&all);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 7));
}

#[test]
fn sweep_writes_file_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = ok(&[
        "model",
        "sweep",
        "--start",
        "1",
        "--end",
        "10",
        "--points",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.is_empty());
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 4);
}

#[test]
fn analyze_constant_capture() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = HEADER.to_string();
    for s in 0..10 {
        body.push_str(&format!("{s},-70,-70,20,1,1\n"));
    }
    let csv = write_capture(dir.path(), "const", &meta(10), &body);
    let rows = csv_rows(&ok(&["analyze", csv.to_str().unwrap()]));
    let get = |name: &str| rows[1][column(&rows, name)].clone();
    assert_eq!(get("mean_rssi_pcc_dbm"), "-70.00");
    assert_eq!(get("std_rssi_pcc_db"), "0.00");
    assert_eq!(get("sr_pcc_pct"), "100.00");
    assert_eq!(get("empirical_pl_pcc_db"), "72.00");
}

#[test]
fn analyze_capture_with_no_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_capture(dir.path(), "empty", &meta(20), HEADER);
    let rows = csv_rows(&ok(&["analyze", csv.to_str().unwrap()]));
    assert_eq!(rows[1][column(&rows, "sr_pcc_pct")], "0.00");
    assert_eq!(rows[1][column(&rows, "mean_rssi_pcc_dbm")], "");
}

#[test]
fn analyze_malformed_row_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{HEADER}0,-70,-70,20,1,1\n1,abc,-70,20,1,1\n");
    let csv = write_capture(dir.path(), "bad", &meta(2), &body);
    let out = run(&["analyze", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3:"), "{err}");
}

#[test]
fn analyze_matches_independent_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut body = HEADER.to_string();
    let mut pcc = Vec::new();
    let mut ok_count = 0;
    for s in 0..400 {
        if rng.random::<f64>() < 0.1 {
            body.push_str(&format!("{s},,,,0,0\n"));
            continue;
        }
        let v: f64 = rng.random_range(-95.0..-60.0);
        let crc = rng.random::<f64>() < 0.9;
        ok_count += crc as u32;
        pcc.push(v);
        body.push_str(&format!("{s},{v},{v},15,{},{}\n", crc as u8, crc as u8));
    }
    let csv = write_capture(dir.path(), "rand", &meta(420), &body);
    let rows = csv_rows(&ok(&["analyze", "--decimals", "12", csv.to_str().unwrap()]));
    let get = |name: &str| rows[1][column(&rows, name)].parse::<f64>().unwrap();

    let mean =
        10.0 * (pcc.iter().map(|v| 10f64.powf(v / 10.0)).sum::<f64>() / pcc.len() as f64).log10();
    assert!((get("mean_rssi_pcc_dbm") - mean).abs() < 1e-9);
    assert!((get("sr_pcc_pct") - 100.0 * ok_count as f64 / 420.0).abs() < 1e-9);
    assert!((get("empirical_pl_pcc_db") - (0.0 - mean + 2.0)).abs() < 1e-9);
}

#[test]
fn analyze_example_captures() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/captures");
    let paths: Vec<String> = [
        "powerline_650m",
        "corridor_120m",
        "corridor_010m",
        "corridor_040m",
    ]
    .iter()
    .map(|s| dir.join(format!("{s}.csv")).display().to_string())
    .collect();
    let mut args = vec!["analyze"];
    args.extend(paths.iter().map(String::as_str));
    let rows = csv_rows(&ok(&args));
    assert_eq!(rows.len(), 5);
    let d: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r[column(&rows, "distance_m")].as_str())
        .collect();
    assert_eq!(d, ["10.00", "40.00", "120.00", "650.00"]);
}

fn plan_rows(args: &[&str]) -> Vec<Vec<String>> {
    let mut full = vec!["plan"];
    full.extend_from_slice(args);
    csv_rows(&ok(&full))
}

fn d_rssi(rows: &[Vec<String>], model: &str, setting: &str) -> String {
    let (mi, si, di) = (
        column(rows, "model"),
        column(rows, "setting"),
        column(rows, "d_rssi_m"),
    );
    rows.iter()
        .find(|r| r[mi] == model && r[si] == setting)
        .map(|r| r[di].clone())
        .unwrap()
}

#[test]
fn plan_fspl_outdoor() {
    let rows = plan_rows(&["--setting", "outdoor"]);
    let d: f64 = d_rssi(&rows, "fspl", "outdoor").parse().unwrap();
    assert!((d / 1000.0 * 100.0).round() == 793.0, "{d}");
}

#[test]
fn plan_unreachable_is_not_an_error() {
    let out = run(&["plan", "--tx-power", "-200"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(d_rssi(&rows, "fspl", "indoor"), "unreachable");
}

#[test]
fn plan_scales_with_tx_power() {
    let hi: f64 = d_rssi(&plan_rows(&["--setting", "outdoor"]), "fspl", "outdoor")
        .parse()
        .unwrap();
    let lo: f64 = d_rssi(
        &plan_rows(&["--setting", "outdoor", "--tx-power", "-1"]),
        "fspl",
        "outdoor",
    )
    .parse()
    .unwrap();
    // 20 dB less power is one decade of free-space distance.
    assert!((hi / lo - 10.0).abs() < 1e-3, "{hi} {lo}");

    let args = [
        "--setting",
        "outdoor",
        "--models",
        "two-ray",
        "--h-tx",
        "10",
        "--h-rx",
        "1.5",
    ];
    let hi: f64 = d_rssi(&plan_rows(&args), "two-ray", "outdoor")
        .parse()
        .unwrap();
    let mut lower = args.to_vec();
    lower.extend(["--tx-power", "-1"]);
    let lo: f64 = d_rssi(&plan_rows(&lower), "two-ray", "outdoor")
        .parse()
        .unwrap();
    assert!((hi / lo - 10f64.sqrt()).abs() < 1e-3, "{hi} {lo}");
}

#[test]
fn report_flags_hallila() {
    let out = ok(&["report"]);
    let rows = csv_rows(&out);
    let (s, m, st) = (
        column(&rows, "scenario"),
        column(&rows, "model"),
        column(&rows, "status"),
    );
    for r in &rows[1..] {
        if r[m] == "fspl" {
            let want = if r[s].starts_with("Hallila") {
                "flagged"
            } else {
                "ok"
            };
            assert_eq!(r[st], want, "{r:?}");
        }
    }
}

#[test]
fn fit_closed_form_and_iterative() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    let mut body = String::from("distance_m,pl_db\n");
    for i in 0..20 {
        let d = 10f64.powf(0.15 * i as f64);
        body.push_str(&format!("{d},{}\n", 38.0 + 27.0 * d.log10()));
    }
    body.push_str("500,\n");
    fs::write(&input, body).unwrap();
    let residuals = dir.path().join("res.csv");
    let out = ok(&[
        "fit",
        input.to_str().unwrap(),
        "--out",
        residuals.to_str().unwrap(),
    ]);
    assert!(out.contains("exponent: 2.700000"), "{out}");
    assert!(out.contains("pl0_db: 38.000000"), "{out}");
    assert!(out.contains("points: 20"));
    assert_eq!(fs::read_to_string(&residuals).unwrap().lines().count(), 21);
    let lm = ok(&["fit", input.to_str().unwrap(), "--iterative"]);
    assert!(
        lm.contains("exponent: 2.700000") && lm.contains("levenberg-marquardt"),
        "{lm}"
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        vec![
            "model",
            "sweep",
            "--models",
            "fspl,inf-los",
            "--start",
            "1",
            "--end",
            "5000",
            "--points",
            "300",
        ],
        vec!["report"],
        vec!["plan"],
    ] {
        let a = run(&args).stdout;
        let b = run(&args).stdout;
        let mut seq = args.clone();
        seq.push("--sequential");
        assert_eq!(a, b);
        assert_eq!(a, run(&seq).stdout);
    }
}

#[test]
fn config_precedence_file_env_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# test\ntx_power_dbm=-1\nsetting=outdoor\n").unwrap();
    let d = |out: Output| -> String {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        d_rssi(&csv_rows(&stdout(&out)), "fspl", "outdoor")
    };
    let base = d(run(&["plan", "--setting", "outdoor"]));
    let from_file = d(run(&["plan", "--config", cfg.to_str().unwrap()]));
    let from_env = d(bin()
        .args(["plan"])
        .env("DECTLINK_CONFIG", &cfg)
        .output()
        .unwrap());
    let flag = d(run(&[
        "plan",
        "--config",
        cfg.to_str().unwrap(),
        "--tx-power",
        "19",
    ]));
    let set = d(run(&[
        "plan",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "tx_power_dbm=19",
    ]));
    assert_ne!(base, from_file);
    assert_eq!(from_file, from_env);
    assert_eq!(flag, base);
    assert_eq!(set, base);

    fs::write(&cfg, "no_such_key=1\n").unwrap();
    assert_eq!(
        run(&["plan", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}
