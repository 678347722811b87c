use std::path::Path;
use std::process::{Command, Output};

fn vflossy(args: &[&str]) -> Output {
    vflossy_env(args, None)
}

fn vflossy_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vflossy"));
    c.args(args).env_remove("VFLOSSY_SEED");
    if let Some(s) = seed {
        c.env("VFLOSSY_SEED", s);
    }
    c.output().expect("run vflossy")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn rd_prints_rate() {
    let o = vflossy(&["rd", "--source", "0.5,0.5", "--D", "0.1", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = v["result"]["rate"].as_f64().unwrap();
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!((r - (1.0 - h(0.1))).abs() < 1e-7, "{r}");
}

#[test]
fn config_errors_exit_1() {
    let o = vflossy(&["rd", "--source", "0.5,0.4", "--D", "0.1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("source"));

    let o = vflossy(&["build", "--D", "0.1", "--M", "1"]);
    assert_eq!(code(&o), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "c.json");
    std::fs::write(&cfg, r#"{"D": 0.1, "nonsense": true}"#).unwrap();
    let o = vflossy(&["rd", "--config", &cfg]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonsense"));
}

#[test]
fn seed_precedence_file_env_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "c.json");
    std::fs::write(&cfg, r#"{"D": 0.2, "M": 64, "seed": 5}"#).unwrap();
    let build = |out: &str, seed_flag: Option<&str>, env: Option<&str>| {
        let out = path(dir.path(), out);
        let mut args = vec!["build", "--config", &cfg, "--out", &out];
        if let Some(s) = seed_flag {
            args.extend(["--seed", s]);
        }
        let o = vflossy_env(&args, env);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        vflossy::dictionary::load(&out).unwrap().seed()
    };
    assert_eq!(build("a.vfd", None, None), 5);
    assert_eq!(build("b.vfd", None, Some("9")), 9);
    assert_eq!(build("c.vfd", Some("0x11"), Some("9")), 17);
    let o = vflossy_env(&["build", "--config", &cfg, "--out", &path(dir.path(), "d.vfd")], Some("nope"));
    assert_eq!(code(&o), 1);
}

#[test]
fn encode_decode_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dict = path(dir.path(), "d.vfd");
    let o = vflossy(&["build", "--source", "0.3,0.7", "--D", "0.2", "--M", "128", "--out", &dict]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = vflossy(&["verify", "--dict", &dict, "--source", "0.3,0.7", "--parses", "2000"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));

    let input = path(dir.path(), "x.txt");
    let x: String = (0..3000u32).map(|i| if i.wrapping_mul(2654435761) >> 30 == 0 { '0' } else { '1' }).collect();
    std::fs::write(&input, format!("{}\n{}\n", &x[..1500], &x[1500..])).unwrap();
    let enc = path(dir.path(), "x.vfe");
    let o = vflossy(&["encode", "--dict", &dict, "--input", &input, "--output", &enc]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dec = path(dir.path(), "y.txt");
    let o = vflossy(&["decode", "--dict", &dict, "--input", &enc, "--output", &dec]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let y = std::fs::read_to_string(&dec).unwrap();
    let y = y.trim_end();
    assert!(y.len() <= x.len() && x.len() - y.len() <= 64);
    let flips = x.bytes().zip(y.bytes()).filter(|(a, b)| a != b).count();
    assert!(flips as f64 <= 0.2 * y.len() as f64);

    // a stream decoded against another dictionary is an integrity error
    let other = path(dir.path(), "e.vfd");
    assert_eq!(code(&vflossy(&["build", "--D", "0.2", "--M", "64", "--out", &other])), 0);
    let o = vflossy(&["decode", "--dict", &other, "--input", &enc, "--output", &dec]);
    assert_eq!(code(&o), 3);

    let mut bytes = std::fs::read(&dict).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    std::fs::write(&dict, &bytes).unwrap();
    let o = vflossy(&["decode", "--dict", &dict, "--input", &enc, "--output", &dec]);
    assert_eq!(code(&o), 3);
}

#[test]
fn out_of_range_symbol_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dict = path(dir.path(), "d.vfd");
    assert_eq!(code(&vflossy(&["build", "--D", "0.2", "--M", "64", "--out", &dict])), 0);
    let input = path(dir.path(), "x.txt");
    std::fs::write(&input, "0101012").unwrap();
    let o = vflossy(&["encode", "--dict", &dict, "--input", &input, "--output", &path(dir.path(), "o")]);
    assert_ne!(code(&o), 0);
}

#[test]
fn analyze_writes_csv_and_report_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "run");
    let o = vflossy(&[
        "analyze", "--source", "0.3,0.7", "--D", "0.2", "--M", "256", "--trials", "2000", "--epsilons", "0.1,0.25",
        "--output", &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(Path::new(&out).join("results.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    for h in ["p", "D", "M", "epsilon", "R_empirical", "bound", "R_PD", "sigma", "C_H", "trials", "ci_lo", "ci_hi"] {
        assert!(headers.iter().any(|x| x == h), "missing column {h}");
    }
    assert_eq!(r.records().count(), 2);
    assert!(Path::new(&out).join("manifest.json").exists());

    let o = vflossy(&["report", "--source", "0.3,0.7", "--D", "0.2", "--M", "256", "--samples", "20", "--output", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&out).join("report.json")).unwrap()).unwrap();
    assert!(v.is_object());
}
