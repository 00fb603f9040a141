use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tailprice::tail_model::{PutReturnModel, ReturnTailModel, TailIndex};
use tempfile::TempDir;

fn tailprice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailprice")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn call_chain_csv(dir: &Path) -> PathBuf {
    let m = ReturnTailModel::new(0.05, TailIndex::new(2.75).unwrap(), 100.0).unwrap();
    let mut text = String::from("strike,side,price\n");
    for i in 0..30 {
        let k = 110.0 + 10.0 * i as f64;
        text.push_str(&format!("{k},C,{:?}\n", m.call_price(k).unwrap()));
    }
    write(dir, "calls.csv", &text)
}

fn put_chain_csv(dir: &Path) -> PathBuf {
    let m = PutReturnModel::new(0.05, TailIndex::new(2.75).unwrap(), 100.0).unwrap();
    let mut text = String::from("strike,side,price\n");
    for i in 0..=16 {
        let k = 50.0 + 2.5 * i as f64;
        text.push_str(&format!("{k},P,{:?}\n", m.put_price(k).unwrap()));
    }
    write(dir, "puts.csv", &text)
}

fn meta(dir: &Path) -> PathBuf {
    write(dir, "meta.json", r#"{"spot": 100, "expiry_years": 0.25}"#)
}

fn assert_error(o: &Output, code: &str) {
    assert_eq!(o.status.code(), Some(2), "stderr: {}", stderr(o));
    assert!(stderr(o).starts_with(&format!("error[{code}]")), "stderr: {}", stderr(o));
    assert!(o.stdout.is_empty());
}

#[test]
fn price_return_tail_fixture() {
    let o =
        tailprice(&["price", "--approach", "return", "--alpha", "2", "--l", "0.1", "--spot", "100", "--strike", "120"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "5\n");
}

#[test]
fn price_several_strikes_is_a_table() {
    let o = tailprice(&["price", "--approach", "price", "--alpha", "2", "--l", "1", "--strike", "4,2"]);
    assert_eq!(stdout(&o), "strike,price\n2,0.5\n4,0.25\n");
}

#[test]
fn scalar_commands() {
    let o = tailprice(&[
        "calibrate",
        "--approach",
        "return",
        "--alpha",
        "2",
        "--price",
        "5",
        "--strike",
        "120",
        "--spot",
        "100",
    ]);
    assert_eq!(stdout(&o), "0.1\n");
    let o = tailprice(&["ivol", "--price", "7.965567455405796", "--spot", "100", "--strike", "100", "--expiry", "1"]);
    assert_eq!(stdout(&o), "0.2\n");
    let o = tailprice(&[
        "alpha-bound",
        "--strike",
        "130",
        "--spot",
        "100",
        "--l",
        "0.1",
        "--expiry",
        "0.25",
        "--sigma",
        "0.25",
    ]);
    assert_eq!(stdout(&o), "3.80282825313\n");
    let o = tailprice(&["zipf", "--alpha", "2.75", "--l", "2", "--x", "2,20,200"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let slope: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((slope + 2.75).abs() < 1e-6);
    }
}

#[test]
fn put_curve_at_ninety_percent_moneyness() {
    let dir = TempDir::new().unwrap();
    let chain = put_chain_csv(dir.path());
    let meta = meta(dir.path());
    let args = ["curve", "--anchor-moneyness", "90", "--alpha", "2.75", "--side", "put", "--chain"];
    let o = tailprice(&[&args[..], &[chain.to_str().unwrap(), "--meta", meta.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("strike,model_price,market_price,ratio,implied_vol_model,implied_vol_market"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 17);
    assert_eq!(rows.last().unwrap()[0], "90");
    for row in &rows {
        assert_eq!(row[3], "1", "ratio at {}", row[0]);
        assert_eq!(row[1], row[2]);
    }

    let put_curve = tailprice(&[
        "put-curve",
        "--anchor-moneyness",
        "90",
        "--alpha",
        "2.75",
        "--chain",
        chain.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
    ]);
    assert_eq!(put_curve.stdout, o.stdout);
}

#[test]
fn check_arb_passes_on_a_model_chain() {
    let dir = TempDir::new().unwrap();
    let chain = call_chain_csv(dir.path());
    let o = tailprice(&[
        "check-arb",
        "--chain",
        chain.to_str().unwrap(),
        "--spot",
        "100",
        "--expiry",
        "0.25",
        "--alpha",
        "2.75",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("0 failed (all pass)"));
    let text = stdout(&o);
    assert!(text.starts_with("strike,check,result,margin,tolerance,detail\n"));
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("pass")));
    assert!(text.contains(",butterfly,") && text.contains(",density,") && text.contains(",slope_model_smile,"));

    let puts = put_chain_csv(dir.path());
    let o = tailprice(&[
        "check-arb",
        "--chain",
        puts.to_str().unwrap(),
        "--spot",
        "100",
        "--expiry",
        "0.25",
        "--alpha",
        "2.75",
        "--side",
        "put",
        "--anchor-moneyness",
        "90",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("(all pass)"));
}

#[test]
fn check_arb_flags_a_too_heavy_tail_against_the_market_skew() {
    let dir = TempDir::new().unwrap();
    let chain = call_chain_csv(dir.path());
    // A steep upward market skew makes the Black-Scholes leg flatter than
    // the Pareto extension at the anchor.
    let o = tailprice(&[
        "check-arb",
        "--chain",
        chain.to_str().unwrap(),
        "--spot",
        "100",
        "--expiry",
        "0.25",
        "--alpha",
        "2.75",
        "--skew-slope",
        "0.05",
    ]);
    assert!(o.status.success());
    let failing: Vec<String> = stdout(&o).lines().filter(|l| l.contains(",fail,")).map(str::to_owned).collect();
    assert_eq!(failing.len(), 1, "{failing:?}");
    assert!(failing[0].starts_with("110,slope_market_skew,fail,"));
}

#[test]
fn fit_alpha_recovers_the_generating_index() {
    let dir = TempDir::new().unwrap();
    let chain = call_chain_csv(dir.path());
    let o = tailprice(&["fit-alpha", "--chain", chain.to_str().unwrap(), "--spot", "100", "--expiry", "0.25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2.75");
    assert_eq!(row[2], "30");
}

#[test]
fn report_and_loglog() {
    let dir = TempDir::new().unwrap();
    let chain = call_chain_csv(dir.path());
    let c = chain.to_str().unwrap();
    let o =
        tailprice(&["report", "--chain", c, "--spot", "100", "--expiry", "0.25", "--alpha", "2", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["market_fit"]["alpha"], 2.75);
    assert_eq!(doc["loglog_fit"]["slope"], -1.0);
    assert_eq!(doc["records"].as_array().unwrap().len(), 30);

    let o = tailprice(&["curve", "--chain", c, "--spot", "100", "--expiry", "0.25", "--alpha", "2.75", "--loglog"]);
    let text = stdout(&o);
    assert!(text.starts_with("ln_k_minus_s0,ln_model_price,ln_market_price\n"));
    let pts: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').take(2).map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect();
    let slope = (pts.last().unwrap().1 - pts[0].1) / (pts.last().unwrap().0 - pts[0].0);
    assert!((slope + 1.75).abs() < 1e-9);
}

#[test]
fn output_is_deterministic_and_can_go_to_a_file() {
    let dir = TempDir::new().unwrap();
    let chain = call_chain_csv(dir.path());
    let c = chain.to_str().unwrap();
    let args = ["report", "--chain", c, "--spot", "100", "--expiry", "0.25", "--alpha", "2.5", "--format", "json"];
    let a = tailprice(&args);
    let b = tailprice(&args);
    assert_eq!(a.stdout, b.stdout);

    let out = dir.path().join("report.json");
    let o = tailprice(&[&args[..], &["--output", out.to_str().unwrap()]].concat());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = TempDir::new().unwrap();
    let chain = put_chain_csv(dir.path());
    let config = write(
        dir.path(),
        "run.json",
        &format!(
            r#"{{"chain": {:?}, "spot": 100, "expiry": 0.25, "alpha": 2.75, "side": "put", "anchor_moneyness": 90}}"#,
            chain.to_str().unwrap()
        ),
    );
    let via_config = tailprice(&["curve", "--config", config.to_str().unwrap()]);
    assert!(via_config.status.success(), "{}", stderr(&via_config));
    let direct = tailprice(&[
        "curve",
        "--chain",
        chain.to_str().unwrap(),
        "--spot",
        "100",
        "--expiry",
        "0.25",
        "--alpha",
        "2.75",
        "--side",
        "put",
        "--anchor-moneyness",
        "90",
    ]);
    assert_eq!(via_config.stdout, direct.stdout);

    // Command-line flags take precedence.
    let overridden = tailprice(&["curve", "--config", config.to_str().unwrap(), "--alpha", "2"]);
    assert_ne!(overridden.stdout, direct.stdout);
}

#[test]
fn help_lists_tolerance_defaults() {
    let o = tailprice(&["check-arb", "--help"]);
    assert!(o.status.success());
    let help = stdout(&o);
    assert!(help.contains("--anchor-tolerance <ANCHOR_TOLERANCE>"));
    assert!(help.contains("[default: 0.05]"));
    assert!(help.contains("--check-rel <CHECK_REL>"));
    assert!(help.contains("[default: 0.000000000001]"));
    let o = tailprice(&["ivol", "--help"]);
    assert!(stdout(&o).contains("[default: 0.0000000001]"));
}

#[test]
fn validation_errors_exit_2_with_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let calls = call_chain_csv(dir.path());
    let calls = calls.to_str().unwrap();
    let bad_row = write(dir.path(), "bad.csv", "strike,side,price\n110,C,1\n0,C,2\n");
    let garbled = write(dir.path(), "garbled.csv", "strike,side,price\n110,X,1\n");
    let two = write(dir.path(), "two.csv", "strike,side,price\n110,C,1\n120,C,0.5\n");
    let bad_config = write(dir.path(), "config.json", "[1]");

    let cases: Vec<(Vec<&str>, &str)> = vec![
        (
            vec!["price", "--approach", "return", "--alpha", "2", "--l", "0.1", "--spot", "100", "--strike", "105"],
            "E-DOMAIN",
        ),
        (vec!["price", "--approach", "price", "--alpha", "0.9", "--l", "1", "--strike", "2"], "E-PARAM"),
        (vec!["calibrate", "--approach", "price", "--alpha", "2", "--price", "50", "--strike", "10"], "E-CONSISTENCY"),
        (vec!["ivol", "--price", "150", "--spot", "100", "--strike", "100", "--expiry", "1"], "E-BAND"),
        (vec!["price", "--approach", "return", "--alpha", "2", "--l", "0.1", "--strike", "120"], "E-USAGE"),
        (vec!["price", "--frobnicate"], "E-USAGE"),
        (vec!["curve", "--chain", "/nonexistent/chain.csv", "--spot", "100", "--expiry", "1", "--alpha", "2"], "E-IO"),
        (
            vec!["curve", "--chain", garbled.to_str().unwrap(), "--spot", "100", "--expiry", "1", "--alpha", "2"],
            "E-PARSE",
        ),
        (
            vec!["curve", "--chain", bad_row.to_str().unwrap(), "--spot", "100", "--expiry", "1", "--alpha", "2"],
            "E-VALIDATION",
        ),
        (
            vec!["curve", "--chain", calls, "--spot", "100", "--expiry", "1", "--alpha", "2", "--side", "put"],
            "E-NOCANDIDATE",
        ),
        (vec!["fit-alpha", "--chain", two.to_str().unwrap(), "--spot", "100", "--expiry", "1"], "E-POINTS"),
        (vec!["price", "--config", bad_config.to_str().unwrap()], "E-CONFIG"),
    ];
    for (args, code) in cases {
        let o = tailprice(&args);
        assert_error(&o, code);
    }
    let o =
        tailprice(&["curve", "--chain", bad_row.to_str().unwrap(), "--spot", "100", "--expiry", "1", "--alpha", "2"]);
    assert!(stderr(&o).contains("line 3"));
}
