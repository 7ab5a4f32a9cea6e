use std::process::{Command, Output};

use serde_json::Value;
use wishart::moments::{sigma, Route};
use wishart::TracePolynomial;

fn wishart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wishart")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn last_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or_default().to_string()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let o = wishart(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn catalan_count() {
    let o = wishart(&["counts", "catalan", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "5");
    assert!(stdout(&o).starts_with("# formula: "));
}

#[test]
fn isotropic_m_plus() {
    let o = wishart(&["moment", "--kind", "mplus", "2", "--eval", "I", "--dim", "r"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "2 + 4r + 2r^2");
    let fixed = wishart(&["moment", "--kind", "mplus", "2", "--eval", "I", "--dim", "3"]);
    assert_eq!(last_line(&fixed), "32");
}

#[test]
fn sigma_route_suite() {
    let o = wishart(&["verify", "sigma-routes", "--n", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(last_line(&o).starts_with("PASS"));
}

#[test]
fn small_suites_pass() {
    for suite in ["golden", "sigma-circ-routes", "mplus-routes", "alpha-routes", "nc-routes", "kreweras", "wick-engines"] {
        let o = wishart(&["verify", suite, "--n", "3"]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stdout(&o));
    }
}

#[test]
fn provenance_echoes_seed_and_caps() {
    let v = json(&["--seed", "42", "--cap-centered", "6", "sigma", "2", "--route", "closed-form"]);
    assert_eq!(v["provenance"]["seed"], 42);
    assert_eq!(v["provenance"]["caps"]["centered"], 6);
    assert_eq!(v["provenance"]["route"], "closed-form");
    let t: TracePolynomial = serde_json::from_value(v["result"].clone()).unwrap();
    assert_eq!(t, sigma(2, Route::Recursion).unwrap());
}

#[test]
fn pretty_polynomial_parses_back() {
    let o = wishart(&["sigma", "3"]);
    let t: TracePolynomial = last_line(&o).parse().unwrap();
    assert_eq!(t, sigma(3, Route::Recursion).unwrap());
}

#[test]
fn partitions_output() {
    assert_eq!(last_line(&wishart(&["partitions", "4", "--class", "nc", "--count"])), "14");
    let v = json(&["partitions", "3"]);
    let parts = v["result"].as_array().unwrap();
    assert_eq!(parts.len(), 5);
    assert_eq!(parts[0], serde_json::json!([[1, 2, 3]]));
    let k = json(&["partitions", "3", "1", "--class", "nc", "--kreweras"]);
    assert_eq!(k["result"][0]["kreweras"], serde_json::json!([[1], [2], [3]]));
    let csv = stdout(&wishart(&["--format", "csv", "partitions", "2"]));
    assert_eq!(csv.lines().nth(1), Some("partition"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn finite_sample_moments() {
    assert_eq!(last_line(&wishart(&["moment", "--kind", "pn", "2", "10", "--eval", "I", "--dim", "3"])), "7/5");
    let e = json(&["moment", "--kind", "hn", "4"]);
    assert_eq!(e["result"].as_array().unwrap().len(), 2);
    assert_eq!(e["result"][0]["half_power"], 0);
    let odd = wishart(&["moment", "--kind", "hn", "3", "4"]);
    assert_eq!(odd.status.code(), Some(2));
    let centered = wishart(&["moment", "--kind", "pn", "--centered", "2", "--eval", "I", "--dim", "r"]);
    assert!(stdout(&centered).contains("N^-1: 1 + r"), "{}", stdout(&centered));
}

#[test]
fn numeric_evaluation_from_file() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("p_diag.json");
    std::fs::write(&path, r#"{"dim":2,"rows":[[1,0],[0,2]]}"#).unwrap();
    let v = json(&["moment", "--kind", "m", "2", "1", "--eval", path.to_str().unwrap()]);
    // P^2 + Tr(P) P at diag(1, 2)
    assert_eq!(v["result"]["rows"], serde_json::json!([[4.0, 0.0], [0.0, 10.0]]));
    let inline = json(&["moment", "--kind", "mcirc", "2", "2", "--eval", r#"{"dim":1,"rows":[[3]]}"#]);
    assert_eq!(inline["result"]["rows"], serde_json::json!([[9.0]]));
}

#[test]
fn iso_and_limits() {
    assert_eq!(last_line(&wishart(&["iso", "m-plus-i", "2", "--dim", "3"])), "32");
    assert_eq!(last_line(&wishart(&["iso", "m-pi-circ", "[[1,2]]"])), "2 + r");
    assert_eq!(wishart(&["iso", "m-pi-circ", "[[1,3],[2,4]]"]).status.code(), Some(2));
    assert_eq!(last_line(&wishart(&["limits", "mp-moment-iso", "3"])), "5");
    assert_eq!(last_line(&wishart(&["limits", "mp-moment", "2", "--rho", "0.5", "--tau", "1,2"])), "5/2");
    let v = json(&["limits", "sc-integral", "4"]);
    assert!((v["result"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn sampling_is_reproducible_across_threads() {
    let args = ["--seed", "7", "--format", "json", "sample", "--dim", "2", "--samples", "5", "--power", "2", "--trials", "300"];
    let one = wishart(&[&["--threads", "1"], &args[..]].concat());
    let four = wishart(&[&["--threads", "4"], &args[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let other = wishart(&["--seed", "8", "--format", "json", "sample", "--dim", "2", "--samples", "5", "--power", "2", "--trials", "300"]);
    assert_ne!(one.stdout, other.stdout);
    let draw = json(&["sample", "--dim", "3", "--samples", "4", "--draw"]);
    assert_eq!(draw["result"]["dim"], 3);
}

#[test]
fn spectra_csv() {
    let o = wishart(&["--format", "csv", "spectra", "--dim", "20", "--samples", "40", "--trials", "5", "--bins", "10"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    assert!(lines.next().unwrap().starts_with("# formula"));
    assert_eq!(lines.next(), Some("bin_lo,bin_hi,empirical,mp_density,sc_density"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn bounds_commands() {
    let v = json(&["bounds", "threshold", "opnorm", "--p", "I", "--dim", "2", "--samples", "1000", "--delta", "1"]);
    assert!((v["result"]["value"].as_f64().unwrap() - 5.0 * 45f64.sqrt()).abs() < 1e-12);
    let refused = wishart(&["bounds", "threshold", "opnorm", "--p", "I", "--dim", "2", "--samples", "100", "--delta", "1"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("hypothesis"));
    let check = wishart(&["bounds", "check", "matrix-laplace", "--p", "I", "--dim", "2", "--t", "0.1"]);
    assert_eq!(check.status.code(), Some(0), "{}", stdout(&check));
    let neg = json(&["bounds", "laplace", "trace-ah", "--t", "-0.5", "--p", "I", "--a", "I", "--dim", "2"]);
    assert!((neg["result"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(last_line(&wishart(&["bounds", "legendre", "lstar", "3"])), "1");
    let rank1 = wishart(&["bounds", "check", "rank1", "--p", "I", "--dim", "2", "--x", "[0.6,0]", "--y", "[0,0.8]", "--power", "3"]);
    assert_eq!(rank1.status.code(), Some(0));
}

#[test]
fn threshold_sweep_table() {
    let o = wishart(&["--format", "csv", "bounds", "sweep", "opnorm", "--delta", "0.5,1", "--samples", "100,1000", "--dim", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().nth(1), Some("delta,samples,dim,threshold,status"));
    assert_eq!(s.lines().count(), 6);
    assert!(s.contains("refused"));
}

#[test]
fn exit_codes() {
    assert_eq!(wishart(&["counts", "bogus", "1"]).status.code(), Some(2));
    assert_eq!(wishart(&["moment", "--kind", "m", "12", "6"]).status.code(), Some(3));
    assert_eq!(wishart(&["moment", "--kind", "m", "4", "2", "--centered"]).status.code(), Some(2));
    let unknown = wishart(&["counts", "catalan", "3", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(wishart(&["--help"]).status.code(), Some(0));
    assert_eq!(wishart(&["moment", "--kind", "m", "4", "--eval", "missing.json", "2"]).status.code(), Some(2));
}
