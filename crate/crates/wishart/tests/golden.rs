mod common;

use common::{canonical_json, golden_dir, tp};
use wishart::moments::{hn_moment, m_plus, sigma, sigma_trace, sum_power_moment, Route, SampleCoefficient};
use wishart::wick::{moment_h, moment_partition, WickCaps};
use wishart::{SetPartition, TracePolynomial};

fn values() -> Vec<(String, TracePolynomial)> {
    let caps = WickCaps::default();
    let mut out = vec![
        ("h_2".to_string(), moment_h(2, &caps).unwrap()),
        ("h_4".to_string(), moment_h(4, &caps).unwrap()),
        ("crossing_pair_4".to_string(), moment_partition(&SetPartition::new(vec![vec![1, 3], vec![2, 4]]).unwrap(), true, &caps).unwrap()),
        ("fourth_moment_gap".to_string(), hn_moment(4, SampleCoefficient::Falling, &caps).unwrap().coeff(-2)),
    ];
    for n in 2..=4 {
        out.push((format!("x_minus_p_{n}"), sum_power_moment(n, 1, &caps).unwrap()));
    }
    for n in 1..=3 {
        out.push((format!("m_plus_{n}"), m_plus(n).unwrap()));
    }
    for n in 1..=5 {
        out.push((format!("sigma_{n}"), sigma(n, Route::Recursion).unwrap()));
        out.push((format!("semicircle_{n}"), sigma_trace(n).unwrap()));
    }
    out
}

#[test]
fn golden_files_are_byte_identical() {
    let vals = values();
    let on_disk = std::fs::read_dir(golden_dir()).unwrap().count();
    assert_eq!(vals.len(), on_disk);
    for (name, value) in vals {
        let want = std::fs::read_to_string(golden_dir().join(format!("{name}.json"))).unwrap();
        assert_eq!(canonical_json(&value), want, "{name}");
    }
}

#[test]
fn golden_values_in_text_form() {
    let caps = WickCaps::default();
    assert_eq!(moment_h(2, &caps).unwrap(), tp("P^2 + Tr(P) P"));
    let crossing = moment_partition(&SetPartition::new(vec![vec![1, 3], vec![2, 4]]).unwrap(), true, &caps).unwrap();
    assert_eq!(crossing, tp("3 P^4 + Tr(P^2) P^2"));
    assert_eq!(m_plus(2).unwrap(), tp("2 P^4 + 3 Tr(P) P^3 + Tr(P)^2 P^2 + Tr(P^3) P + Tr(P) Tr(P^2) P"));
}
