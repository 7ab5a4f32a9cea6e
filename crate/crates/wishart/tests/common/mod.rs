#![allow(dead_code)]

use std::path::PathBuf;

use num_traits::ToPrimitive;
use wishart::sampling::RngSpec;
use wishart::{Matrix, SymMatrix, TracePolynomial};

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn canonical_json(t: &TracePolynomial) -> String {
    let mut s = serde_json::to_string_pretty(t).expect("serializable");
    s.push('\n');
    s
}

pub fn tp(s: &str) -> TracePolynomial {
    s.parse().expect("valid trace polynomial")
}

/// `B B'/r + floor·I` with standard normal `B`.
pub fn random_spd(seed: u64, r: usize, floor: f64) -> SymMatrix<f64> {
    let mut g = RngSpec::new(seed, 17).trial(0);
    let b: Vec<f64> = (0..r * r).map(|_| g.normal()).collect();
    let m =
        Matrix::from_fn(r, |i, j| (0..r).map(|k| b[i * r + k] * b[j * r + k]).sum::<f64>() / r as f64 + if i == j { floor } else { 0.0 });
    SymMatrix::from_symmetrized(&m)
}

pub fn random_sym(seed: u64, r: usize) -> SymMatrix<f64> {
    let mut g = RngSpec::new(seed, 23).trial(0);
    let b: Vec<f64> = (0..r * r).map(|_| g.normal()).collect();
    SymMatrix::from_symmetrized(&Matrix::from_fn(r, |i, j| 0.5 * (b[i * r + j] + b[j * r + i])))
}

/// Point uniformly placed in the unit ball direction-wise, radius uniform.
pub fn random_ball(seed: u64, stream: u64, r: usize) -> Vec<f64> {
    let mut g = RngSpec::new(seed, 31 + stream).trial(0);
    let v: Vec<f64> = (0..r).map(|_| g.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rad = g.uniform();
    v.iter().map(|x| x / norm * rad).collect()
}

pub fn uniform(seed: u64, stream: u64) -> f64 {
    RngSpec::new(seed, 97 + stream).trial(0).uniform()
}

pub fn ratf(x: &num_rational::BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
