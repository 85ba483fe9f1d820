#![allow(dead_code)]

use std::f64::consts::PI;
use std::io::Write;

/// Write a line straight to the process stdout so it shows up even when the
/// harness captures test output.
pub fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

pub fn verdict(id: &str, pass: bool, detail: &str) {
    emit(&format!("criterion {id}: {} ({detail})", if pass { "PASS" } else { "FAIL" }));
}

/// Maximize a unimodal function on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn log_normal(y: f64, m: f64, v: f64) -> f64 {
    -0.5 * (2.0 * PI * v).ln() - 0.5 * (y - m) * (y - m) / v
}

/// Plain Gaussian kernel weight `W((x-u)/h)/h`.
pub fn gauss_w(x: f64, u: f64, h: f64) -> f64 {
    let t = (x - u) / h;
    (-0.5 * t * t).exp() / ((2.0 * PI).sqrt() * h)
}

/// Piecewise-linear interpolation clamped at the ends.
pub fn lerp_at(grid: &[f64], vals: &[f64], x: f64) -> f64 {
    if x <= grid[0] {
        return vals[0];
    }
    if x >= grid[grid.len() - 1] {
        return vals[vals.len() - 1];
    }
    let j = grid.windows(2).position(|w| x >= w[0] && x <= w[1]).unwrap();
    let t = (x - grid[j]) / (grid[j + 1] - grid[j]);
    vals[j] + t * (vals[j + 1] - vals[j])
}

/// A fixed 20-point sample with two loose clusters, plus a hand-made posterior.
pub struct Fixture {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub gamma: Vec<[f64; 2]>,
    pub lambda: Vec<[f64; 2]>,
    pub eta: [f64; 2],
}

pub fn fixture() -> Fixture {
    let noise = [
        0.31, -0.52, 0.18, 0.77, -0.25, 0.04, -0.93, 0.42, 0.11, -0.36, 0.65, -0.08, 0.29, -0.71, 1.9, 0.55, -0.19,
        0.83, -0.44, -2.3,
    ];
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut gamma = Vec::new();
    let mut lambda = Vec::new();
    for i in 0..20 {
        let xi = i as f64 / 19.0;
        let upper = i % 2 == 0;
        let m = if upper { 3.0 - (2.0 * PI * xi).sin() } else { (3.0 * PI * xi).cos() };
        x.push(xi);
        y.push(m + 0.5 * noise[i]);
        let g1 = if upper { 0.15 + 0.03 * (i % 5) as f64 } else { 0.8 + 0.02 * (i % 7) as f64 };
        gamma.push([g1, 1.0 - g1]);
        let l1 = 0.65 + 0.3 * ((i * 7) % 11) as f64 / 10.0;
        let l2 = 0.6 + 0.35 * ((i * 3) % 13) as f64 / 12.0;
        lambda.push([l1.min(0.999), l2.min(0.999)]);
    }
    Fixture { x, y, gamma, lambda, eta: [5.0, 12.0] }
}
