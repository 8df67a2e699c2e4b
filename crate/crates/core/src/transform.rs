//! Horizontal FFT and vertical sine/cosine transforms (type-I, node-based).
//!
//! Vertical nodes are `y_j = j/N`, `j = 0..=N`. The sine pair maps interior
//! values `f_1..f_{N-1}` to coefficients `a_1..a_{N-1}` with
//! `f_j = Σ a_m sin(mπj/N)`. The cosine pair maps `f_0..f_N` to `c_0..c_N`
//! with `f_j = Σ c_m cos(mπj/N)`.

use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    planner()
        .lock()
        .expect("fft planner poisoned")
        .plan_fft_forward(n)
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    planner()
        .lock()
        .expect("fft planner poisoned")
        .plan_fft_inverse(n)
}

/// In-place forward DFT normalised so that `f_n = Σ_k f̂_k e^{2πikn/N}`.
pub fn horizontal_forward(buf: &mut [Complex64]) {
    let n = buf.len();
    forward_plan(n).process(buf);
    let s = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// In-place inverse of [`horizontal_forward`].
pub fn horizontal_inverse(buf: &mut [Complex64]) {
    inverse_plan(buf.len()).process(buf);
}

/// `Σ_{j=1}^{N-1} x_j sin(mπj/N)` for `m = 1..N-1`; `x` holds interior values.
fn raw_sine(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() + 1;
    let mut b = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (j, &v) in x.iter().enumerate() {
        b[j + 1] = v;
        b[2 * n - j - 1] = -v;
    }
    forward_plan(2 * n).process(&mut b);
    let half_i = Complex64::new(0.0, 0.5);
    (1..n).map(|m| b[m] * half_i).collect()
}

/// `½x_0 + Σ_{j=1}^{N-1} x_j cos(mπj/N) + ½(-1)^m x_N` for `m = 0..=N`.
fn raw_cosine(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() - 1;
    let mut b = vec![Complex64::new(0.0, 0.0); 2 * n];
    b[0] = x[0];
    b[n] = x[n];
    for j in 1..n {
        b[j] = x[j];
        b[2 * n - j] = x[j];
    }
    forward_plan(2 * n).process(&mut b);
    (0..=n).map(|m| b[m] * 0.5).collect()
}

pub fn sine_forward(interior: &[Complex64]) -> Vec<Complex64> {
    let n = interior.len() + 1;
    let s = 2.0 / n as f64;
    raw_sine(interior).into_iter().map(|v| v * s).collect()
}

pub fn sine_inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    raw_sine(coeffs)
}

pub fn cosine_forward(nodal: &[Complex64]) -> Vec<Complex64> {
    let n = nodal.len() - 1;
    let mut c = raw_cosine(nodal);
    let nf = n as f64;
    c[0] /= nf;
    c[n] /= nf;
    for v in c.iter_mut().take(n).skip(1) {
        *v *= 2.0 / nf;
    }
    c
}

pub fn cosine_inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let mut y = coeffs.to_vec();
    y[0] *= 2.0;
    y[n] *= 2.0;
    raw_cosine(&y)
}
