//! Test-only oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use ggwpd::{Complex64, WavePacketParams};
use rustfft::FftPlanner;

/// Strang split-operator propagation of `packet` under `p²/2 + V(x)` on a
/// periodic grid; returns `(x, ψ(x, t))`.
pub fn split_operator(
    packet: &WavePacketParams,
    potential: impl Fn(f64) -> f64,
    t: f64,
    dt_max: f64,
    half_width: f64,
    n: usize,
) -> (Vec<f64>, Vec<Complex64>) {
    let hbar = packet.hbar;
    let dx = 2.0 * half_width / n as f64;
    let xs: Vec<f64> = (0..n).map(|k| -half_width + k as f64 * dx).collect();
    let mut psi: Vec<Complex64> = xs.iter().map(|&x| packet.eval(&[x]).unwrap()).collect();
    let steps = (t / dt_max).ceil() as usize;
    let dt = t / steps as f64;
    let dk = 2.0 * PI / (n as f64 * dx);
    let kinetic: Vec<Complex64> = (0..n)
        .map(|j| {
            let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dk;
            Complex64::from_polar(1.0 / n as f64, -hbar * k * k / 2.0 * dt)
        })
        .collect();
    let half_v: Vec<Complex64> = xs.iter().map(|&x| Complex64::from_polar(1.0, -potential(x) * dt / (2.0 * hbar))).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    for _ in 0..steps {
        psi.iter_mut().zip(&half_v).for_each(|(a, b)| *a *= b);
        fwd.process(&mut psi);
        psi.iter_mut().zip(&kinetic).for_each(|(a, b)| *a *= b);
        inv.process(&mut psi);
        psi.iter_mut().zip(&half_v).for_each(|(a, b)| *a *= b);
    }
    (xs, psi)
}

/// Linear interpolation of grid values at `x`.
pub fn interpolate(xs: &[f64], ys: &[Complex64], x: f64) -> Complex64 {
    let dx = xs[1] - xs[0];
    let f = (x - xs[0]) / dx;
    let k = (f.floor() as usize).min(xs.len() - 2);
    let w = f - k as f64;
    ys[k] * (1.0 - w) + ys[k + 1] * w
}

/// Trigonometric interpolation of periodic grid values at `x`.
pub fn fourier_interpolate(xs: &[f64], ys: &[Complex64], x: f64) -> Complex64 {
    let n = xs.len();
    let dx = xs[1] - xs[0];
    let length = n as f64 * dx;
    let mut spectrum = ys.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
    let u = x - xs[0];
    spectrum
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * 2.0 * PI / length;
            c * Complex64::from_polar(1.0 / n as f64, k * u)
        })
        .sum()
}
