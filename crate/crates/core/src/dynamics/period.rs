use crate::error::{Error, Result};

/// Period of the quartic oscillator `p²/2 + λq⁴` on the energy shell `E`.
///
/// `τ = 4 ∫₀^{q_max} dq / √(2(E − λq⁴))` with `q_max = (E/λ)^{1/4}`. The
/// integral is reduced to `q_max/√(2E) · ∫₀¹ du/√(1 − u⁴)`, whose endpoint
/// singularity is removed by `u = 1 − s²` before adaptive quadrature.
pub fn period_quartic(energy: f64, lambda: f64) -> Result<f64> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::DomainError(format!("energy must be positive, got {energy}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::DomainError(format!("lambda must be positive, got {lambda}")));
    }
    let q_max = (energy / lambda).powf(0.25);
    Ok(4.0 * q_max / (2.0 * energy).sqrt() * quartic_period_integral())
}

/// `∫₀¹ du / √(1 − u⁴)`.
pub fn quartic_period_integral() -> f64 {
    // u = 1 - s²: du = -2s ds and 1 - u⁴ = s²(1 + u)(1 + u²).
    let f = |s: f64| {
        let u = 1.0 - s * s;
        2.0 / ((1.0 + u) * (1.0 + u * u)).sqrt()
    };
    adaptive_simpson(&f, 0.0, 1.0, 1e-15, 48)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
