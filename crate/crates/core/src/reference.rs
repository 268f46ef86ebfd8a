//! Closed-form quantum evolution of a Gaussian under quadratic
//! Hamiltonians, by direct Gaussian integration against the propagator
//! kernel. Independent of the trajectory machinery; used as an exactness
//! oracle.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::dynamics::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::states::WavePacketParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Kernel `K(x, y, t) = A exp(i [α x² + β x y + γ y²])`.
struct Kernel {
    amplitude: Complex64,
    alpha: f64,
    beta: f64,
    gamma: f64,
}

fn kernel(hamiltonian: &HamiltonianSpec, t: f64, hbar: f64) -> Result<Kernel> {
    let (mass, omega) = match hamiltonian {
        HamiltonianSpec::FreeParticle => (1.0, 0.0),
        HamiltonianSpec::Harmonic { omega } => (1.0, *omega),
        HamiltonianSpec::Polynomial { mass, coefficients } => {
            let quadratic = coefficients.iter().enumerate().all(|(k, &c)| k == 2 || c == 0.0);
            if !quadratic {
                return Err(Error::DomainError("reference evolution needs a pure quadratic potential".into()));
            }
            let k2 = coefficients.get(2).copied().unwrap_or(0.0);
            if k2 < 0.0 {
                return Err(Error::DomainError("inverted oscillators are not supported".into()));
            }
            (*mass, (2.0 * k2 / mass).sqrt())
        }
        HamiltonianSpec::Quartic { .. } => {
            return Err(Error::DomainError("no closed form for the quartic oscillator".into()))
        }
    };
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("reference time must be positive, got {t}")));
    }
    if omega == 0.0 {
        let a = mass / (2.0 * hbar * t);
        return Ok(Kernel {
            amplitude: Complex64::from_polar((mass / (2.0 * PI * hbar * t)).sqrt(), -FRAC_PI_4),
            alpha: a,
            beta: -2.0 * a,
            gamma: a,
        });
    }
    let s = (omega * t).sin();
    if s.abs() < 1e-12 {
        return Err(Error::DomainError(format!("kernel is singular at t = {t} (focal point)")));
    }
    let a = mass * omega / (2.0 * hbar * s);
    // one extra quarter turn per focal point passed
    let focal = (omega * t / PI).floor();
    Ok(Kernel {
        amplitude: Complex64::from_polar(
            (mass * omega / (2.0 * PI * hbar * s.abs())).sqrt(),
            -FRAC_PI_4 - focal * FRAC_PI_2,
        ),
        alpha: a * (omega * t).cos(),
        beta: -2.0 * a,
        gamma: a * (omega * t).cos(),
    })
}

/// `ψ(x, t)` for a one-dimensional Gaussian under a quadratic Hamiltonian.
pub fn exact_wavefunction(packet: &WavePacketParams, hamiltonian: &HamiltonianSpec, t: f64, x: f64) -> Result<Complex64> {
    packet.validate()?;
    if packet.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: packet.dim() });
    }
    let hbar = packet.hbar;
    let k = kernel(hamiltonian, t, hbar)?;
    let (q, p, b) = (packet.q[0], packet.p[0], packet.b[(0, 0)]);
    // φ(y) = N exp(−b (y−q)²/2ħ + i p (y−q)/ħ + i p q / 2ħ)
    // integrand exponent: −a y² + B y + C
    let a = b / (2.0 * hbar) - I * k.gamma;
    let big_b = b * q / hbar + I * p / hbar + I * k.beta * x;
    let c = -b * q * q / (2.0 * hbar) - I * p * q / hbar + I * p * q / (2.0 * hbar) + I * k.alpha * x * x;
    let norm = packet.log_norm().exp();
    Ok(k.amplitude * norm * (PI / a).sqrt() * (big_b * big_b / (4.0 * a) + c).exp())
}
