use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ComplexPhasePoint;
use crate::error::{Error, Result};

/// Separable Hamiltonians `H = p·p / 2m + Σ V(q_i)` with a polynomial
/// potential, analytically continued to complex phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    /// `p²/2 + λ q⁴`.
    Quartic { lambda: f64 },
    FreeParticle,
    /// `p²/2 + ω² q²/2`.
    Harmonic { omega: f64 },
    /// `p²/2m + Σ_k c_k q^k`, coefficients in ascending powers.
    Polynomial { mass: f64, coefficients: Vec<f64> },
}

impl HamiltonianSpec {
    pub fn quartic(lambda: f64) -> Self {
        HamiltonianSpec::Quartic { lambda }
    }

    pub fn harmonic(omega: f64) -> Self {
        HamiltonianSpec::Harmonic { omega }
    }

    /// Checks that every parameter is finite and that the potential passes a
    /// Cauchy-Riemann probe at a few complex points.
    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            HamiltonianSpec::Quartic { lambda } => lambda.is_finite(),
            HamiltonianSpec::FreeParticle => true,
            HamiltonianSpec::Harmonic { omega } => omega.is_finite(),
            HamiltonianSpec::Polynomial { mass, coefficients } => {
                mass.is_finite() && *mass != 0.0 && coefficients.iter().all(|c| c.is_finite())
            }
        };
        if !finite {
            return Err(Error::NonAnalyticHamiltonian(format!(
                "non-finite or degenerate parameters in {self:?}"
            )));
        }
        for probe in [
            Complex64::new(0.3, 0.2),
            Complex64::new(-1.1, 0.7),
            Complex64::new(2.0, -0.4),
        ] {
            let (_, dv, _) = self.potential(probe);
            let h = 1e-6 * (1.0 + probe.norm());
            let along_re = (self.potential(probe + h).0 - self.potential(probe - h).0) / (2.0 * h);
            let ih = Complex64::new(0.0, h);
            let along_im =
                (self.potential(probe + ih).0 - self.potential(probe - ih).0) / (2.0 * ih);
            let scale = 1.0 + dv.norm();
            if (along_re - along_im).norm() > 1e-5 * scale || (along_re - dv).norm() > 1e-5 * scale
            {
                return Err(Error::NonAnalyticHamiltonian(format!(
                    "potential derivative inconsistent at q = {probe}"
                )));
            }
        }
        Ok(())
    }

    pub fn inverse_mass(&self) -> f64 {
        match self {
            HamiltonianSpec::Polynomial { mass, .. } => 1.0 / mass,
            _ => 1.0,
        }
    }

    /// `(V, V', V'')` for one degree of freedom.
    pub fn potential(&self, q: Complex64) -> (Complex64, Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            HamiltonianSpec::Quartic { lambda } => {
                let q2 = q * q;
                (*lambda * q2 * q2, 4.0 * *lambda * q2 * q, 12.0 * *lambda * q2)
            }
            HamiltonianSpec::FreeParticle => (zero, zero, zero),
            HamiltonianSpec::Harmonic { omega } => {
                let w2 = omega * omega;
                (0.5 * w2 * q * q, w2 * q, Complex64::new(w2, 0.0))
            }
            HamiltonianSpec::Polynomial { coefficients, .. } => {
                // Horner on value and both derivatives.
                let mut v = zero;
                let mut dv = zero;
                let mut d2v = zero;
                for &c in coefficients.iter().rev() {
                    d2v = d2v * q + 2.0 * dv;
                    dv = dv * q + v;
                    v = v * q + c;
                }
                (v, dv, d2v)
            }
        }
    }

    /// Analytic continuation of `H` at a complex phase-space point.
    pub fn energy(&self, point: &ComplexPhasePoint) -> Complex64 {
        let kinetic: Complex64 = point.p.iter().map(|p| p * p).sum::<Complex64>() * 0.5 * self.inverse_mass();
        let potential: Complex64 = point.q.iter().map(|&q| self.potential(q).0).sum();
        kinetic + potential
    }

    /// Scalar convenience for one degree of freedom.
    pub fn energy_1d(&self, p: Complex64, q: Complex64) -> Complex64 {
        0.5 * self.inverse_mass() * p * p + self.potential(q).0
    }
}
