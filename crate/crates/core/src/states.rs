//! Gaussian wave packets, their Wigner transforms, and the coherent-state
//! correspondence.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Real phase-space point.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPhasePoint {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
}

impl RealPhasePoint {
    pub fn one_dim(p: f64, q: f64) -> Self {
        RealPhasePoint { p: DVector::from_element(1, p), q: DVector::from_element(1, q) }
    }
}

/// `φ(x) = N exp[−(x−q)·b·(x−q)/2ħ + i p·(x−q)/ħ]` with
/// `N = [Det(b + b*)/(2πħ)^N]^{1/4} exp(i p·q/2ħ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacketParams {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    /// Symmetric shape matrix `b = c + i d`.
    pub b: DMatrix<Complex64>,
    pub hbar: f64,
}

/// Glauber coherent state label.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentStateParams {
    pub z: DVector<Complex64>,
}

impl WavePacketParams {
    pub fn one_dim(q: f64, p: f64, b: Complex64, hbar: f64) -> Self {
        WavePacketParams {
            q: DVector::from_element(1, q),
            p: DVector::from_element(1, p),
            b: DMatrix::from_element(1, 1, b),
            hbar,
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn c(&self) -> DMatrix<f64> {
        self.b.map(|z| z.re)
    }

    pub fn d(&self) -> DMatrix<f64> {
        self.b.map(|z| z.im)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.p.len() });
        }
        if self.b.nrows() != n || self.b.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.b.nrows() });
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(Error::InvalidShape(format!("hbar must be positive, got {}", self.hbar)));
        }
        let finite = self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
            && self.b.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::InvalidShape("non-finite packet parameter".into()));
        }
        let scale = self.b.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asym = (&self.b - self.b.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidShape(format!("b is not symmetric (defect {asym:e})")));
        }
        if self.c().cholesky().is_none() {
            return Err(Error::InvalidShape("Re b is not positive definite".into()));
        }
        Ok(())
    }

    /// `ln [Det(b + b*)/(2πħ)^N]^{1/4}`.
    pub fn log_norm(&self) -> f64 {
        let n = self.dim() as f64;
        let det = (self.c() * 2.0).determinant();
        0.25 * (det.ln() - n * (2.0 * PI * self.hbar).ln())
    }

    /// `ln φ(x)` analytically continued to complex `x`.
    pub fn log_amplitude(&self, x: &DVector<Complex64>) -> Complex64 {
        let q = self.q.map(|v| Complex64::new(v, 0.0));
        let p = self.p.map(|v| Complex64::new(v, 0.0));
        let dx = x - &q;
        let quad = (dx.transpose() * &self.b * &dx)[(0, 0)];
        let phase = p.dot(&q) * I / (2.0 * self.hbar);
        self.log_norm() + phase - quad / (2.0 * self.hbar) + I * p.dot(&dx) / self.hbar
    }

    /// Analytic continuation of `ln φ*(x)`.
    pub fn log_amplitude_conj(&self, x: &DVector<Complex64>) -> Complex64 {
        self.log_amplitude(&x.map(|z| z.conj())).conj()
    }

    /// `φ(x)` at a real position.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        wavepacket_eval(self, x)
    }

    pub fn centroid_point(&self) -> RealPhasePoint {
        RealPhasePoint { p: self.p.clone(), q: self.q.clone() }
    }
}

pub fn wavepacket_eval(params: &WavePacketParams, x: &[f64]) -> Result<Complex64> {
    params.validate()?;
    if x.len() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), found: x.len() });
    }
    let x = DVector::from_iterator(x.len(), x.iter().map(|&v| Complex64::new(v, 0.0)));
    Ok(params.log_amplitude(&x).exp())
}

/// `A = [[c⁻¹, c⁻¹d], [d c⁻¹, c + d c⁻¹ d]]` in `(p, q)` ordering.
pub fn shape_matrix(params: &WavePacketParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let n = params.dim();
    let c = params.c();
    let d = params.d();
    let c_inv = c.clone().try_inverse().ok_or_else(|| Error::InvalidShape("Re b is singular".into()))?;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&c_inv);
    a.view_mut((0, n), (n, n)).copy_from(&(&c_inv * &d));
    a.view_mut((n, 0), (n, n)).copy_from(&(&d * &c_inv));
    a.view_mut((n, n), (n, n)).copy_from(&(&c + &d * &c_inv * &d));
    Ok(a)
}

/// `(πħ)^{-N} exp[−(δp, δq)·A/ħ·(δp, δq)]`.
pub fn wigner(params: &WavePacketParams, p: &[f64], q: &[f64]) -> Result<f64> {
    let a = shape_matrix(params)?;
    let n = params.dim();
    if p.len() != n || q.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.len().min(q.len()) });
    }
    let v = DVector::from_iterator(
        2 * n,
        p.iter().zip(params.p.iter()).map(|(a, b)| a - b).chain(q.iter().zip(params.q.iter()).map(|(a, b)| a - b)),
    );
    let quad = (v.transpose() * &a * &v)[(0, 0)];
    Ok((PI * params.hbar).powi(-(n as i32)) * (-quad / params.hbar).exp())
}

/// Points on the level-σ contour of the Wigner transform in the plane of
/// the first degree of freedom: `(δp, δq)·A/ħ·(δp, δq) = level²/2`.
/// Points are equally spaced in the eccentric angle; angle 0 lies on the
/// position axis through the centroid.
pub fn sigma_contour(params: &WavePacketParams, level: f64, n_points: usize) -> Result<Vec<RealPhasePoint>> {
    if !(level > 0.0) {
        return Err(Error::DomainError(format!("contour level must be positive, got {level}")));
    }
    let a = shape_matrix(params)?;
    let n = params.dim();
    // (q, p) ordering restricted to the first degree of freedom
    let aqq = a[(n, n)];
    let aqp = a[(n, 0)];
    let app = a[(0, 0)];
    let l11 = aqq.sqrt();
    let l21 = aqp / l11;
    let l22 = (app - l21 * l21).sqrt();
    let r = (params.hbar * level * level / 2.0).sqrt();
    Ok((0..n_points)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_points as f64;
            let (s, c) = phi.sin_cos();
            let dp = r * s / l22;
            let dq = r * c / l11 - l21 * dp / l11;
            let mut pt = params.centroid_point();
            pt.p[0] += dp;
            pt.q[0] += dq;
            pt
        })
        .collect())
}

/// Lagrangian manifold of the packet: `P0 = p_α + i b_α (Q0 − q_α)`.
pub fn initial_manifold_momentum(params: &WavePacketParams, q0: &DVector<Complex64>) -> DVector<Complex64> {
    let q = params.q.map(|v| Complex64::new(v, 0.0));
    let p = params.p.map(|v| Complex64::new(v, 0.0));
    p + (&params.b * (q0 - q)) * I
}

/// Quadrature image of a coherent state: `q = √(2ħ) Re z`,
/// `p = √(2ħ) Im z`, ground-state shape `b = 1`.
pub fn coherent_to_quadrature(cs: &CoherentStateParams, hbar: f64) -> WavePacketParams {
    let scale = (2.0 * hbar).sqrt();
    let n = cs.z.len();
    WavePacketParams {
        q: cs.z.map(|z| scale * z.re),
        p: cs.z.map(|z| scale * z.im),
        b: DMatrix::identity(n, n),
        hbar,
    }
}
