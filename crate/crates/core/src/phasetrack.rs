//! The three prefactor determinants and continuous phase accumulation.
//!
//! The naive index follows the accumulated determinant phase `Φ`:
//! `ν = ⌊Φ/π⌋` and `θ = (Φ − νπ)/2 ∈ [0, π/2)`, so the prefactor is
//! `|D|^{-1/2} e^{-iθ} e^{-iνπ/2}`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{StabilityMatrix, TrajectoryRecord};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative modulus below which a determinant counts as vanished.
pub const ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Determinant {
    /// Van Vleck, `Det(−M21)`.
    D0,
    /// Wave packet propagation, `Det(M22 + i M21 b_α)`.
    D1,
    /// Transport coefficient, `Det(M11 b_α + b*_β M22 + i(b*_β M21 b_α − M12))`.
    D2,
}

/// Shape matrices entering D1 and D2.
#[derive(Debug, Clone, PartialEq)]
pub struct Shapes {
    pub b_alpha: DMatrix<Complex64>,
    pub b_beta: DMatrix<Complex64>,
}

impl Shapes {
    pub fn new(b_alpha: DMatrix<Complex64>) -> Self {
        Shapes { b_beta: b_alpha.clone(), b_alpha }
    }

    pub fn transport(b_alpha: DMatrix<Complex64>, b_beta: DMatrix<Complex64>) -> Self {
        Shapes { b_alpha, b_beta }
    }

    pub fn scalar(b: Complex64) -> Self {
        Shapes::new(DMatrix::from_element(1, 1, b))
    }
}

pub fn det_vanvleck(m: &StabilityMatrix) -> Complex64 {
    (-m.m21()).determinant()
}

pub fn det_d1(m: &StabilityMatrix, b_alpha: &DMatrix<Complex64>) -> Complex64 {
    (m.m22() + m.m21() * b_alpha * I).determinant()
}

pub fn det_d2(m: &StabilityMatrix, b_alpha: &DMatrix<Complex64>, b_beta: &DMatrix<Complex64>) -> Complex64 {
    let bb = b_beta.map(|z| z.conj());
    let inner = &bb * m.m21() * b_alpha - m.m12();
    (m.m11() * b_alpha + &bb * m.m22() + inner * I).determinant()
}

/// A determinant watched while integrating.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    pub which: Determinant,
    pub shapes: Shapes,
}

impl Monitor {
    pub fn new(which: Determinant, shapes: Shapes) -> Self {
        Monitor { which, shapes }
    }

    pub fn eval(&self, m: &StabilityMatrix) -> Complex64 {
        match self.which {
            Determinant::D0 => det_vanvleck(m),
            Determinant::D1 => det_d1(m, &self.shapes.b_alpha),
            Determinant::D2 => det_d2(m, &self.shapes.b_alpha, &self.shapes.b_beta),
        }
    }

    /// The matrix whose determinant is monitored; linear in `M`.
    pub fn matrix(&self, m: &StabilityMatrix) -> DMatrix<Complex64> {
        let ba = &self.shapes.b_alpha;
        match self.which {
            Determinant::D0 => -m.m21(),
            Determinant::D1 => m.m22() + m.m21() * ba * I,
            Determinant::D2 => {
                let bb = self.shapes.b_beta.map(|z| z.conj());
                m.m11() * ba + &bb * m.m22() + (&bb * m.m21() * ba - m.m12()) * I
            }
        }
    }

    /// Rate of change of the determinant given `dM/dt` (Jacobi's formula).
    pub fn derivative(&self, m: &StabilityMatrix, dm: &StabilityMatrix) -> Complex64 {
        let f = self.matrix(m);
        let df = self.matrix(dm);
        let det = f.determinant();
        match f.try_inverse() {
            Some(inv) => det * (inv * df).trace(),
            // adjugate limit: only the 1×1 case can reach here with det = 0
            None => if df.len() == 1 { df[(0, 0)] } else { Complex64::new(0.0, 0.0) },
        }
    }

    /// Evaluates on a packed integrator state `[p, q, M, S]`.
    pub(crate) fn eval_packed(&self, n: usize, y: &[Complex64]) -> Complex64 {
        if n == 1 {
            let (m11, m12, m21, m22) = (y[2], y[3], y[4], y[5]);
            let ba = self.shapes.b_alpha[(0, 0)];
            let bb = self.shapes.b_beta[(0, 0)].conj();
            return match self.which {
                Determinant::D0 => -m21,
                Determinant::D1 => m22 + I * m21 * ba,
                Determinant::D2 => m11 * ba + bb * m22 + I * (bb * m21 * ba - m12),
            };
        }
        let m = StabilityMatrix { m: DMatrix::from_row_slice(2 * n, 2 * n, &y[2 * n..2 * n + 4 * n * n]) };
        self.eval(&m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub s: f64,
    pub t: Complex64,
    pub value: Complex64,
    /// Continuously unwrapped phase.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistory {
    pub which: Determinant,
    pub samples: Vec<PhaseSample>,
}

impl PhaseHistory {
    pub fn total_phase(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.phase)
    }

    pub fn final_value(&self) -> Complex64 {
        self.samples.last().map_or(Complex64::new(0.0, 0.0), |s| s.value)
    }

    pub fn decomposition(&self) -> MaslovDecomposition {
        maslov_from_phase(self.total_phase())
    }

    /// Path parameters at which the rotation sense of the determinant flips,
    /// with the sense after the flip (`+1` counterclockwise).
    pub fn rotation_reversals(&self) -> Vec<(f64, i8)> {
        let mut out = Vec::new();
        let mut sense = 0i8;
        for w in self.samples.windows(2) {
            let d = w[1].phase - w[0].phase;
            if d == 0.0 {
                continue;
            }
            let now = if d > 0.0 { 1 } else { -1 };
            if sense != 0 && now != sense {
                out.push((w[0].s, now));
            }
            sense = now;
        }
        out
    }

    /// CSV with columns `s, re_d, im_d, phase`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,re_d,im_d,phase\n");
        for p in &self.samples {
            out.push_str(&crate::io::csv_row(&[p.s, p.value.re, p.value.im, p.phase]));
        }
        out
    }
}

/// Unwraps the chosen determinant along a trajectory by nearest-branch
/// continuation from its principal phase at the first sample.
pub fn accumulate_phase(record: &TrajectoryRecord, which: Determinant, shapes: &Shapes) -> Result<PhaseHistory> {
    let monitor = Monitor::new(which, shapes.clone());
    let values = record.samples.iter().map(|s| (s.s, s.t, monitor.eval_packed(record.dim, &s.y)));
    unwrap_values(which, values)
}

pub(crate) fn unwrap_values(
    which: Determinant,
    values: impl Iterator<Item = (f64, Complex64, Complex64)>,
) -> Result<PhaseHistory> {
    let mut samples: Vec<PhaseSample> = Vec::new();
    let mut running_max: f64 = 0.0;
    for (index, (s, t, value)) in values.enumerate() {
        let modulus = value.norm();
        if index > 0 && modulus < ZERO_THRESHOLD * running_max {
            return Err(Error::ZeroDeterminant { index, modulus });
        }
        running_max = running_max.max(modulus);
        let phase = match samples.last() {
            None => value.arg(),
            Some(prev) if prev.value.norm() == 0.0 => value.arg(),
            Some(prev) => {
                let inc = (value / prev.value).arg();
                if inc.abs() >= FRAC_PI_2 {
                    return Err(Error::PhaseJumpTooLarge { index, jump: inc });
                }
                prev.phase + inc
            }
        };
        samples.push(PhaseSample { s, t, value, phase });
    }
    Ok(PhaseHistory { which, samples })
}

/// Index `ν` and first-quadrant half phase `θ` with `Φ = 2θ + νπ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaslovDecomposition {
    pub nu: i64,
    pub theta: f64,
}

impl MaslovDecomposition {
    pub fn total_phase(&self) -> f64 {
        2.0 * self.theta + self.nu as f64 * PI
    }
}

pub fn maslov_from_phase(total_phase: f64) -> MaslovDecomposition {
    let nu = (total_phase / PI).floor();
    let theta = ((total_phase - nu * PI) / 2.0).clamp(0.0, FRAC_PI_2 * (1.0 - f64::EPSILON));
    MaslovDecomposition { nu: nu as i64, theta }
}

/// `|D|^{-1/2} e^{-iθ} e^{-iνπ/2}`; only `ν mod 4` matters.
pub fn prefactor(final_det: Complex64, decomposition: MaslovDecomposition) -> Result<Complex64> {
    let modulus = final_det.norm();
    if !(modulus > 0.0) {
        return Err(Error::ZeroDeterminant { index: 0, modulus });
    }
    Ok(quarter_turns(-decomposition.nu) * Complex64::from_polar(modulus.powf(-0.5), -decomposition.theta))
}

/// `i^k` computed exactly.
pub(crate) fn quarter_turns(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, ComplexPhasePoint, HamiltonianSpec, IntegratorOptions, TimePath};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_m(t: f64) -> StabilityMatrix {
        let one = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let zero = DMatrix::from_element(1, 1, c(0.0, 0.0));
        StabilityMatrix::from_blocks(&one, &zero, &DMatrix::from_element(1, 1, c(t, 0.0)), &one)
    }

    fn harmonic_m(t: f64) -> StabilityMatrix {
        let e = |v: f64| DMatrix::from_element(1, 1, c(v, 0.0));
        StabilityMatrix::from_blocks(&e(t.cos()), &e(-t.sin()), &e(t.sin()), &e(t.cos()))
    }

    #[test]
    fn vanvleck_examples() {
        assert_eq!(det_vanvleck(&free_m(2.5)), c(-2.5, 0.0));
        assert_eq!(det_vanvleck(&StabilityMatrix::identity(1)), c(0.0, 0.0));
        let t = 1.3_f64;
        assert!((det_vanvleck(&harmonic_m(t)) - c(-t.sin(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn d1_examples() {
        let b = DMatrix::from_element(1, 1, c(32.0, 0.0));
        assert_eq!(det_d1(&StabilityMatrix::identity(1), &b), c(1.0, 0.0));
        assert_eq!(det_d1(&free_m(0.5), &b), c(1.0, 16.0));
    }

    #[test]
    fn d2_examples() {
        let b = DMatrix::from_element(1, 1, c(32.0, 0.0));
        assert_eq!(det_d2(&StabilityMatrix::identity(1), &b, &b), c(64.0, 0.0));
        let t = 0.25;
        assert_eq!(det_d2(&free_m(t), &b, &b), c(64.0, 32.0 * 32.0 * t));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let shapes = Shapes::transport(
            DMatrix::from_element(1, 1, c(2.0, 0.5)),
            DMatrix::from_element(1, 1, c(0.7, -0.2)),
        );
        let t = 0.9_f64;
        for which in [Determinant::D0, Determinant::D1, Determinant::D2] {
            let mon = Monitor::new(which, shapes.clone());
            assert!((mon.matrix(&harmonic_m(t)).determinant() - mon.eval(&harmonic_m(t))).norm() < 1e-14);
            // dM/dt = M(t + π/2) for the unit oscillator
            let d = mon.derivative(&harmonic_m(t), &harmonic_m(t + FRAC_PI_2));
            let h = 1e-6;
            let fd = (mon.eval(&harmonic_m(t + h)) - mon.eval(&harmonic_m(t - h))) / (2.0 * h);
            assert!((d - fd).norm() < 1e-8, "{which:?}: {d} vs {fd}");
        }
    }

    #[test]
    fn d2_reduces_to_d1_for_a_wide_bra() {
        // D2 / b*_β → D1 as b_β → 0 is the narrow-ket limit; the wide-bra
        // limit b_β → ∞ gives D2 ≈ b*_β · D1.
        let m = StabilityMatrix {
            m: DMatrix::from_row_slice(2, 2, &[c(0.3, 0.1), c(-1.2, 0.4), c(0.9, -0.2), c(2.0, 0.5)]),
        };
        let ba = DMatrix::from_element(1, 1, c(1.5, 0.3));
        let big = 1e9;
        let bb = DMatrix::from_element(1, 1, c(big, 0.0));
        let ratio = det_d2(&m, &ba, &bb) / big;
        assert!((ratio - det_d1(&m, &ba)).norm() < 1e-8);
    }

    #[test]
    fn maslov_decomposition_arithmetic() {
        let d = maslov_from_phase(3.5 * PI);
        assert_eq!(d.nu, 3);
        assert!((d.theta - PI / 4.0).abs() < 1e-15);
        let d = maslov_from_phase(-0.5 * PI);
        assert_eq!(d.nu, -1);
        assert!((d.theta - PI / 4.0).abs() < 1e-15);
        let d = maslov_from_phase(0.0);
        assert_eq!((d.nu, d.theta), (0, 0.0));
    }

    #[test]
    fn prefactor_examples() {
        let one = prefactor(c(1.0, 0.0), maslov_from_phase(0.0)).unwrap();
        assert!((one - c(1.0, 0.0)).norm() < 1e-15);
        let d = maslov_from_phase(PI);
        assert_eq!(d.nu, 1);
        let p = prefactor(c(-4.0, 0.0), d).unwrap();
        assert!((p - c(0.0, -0.5)).norm() < 1e-15);
        let shifted = MaslovDecomposition { nu: d.nu + 4, ..d };
        assert_eq!(prefactor(c(-4.0, 0.0), shifted).unwrap(), p);
        assert!(prefactor(c(0.0, 0.0), d).is_err());
    }

    #[test]
    fn free_particle_d1_phase() {
        let h = HamiltonianSpec::FreeParticle;
        let start = ComplexPhasePoint::one_dim(c(1.0, 0.0), c(0.0, 0.0));
        let shapes = Shapes::scalar(c(32.0, 0.0));
        let monitor = [Monitor::new(Determinant::D1, shapes.clone())];
        let rec = integrate(&h, &start, &TimePath::real(1.0).unwrap(), &IntegratorOptions::default(), &monitor)
            .unwrap();
        let hist = accumulate_phase(&rec, Determinant::D1, &shapes).unwrap();
        assert!((hist.total_phase() - 32f64.atan()).abs() < 1e-10);
        assert_eq!(hist.samples[0].phase, 0.0);
    }

    #[test]
    fn vanishing_determinant_is_reported() {
        // b = i makes D1 = 1 - t for the free particle.
        let h = HamiltonianSpec::FreeParticle;
        let start = ComplexPhasePoint::one_dim(c(1.0, 0.0), c(0.0, 0.0));
        let rec = integrate(&h, &start, &TimePath::real(2.0).unwrap(), &IntegratorOptions::default(), &[]).unwrap();
        let mut values: Vec<_> = rec
            .samples
            .iter()
            .map(|s| (s.s, s.t, Complex64::new(1.0, 0.0) - s.t))
            .collect();
        values.insert(values.len() / 2, (1.0, c(1.0, 0.0), c(0.0, 0.0)));
        let err = unwrap_values(Determinant::D1, values.into_iter()).unwrap_err();
        assert!(matches!(err, Error::ZeroDeterminant { .. }));
    }

    #[test]
    fn coarse_sampling_is_rejected() {
        let values = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]
            .into_iter()
            .enumerate()
            .map(|(k, v)| (k as f64, c(k as f64, 0.0), v));
        let err = unwrap_values(Determinant::D1, values).unwrap_err();
        assert!(matches!(err, Error::PhaseJumpTooLarge { index: 1, .. }));
    }

    #[test]
    fn reversals_are_detected() {
        let values = [0.0, 0.3, 0.6, 0.5, 0.2, 0.4]
            .into_iter()
            .enumerate()
            .map(|(k, ph)| (k as f64, c(k as f64, 0.0), Complex64::from_polar(1.0, ph)));
        let hist = unwrap_values(Determinant::D1, values).unwrap();
        assert_eq!(hist.rotation_reversals(), vec![(2.0, -1), (4.0, 1)]);
    }
}
