//! Semiclassical amplitudes from saddle trajectories and their sums over
//! families.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maslovfix::{saddle_id, CorrectionReport};
use crate::phasetrack::{prefactor, MaslovDecomposition};
use crate::saddles::{ProblemKind, SaddleResult};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default cutoff on `exp(Re exponent)`.
pub const DEFAULT_RELEVANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub saddle_id: String,
    #[serde(with = "crate::io::complex_pair")]
    pub value: Complex64,
    #[serde(with = "crate::io::complex_pair")]
    pub prefactor: Complex64,
    /// Dimensionless exponent (action over ħ plus the boundary Gaussians).
    #[serde(with = "crate::io::complex_pair")]
    pub exponent: Complex64,
    pub normalization: f64,
    /// `exp(Re exponent)`.
    pub relevance: f64,
    pub index: i64,
}

/// Exponent of the saddle's contribution, without normalization constants:
/// the initial Gaussian at `Q0`, `i S/ħ` along the saddle's path, and for
/// transport problems the conjugated bra Gaussian at `Q_t`.
pub fn action_exponent(saddle: &SaddleResult) -> Complex64 {
    let packet = &saddle.problem.packet;
    let hbar = packet.hbar;
    let initial = packet.log_amplitude(&saddle.initial_point.q) - packet.log_norm();
    let action = saddle.trajectory.final_sample().action();
    let mut exponent = initial + I * action / hbar;
    if let ProblemKind::Transport { bra } = &saddle.problem.kind {
        exponent += bra.log_amplitude_conj(&saddle.final_point.q) - bra.log_norm();
    }
    exponent
}

/// Normalization fixed by the identity-time limit: `|N_α|` for wave
/// functions, `(2πħ)^{N/2} |N_α| |N_β|` for transport coefficients.
pub fn normalization(saddle: &SaddleResult) -> f64 {
    let packet = &saddle.problem.packet;
    match &saddle.problem.kind {
        ProblemKind::Wavefunction { .. } => packet.log_norm().exp(),
        ProblemKind::Transport { bra } => {
            let n = packet.dim() as f64;
            (0.5 * n * (2.0 * PI * packet.hbar).ln() + packet.log_norm() + bra.log_norm()).exp()
        }
    }
}

/// Amplitude of one saddle. Uses the report's corrected index when given,
/// otherwise the saddle's own (corrected if set, else naive) index.
pub fn contribution(saddle: &SaddleResult, report: Option<&CorrectionReport>) -> Result<Contribution> {
    let naive = saddle.naive_index;
    let decomposition = match report {
        Some(r) => MaslovDecomposition { nu: r.corrected_index, theta: naive.theta },
        None => MaslovDecomposition { nu: saddle.index(), theta: naive.theta },
    };
    let pref = prefactor(saddle.history.final_value(), decomposition)?;
    let exponent = action_exponent(saddle);
    let norm = normalization(saddle);
    Ok(Contribution {
        saddle_id: saddle_id(saddle),
        value: pref * exponent.exp() * norm,
        prefactor: pref,
        exponent,
        normalization: norm,
        relevance: exponent.re.exp(),
        index: decomposition.nu,
    })
}

/// One family's contributions over its continuation parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySignal {
    pub label: usize,
    pub grid: Vec<f64>,
    #[serde(with = "complex_vec")]
    pub values: Vec<Complex64>,
    pub relevance: Vec<f64>,
    /// Indices `k` where a total-phase jump between members `k`, `k + 1`
    /// was removed.
    pub discontinuities: Vec<usize>,
}

impl FamilySignal {
    /// Positions `k` where `|arg(v_{k+1}/v_k)|` exceeds `threshold`.
    pub fn phase_jumps(&self, threshold: f64) -> Vec<usize> {
        self.values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].norm() > 0.0 && w[1].norm() > 0.0 && (w[1] / w[0]).arg().abs() > threshold)
            .map(|(k, _)| k)
            .collect()
    }

    /// CSV with columns `param, re, im, abs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,re,im,abs\n");
        for (g, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&crate::io::csv_row(&[*g, v.re, v.im, v.norm()]));
        }
        out
    }
}

mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

/// Continuation parameter of a saddle: the target position for wave
/// functions, the time for transport coefficients.
pub fn parameter(saddle: &SaddleResult) -> f64 {
    match saddle.problem.target() {
        Some(x) => x[0],
        None => saddle.problem.time,
    }
}

/// Contributions of a family; `reports`, when given, must align with the
/// family members.
pub fn family_signal(
    label: usize,
    family: &[SaddleResult],
    reports: Option<&[CorrectionReport]>,
    discontinuities: Vec<usize>,
) -> Result<FamilySignal> {
    if let Some(r) = reports {
        if r.len() != family.len() {
            return Err(Error::GridMismatch(format!("{} reports for {} saddles", r.len(), family.len())));
        }
    }
    let grid: Vec<f64> = family.iter().map(parameter).collect();
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch("family grid is not strictly increasing".into()));
    }
    let contributions = family
        .iter()
        .enumerate()
        .map(|(k, s)| contribution(s, reports.map(|r| &r[k])))
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilySignal {
        label,
        grid,
        values: contributions.iter().map(|c| c.value).collect(),
        relevance: contributions.iter().map(|c| c.relevance).collect(),
        discontinuities,
    })
}

/// Pointwise sum over families (in label order) of contributions with
/// relevance at least `threshold`.
pub fn sum_families(signals: &[FamilySignal], threshold: f64) -> Result<Vec<Complex64>> {
    let Some(first) = signals.first() else {
        return Ok(Vec::new());
    };
    for s in signals {
        let aligned = s.grid.len() == first.grid.len()
            && s.values.len() == s.grid.len()
            && s.grid.iter().zip(&first.grid).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        if !aligned {
            return Err(Error::GridMismatch(format!("family {} grid differs from family {}", s.label, first.label)));
        }
    }
    let mut order: Vec<&FamilySignal> = signals.iter().collect();
    order.sort_by_key(|s| s.label);
    let mut total = vec![Complex64::new(0.0, 0.0); first.grid.len()];
    for s in order {
        for (k, (v, r)) in s.values.iter().zip(&s.relevance).enumerate() {
            if *r >= threshold {
                total[k] += v;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::HamiltonianSpec;
    use crate::reference::exact_wavefunction;
    use crate::saddles::{newton_search, newton_search_guess, NewtonOptions, SaddleProblem};
    use crate::states::{RealPhasePoint, WavePacketParams};
    use nalgebra::DVector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn saddle(packet: &WavePacketParams, h: &HamiltonianSpec, t: f64, x: f64) -> SaddleResult {
        let prob = SaddleProblem::wavefunction(packet.clone(), h.clone(), t, &[x]);
        newton_search(&prob, &RealPhasePoint::one_dim(packet.p[0], x), 1, &NewtonOptions::default()).unwrap()
    }

    #[test]
    fn short_time_limit_reproduces_the_packet() {
        let g = WavePacketParams::one_dim(0.2, 1.5, c(1.3, 0.4), 0.8);
        let h = HamiltonianSpec::quartic(0.05);
        for x in [-0.5, 0.2, 1.0] {
            let s = saddle(&g, &h, 1e-9, x);
            let v = contribution(&s, None).unwrap().value;
            assert!((v - g.eval(&[x]).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn quadratic_hamiltonians_are_exact() {
        let g = WavePacketParams::one_dim(0.3, 1.2, c(1.5, -0.3), 1.0);
        for (h, t) in [(HamiltonianSpec::FreeParticle, 2.7), (HamiltonianSpec::harmonic(1.0), 1.1), (HamiltonianSpec::harmonic(1.0), 4.4)] {
            for k in 0..11 {
                let x = -3.0 + 0.6 * k as f64;
                let v = contribution(&saddle(&g, &h, t, x), None).unwrap().value;
                let exact = exact_wavefunction(&g, &h, t, x).unwrap();
                assert!((v - exact).norm() < 1e-10, "{h:?} t={t} x={x}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn transport_identity_at_short_time() {
        let g = WavePacketParams::one_dim(0.1, 2.0, c(2.0, 0.5), 1.0);
        let prob = SaddleProblem::transport(g.clone(), g.clone(), HamiltonianSpec::quartic(0.05), 1e-9);
        let s = newton_search_guess(&prob, DVector::from_element(1, c(0.1, 0.0)), &NewtonOptions::default()).unwrap();
        let v = contribution(&s, None).unwrap().value;
        assert!((v - 1.0).norm() < 1e-7, "{v}");
    }

    #[test]
    fn transport_matches_the_exact_overlap_for_the_oscillator() {
        // ⟨β|e^{−iHt}|α⟩ by quadrature of the exact evolved packet
        let a = WavePacketParams::one_dim(0.5, 0.0, c(1.0, 0.0), 1.0);
        let b = WavePacketParams::one_dim(0.0, -0.4, c(1.4, 0.2), 1.0);
        let h = HamiltonianSpec::harmonic(1.0);
        let t = 1.9;
        let prob = SaddleProblem::transport(a.clone(), b.clone(), h.clone(), t);
        let s = newton_search_guess(&prob, DVector::from_element(1, c(0.0, 0.0)), &NewtonOptions::default()).unwrap();
        let v = contribution(&s, None).unwrap().value;
        let (lo, n) = (-10.0, 20001);
        let dx = 20.0 / (n - 1) as f64;
        let exact: Complex64 = (0..n)
            .map(|k| {
                let x = lo + k as f64 * dx;
                b.eval(&[x]).unwrap().conj() * exact_wavefunction(&a, &h, t, x).unwrap() * dx
            })
            .sum();
        assert!((v - exact).norm() < 1e-9, "{v} vs {exact}");
    }

    fn signal(label: usize, grid: Vec<f64>, values: Vec<Complex64>, relevance: Vec<f64>) -> FamilySignal {
        FamilySignal { label, grid, values, relevance, discontinuities: Vec::new() }
    }

    #[test]
    fn sums_respect_relevance_and_grids() {
        let a = signal(2, vec![0.0, 1.0], vec![c(1.0, 0.0), c(0.0, 1.0)], vec![1.0, 1e-12]);
        let b = signal(1, vec![0.0, 1.0], vec![c(2.0, 0.0), c(0.0, 2.0)], vec![1.0, 1.0]);
        assert_eq!(sum_families(std::slice::from_ref(&a), 0.0).unwrap(), a.values);
        assert_eq!(sum_families(&[a.clone(), b.clone()], 1e-8).unwrap(), vec![c(3.0, 0.0), c(0.0, 2.0)]);
        assert!(sum_families(&[a.clone(), b], f64::INFINITY).unwrap().iter().all(|z| z.norm() == 0.0));
        let shifted = signal(3, vec![0.0, 1.5], vec![c(1.0, 0.0); 2], vec![1.0; 2]);
        assert!(matches!(sum_families(&[a, shifted], 0.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn phase_jumps_are_detected() {
        let s = signal(1, vec![0.0, 1.0, 2.0], vec![c(1.0, 0.0), c(1.0, 0.1), c(-1.0, 0.1)], vec![1.0; 3]);
        assert_eq!(s.phase_jumps(PI / 2.0), vec![1]);
    }
}
