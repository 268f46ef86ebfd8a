//! Saddle trajectories: boundary-value residuals, Newton search on the
//! initial Lagrangian manifold, foliation of real seeds, and continuation.

mod continuation;
mod foliation;

pub use continuation::{classify, continue_saddle, ContinuationOptions};
pub use foliation::{build_foliations, count_turning_points, Foliation, SeedLine};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    integrate, pack_state, propagate, ComplexPhasePoint, HamiltonianSpec, IntegratorOptions, Sample,
    StabilityMatrix, TimePath, TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::phasetrack::{accumulate_phase, Determinant, MaslovDecomposition, Monitor, PhaseHistory, Shapes};
use crate::states::{initial_manifold_momentum, RealPhasePoint, WavePacketParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    /// `φ(x, t)` at a real position.
    Wavefunction { x: DVector<f64> },
    /// Overlap with a bra packet.
    Transport { bra: WavePacketParams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleProblem {
    pub kind: ProblemKind,
    /// Ket packet.
    pub packet: WavePacketParams,
    pub time: f64,
    pub hamiltonian: HamiltonianSpec,
}

impl SaddleProblem {
    pub fn wavefunction(packet: WavePacketParams, hamiltonian: HamiltonianSpec, time: f64, x: &[f64]) -> Self {
        SaddleProblem {
            kind: ProblemKind::Wavefunction { x: DVector::from_column_slice(x) },
            packet,
            time,
            hamiltonian,
        }
    }

    pub fn transport(packet: WavePacketParams, bra: WavePacketParams, hamiltonian: HamiltonianSpec, time: f64) -> Self {
        SaddleProblem { kind: ProblemKind::Transport { bra }, packet, time, hamiltonian }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time > 0.0) || !self.time.is_finite() {
            return Err(Error::DomainError(format!("saddle time must be positive, got {}", self.time)));
        }
        self.packet.validate()?;
        self.hamiltonian.validate()?;
        let n = self.packet.dim();
        match &self.kind {
            ProblemKind::Wavefunction { x } if x.len() != n => {
                Err(Error::DimensionMismatch { expected: n, found: x.len() })
            }
            ProblemKind::Transport { bra } if bra.dim() != n => {
                Err(Error::DimensionMismatch { expected: n, found: bra.dim() })
            }
            ProblemKind::Transport { bra } => bra.validate(),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.packet.dim()
    }

    pub fn determinant(&self) -> Determinant {
        match self.kind {
            ProblemKind::Wavefunction { .. } => Determinant::D1,
            ProblemKind::Transport { .. } => Determinant::D2,
        }
    }

    pub fn shapes(&self) -> Shapes {
        match &self.kind {
            ProblemKind::Wavefunction { .. } => Shapes::new(self.packet.b.clone()),
            ProblemKind::Transport { bra } => Shapes::transport(self.packet.b.clone(), bra.b.clone()),
        }
    }

    pub fn monitor(&self) -> Monitor {
        Monitor::new(self.determinant(), self.shapes())
    }

    /// Real time path `[0, t]`.
    pub fn path(&self) -> Result<TimePath> {
        TimePath::real(self.time)
    }

    /// Target position for wavefunction problems.
    pub fn target(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            ProblemKind::Wavefunction { x } => Some(x),
            ProblemKind::Transport { .. } => None,
        }
    }

    /// Point on the α manifold with position `q0`.
    pub fn initial_point(&self, q0: &DVector<Complex64>) -> ComplexPhasePoint {
        ComplexPhasePoint::new(initial_manifold_momentum(&self.packet, q0), q0.clone())
    }

    /// Linear interpolation of the parameters that differ between two
    /// problems of the same kind (`x`, time, bra centroid).
    pub fn interpolate(&self, other: &SaddleProblem, f: f64) -> Result<SaddleProblem> {
        let lerp = |a: f64, b: f64| a + (b - a) * f;
        let kind = match (&self.kind, &other.kind) {
            (ProblemKind::Wavefunction { x: a }, ProblemKind::Wavefunction { x: b }) => {
                ProblemKind::Wavefunction { x: a.zip_map(b, lerp) }
            }
            (ProblemKind::Transport { bra: a }, ProblemKind::Transport { bra: b }) => {
                let mut bra = a.clone();
                bra.q = a.q.zip_map(&b.q, lerp);
                bra.p = a.p.zip_map(&b.p, lerp);
                ProblemKind::Transport { bra }
            }
            _ => return Err(Error::DomainError("cannot interpolate between problem kinds".into())),
        };
        Ok(SaddleProblem { kind, time: lerp(self.time, other.time), ..self.clone() })
    }

    /// Euclidean distance in the continuation parameters.
    pub fn parameter_distance(&self, other: &SaddleProblem) -> f64 {
        let dt = (self.time - other.time).powi(2);
        let dk = match (&self.kind, &other.kind) {
            (ProblemKind::Wavefunction { x: a }, ProblemKind::Wavefunction { x: b }) => (a - b).norm_squared(),
            (ProblemKind::Transport { bra: a }, ProblemKind::Transport { bra: b }) => {
                (&a.q - &b.q).norm_squared() + (&a.p - &b.p).norm_squared()
            }
            _ => f64::INFINITY,
        };
        (dt + dk).sqrt()
    }
}

/// Maps a real phase point onto the α manifold, keeping `Re Q0 = q` and
/// choosing `Im Q0` so that `Re P0 = p` when `b` is real.
pub fn seed_to_manifold(packet: &WavePacketParams, seed: &RealPhasePoint) -> Result<DVector<Complex64>> {
    let b_inv = packet
        .b
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidShape("b is singular".into()))?;
    let dp = (&packet.p - &seed.p).map(|v| Complex64::new(v, 0.0));
    Ok(seed.q.map(|v| Complex64::new(v, 0.0)) + b_inv * dp * I)
}

fn propagate_from(
    problem: &SaddleProblem,
    q0: &DVector<Complex64>,
    opts: &IntegratorOptions,
) -> Result<Sample> {
    let start = problem.initial_point(q0);
    if problem.time == 0.0 {
        let n = start.dim();
        return Ok(Sample { s: 0.0, t: Complex64::new(0.0, 0.0), y: pack_state(&start, &StabilityMatrix::identity(n)) });
    }
    propagate(&problem.hamiltonian, &start, &problem.path()?, opts, &[])
}

fn residual_of(problem: &SaddleProblem, end: &ComplexPhasePoint) -> DVector<Complex64> {
    match &problem.kind {
        ProblemKind::Wavefunction { x } => &end.q - x.map(|v| Complex64::new(v, 0.0)),
        ProblemKind::Transport { bra } => {
            let bb = bra.b.map(|z| z.conj());
            let dq = &end.q - bra.q.map(|v| Complex64::new(v, 0.0));
            &end.p - bra.p.map(|v| Complex64::new(v, 0.0)) + bb * dq * I
        }
    }
}

/// `∂(residual)/∂Q0` along the manifold: the D1 matrix for wavefunction
/// problems and `i` times the D2 matrix for transport problems.
fn jacobian_of(problem: &SaddleProblem, m: &StabilityMatrix) -> DMatrix<Complex64> {
    let ba = &problem.packet.b;
    let dqt = m.m22() + m.m21() * ba * I;
    match &problem.kind {
        ProblemKind::Wavefunction { .. } => dqt,
        ProblemKind::Transport { bra } => {
            let dpt = m.m12() + m.m11() * ba * I;
            let bb = bra.b.map(|z| z.conj());
            dpt + bb * dqt * I
        }
    }
}

/// Boundary-condition residual at the end of the trajectory launched from
/// `Q0` on the α manifold.
pub fn residual(problem: &SaddleProblem, q0: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    residual_with(problem, q0, &IntegratorOptions::default())
}

pub fn residual_with(
    problem: &SaddleProblem,
    q0: &DVector<Complex64>,
    opts: &IntegratorOptions,
) -> Result<DVector<Complex64>> {
    let end = propagate_from(problem, q0, opts)?;
    Ok(residual_of(problem, &end.point(problem.dim())))
}

/// Residual and its Newton Jacobian.
pub fn residual_and_jacobian(
    problem: &SaddleProblem,
    q0: &DVector<Complex64>,
    opts: &IntegratorOptions,
) -> Result<(DVector<Complex64>, DMatrix<Complex64>)> {
    let n = problem.dim();
    let end = propagate_from(problem, q0, opts)?;
    Ok((residual_of(problem, &end.point(n)), jacobian_of(problem, &end.stability(n))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub integrator: IntegratorOptions,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 50, tol: 1e-10, integrator: IntegratorOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Exposed,
    Hidden,
}

/// Where a saddle came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Newton from a real seed of a foliation.
    Seed { foliation: usize, seed: RealPhasePoint },
    /// Parameter continuation; `seed` is set when a real seed reproduces it.
    Continuation { foliation: Option<usize>, step: usize, seed: Option<RealPhasePoint> },
    /// Newton from an explicit complex guess.
    Guess,
}

#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub problem: SaddleProblem,
    pub initial_point: ComplexPhasePoint,
    pub final_point: ComplexPhasePoint,
    pub trajectory: TrajectoryRecord,
    pub history: PhaseHistory,
    pub naive_index: MaslovDecomposition,
    pub corrected_index: Option<i64>,
    pub classification: Classification,
    pub provenance: Provenance,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl SaddleResult {
    pub fn q0(&self) -> &DVector<Complex64> {
        &self.initial_point.q
    }

    pub fn seed(&self) -> Option<&RealPhasePoint> {
        match &self.provenance {
            Provenance::Seed { seed, .. } => Some(seed),
            Provenance::Continuation { seed, .. } => seed.as_ref(),
            Provenance::Guess => None,
        }
    }

    pub fn foliation(&self) -> Option<usize> {
        match &self.provenance {
            Provenance::Seed { foliation, .. } => Some(*foliation),
            Provenance::Continuation { foliation, .. } => *foliation,
            Provenance::Guess => None,
        }
    }

    /// Index to use in amplitudes: corrected when available.
    pub fn index(&self) -> i64 {
        self.corrected_index.unwrap_or(self.naive_index.nu)
    }
}

/// Damped Newton iteration on `Q0` from a complex initial guess.
pub fn newton_from_guess(
    problem: &SaddleProblem,
    guess: DVector<Complex64>,
    opts: &NewtonOptions,
) -> Result<(DVector<Complex64>, f64, usize)> {
    problem.validate()?;
    let mut q0 = guess;
    let (mut r, mut jac) = residual_and_jacobian(problem, &q0, &opts.integrator)?;
    let mut norm = r.norm();
    let mut iterations = 0;
    while norm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence { iterations, residual: norm });
        }
        iterations += 1;
        let det = jac.determinant();
        let step = jac.clone().lu().solve(&r).filter(|s| s.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        let step = match step {
            Some(s) if det.norm() > 0.0 => s,
            _ => return Err(Error::SingularJacobian { determinant: det.norm() }),
        };
        // Backtracking: halve while the residual grows or propagation fails.
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = &q0 - &step * Complex64::new(lambda, 0.0);
            if let Ok((rt, jt)) = residual_and_jacobian(problem, &trial, &opts.integrator) {
                if rt.norm() < norm || rt.norm() <= opts.tol {
                    accepted = Some((trial, rt, jt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, rt, jt)) => {
                q0 = trial;
                r = rt;
                jac = jt;
                norm = r.norm();
            }
            None => return Err(Error::NoConvergence { iterations, residual: norm }),
        }
    }
    Ok((q0, norm, iterations))
}

/// Newton search seeded by a real phase point (mapped onto the α manifold
/// with [`seed_to_manifold`]); returns the full saddle record.
pub fn newton_search(
    problem: &SaddleProblem,
    seed: &RealPhasePoint,
    foliation: usize,
    opts: &NewtonOptions,
) -> Result<SaddleResult> {
    let guess = seed_to_manifold(&problem.packet, seed)?;
    let (q0, norm, iterations) = newton_from_guess(problem, guess, opts)?;
    finish(
        problem,
        q0,
        norm,
        iterations,
        Classification::Exposed,
        Provenance::Seed { foliation, seed: seed.clone() },
        &opts.integrator,
    )
}

/// Newton search from an explicit complex guess.
pub fn newton_search_guess(
    problem: &SaddleProblem,
    guess: DVector<Complex64>,
    opts: &NewtonOptions,
) -> Result<SaddleResult> {
    let (q0, norm, iterations) = newton_from_guess(problem, guess, opts)?;
    finish(problem, q0, norm, iterations, Classification::Hidden, Provenance::Guess, &opts.integrator)
}

/// Integrates the converged saddle with its determinant monitored and
/// records the naive index.
pub(crate) fn finish(
    problem: &SaddleProblem,
    q0: DVector<Complex64>,
    residual_norm: f64,
    iterations: usize,
    classification: Classification,
    provenance: Provenance,
    opts: &IntegratorOptions,
) -> Result<SaddleResult> {
    let start = problem.initial_point(&q0);
    let monitor = problem.monitor();
    let trajectory = integrate(&problem.hamiltonian, &start, &problem.path()?, opts, std::slice::from_ref(&monitor))?;
    let history = accumulate_phase(&trajectory, monitor.which, &monitor.shapes)?;
    Ok(SaddleResult {
        problem: problem.clone(),
        initial_point: start,
        final_point: trajectory.final_point(),
        naive_index: history.decomposition(),
        trajectory,
        history,
        corrected_index: None,
        classification,
        provenance,
        residual_norm,
        iterations,
    })
}
