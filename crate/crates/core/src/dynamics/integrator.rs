use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use super::tableau::{A, B, STAGES};
use super::{pack_state, packed_rhs, ComplexPhasePoint, HamiltonianSpec, Sample, StabilityMatrix, TimePath, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::phasetrack::Monitor;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Steps are rejected while any monitored determinant turns by more
    /// than this angle; must stay below `π/2`.
    pub max_phase_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-10, atol: 1e-12, max_phase_step: FRAC_PI_4, max_steps: 2_000_000 }
    }
}

impl IntegratorOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        IntegratorOptions { rtol: tolerance, atol: tolerance * 1e-2, ..Default::default() }
    }
}

/// Integrates the point and its stability matrix along `path`, keeping every
/// accepted node.
pub fn integrate(
    spec: &HamiltonianSpec,
    initial: &ComplexPhasePoint,
    path: &TimePath,
    opts: &IntegratorOptions,
    monitors: &[Monitor],
) -> Result<TrajectoryRecord> {
    let n = initial.dim();
    check_tolerance(opts)?;
    let y0 = pack_state(initial, &StabilityMatrix::identity(n));
    let mut samples = Vec::new();
    walk(spec, n, y0, path.nodes(), 0.0, opts, monitors, |s| samples.push(s.clone()))?;
    Ok(TrajectoryRecord { dim: n, path: path.clone(), samples })
}

/// Same as [`integrate`] but only returns the final node.
pub fn propagate(
    spec: &HamiltonianSpec,
    initial: &ComplexPhasePoint,
    path: &TimePath,
    opts: &IntegratorOptions,
    monitors: &[Monitor],
) -> Result<Sample> {
    let n = initial.dim();
    check_tolerance(opts)?;
    let y0 = pack_state(initial, &StabilityMatrix::identity(n));
    walk(spec, n, y0, path.nodes(), 0.0, opts, monitors, |_| {})
}

fn check_tolerance(opts: &IntegratorOptions) -> Result<()> {
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(Error::DomainError(format!(
            "tolerances must be positive (rtol {}, atol {})",
            opts.rtol, opts.atol
        )));
    }
    Ok(())
}

fn is_finite(y: &[Complex64]) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Walks a packed state through the nodes (the first node is the start time
/// of `y0`), calling `visit` on the initial and on every accepted sample.
/// Returns the final sample.
#[allow(clippy::too_many_arguments)]
pub(crate) fn walk(
    spec: &HamiltonianSpec,
    n: usize,
    y0: Vec<Complex64>,
    nodes: &[Complex64],
    s0: f64,
    opts: &IntegratorOptions,
    monitors: &[Monitor],
    mut visit: impl FnMut(&Sample),
) -> Result<Sample> {
    let len = y0.len();
    let mut current = Sample { s: s0, t: nodes[0], y: y0 };
    visit(&current);
    let mut dets: Vec<Complex64> = monitors.iter().map(|m| m.eval_packed(n, &current.y)).collect();
    let mut k = vec![vec![Complex64::new(0.0, 0.0); len]; STAGES];
    let mut stage = vec![Complex64::new(0.0, 0.0); len];
    let mut high = vec![Complex64::new(0.0, 0.0); len];
    let mut steps = 0usize;
    let mut h: f64 = 1e-2;

    for seg in nodes.windows(2) {
        let (ta, tb) = (seg[0], seg[1]);
        let seg_len = (tb - ta).norm();
        if seg_len == 0.0 {
            continue;
        }
        let dir = (tb - ta) / seg_len;
        let s_start = current.s;
        let mut local = 0.0;
        h = h.min(seg_len);
        while local < seg_len {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepUnderflow { s: current.s, time: current.t });
            }
            let last = local + h >= seg_len * (1.0 - 1e-14);
            let step = if last { seg_len - local } else { h };
            let h_min = 1e-14 * (1.0 + current.s.abs());

            // stages
            packed_rhs(spec, n, &current.y, dir, &mut k[0]);
            for i in 1..STAGES {
                for j in 0..len {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, kl) in k.iter().enumerate().take(i) {
                        let a = A[i][l];
                        if a != 0.0 {
                            acc += kl[j] * a;
                        }
                    }
                    stage[j] = current.y[j] + acc * step;
                }
                packed_rhs(spec, n, &stage, dir, &mut k[i]);
            }
            let mut err: f64 = 0.0;
            for j in 0..len {
                let mut hi = Complex64::new(0.0, 0.0);
                let mut lo = Complex64::new(0.0, 0.0);
                for (l, kl) in k.iter().enumerate() {
                    hi += kl[j] * B[0][l];
                    lo += kl[j] * B[1][l];
                }
                high[j] = current.y[j] + hi * step;
                let scale = opts.atol + opts.rtol * current.y[j].norm().max(high[j].norm());
                err = err.max(((hi - lo) * step).norm() / scale);
            }

            if !err.is_finite() || !is_finite(&high) {
                if step <= h_min {
                    return Err(Error::StepUnderflow { s: current.s, time: current.t });
                }
                h = step * 0.2;
                continue;
            }
            if err > 1.0 {
                if step <= h_min {
                    return Err(Error::StepUnderflow { s: current.s, time: current.t });
                }
                h = step * (0.9 * err.powf(-1.0 / 9.0)).max(0.2);
                continue;
            }

            let new_dets: Vec<Complex64> = monitors.iter().map(|m| m.eval_packed(n, &high)).collect();
            let too_fast = dets.iter().zip(&new_dets).any(|(old, new)| {
                old.norm() > 0.0 && new.norm() > 0.0 && (new / old).arg().abs() > opts.max_phase_step
            });
            if too_fast && step > h_min {
                h = step * 0.5;
                continue;
            }

            local = if last { seg_len } else { local + step };
            current.y.copy_from_slice(&high);
            current.s = s_start + local;
            current.t = if last { tb } else { ta + dir * local };
            dets = new_dets;
            visit(&current);

            let grow = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-1.0 / 9.0)).clamp(0.2, 4.0) };
            h = if too_fast { step } else { step * grow };
        }
    }
    Ok(current)
}
