use nalgebra::DVector;
use num_complex::Complex64;

use super::{finish, newton_from_guess, Classification, NewtonOptions, Provenance, SaddleProblem, SaddleResult, SeedLine};
use crate::error::{Error, Result};
use crate::states::RealPhasePoint;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationOptions {
    pub newton: NewtonOptions,
    /// Smallest fraction of a grid step tried before giving up.
    pub min_fraction: f64,
    /// Newton iterations allowed per substep; more suggests a jump to a
    /// different saddle.
    pub max_iterations: usize,
    /// Bound on `|ΔQ0 − predicted ΔQ0|` relative to the predicted step.
    pub max_deviation: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { newton: NewtonOptions::default(), min_fraction: 1.0 / 4096.0, max_iterations: 12, max_deviation: 0.5 }
    }
}

/// Follows `start` through the problems of `path`, whose first element is
/// the start's own problem. Substeps are halved when Newton fails or lands
/// too far from the secant prediction. When `seeds` is given (seed line and
/// turning-point count of the family's foliation), each result is
/// classified by a fresh real-seed search.
pub fn continue_saddle(
    start: &SaddleResult,
    path: &[SaddleProblem],
    options: &ContinuationOptions,
    seeds: Option<(&SeedLine, usize)>,
) -> Result<Vec<SaddleResult>> {
    let mut out = vec![start.clone()];
    let mut cur = (start.problem.clone(), start.q0().clone());
    let mut prev: Option<(SaddleProblem, DVector<Complex64>)> = None;
    let newton = NewtonOptions { max_iter: options.max_iterations, ..options.newton.clone() };

    for (step, target) in path.iter().enumerate().skip(1) {
        let mut fraction = 1.0;
        loop {
            let trial = cur.0.interpolate(target, fraction)?;
            let guess = predict(prev.as_ref(), &cur, &trial);
            let predicted = (&guess - &cur.1).norm();
            let accepted = match newton_from_guess(&trial, guess.clone(), &newton) {
                Ok((q0, _, _)) => {
                    let deviation = (&q0 - &guess).norm();
                    let bound = options.max_deviation * predicted + 1e-3 * (1.0 + cur.1.norm());
                    (deviation <= bound).then_some(q0)
                }
                Err(_) => None,
            };
            match accepted {
                Some(q0) => {
                    let reached = fraction == 1.0;
                    prev = Some(std::mem::replace(&mut cur, (trial, q0)));
                    if reached {
                        break;
                    }
                    fraction = (fraction * 2.0).min(1.0);
                }
                None => {
                    fraction *= 0.5;
                    if fraction < options.min_fraction {
                        return Err(Error::StuckContinuation { step, fraction });
                    }
                }
            }
        }
        // polish at the grid point with the full iteration budget
        let (q0, norm, iterations) = newton_from_guess(target, cur.1.clone(), &options.newton)?;
        cur.1 = q0.clone();
        let mut result = finish(
            target,
            q0,
            norm,
            iterations,
            start.classification,
            Provenance::Continuation { foliation: start.foliation(), step, seed: None },
            &options.newton.integrator,
        )?;
        if let Some((line, count)) = seeds {
            let seed = classify(&result, line, count, &options.newton)?;
            result.classification = if seed.is_some() { Classification::Exposed } else { Classification::Hidden };
            result.provenance = Provenance::Continuation { foliation: start.foliation(), step, seed };
        }
        out.push(result);
    }
    Ok(out)
}

fn predict(
    prev: Option<&(SaddleProblem, DVector<Complex64>)>,
    cur: &(SaddleProblem, DVector<Complex64>),
    trial: &SaddleProblem,
) -> DVector<Complex64> {
    match prev {
        Some((p_prob, p_q)) => {
            let span = p_prob.parameter_distance(&cur.0);
            if span > 0.0 {
                let ratio = cur.0.parameter_distance(trial) / span;
                &cur.1 + (&cur.1 - p_q) * Complex64::new(ratio, 0.0)
            } else {
                cur.1.clone()
            }
        }
        None => cur.1.clone(),
    }
}

/// Returns the real seed reproducing `saddle` if one exists in the
/// foliation with `count` turning points (exposed), `None` otherwise. The
/// seed's own trajectory must end at the saddle's target.
pub fn classify(
    saddle: &SaddleResult,
    line: &SeedLine,
    count: usize,
    opts: &NewtonOptions,
) -> Result<Option<RealPhasePoint>> {
    let Some(seed) = line.connecting_seed(&saddle.problem, count)? else {
        return Ok(None);
    };
    let guess = super::seed_to_manifold(&saddle.problem.packet, &seed)?;
    Ok(match newton_from_guess(&saddle.problem, guess, opts) {
        Ok((q0, _, _)) if (&q0 - saddle.q0()).norm() <= 1e-6 * (1.0 + q0.norm()) => Some(seed),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::HamiltonianSpec;
    use crate::saddles::newton_search;
    use crate::states::WavePacketParams;

    #[test]
    fn single_point_path_returns_the_start() {
        let g = WavePacketParams::one_dim(0.0, 1.0, Complex64::new(1.0, 0.0), 1.0);
        let prob = SaddleProblem::wavefunction(g, HamiltonianSpec::FreeParticle, 1.0, &[1.0]);
        let start = newton_search(&prob, &RealPhasePoint::one_dim(1.0, 0.0), 1, &NewtonOptions::default()).unwrap();
        let out = continue_saddle(&start, &[prob], &ContinuationOptions::default(), None).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].q0(), start.q0());
    }

    #[test]
    fn free_particle_family_follows_closed_form() {
        let g = WavePacketParams::one_dim(0.0, 1.0, Complex64::new(1.0, 0.5), 1.0);
        let h = HamiltonianSpec::FreeParticle;
        let t = 2.0;
        let path: Vec<SaddleProblem> =
            (0..11).map(|k| SaddleProblem::wavefunction(g.clone(), h.clone(), t, &[k as f64 * 0.3])).collect();
        let start = newton_search(&path[0], &RealPhasePoint::one_dim(1.0, 0.0), 1, &NewtonOptions::default()).unwrap();
        let out = continue_saddle(&start, &path, &ContinuationOptions::default(), None).unwrap();
        let i = Complex64::new(0.0, 1.0);
        for (k, r) in out.iter().enumerate() {
            let x = k as f64 * 0.3;
            let expected = (x - 1.0 * t) / (1.0 + i * g.b[(0, 0)] * t);
            assert!((r.q0()[0] - expected).norm() < 1e-10);
            assert!(r.residual_norm <= 1e-10);
        }
        assert!(matches!(out[3].provenance, Provenance::Continuation { step: 3, .. }));
    }
}
