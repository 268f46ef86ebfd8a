//! Scenario-level checks run by `ggwpd verify`.

use std::f64::consts::FRAC_PI_2;

use ggwpd::dynamics::integrate;
use ggwpd::maslovfix::practical_from_seed_line;
use ggwpd::phasetrack::{accumulate_phase, Monitor};
use ggwpd::reconstruct::contribution;
use ggwpd::reference::exact_wavefunction;
use ggwpd::saddles::{newton_search, newton_search_guess, NewtonOptions};
use ggwpd::{
    Complex64, ComplexPhasePoint, Determinant, IntegratorOptions, RealPhasePoint, SaddleProblem, Shapes, TimePath,
    WavePacketParams,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Axis, Scenario};
use crate::figures::grid_norm;
use crate::pipeline::{contour_index, Run};

pub const IDENTITY_TOL: f64 = 1e-6;
pub const EXACT_TOL: f64 = 1e-8;
pub const INTEGRITY_TOL: f64 = 1e-8;
pub const NORM_RANGE: (f64, f64) = (0.8, 1.2);

/// Time standing in for `t → 0⁺`.
const SHORT_TIME: f64 = 1e-9;
const INTEGRITY_SAMPLES: usize = 20;
const MONOTONICITY_SEEDS: usize = 20;
/// Exposed members per family compared across correction methods.
const AGREEMENT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub name: String,
    pub method: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, status: if pass { Status::Pass } else { Status::Fail }, detail }
}

fn skipped(name: &'static str, why: &str) -> Check {
    Check { name, status: Status::Skipped, detail: why.to_string() }
}

fn failed(name: &'static str, e: impl std::fmt::Display) -> Check {
    check(name, false, format!("error: {e}"))
}

/// Evaluates every check against a finished run.
pub fn verify(sc: &Scenario, run: &Run) -> VerifyReport {
    let checks = vec![
        identity(sc),
        exactness(sc, run),
        foliations(sc, run),
        integrity(sc),
        smoothness(sc, run),
        agreement(sc, run),
        monotonicity(sc, run),
        energy_asymmetry(sc, run),
        norm(sc, run),
    ];
    VerifyReport {
        name: sc.config.name.clone(),
        method: run.method.to_string(),
        passed: checks.iter().all(|c| c.status != Status::Fail),
        checks,
    }
}

/// `∫ conj(β) α dx` by the trapezoid rule over both packets' support.
fn overlap(bra: &WavePacketParams, ket: &WavePacketParams) -> ggwpd::Result<Complex64> {
    let width = |w: &WavePacketParams| (w.hbar / (2.0 * w.b[(0, 0)].re)).sqrt();
    let lo = bra.q[0].min(ket.q[0]) - 12.0 * width(bra).max(width(ket));
    let hi = bra.q[0].max(ket.q[0]) + 12.0 * width(bra).max(width(ket));
    let n = 40_001;
    let h = (hi - lo) / (n - 1) as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let x = lo + h * k as f64;
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        sum += bra.eval(&[x])?.conj() * ket.eval(&[x])? * w;
    }
    Ok(sum * h)
}

/// Short-time reconstruction reproduces the initial packet (or overlap).
fn identity(sc: &Scenario) -> Check {
    const NAME: &str = "identity";
    let h = sc.hamiltonian().clone();
    let err = match (sc.axis, &sc.bra) {
        (Axis::X, _) => sc
            .grid
            .par_iter()
            .map(|&x| {
                let problem = SaddleProblem::wavefunction(sc.packet.clone(), h.clone(), SHORT_TIME, &[x]);
                let s = newton_search_guess(&problem, DVector::from_element(1, Complex64::new(x, 0.0)), &NewtonOptions::default())?;
                Ok((contribution(&s, None)?.value - sc.packet.eval(&[x])?).norm())
            })
            .collect::<ggwpd::Result<Vec<f64>>>()
            .map(|e| e.into_iter().fold(0.0, f64::max)),
        (Axis::T, Some(bra)) => (|| {
            let problem = SaddleProblem::transport(sc.packet.clone(), bra.clone(), h.clone(), SHORT_TIME);
            let seed = RealPhasePoint { p: sc.packet.p.clone(), q: sc.packet.q.clone() };
            let s = newton_search(&problem, &seed, 1, &NewtonOptions::default())?;
            Ok((contribution(&s, None)?.value - overlap(bra, &sc.packet)?).norm())
        })(),
        (Axis::T, None) => unreachable!("time grids carry a bra"),
    };
    match err {
        Ok(e) => check(NAME, e <= IDENTITY_TOL, format!("max error {e:.3e} at t = {SHORT_TIME:e} (tolerance {IDENTITY_TOL:e})")),
        Err(e) => failed(NAME, e),
    }
}

/// Quadratic Hamiltonians: the family sum equals the analytic evolution.
fn exactness(sc: &Scenario, run: &Run) -> Check {
    const NAME: &str = "exactness";
    if !sc.is_quadratic() || sc.axis != Axis::X {
        return skipped(NAME, "analytic oracle covers position grids under quadratic hamiltonians");
    }
    if run.total.len() != sc.grid.len() {
        return check(NAME, false, "no reconstruction".into());
    }
    let errs: ggwpd::Result<Vec<f64>> = sc
        .grid
        .iter()
        .zip(&run.total)
        .map(|(&x, v)| Ok((v - exact_wavefunction(&sc.packet, sc.hamiltonian(), sc.time, x)?).norm()))
        .collect();
    match errs {
        Ok(e) => {
            let max = e.into_iter().fold(0.0, f64::max);
            check(NAME, max <= EXACT_TOL, format!("max error {max:.3e} (tolerance {EXACT_TOL:e})"))
        }
        Err(e) => failed(NAME, e),
    }
}

fn foliations(sc: &Scenario, run: &Run) -> Check {
    const NAME: &str = "foliations";
    match sc.config.expect.foliations {
        Some(n) => {
            let counts: Vec<String> = run.foliations.iter().map(|f| f.turning_points.to_string()).collect();
            check(
                NAME,
                run.foliations.len() == n,
                format!("{} foliations (turning points {}), expected {n}", run.foliations.len(), counts.join(", ")),
            )
        }
        None => skipped(NAME, "no expected count configured"),
    }
}

/// Random real starts around the packet keep a symplectic stability matrix
/// and conserve energy.
fn integrity(sc: &Scenario) -> Check {
    const NAME: &str = "integrity";
    let mut rng = ChaCha8Rng::seed_from_u64(sc.config.seed);
    let b = sc.packet.b[(0, 0)].re;
    let (dq, dp) = ((sc.packet.hbar / (2.0 * b)).sqrt(), (sc.packet.hbar * b / 2.0).sqrt());
    let spread = 3.0;
    let starts: Vec<(f64, f64)> = (0..INTEGRITY_SAMPLES)
        .map(|_| {
            (
                sc.packet.p[0] + spread * dp * rng.gen_range(-1.0..1.0),
                sc.packet.q[0] + spread * dq * rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let t = sc.grid.iter().copied().fold(sc.time, f64::max);
    let t = if sc.axis == Axis::T { t } else { sc.time };
    let opts = IntegratorOptions::with_tolerance(1e-13);
    let h = sc.hamiltonian();
    let runs: ggwpd::Result<Vec<(f64, f64)>> = starts
        .par_iter()
        .map(|&(p, q)| {
            let rec = integrate(h, &ComplexPhasePoint::real(&[p], &[q]), &TimePath::real(t)?, &opts, &[])?;
            let e0 = h.energy(&rec.initial_point()).re;
            let drift = rec
                .samples
                .iter()
                .map(|s| (h.energy(&s.point(1)).re - e0).abs() / e0.abs().max(1.0))
                .fold(0.0, f64::max);
            Ok((rec.final_stability().symplectic_defect(), drift))
        })
        .collect();
    match runs {
        Ok(r) => {
            let defect = r.iter().map(|x| x.0).fold(0.0, f64::max);
            let drift = r.iter().map(|x| x.1).fold(0.0, f64::max);
            check(
                NAME,
                defect <= INTEGRITY_TOL && drift <= INTEGRITY_TOL,
                format!("{INTEGRITY_SAMPLES} trajectories: symplectic defect {defect:.3e}, energy drift {drift:.3e}"),
            )
        }
        Err(e) => failed(NAME, e),
    }
}

/// No family value turns by more than `π/2` between neighbouring grid
/// points once the classical phase advance is removed.
fn smoothness(sc: &Scenario, run: &Run) -> Check {
    const NAME: &str = "smoothness";
    let bad: Vec<String> = run
        .families
        .iter()
        .filter_map(|f| {
            let jumps = f.residual_jumps(sc, false, FRAC_PI_2);
            (!jumps.is_empty()).then(|| {
                let at: Vec<String> = jumps.iter().map(|&k| format!("{:.4}", sc.grid[k])).collect();
                format!("family {} at {} = {}", f.label, axis_name(sc), at.join(", "))
            })
        })
        .collect();
    let detail = if bad.is_empty() {
        format!("{} families smooth", run.families.len())
    } else {
        format!("phase jumps: {}", bad.join("; "))
    };
    check(NAME, bad.is_empty(), detail)
}

fn axis_name(sc: &Scenario) -> &'static str {
    match sc.axis {
        Axis::X => "x",
        Axis::T => "t",
    }
}

/// Contour deformation and the real-seed prescription give the same index
/// on sampled exposed members; without crossed zeros nothing is corrected.
fn agreement(sc: &Scenario, run: &Run) -> Check {
    const NAME: &str = "agreement";
    let Some(line) = run.line.as_ref().filter(|_| sc.axis == Axis::X) else {
        return skipped(NAME, "needs a seed line on a position grid");
    };
    let samples: Vec<(usize, usize)> = run
        .families
        .iter()
        .enumerate()
        .flat_map(|(i, f)| {
            let exposed: Vec<usize> = (0..f.members.len()).filter(|&k| f.exposed[k]).collect();
            let n = exposed.len().min(AGREEMENT_SAMPLES);
            (0..n).map(move |j| (i, exposed[j * (exposed.len() - 1) / (n - 1).max(1)])).collect::<Vec<_>>()
        })
        .collect();
    let results: Vec<_> = samples
        .par_iter()
        .map(|&(i, k)| {
            let s = &run.families[i].members[k];
            Ok((contour_index(s)?, practical_from_seed_line(s, line)?))
        })
        .collect::<Vec<ggwpd::Result<_>>>();
    let mut problems = Vec::new();
    for (&(i, k), r) in samples.iter().zip(results) {
        let at = format!("family {} at x = {:.4}", run.families[i].label, sc.grid[k]);
        match r {
            Ok((contour, practical)) => {
                if contour.corrected_index != practical.corrected_index {
                    problems.push(format!("{at}: contour {} vs real seed {}", contour.corrected_index, practical.corrected_index));
                }
                let crossed = contour.zeros.iter().filter(|z| z.crossed).count();
                if crossed == 0 && contour.discrepancy != 0 {
                    problems.push(format!("{at}: index changed by {} without a crossed zero", contour.discrepancy));
                }
            }
            Err(e) => problems.push(format!("{at}: {e}")),
        }
    }
    let detail = if problems.is_empty() {
        format!("{} exposed members agree", samples.len())
    } else {
        problems.join("; ")
    };
    check(NAME, problems.is_empty(), detail)
}

/// The D1 phase of real trajectories never decreases.
fn monotonicity(sc: &Scenario, run: &Run) -> Check {
    const NAME: &str = "monotonicity";
    let ps: Vec<f64> = match &run.line {
        Some(line) => {
            let n = line.points.len();
            (0..MONOTONICITY_SEEDS.min(n)).map(|j| line.points[j * (n - 1) / (MONOTONICITY_SEEDS - 1).max(1)].p).collect()
        }
        None => {
            let dp = (sc.packet.hbar * sc.packet.b[(0, 0)].re / 2.0).sqrt();
            (0..MONOTONICITY_SEEDS)
                .map(|j| sc.packet.p[0] + 3.0 * dp * (2.0 * j as f64 / (MONOTONICITY_SEEDS - 1) as f64 - 1.0))
                .collect()
        }
    };
    let t = if sc.axis == Axis::T { sc.grid.iter().copied().fold(0.0, f64::max) } else { sc.time };
    let shapes = Shapes::new(sc.packet.b.clone());
    let monitor = Monitor::new(Determinant::D1, shapes.clone());
    let h = sc.hamiltonian();
    let mins: ggwpd::Result<Vec<f64>> = ps
        .par_iter()
        .map(|&p| {
            let start = ComplexPhasePoint::real(&[p], sc.packet.q.as_slice());
            let rec = integrate(h, &start, &TimePath::real(t)?, &IntegratorOptions::default(), std::slice::from_ref(&monitor))?;
            let hist = accumulate_phase(&rec, Determinant::D1, &shapes)?;
            Ok(hist.samples.windows(2).map(|w| w[1].phase - w[0].phase).fold(f64::INFINITY, f64::min))
        })
        .collect();
    match mins {
        Ok(m) => {
            let min = m.into_iter().fold(f64::INFINITY, f64::min);
            check(NAME, min >= -1e-12, format!("{} real trajectories, smallest phase increment {min:.3e}", ps.len()))
        }
        Err(e) => failed(NAME, e),
    }
}

/// Families that needed a correction lie below the centroid energy.
fn energy_asymmetry(sc: &Scenario, run: &Run) -> Check {
    const NAME: &str = "energy_asymmetry";
    if sc.axis != Axis::X {
        return skipped(NAME, "stated for the wave-packet determinant on position grids");
    }
    let h = sc.hamiltonian();
    let e_c = h.energy(&ComplexPhasePoint::real(sc.packet.p.as_slice(), sc.packet.q.as_slice())).re;
    let mut notes = Vec::new();
    let mut pass = true;
    for f in run.families.iter().filter(|f| f.corrections() > 0) {
        match f.anchor_member(sc).seed() {
            Some(seed) => {
                let e = h.energy(&ComplexPhasePoint::real(seed.p.as_slice(), seed.q.as_slice())).re;
                pass &= e < e_c;
                notes.push(format!("family {} ({} corrections) seed energy {e:.2}", f.label, f.corrections()));
            }
            None => notes.push(format!("family {} corrected but hidden at the anchor", f.label)),
        }
    }
    if notes.is_empty() {
        return check(NAME, true, "no family needed a correction".into());
    }
    check(NAME, pass, format!("centroid energy {e_c:.2}; {}", notes.join("; ")))
}

fn norm(sc: &Scenario, run: &Run) -> Check {
    const NAME: &str = "norm";
    if !sc.config.expect.norm || sc.axis != Axis::X {
        return skipped(NAME, "not requested");
    }
    match grid_norm(&sc.grid, &run.total) {
        Some(n) => check(NAME, (NORM_RANGE.0..=NORM_RANGE.1).contains(&n), format!("∫|φ|² = {n:.4}")),
        None => check(NAME, false, "no reconstruction".into()),
    }
}
