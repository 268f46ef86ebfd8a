//! Scenario pipeline: foliate, seed, continue, correct, reconstruct.

use ggwpd::maslovfix::{
    corrected_index_contour, default_region, enforce_continuity_refined, locate_det_zeros, practical_from_seed_line,
    ZeroSearchOptions,
};
use ggwpd::reconstruct::{family_signal, sum_families};
use ggwpd::saddles::{build_foliations, continue_saddle, newton_search, ContinuationOptions, NewtonOptions};
use ggwpd::{
    Complex64, DetZero, FamilySignal, Foliation, IntegratorOptions, RealPhasePoint, SaddleResult, SeedLine,
};
use rayon::prelude::*;

use crate::config::{Axis, Method, Scenario};

/// Clearance kept between a deformed time path and the zeros it avoids.
pub const CLEARANCE: f64 = 0.05;

/// Step used when continuing a single member to an off-grid position.
const MEMBER_STEP: f64 = 0.05;

/// One family over the whole grid, with both index assignments.
#[derive(Debug, Clone)]
pub struct Family {
    pub label: usize,
    /// `None` for the single family of a quadratic Hamiltonian.
    pub turning_points: Option<usize>,
    /// Members carry the corrected index of the run's method.
    pub members: Vec<SaddleResult>,
    pub naive: Vec<i64>,
    pub corrected: Vec<i64>,
    pub exposed: Vec<bool>,
    /// `k` such that a whole-turn jump between members `k`, `k + 1` was removed.
    pub jumps: Vec<usize>,
    pub anchored: bool,
    pub naive_signal: FamilySignal,
    pub signal: FamilySignal,
}

impl Family {
    pub fn anchor_member<'a>(&'a self, sc: &Scenario) -> &'a SaddleResult {
        &self.members[sc.anchor]
    }

    /// Positions `k` where the value turns by more than `threshold` between
    /// members `k` and `k + 1` beyond the classical phase advance: `p Δx/ħ`
    /// along a position grid, `−E Δt/ħ` along a time grid. What remains
    /// is prefactor phase, where a wrong index shows up as a turn of `π`.
    pub fn residual_jumps(&self, sc: &Scenario, naive: bool, threshold: f64) -> Vec<usize> {
        let signal = if naive { &self.naive_signal } else { &self.signal };
        let hbar = sc.packet.hbar;
        let rate = |m: &SaddleResult| match sc.axis {
            Axis::X => m.final_point.p[0].re / hbar,
            Axis::T => -sc.hamiltonian().energy(&m.initial_point).re / hbar,
        };
        (0..signal.values.len().saturating_sub(1))
            .filter(|&k| {
                let (a, b) = (signal.values[k], signal.values[k + 1]);
                if a.norm() == 0.0 || b.norm() == 0.0 {
                    return false;
                }
                let advance = 0.5 * (rate(&self.members[k]) + rate(&self.members[k + 1])) * (sc.grid[k + 1] - sc.grid[k]);
                let r = (b / a * Complex64::from_polar(1.0, -advance)).arg();
                r.abs() > threshold
            })
            .collect()
    }

    /// Members whose index changed under correction.
    pub fn corrections(&self) -> usize {
        self.naive.iter().zip(&self.corrected).filter(|(a, b)| a != b).count()
    }
}

#[derive(Debug, Clone)]
pub struct ZeroMapEntry {
    pub x: f64,
    pub saddle: SaddleResult,
    pub zeros: Vec<DetZero>,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub method: Method,
    pub foliations: Vec<Foliation>,
    pub line: Option<SeedLine>,
    pub families: Vec<Family>,
    /// Sum over included families; empty if no family survived.
    pub total: Vec<Complex64>,
    pub zero_map: Vec<ZeroMapEntry>,
    pub warnings: Vec<String>,
}

/// Real-trajectory scaffolding: foliations of the Wigner contour and the
/// seed line. Quadratic Hamiltonians need neither.
pub fn foliate(sc: &Scenario) -> ggwpd::Result<(Vec<Foliation>, Option<SeedLine>)> {
    if sc.is_quadratic() {
        return Ok((Vec::new(), None));
    }
    let opts = IntegratorOptions::default();
    let c = &sc.config;
    let foliations = build_foliations(&sc.packet, sc.hamiltonian(), sc.time, c.sigma_level, c.contour_samples, &opts)?;
    let line = SeedLine::scan(&sc.packet, sc.hamiltonian(), sc.time, c.sigma_level, c.seed_line_points, &opts)?;
    Ok((foliations, Some(line)))
}

/// Saddle of foliation `label` (turning-point `count`) at the anchor point;
/// the quadratic family is seeded from the centroid.
pub fn anchor_saddle(sc: &Scenario, line: Option<&SeedLine>, label: usize, count: Option<usize>) -> ggwpd::Result<SaddleResult> {
    let problem = sc.problem_at(sc.anchor);
    let seed = match (line, count) {
        (Some(line), Some(count)) => line.seed_for(&problem, count)?.ok_or(ggwpd::Error::MissingSeed)?,
        _ => RealPhasePoint { p: sc.packet.p.clone(), q: sc.packet.q.clone() },
    };
    newton_search(&problem, &seed, label, &NewtonOptions::default())
}

/// Continues `start` (a member at the anchor) across the whole grid.
pub fn continue_family(sc: &Scenario, start: &SaddleResult, seeds: Option<(&SeedLine, usize)>) -> ggwpd::Result<Vec<SaddleResult>> {
    let opts = ContinuationOptions::default();
    let a = sc.anchor;
    let left: Vec<_> = (0..=a).rev().map(|k| sc.problem_at(k)).collect();
    let right: Vec<_> = (a..sc.grid.len()).map(|k| sc.problem_at(k)).collect();
    let l = continue_saddle(start, &left, &opts, seeds)?;
    let r = continue_saddle(start, &right, &opts, seeds)?;
    let mut out: Vec<SaddleResult> = l.into_iter().rev().collect();
    out.extend(r.into_iter().skip(1));
    Ok(out)
}

/// Member of a family at position `x`, continued from the anchor in short
/// steps. Position grids only.
pub fn member_at(sc: &Scenario, start: &SaddleResult, x: f64) -> ggwpd::Result<SaddleResult> {
    let x0 = sc.grid[sc.anchor];
    let steps = (((x - x0).abs() / MEMBER_STEP).ceil() as usize).max(1);
    let path: Vec<_> = (0..=steps)
        .map(|k| {
            let xk = x0 + (x - x0) * k as f64 / steps as f64;
            ggwpd::SaddleProblem::wavefunction(sc.packet.clone(), sc.hamiltonian().clone(), sc.time, &[xk])
        })
        .collect();
    let mut chain = continue_saddle(start, &path, &ContinuationOptions::default(), None)?;
    Ok(chain.pop().expect("path is non-empty"))
}

pub fn zeros_of(saddle: &SaddleResult) -> ggwpd::Result<Vec<DetZero>> {
    locate_det_zeros(
        saddle,
        &default_region(saddle),
        saddle.problem.determinant(),
        &saddle.problem.shapes(),
        &ZeroSearchOptions::default(),
    )
}

pub fn contour_index(saddle: &SaddleResult) -> ggwpd::Result<ggwpd::CorrectionReport> {
    corrected_index_contour(
        saddle,
        saddle.problem.determinant(),
        &saddle.problem.shapes(),
        &default_region(saddle),
        CLEARANCE,
        &ZeroSearchOptions::default(),
    )
}

struct Correction {
    corrected: Vec<i64>,
    jumps: Vec<usize>,
    anchored: bool,
}

/// Corrected indices of one family under `method`. Per-member failures
/// fall back to the naive index and are reported as warnings.
fn correct(
    sc: &Scenario,
    line: Option<&SeedLine>,
    label: usize,
    members: &mut [SaddleResult],
    method: Method,
    warnings: &mut Vec<String>,
) -> Correction {
    let naive: Vec<i64> = members.iter().map(|m| m.naive_index.nu).collect();
    // quadratic flows have no crossed zeros: the naive index is exact
    let line = match line {
        Some(line) if method != Method::Naive => line,
        _ => return Correction { corrected: naive, jumps: Vec::new(), anchored: true },
    };
    let at = |k: usize| sc.grid[k];

    if method == Method::Contour {
        let reports: Vec<_> = members.par_iter().map(contour_index).collect();
        let corrected = reports
            .into_iter()
            .enumerate()
            .map(|(k, r)| match r {
                Ok(r) => r.corrected_index,
                Err(e) => {
                    warnings.push(format!("family {label} at {}: contour correction failed ({e}); naive index kept", at(k)));
                    naive[k]
                }
            })
            .collect();
        return Correction { corrected, jumps: Vec::new(), anchored: true };
    }

    // trusted members: every exposed one (practical) or only the anchor (continuity)
    let trusted: Vec<usize> = match method {
        Method::Practical => (0..members.len()).filter(|&k| members[k].seed().is_some()).collect(),
        _ => vec![sc.anchor].into_iter().filter(|&k| members[k].seed().is_some()).collect(),
    };
    let indices: Vec<_> = trusted.par_iter().map(|&k| practical_from_seed_line(&members[k], line)).collect();
    for m in members.iter_mut() {
        m.corrected_index = None;
    }
    for (&k, r) in trusted.iter().zip(indices) {
        match r {
            Ok(r) => members[k].corrected_index = Some(r.corrected_index),
            Err(e) => warnings.push(format!("family {label} at {}: real-seed correction failed ({e})", at(k))),
        }
    }
    let continuity = enforce_continuity_refined(members, Some(&ContinuationOptions::default()));
    match continuity {
        Ok(report) => {
            if !report.anchored {
                warnings.push(format!("family {label}: no trusted member; continuity is unanchored"));
            }
            let corrected = members
                .iter()
                .zip(&report.reports)
                .map(|(m, r)| m.corrected_index.unwrap_or(r.corrected_index))
                .collect();
            Correction { corrected, jumps: report.jumps, anchored: report.anchored }
        }
        Err(e) => {
            warnings.push(format!("family {label}: continuity failed ({e}); untrusted members keep naive indices"));
            let corrected = members.iter().zip(&naive).map(|(m, &n)| m.corrected_index.unwrap_or(n)).collect();
            Correction { corrected, jumps: Vec::new(), anchored: false }
        }
    }
}

/// Builds, corrects and reconstructs one family.
pub fn build_family(
    sc: &Scenario,
    line: Option<&SeedLine>,
    label: usize,
    count: Option<usize>,
    method: Method,
) -> (ggwpd::Result<Family>, Vec<String>) {
    let mut warnings = Vec::new();
    let family = (|| {
        let start = anchor_saddle(sc, line, label, count)?;
        // only position grids share the seed line's propagation time
        let seeds = match (line, count, sc.axis) {
            (Some(line), Some(count), Axis::X) => Some((line, count)),
            _ => None,
        };
        let mut members = continue_family(sc, &start, seeds)?;
        let naive: Vec<i64> = members.iter().map(|m| m.naive_index.nu).collect();
        let exposed: Vec<bool> = members.iter().map(|m| m.seed().is_some()).collect();
        let Correction { corrected, jumps, anchored } = correct(sc, line, label, &mut members, method, &mut warnings);

        let plain: Vec<SaddleResult> = members.iter().cloned().map(|mut m| {
            m.corrected_index = None;
            m
        }).collect();
        let naive_signal = family_signal(label, &plain, None, Vec::new())?;
        for (m, &c) in members.iter_mut().zip(&corrected) {
            m.corrected_index = Some(c);
        }
        let signal = family_signal(label, &members, None, jumps.clone())?;
        Ok(Family { label, turning_points: count, members, naive, corrected, exposed, jumps, anchored, naive_signal, signal })
    })();
    (family, warnings)
}

/// Full pipeline for a scenario. Per-family failures become warnings; only
/// a failure of the real-trajectory scaffolding is fatal.
pub fn run(sc: &Scenario, method: Method) -> ggwpd::Result<Run> {
    let (foliations, line) = foliate(sc)?;
    let labels: Vec<(usize, Option<usize>)> = if foliations.is_empty() {
        vec![(1, None)]
    } else {
        foliations.iter().map(|f| (f.label, Some(f.turning_points))).collect()
    };
    let built: Vec<_> = labels
        .par_iter()
        .map(|&(label, count)| build_family(sc, line.as_ref(), label, count, method))
        .collect();
    let mut warnings = Vec::new();
    let mut families = Vec::new();
    for ((label, _), (family, w)) in labels.iter().zip(built) {
        warnings.extend(w);
        match family {
            Ok(f) => families.push(f),
            Err(e) => warnings.push(format!("family {label} dropped: {e}")),
        }
    }

    let included: Vec<FamilySignal> = families
        .iter()
        .filter(|f| !sc.config.exclude_families.contains(&f.label))
        .map(|f| f.signal.clone())
        .collect();
    let total = sum_families(&included, sc.config.relevance_threshold)?;

    let mut zero_map = Vec::new();
    if let Some(z) = &sc.config.zero_map {
        match families.iter().find(|f| f.label == z.family) {
            Some(f) => {
                let start = f.anchor_member(sc);
                let entries: Vec<_> = z
                    .x
                    .par_iter()
                    .map(|&x| {
                        let saddle = member_at(sc, start, x)?;
                        let zeros = zeros_of(&saddle)?;
                        Ok::<_, ggwpd::Error>(ZeroMapEntry { x, saddle, zeros })
                    })
                    .collect();
                for (x, e) in z.x.iter().zip(entries) {
                    match e {
                        Ok(e) => zero_map.push(e),
                        Err(e) => warnings.push(format!("zero map of family {} at x = {x}: {}", z.family, e)),
                    }
                }
            }
            None => warnings.push(format!("zero map: family {} is not available", z.family)),
        }
    }
    Ok(Run { method, foliations, line, families, total, zero_map, warnings })
}
