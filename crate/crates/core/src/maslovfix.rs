//! Corrected Maslov indices for saddle trajectories.
//!
//! Along a complex saddle the determinant's zeros sit at complex times; when
//! one of them migrates through the real time axis the naively accumulated
//! phase loses (or gains) a full turn. Three remedies are provided: locating
//! the zeros and integrating beneath the crossed ones, borrowing the phase
//! count of the real seed trajectory, and enforcing continuity along a
//! family of saddles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    flow_derivative, integrate, pack_state, walk, ComplexPhasePoint, HamiltonianSpec, IntegratorOptions, Sample,
    StabilityMatrix, TimePath, TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::phasetrack::{
    accumulate_phase, maslov_from_phase, unwrap_values, Determinant, MaslovDecomposition, Monitor, Shapes,
};
use crate::saddles::{continue_saddle, ContinuationOptions, SaddleResult, SeedLine};

/// Zero of a monitored determinant in the complex time plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetZero {
    #[serde(with = "crate::io::complex_pair")]
    pub time: Complex64,
    pub multiplicity: usize,
    /// `Im t ≤ 0`: the zero has reached or passed the real axis.
    pub crossed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionMethod {
    Contour,
    RealSeed,
    Continuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub saddle_id: String,
    pub naive_index: i64,
    pub corrected_index: i64,
    /// Half phase shared by naive and corrected decompositions.
    pub theta: f64,
    pub method: CorrectionMethod,
    pub zeros: Vec<DetZero>,
    /// `naive − corrected`; always even.
    pub discrepancy: i64,
    /// Continuity reports only: false when no trusted member was available.
    pub anchored: bool,
}

impl CorrectionReport {
    fn new(saddle: &SaddleResult, naive: MaslovDecomposition, corrected: i64, method: CorrectionMethod) -> Self {
        CorrectionReport {
            saddle_id: saddle_id(saddle),
            naive_index: naive.nu,
            corrected_index: corrected,
            theta: naive.theta,
            method,
            zeros: Vec::new(),
            discrepancy: naive.nu - corrected,
            anchored: true,
        }
    }

    pub fn corrected(&self) -> MaslovDecomposition {
        MaslovDecomposition { nu: self.corrected_index, theta: self.theta }
    }
}

/// `F<label>:x=<x>` or `F<label>:t=<t>`; `F?` for saddles without a foliation.
pub fn saddle_id(saddle: &SaddleResult) -> String {
    let label = saddle.foliation().map_or_else(|| "?".to_string(), |l| l.to_string());
    match saddle.problem.target() {
        Some(x) => format!("F{label}:x={}", x[0]),
        None => format!("F{label}:t={}", saddle.problem.time),
    }
}

/// Shifts `naive` by the whole turns separating it from `reference`.
fn align(naive: f64, reference: f64) -> f64 {
    naive + 2.0 * PI * ((reference - naive) / (2.0 * PI)).round()
}

// ---------------------------------------------------------------------------
// zero location

/// Rectangle `[re.0, re.1] × [im.0, im.1]` in the complex time plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl SearchRegion {
    /// `[0, t_final] × [−h, h]`.
    pub fn strip(t_final: f64, half_height: f64) -> Self {
        SearchRegion { re: (0.0, t_final), im: (-half_height, half_height) }
    }

    /// `[0, t_final] × [−depth, depth/3]`.
    pub fn below(t_final: f64, depth: f64) -> Self {
        SearchRegion { re: (0.0, t_final), im: (-depth, depth / 3.0) }
    }

    fn width(&self) -> f64 {
        self.re.1 - self.re.0
    }

    fn height(&self) -> f64 {
        self.im.1 - self.im.0
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn contains(&self, t: Complex64, slack: f64) -> bool {
        let (sw, sh) = (slack * self.width(), slack * self.height());
        t.re >= self.re.0 - sw && t.re <= self.re.1 + sw && t.im >= self.im.0 - sh && t.im <= self.im.1 + sh
    }

    /// Halves across the longer side (in units of the region's aspect), with
    /// the cut shifted by `jitter` of the side.
    fn split(&self, jitter: f64) -> [SearchRegion; 2] {
        let f = 0.5 + jitter;
        if self.width() >= self.height() {
            let m = self.re.0 + f * self.width();
            [SearchRegion { re: (self.re.0, m), ..*self }, SearchRegion { re: (m, self.re.1), ..*self }]
        } else {
            let m = self.im.0 + f * self.height();
            [SearchRegion { im: (self.im.0, m), ..*self }, SearchRegion { im: (m, self.im.1), ..*self }]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSearchOptions {
    /// Cells across the real extent before adaptive subdivision.
    pub initial_cells: usize,
    /// Cells smaller than this are refined directly.
    pub min_cell: f64,
    pub newton_tol: f64,
    pub integrator: IntegratorOptions,
}

impl Default for ZeroSearchOptions {
    fn default() -> Self {
        ZeroSearchOptions { initial_cells: 24, min_cell: 1e-4, newton_tol: 1e-12, integrator: IntegratorOptions::default() }
    }
}

struct Search<'a> {
    spec: &'a HamiltonianSpec,
    start: ComplexPhasePoint,
    monitor: Monitor,
    opts: &'a ZeroSearchOptions,
}

fn dedup(nodes: Vec<Complex64>) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(nodes.len());
    for z in nodes {
        if out.last() != Some(&z) {
            out.push(z);
        }
    }
    out
}

impl Search<'_> {
    fn n(&self) -> usize {
        self.start.dim()
    }

    /// State at the end of `nodes` (starting at 0), without phase guard.
    fn state_at(&self, nodes: &[Complex64]) -> Result<Sample> {
        let y0 = pack_state(&self.start, &StabilityMatrix::identity(self.n()));
        if nodes.len() < 2 {
            return Ok(Sample { s: 0.0, t: Complex64::new(0.0, 0.0), y: y0 });
        }
        walk(self.spec, self.n(), y0, nodes, 0.0, &self.opts.integrator, &[], |_| {})
    }

    /// Winding number of the determinant around `cell`, reached from 0 via
    /// its lower-left corner.
    fn winding(&self, cell: &SearchRegion) -> Result<i64> {
        let (a, b) = (cell.re, cell.im);
        let corner = Complex64::new(a.0, b.0);
        let approach = dedup(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, b.0), corner]);
        let at_corner = self.state_at(&approach)?;
        let ring = [
            corner,
            Complex64::new(a.1, b.0),
            Complex64::new(a.1, b.1),
            Complex64::new(a.0, b.1),
            corner,
        ];
        let mut values = Vec::new();
        let n = self.n();
        let monitor = &self.monitor;
        walk(self.spec, n, at_corner.y, &ring, at_corner.s, &self.opts.integrator, std::slice::from_ref(monitor), |s| {
            values.push((s.s, s.t, monitor.eval_packed(n, &s.y)))
        })?;
        let history = unwrap_values(self.monitor.which, values.into_iter())?;
        let turns = (history.total_phase() - history.samples[0].phase) / (2.0 * PI);
        Ok(turns.round() as i64)
    }

    fn winding_jittered(&self, cell: &SearchRegion) -> Result<(SearchRegion, i64)> {
        for k in 0..4 {
            let shrink = 1e-3 * k as f64 * 0.618;
            let trial = SearchRegion {
                re: (cell.re.0 + shrink * cell.width(), cell.re.1 - 0.5 * shrink * cell.width()),
                im: (cell.im.0 + 0.7 * shrink * cell.height(), cell.im.1 - shrink * cell.height()),
            };
            match self.winding(&trial) {
                Ok(w) => return Ok((if k == 0 { *cell } else { trial }, w)),
                Err(Error::ZeroDeterminant { .. } | Error::PhaseJumpTooLarge { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::BoundaryZero { time: cell.center() })
    }

    /// `D(t)` and `dD/dt`, integrating along `0 → Re t → t`.
    fn value_and_slope(&self, t: Complex64) -> Result<(Complex64, Complex64)> {
        let nodes = dedup(vec![Complex64::new(0.0, 0.0), Complex64::new(t.re, 0.0), t]);
        let end = self.state_at(&nodes)?;
        let n = self.n();
        let m = end.stability(n);
        let (_, dm) = flow_derivative(self.spec, &end.point(n), &m);
        Ok((self.monitor.eval(&m), self.monitor.derivative(&m, &dm)))
    }

    fn newton(&self, guess: Complex64) -> Option<Complex64> {
        let mut t = guess;
        let (d0, _) = self.value_and_slope(t).ok()?;
        let scale = d0.norm().max(1.0);
        for _ in 0..60 {
            let (d, slope) = self.value_and_slope(t).ok()?;
            if d.norm() <= self.opts.newton_tol * scale {
                return Some(t);
            }
            if slope.norm() == 0.0 {
                return None;
            }
            let step = d / slope;
            t -= step;
            if step.norm() <= 1e-14 * (1.0 + t.norm()) {
                return Some(t);
            }
        }
        None
    }

    fn refine(&self, cell: SearchRegion, winding: i64, depth: usize, out: &mut Vec<DetZero>) -> Result<()> {
        if winding <= 0 {
            return Ok(());
        }
        let small = cell.width().max(cell.height()) < self.opts.min_cell || depth > 60;
        if winding == 1 || small {
            if let Some(t) = self.newton(cell.center()) {
                if cell.contains(t, 0.05) {
                    out.push(DetZero { time: t, multiplicity: winding as usize, crossed: t.im <= 0.0 });
                    return Ok(());
                }
            }
            if small {
                let t = cell.center();
                out.push(DetZero { time: t, multiplicity: winding as usize, crossed: t.im <= 0.0 });
                return Ok(());
            }
        }
        for jitter in [0.0, 0.013, -0.029] {
            let halves = cell.split(jitter);
            let w0 = self.winding_jittered(&halves[0]);
            let w1 = self.winding_jittered(&halves[1]);
            if let (Ok((c0, w0)), Ok((c1, w1))) = (w0, w1) {
                self.refine(c0, w0, depth + 1, out)?;
                return self.refine(c1, w1, depth + 1, out);
            }
        }
        Err(Error::BoundaryZero { time: cell.center() })
    }
}

/// Zeros of the chosen determinant along `saddle` inside `region`, located
/// by argument-principle winding over adaptively split cells and refined by
/// Newton in complex time.
/// Fraction of the distance to the orbit's complex-time singularities that
/// the default region reaches below the real axis.
pub const SINGULARITY_FRACTION: f64 = 0.75;

/// Zero-search region for a saddle. Under `λq⁴` a trajectory approaching a
/// complex-time pole grows like `|q| ≈ 1/(√(2λ) |t − t*|)`, so the largest
/// `|q|` along the real-time path estimates how far off the axis the nearest
/// pole lies. Determinant zeros clustered around such poles never cross the
/// axis; the region stops short of them. Other Hamiltonians get a strip of
/// depth `1/2`.
pub fn default_region(saddle: &SaddleResult) -> SearchRegion {
    let t_final = saddle.problem.time;
    let depth = match saddle.problem.hamiltonian {
        HamiltonianSpec::Quartic { lambda } => {
            let n = saddle.trajectory.dim;
            let q_max = saddle
                .trajectory
                .samples
                .iter()
                .map(|s| s.point(n).q.iter().map(|q| q.norm()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            SINGULARITY_FRACTION / ((2.0 * lambda).sqrt() * q_max)
        }
        _ => 0.5,
    };
    SearchRegion::below(t_final, depth.min(t_final))
}

pub fn locate_det_zeros(
    saddle: &SaddleResult,
    region: &SearchRegion,
    which: Determinant,
    shapes: &Shapes,
    opts: &ZeroSearchOptions,
) -> Result<Vec<DetZero>> {
    if !(region.im.0 <= 0.0 && region.im.1 > region.im.0 && region.re.0 >= 0.0 && region.re.1 > region.re.0) {
        return Err(Error::DomainError(format!("invalid zero-search region {region:?}")));
    }
    let search = Search {
        spec: &saddle.problem.hamiltonian,
        start: saddle.initial_point.clone(),
        monitor: Monitor::new(which, shapes.clone()),
        opts,
    };
    let k = opts.initial_cells.max(1);
    let w = region.width() / k as f64;
    let cells: Vec<SearchRegion> = (0..k)
        .map(|i| SearchRegion { re: (region.re.0 + i as f64 * w, region.re.0 + (i + 1) as f64 * w), ..*region })
        .collect();
    let found = cells
        .par_iter()
        .map(|cell| {
            let (cell, winding) = search.winding_jittered(cell)?;
            let mut out = Vec::new();
            search.refine(cell, winding, 0, &mut out)?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut zeros: Vec<DetZero> = found.into_iter().flatten().collect();
    zeros.sort_by(|a, b| a.time.re.total_cmp(&b.time.re));
    Ok(zeros)
}

/// Real path `[0, t_final]` dipping beneath every crossed zero to
/// `min Im − clearance`, over `[Re − clearance, Re + clearance]`;
/// overlapping dips merge.
pub fn deformed_time_path(t_final: f64, crossed: &[DetZero], clearance: f64) -> Result<TimePath> {
    let mut brackets: Vec<(f64, f64, f64)> = crossed
        .iter()
        .filter(|z| z.crossed)
        .map(|z| ((z.time.re - clearance).max(0.0), (z.time.re + clearance).min(t_final), z.time.im - clearance))
        .collect();
    brackets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64, f64)> = Vec::new();
    for b in brackets {
        match merged.last_mut() {
            Some(last) if b.0 <= last.1 => {
                last.1 = last.1.max(b.1);
                last.2 = last.2.min(b.2);
            }
            _ => merged.push(b),
        }
    }
    let mut nodes = vec![Complex64::new(0.0, 0.0)];
    for (a, b, depth) in merged {
        nodes.extend([
            Complex64::new(a, 0.0),
            Complex64::new(a, depth),
            Complex64::new(b, depth),
            Complex64::new(b, 0.0),
        ]);
    }
    nodes.push(Complex64::new(t_final, 0.0));
    TimePath::new(dedup(nodes))
}

/// Integrates `saddle` along the path beneath its crossed zeros in
/// `region` and reads the index off the accumulated phase.
pub fn corrected_index_contour(
    saddle: &SaddleResult,
    which: Determinant,
    shapes: &Shapes,
    region: &SearchRegion,
    clearance: f64,
    opts: &ZeroSearchOptions,
) -> Result<CorrectionReport> {
    let t_final = saddle.problem.time;
    let zeros = locate_det_zeros(saddle, region, which, shapes, opts)?;
    let crossed: Vec<DetZero> =
        zeros.iter().copied().filter(|z| z.crossed && z.time.re > 0.0 && z.time.re < t_final).collect();
    let path = deformed_time_path(t_final, &crossed, clearance)?;
    let monitor = Monitor::new(which, shapes.clone());
    let record = integrate(&saddle.problem.hamiltonian, &saddle.initial_point, &path, &opts.integrator, &[monitor])?;
    let deformed = accumulate_phase(&record, which, shapes)?;
    let naive = naive_phase(saddle, which, shapes, &opts.integrator)?;
    let corrected = maslov_from_phase(align(naive, deformed.total_phase())).nu;
    let mut report = CorrectionReport::new(saddle, maslov_from_phase(naive), corrected, CorrectionMethod::Contour);
    report.zeros = zeros;
    Ok(report)
}

/// Naive total phase for `which`; reuses the saddle's own history when it
/// tracks the same determinant.
fn naive_phase(saddle: &SaddleResult, which: Determinant, shapes: &Shapes, opts: &IntegratorOptions) -> Result<f64> {
    if saddle.history.which == which && saddle.problem.shapes() == *shapes {
        return Ok(saddle.history.total_phase());
    }
    let monitor = Monitor::new(which, shapes.clone());
    let record = integrate(&saddle.problem.hamiltonian, &saddle.initial_point, &saddle.trajectory.path, opts, &[monitor])?;
    Ok(accumulate_phase(&record, which, shapes)?.total_phase())
}

/// Takes the whole-turn count from the real seed trajectory: the corrected
/// phase is the saddle's own phase shifted by the turns that bring it
/// closest to the seed's.
pub fn corrected_index_practical(
    saddle: &SaddleResult,
    seed_trajectory: &TrajectoryRecord,
    which: Determinant,
    shapes: &Shapes,
) -> Result<CorrectionReport> {
    let opts = IntegratorOptions::default();
    let seed_phase = match accumulate_phase(seed_trajectory, which, shapes) {
        Ok(h) => h.total_phase(),
        // records integrated without a phase guard are re-run with one
        Err(Error::PhaseJumpTooLarge { .. }) => {
            let monitor = Monitor::new(which, shapes.clone());
            let rec = integrate(
                &saddle.problem.hamiltonian,
                &seed_trajectory.initial_point(),
                &seed_trajectory.path,
                &opts,
                &[monitor],
            )?;
            accumulate_phase(&rec, which, shapes)?.total_phase()
        }
        Err(e) => return Err(e),
    };
    let naive = naive_phase(saddle, which, shapes, &opts)?;
    let corrected = maslov_from_phase(align(naive, seed_phase)).nu;
    Ok(CorrectionReport::new(saddle, maslov_from_phase(naive), corrected, CorrectionMethod::RealSeed))
}

/// [`corrected_index_practical`] for a saddle carrying its seed, using the
/// saddle's own determinant.
pub fn practical_from_seed_line(saddle: &SaddleResult, line: &SeedLine) -> Result<CorrectionReport> {
    let seed = saddle.seed().ok_or(Error::MissingSeed)?;
    let monitor = saddle.problem.monitor();
    let record = line.seed_trajectory(seed, std::slice::from_ref(&monitor))?;
    corrected_index_practical(saddle, &record, monitor.which, &monitor.shapes)
}

/// Result of scanning a family for whole-turn jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub reports: Vec<CorrectionReport>,
    /// `k` such that a jump was removed between members `k` and `k + 1`.
    pub jumps: Vec<usize>,
    pub anchor: usize,
    pub anchored: bool,
}

/// Removes total-phase jumps of about a full turn between neighbours and
/// fixes the overall offset on a trusted member: the first one carrying a
/// corrected index (e.g. from its real seed), else the family head.
pub fn enforce_continuity(family: &[SaddleResult]) -> Result<ContinuityReport> {
    enforce_continuity_refined(family, None)
}

/// Like [`enforce_continuity`], but an ambiguous jump is resolved by
/// continuing the left member to parameter midpoints, bisecting up to
/// `MAX_REFINE` times, before being reported.
pub fn enforce_continuity_refined(
    family: &[SaddleResult],
    refine: Option<&ContinuationOptions>,
) -> Result<ContinuityReport> {
    if family.is_empty() {
        return Ok(ContinuityReport { reports: Vec::new(), jumps: Vec::new(), anchor: 0, anchored: false });
    }
    let phases: Vec<f64> = family.iter().map(|s| s.history.total_phase()).collect();
    let mut offsets = vec![0.0; family.len()];
    let mut jumps = Vec::new();
    for k in 0..family.len() - 1 {
        let turns = pair_turns(&family[k], &family[k + 1], refine, MAX_REFINE)
            .map_err(|e| match e {
                Error::AmbiguousJump { jump, .. } => Error::AmbiguousJump { index: k, next: k + 1, jump },
                other => other,
            })?;
        if turns != 0.0 {
            jumps.push(k);
        }
        offsets[k + 1] = offsets[k] - 2.0 * PI * turns;
    }
    let trusted = family.iter().position(|s| s.corrected_index.is_some());
    let anchor = trusted.unwrap_or(0);
    let shifted = maslov_from_phase(phases[anchor] + offsets[anchor]).nu;
    let target = family[anchor].corrected_index.unwrap_or(family[anchor].naive_index.nu);
    let global = 2.0 * PI * ((target - shifted) as f64 / 2.0).round();
    let reports = family
        .iter()
        .zip(phases.iter().zip(&offsets))
        .map(|(s, (&phase, &offset))| {
            let corrected = maslov_from_phase(phase + offset + global).nu;
            let mut r = CorrectionReport::new(s, maslov_from_phase(phase), corrected, CorrectionMethod::Continuity);
            r.anchored = trusted.is_some();
            r
        })
        .collect();
    Ok(ContinuityReport { reports, jumps, anchor, anchored: trusted.is_some() })
}

const MAX_REFINE: usize = 8;

/// Whole turns of total phase between two members of one family.
fn pair_turns(a: &SaddleResult, b: &SaddleResult, refine: Option<&ContinuationOptions>, depth: usize) -> Result<f64> {
    let delta = b.history.total_phase() - a.history.total_phase();
    if delta.abs() <= PI {
        return Ok(0.0);
    }
    if delta.abs() < 3.0 * PI {
        return Ok((delta / (2.0 * PI)).round());
    }
    let ambiguous = Error::AmbiguousJump { index: 0, next: 1, jump: delta };
    let Some(opts) = refine.filter(|_| depth > 0) else {
        return Err(ambiguous);
    };
    let mid = a.problem.interpolate(&b.problem, 0.5)?;
    let chain = continue_saddle(a, &[a.problem.clone(), mid, b.problem.clone()], opts, None).map_err(|_| ambiguous)?;
    if (chain[2].q0() - b.q0()).norm() > 1e-6 * (1.0 + b.q0().norm()) {
        return Err(Error::AmbiguousJump { index: 0, next: 1, jump: delta });
    }
    Ok(pair_turns(a, &chain[1], refine, depth - 1)? + pair_turns(&chain[1], &chain[2], refine, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::period_quartic;
    use crate::phasetrack::PhaseHistory;
    use crate::saddles::{newton_search, NewtonOptions, SaddleProblem};
    use crate::states::{RealPhasePoint, WavePacketParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zero(re: f64, im: f64) -> DetZero {
        DetZero { time: c(re, im), multiplicity: 1, crossed: im <= 0.0 }
    }

    #[test]
    fn undeformed_path_without_crossings() {
        let p = deformed_time_path(3.0, &[], 0.1).unwrap();
        assert_eq!(p.nodes(), &[c(0.0, 0.0), c(3.0, 0.0)]);
        let p = deformed_time_path(3.0, &[zero(1.0, 0.3)], 0.1).unwrap();
        assert_eq!(p.nodes().len(), 2);
    }

    #[test]
    fn single_dip_brackets_the_zero() {
        let tz = 4.0 - 0.01;
        let p = deformed_time_path(6.0, &[zero(tz, -0.05)], 0.1).unwrap();
        let n = p.nodes();
        assert_eq!(n.len(), 6);
        assert!((n[1] - c(tz - 0.1, 0.0)).norm() < 1e-15);
        assert!((n[2] - c(tz - 0.1, -0.15)).norm() < 1e-15);
        assert!((n[3] - c(tz + 0.1, -0.15)).norm() < 1e-15);
        assert!((n[4] - c(tz + 0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn overlapping_dips_merge() {
        let p = deformed_time_path(6.0, &[zero(2.0, -0.01), zero(2.15, -0.03)], 0.1).unwrap();
        let n = p.nodes();
        assert_eq!(n.len(), 6);
        assert!((n[2].im + 0.13).abs() < 1e-15);
        assert!((n[3].re - 2.25).abs() < 1e-15);
    }

    fn free_saddle(b: Complex64) -> SaddleResult {
        let g = WavePacketParams::one_dim(0.0, 1.0, b, 1.0);
        let prob = SaddleProblem::wavefunction(g, HamiltonianSpec::FreeParticle, 3.0, &[0.5]);
        newton_search(&prob, &RealPhasePoint::one_dim(1.0, 0.0), 1, &NewtonOptions::default()).unwrap()
    }

    #[test]
    fn free_particle_has_no_zeros_in_the_strip() {
        // D1 = 1 + i b t vanishes only at t = i / b
        let s = free_saddle(c(2.0, 0.0));
        let zeros = locate_det_zeros(
            &s,
            &SearchRegion { re: (0.0, 3.0), im: (-2.0, 0.4) },
            Determinant::D1,
            &s.problem.shapes(),
            &ZeroSearchOptions::default(),
        )
        .unwrap();
        assert!(zeros.is_empty());
    }

    /// Monitor shape placing the free-particle `D1 = 1 + i b t` zero at
    /// `t0` (a packet with this `b` would be invalid; only the monitor uses it).
    fn shapes_with_zero_at(t0: Complex64) -> Shapes {
        Shapes::scalar(c(0.0, 1.0) / t0)
    }

    #[test]
    fn affine_zero_is_found_and_refined() {
        let t0 = c(1.2, -0.3);
        let s = free_saddle(c(2.0, 0.0));
        let zeros = locate_det_zeros(
            &s,
            &SearchRegion { re: (0.0, 3.0), im: (-1.0, 1.0) },
            Determinant::D1,
            &shapes_with_zero_at(t0),
            &ZeroSearchOptions::default(),
        )
        .unwrap();
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0].time - t0).norm() < 1e-10);
        assert!(zeros[0].crossed);
        assert_eq!(zeros[0].multiplicity, 1);
    }

    #[test]
    fn contour_correction_counts_crossed_zeros() {
        let s = free_saddle(c(2.0, 0.0));
        let shapes = shapes_with_zero_at(c(1.2, -0.3));
        let region = SearchRegion { re: (0.0, 3.0), im: (-1.0, 1.0) };
        let r = corrected_index_contour(&s, Determinant::D1, &shapes, &region, 0.1, &Default::default()).unwrap();
        assert_eq!(r.corrected_index - r.naive_index, 2);
        assert_eq!(r.discrepancy, -2);
        // independent of the clearance
        let r2 = corrected_index_contour(&s, Determinant::D1, &shapes, &region, 0.25, &Default::default()).unwrap();
        assert_eq!(r.corrected_index, r2.corrected_index);
        // an uncrossed zero changes nothing
        let shapes = shapes_with_zero_at(c(1.2, 0.3));
        let r = corrected_index_contour(&s, Determinant::D1, &shapes, &region, 0.1, &Default::default()).unwrap();
        assert_eq!(r.discrepancy, 0);
        assert_eq!(r.zeros.len(), 1);
    }

    #[test]
    fn region_must_reach_the_real_axis() {
        let s = free_saddle(c(2.0, 0.0));
        let bad = SearchRegion { re: (0.0, 3.0), im: (0.1, 1.0) };
        let res = locate_det_zeros(&s, &bad, Determinant::D1, &s.problem.shapes(), &Default::default());
        assert!(matches!(res, Err(Error::DomainError(_))));
    }

    fn with_phase(base: &SaddleResult, phase: f64) -> SaddleResult {
        let mut s = base.clone();
        let mut h: PhaseHistory = s.history.clone();
        h.samples.last_mut().unwrap().phase = phase;
        s.naive_index = h.decomposition();
        s.history = h;
        s
    }

    #[test]
    fn continuity_removes_full_turn_jumps() {
        let base = free_saddle(c(2.0, 0.0));
        let phases = [1.0, 1.2, 1.4, 1.6 - 2.0 * PI, 1.8 - 2.0 * PI, 2.0 - 2.0 * PI];
        let fam: Vec<SaddleResult> = phases.iter().map(|&p| with_phase(&base, p)).collect();
        let rep = enforce_continuity(&fam).unwrap();
        assert_eq!(rep.jumps, vec![2]);
        assert!(!rep.anchored);
        assert!(rep.reports.iter().all(|r| r.corrected_index == 0));
        assert_eq!(rep.reports[5].discrepancy, -2);

        // trusted member in the right-hand part pins the left part instead
        let mut fam = fam;
        fam[4].corrected_index = Some(-2);
        let rep = enforce_continuity(&fam).unwrap();
        assert!(rep.anchored);
        assert_eq!(rep.anchor, 4);
        assert!(rep.reports.iter().all(|r| r.corrected_index == -2));
    }

    #[test]
    fn smooth_families_are_untouched_and_large_jumps_rejected() {
        let base = free_saddle(c(2.0, 0.0));
        let fam: Vec<SaddleResult> = (0..5).map(|k| with_phase(&base, 0.5 * k as f64)).collect();
        let rep = enforce_continuity(&fam).unwrap();
        assert!(rep.jumps.is_empty());
        assert!(rep.reports.iter().all(|r| r.discrepancy == 0));
        let fam = vec![with_phase(&base, 0.0), with_phase(&base, 3.5 * PI)];
        assert!(matches!(enforce_continuity(&fam), Err(Error::AmbiguousJump { .. })));
    }

    #[test]
    fn default_region_tracks_the_nearest_singularity() {
        let s = free_saddle(c(2.0, 0.0));
        assert_eq!(default_region(&s), SearchRegion::below(3.0, 0.5));

        // released from rest at q = 1, the real orbit reaches q = −1 after
        // half a period without ever exceeding |q| = 1
        let lambda = 0.05;
        let half = 0.5 * period_quartic(lambda, lambda).unwrap();
        let g = WavePacketParams::one_dim(1.0, 0.0, c(32.0, 0.0), 1.0);
        let prob = SaddleProblem::wavefunction(g, HamiltonianSpec::quartic(lambda), half, &[-1.0]);
        let s = newton_search(&prob, &RealPhasePoint::one_dim(0.0, 1.0), 1, &NewtonOptions::default()).unwrap();
        let region = default_region(&s);
        let scale = SINGULARITY_FRACTION / (2.0 * lambda).sqrt();
        assert!(region.im.1 > 0.0);
        assert!((-region.im.0 - scale).abs() < 1e-6 * scale, "{region:?}");
    }
}
