use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{ProblemKind, SaddleProblem};
use crate::dynamics::{integrate, ComplexPhasePoint, HamiltonianSpec, IntegratorOptions, TimePath, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::phasetrack::Monitor;
use crate::states::{shape_matrix, sigma_contour, RealPhasePoint, WavePacketParams};

/// Real initial conditions on a Wigner contour whose trajectories pass the
/// same number of classical turning points.
#[derive(Debug, Clone, PartialEq)]
pub struct Foliation {
    /// 1-based, in increasing order of turning points.
    pub label: usize,
    pub turning_points: usize,
    pub seeds: Vec<RealPhasePoint>,
    /// Positions of the seeds along the contour.
    pub contour_indices: Vec<usize>,
    /// Adjacent contour sample pairs straddling a turning-point increment.
    pub boundaries: Vec<(usize, usize)>,
}

/// Sign changes of the first momentum component along a real trajectory.
/// Values within `1e-9 (1 + max |p|)` of zero carry no sign, so a
/// trajectory resting at an equilibrium counts none.
pub fn count_turning_points(record: &TrajectoryRecord) -> usize {
    let ps: Vec<f64> = record.samples.iter().map(|s| s.y[0].re).collect();
    let floor = 1e-9 * (1.0 + ps.iter().fold(0.0f64, |m, p| m.max(p.abs())));
    let mut last = 0.0f64;
    let mut count = 0;
    for p in ps {
        if p.abs() <= floor {
            continue;
        }
        if last != 0.0 && p.signum() != last {
            count += 1;
        }
        last = p.signum();
    }
    count
}

fn real_run(
    hamiltonian: &HamiltonianSpec,
    point: &RealPhasePoint,
    time: f64,
    opts: &IntegratorOptions,
) -> Result<TrajectoryRecord> {
    let start = ComplexPhasePoint::real(point.p.as_slice(), point.q.as_slice());
    integrate(hamiltonian, &start, &TimePath::real(time)?, opts, &[])
}

/// Propagates every sample of the `sigma_level` contour for `time` and
/// groups the samples by their turning-point count.
pub fn build_foliations(
    packet: &WavePacketParams,
    hamiltonian: &HamiltonianSpec,
    time: f64,
    sigma_level: f64,
    n_samples: usize,
    opts: &IntegratorOptions,
) -> Result<Vec<Foliation>> {
    if n_samples < 8 {
        return Err(Error::DomainError(format!("need at least 8 contour samples, got {n_samples}")));
    }
    if !(time > 0.0) {
        return Err(Error::DomainError(format!("foliation time must be positive, got {time}")));
    }
    let contour = sigma_contour(packet, sigma_level, n_samples)?;
    let counts: Vec<usize> = contour
        .par_iter()
        .map(|pt| real_run(hamiltonian, pt, time, opts).map(|r| count_turning_points(&r)))
        .collect::<Result<_>>()?;

    let mut boundaries = Vec::new();
    for i in 0..n_samples {
        let j = (i + 1) % n_samples;
        let (a, b) = (counts[i], counts[j]);
        if a.abs_diff(b) > 1 {
            return Err(Error::UnresolvedFoliation { index: i, next: j, count: a, next_count: b });
        }
        if a != b {
            boundaries.push((i, j));
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in counts.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(rank, (count, indices))| Foliation {
            label: rank + 1,
            turning_points: count,
            seeds: indices.iter().map(|&i| contour[i].clone()).collect(),
            boundaries: boundaries
                .iter()
                .copied()
                .filter(|&(a, b)| counts[a] == count || counts[b] == count)
                .collect(),
            contour_indices: indices,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedLinePoint {
    pub p: f64,
    pub turning_points: usize,
    pub q_final: f64,
    pub p_final: f64,
}

/// Real trajectories launched along the momentum line through the
/// centroid (first degree of freedom), spanning the same momentum range as
/// the Wigner contour. Exposed-saddle seeds are taken from this line.
#[derive(Debug, Clone)]
pub struct SeedLine {
    pub packet: WavePacketParams,
    pub hamiltonian: HamiltonianSpec,
    pub time: f64,
    pub points: Vec<SeedLinePoint>,
    opts: IntegratorOptions,
}

impl SeedLine {
    pub fn scan(
        packet: &WavePacketParams,
        hamiltonian: &HamiltonianSpec,
        time: f64,
        sigma_level: f64,
        n_points: usize,
        opts: &IntegratorOptions,
    ) -> Result<SeedLine> {
        if n_points < 2 {
            return Err(Error::DomainError("seed line needs at least two points".into()));
        }
        let a = shape_matrix(packet)?;
        let half = (packet.hbar * sigma_level * sigma_level / (2.0 * a[(0, 0)])).sqrt();
        let p0 = packet.p[0];
        let line = SeedLine {
            packet: packet.clone(),
            hamiltonian: hamiltonian.clone(),
            time,
            points: Vec::new(),
            opts: opts.clone(),
        };
        let points = (0..n_points)
            .into_par_iter()
            .map(|k| line.evaluate(p0 - half + 2.0 * half * k as f64 / (n_points - 1) as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeedLine { points, ..line })
    }

    fn point(&self, p: f64) -> RealPhasePoint {
        let mut pt = self.packet.centroid_point();
        pt.p[0] = p;
        pt
    }

    fn evaluate(&self, p: f64) -> Result<SeedLinePoint> {
        let rec = real_run(&self.hamiltonian, &self.point(p), self.time, &self.opts)?;
        let end = rec.final_point();
        Ok(SeedLinePoint {
            p,
            turning_points: count_turning_points(&rec),
            q_final: end.q[0].re,
            p_final: end.p[0].re,
        })
    }

    /// Initial energy of the seed with momentum `p`.
    pub fn energy(&self, p: f64) -> f64 {
        let pt = self.point(p);
        let point = ComplexPhasePoint::real(pt.p.as_slice(), pt.q.as_slice());
        self.hamiltonian.energy(&point).re
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.points.iter().map(|p| p.turning_points).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Seed whose trajectory ends at `x` with `count` turning points; when
    /// no sample pair brackets `x`, the closest final position is used.
    pub fn seed_for_position(&self, x: f64, count: usize) -> Result<Option<RealPhasePoint>> {
        self.position_seed(x, count, true)
    }

    /// Like [`seed_for_position`](Self::seed_for_position) but without the
    /// closest-position fallback: `None` unless a real trajectory of the
    /// foliation actually ends at `x`.
    pub fn connecting_seed_for_position(&self, x: f64, count: usize) -> Result<Option<RealPhasePoint>> {
        self.position_seed(x, count, false)
    }

    fn position_seed(&self, x: f64, count: usize, fallback: bool) -> Result<Option<RealPhasePoint>> {
        let same: Vec<&SeedLinePoint> = self.points.iter().filter(|p| p.turning_points == count).collect();
        if same.is_empty() {
            return Ok(None);
        }
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.turning_points != count || b.turning_points != count {
                continue;
            }
            let (fa, fb) = (a.q_final - x, b.q_final - x);
            if fa == 0.0 {
                return Ok(Some(self.point(a.p)));
            }
            if fa.signum() != fb.signum() {
                return self.bisect(a.p, fa, b.p, x).map(|p| Some(self.point(p)));
            }
        }
        if !fallback {
            return Ok(None);
        }
        let best = same
            .iter()
            .min_by(|a, b| (a.q_final - x).abs().total_cmp(&(b.q_final - x).abs()))
            .expect("non-empty");
        Ok(Some(self.point(best.p)))
    }

    fn bisect(&self, mut lo: f64, mut f_lo: f64, mut hi: f64, x: f64) -> Result<f64> {
        for _ in 0..60 {
            if (hi - lo).abs() <= 1e-13 * (1.0 + lo.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let f_mid = self.evaluate(mid)?.q_final - x;
            if f_mid == 0.0 {
                return Ok(mid);
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Seed whose final point is closest to the bra centroid in the
    /// bra's own phase-space metric.
    pub fn seed_for_bra(&self, bra: &WavePacketParams, count: usize) -> Option<RealPhasePoint> {
        let w = bra.b[(0, 0)].norm();
        self.points
            .iter()
            .filter(|p| p.turning_points == count)
            .min_by(|a, b| {
                let d = |s: &SeedLinePoint| (s.p_final - bra.p[0]).powi(2) / w + w * (s.q_final - bra.q[0]).powi(2);
                d(a).total_cmp(&d(b))
            })
            .map(|s| self.point(s.p))
    }

    /// Seed for either problem kind.
    pub fn seed_for(&self, problem: &SaddleProblem, count: usize) -> Result<Option<RealPhasePoint>> {
        match &problem.kind {
            ProblemKind::Wavefunction { x } => self.seed_for_position(x[0], count),
            ProblemKind::Transport { bra } => Ok(self.seed_for_bra(bra, count)),
        }
    }

    /// Seed whose real trajectory connects the problem's boundary
    /// conditions: bracketed positions only for wave functions.
    pub fn connecting_seed(&self, problem: &SaddleProblem, count: usize) -> Result<Option<RealPhasePoint>> {
        match &problem.kind {
            ProblemKind::Wavefunction { x } => self.connecting_seed_for_position(x[0], count),
            ProblemKind::Transport { bra } => Ok(self.seed_for_bra(bra, count)),
        }
    }

    /// Real trajectory of a seed, with determinants monitored for phase
    /// bookkeeping.
    pub fn seed_trajectory(&self, seed: &RealPhasePoint, monitors: &[Monitor]) -> Result<TrajectoryRecord> {
        let start = ComplexPhasePoint::new(
            seed.p.map(|v| Complex64::new(v, 0.0)),
            seed.q.map(|v| Complex64::new(v, 0.0)),
        );
        integrate(&self.hamiltonian, &start, &TimePath::real(self.time)?, &self.opts, monitors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::period_quartic;

    fn fig_packet() -> WavePacketParams {
        WavePacketParams::one_dim(0.0, 20.0, Complex64::new(32.0, 0.0), 1.0)
    }

    #[test]
    fn short_time_gives_one_foliation() {
        let f = build_foliations(
            &fig_packet(),
            &HamiltonianSpec::quartic(0.05),
            1e-3,
            5.0,
            64,
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].label, 1);
        assert_eq!(f[0].seeds.len(), 64);
        assert!(f[0].boundaries.is_empty());
    }

    #[test]
    fn centroid_turns_twice_per_period() {
        let tau = period_quartic(200.0, 0.05).unwrap();
        let line = SeedLine::scan(&fig_packet(), &HamiltonianSpec::quartic(0.05), 3.0 * tau, 5.0, 3, &Default::default())
            .unwrap();
        // middle point is the centroid
        assert_eq!(line.points[1].turning_points, 6);
        assert!((line.energy(20.0) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn connecting_seeds_must_reach_the_target() {
        let tau = period_quartic(200.0, 0.05).unwrap();
        let line = SeedLine::scan(&fig_packet(), &HamiltonianSpec::quartic(0.05), 3.0 * tau, 5.0, 201, &Default::default())
            .unwrap();
        // the centroid's foliation covers x = 0 but no orbit of energy ≲ 800 reaches 12
        let seed = line.connecting_seed_for_position(0.0, 6).unwrap().unwrap();
        let end = line.seed_trajectory(&seed, &[]).unwrap().final_point();
        assert!(end.q[0].re.abs() < 1e-9);
        assert!(line.connecting_seed_for_position(12.0, 6).unwrap().is_none());
        assert!(line.seed_for_position(12.0, 6).unwrap().is_some());
    }

    #[test]
    fn unresolved_contours_are_reported() {
        let tau = period_quartic(200.0, 0.05).unwrap();
        let res = build_foliations(
            &fig_packet(),
            &HamiltonianSpec::quartic(0.05),
            3.0 * tau,
            5.0,
            8,
            &IntegratorOptions::default(),
        );
        assert!(matches!(res, Err(Error::UnresolvedFoliation { .. })));
    }
}
