//! CSV/JSON datasets behind each figure.

use std::f64::consts::FRAC_PI_2;

use ggwpd::dynamics::integrate;
use ggwpd::io::csv_row;
use ggwpd::phasetrack::accumulate_phase;
use ggwpd::saddles::count_turning_points;
use ggwpd::states::sigma_contour;
use ggwpd::{ComplexPhasePoint, IntegratorOptions, PhaseHistory, SaddleResult, TimePath, TrajectoryRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Axis, Scenario};
use crate::error::Result;
use crate::manifest::OutputDir;
use crate::pipeline::{Family, Run};

fn flag(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

/// `fig1_*` (time grids) or `fig2_*` (position grids): per-family values
/// with naive and corrected indices, and the family sum.
pub fn signals(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    let (prefix, axis) = match sc.axis {
        Axis::T => ("fig1", "t"),
        Axis::X => ("fig2", "x"),
    };
    for f in &run.families {
        let mut csv = format!("{axis},re_naive,im_naive,re,im,abs,relevance,nu_naive,nu,exposed\n");
        for k in 0..sc.grid.len() {
            let (n, v) = (f.naive_signal.values[k], f.signal.values[k]);
            csv.push_str(&csv_row(&[
                sc.grid[k],
                n.re,
                n.im,
                v.re,
                v.im,
                v.norm(),
                f.signal.relevance[k],
                f.naive[k] as f64,
                f.corrected[k] as f64,
                flag(f.exposed[k]),
            ]));
        }
        out.write(&format!("{prefix}_family{}.csv", f.label), &csv)?;
    }
    if !run.total.is_empty() {
        let mut csv = format!("{axis},re,im,abs\n");
        for (g, v) in sc.grid.iter().zip(&run.total) {
            csv.push_str(&csv_row(&[*g, v.re, v.im, v.norm()]));
        }
        out.write(&format!("{prefix}_total.csv"), &csv)?;
    }
    Ok(())
}

fn seed_record(run: &Run, saddle: &SaddleResult) -> Option<ggwpd::Result<TrajectoryRecord>> {
    let (line, seed) = (run.line.as_ref()?, saddle.seed()?);
    Some(line.seed_trajectory(seed, std::slice::from_ref(&saddle.problem.monitor())))
}

fn seed_history(run: &Run, saddle: &SaddleResult) -> Option<ggwpd::Result<PhaseHistory>> {
    let monitor = saddle.problem.monitor();
    seed_record(run, saddle).map(|r| r.and_then(|r| accumulate_phase(&r, monitor.which, &monitor.shapes)))
}

/// `fig3_*`: determinant phase histories of each family's anchor saddle and
/// its real seed, plus the zero-map saddles.
pub fn phase_curves(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    for f in &run.families {
        let s = f.anchor_member(sc);
        out.write(&format!("fig3_F{}_saddle.csv", f.label), &s.history.to_csv())?;
        match seed_history(run, s) {
            Some(Ok(h)) => out.write(&format!("fig3_F{}_seed.csv", f.label), &h.to_csv())?,
            Some(Err(e)) => out.warnings.push(format!("fig3: seed of family {}: {e}", f.label)),
            None => {}
        }
    }
    if let Some(z) = &sc.config.zero_map {
        for (k, e) in run.zero_map.iter().enumerate() {
            out.write(&format!("fig3_F{}_x{k}_saddle.csv", z.family), &e.saddle.history.to_csv())?;
        }
    }
    Ok(())
}

/// `fig4_zeros.csv`: determinant zeros of the zero-map saddles.
pub fn zero_map(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    if sc.config.zero_map.is_none() {
        return Ok(());
    }
    let tau = sc.tau.unwrap_or(1.0);
    let mut csv = String::from("x,re_t,im_t,re_t_over_tau,multiplicity,crossed\n");
    for e in &run.zero_map {
        for z in &e.zeros {
            csv.push_str(&csv_row(&[e.x, z.time.re, z.time.im, z.time.re / tau, z.multiplicity as f64, flag(z.crossed)]));
        }
    }
    out.write("fig4_zeros.csv", &csv)
}

/// `fig5_*`: propagated Wigner contours with foliation labels, and the
/// final points of each family's anchor saddle.
pub fn contours(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    let c = &sc.config;
    let mut levels = vec![1.0, 3.0];
    if !levels.contains(&c.sigma_level) {
        levels.push(c.sigma_level);
    }
    let label_of = |count: usize| run.foliations.iter().find(|f| f.turning_points == count).map_or(0, |f| f.label);
    let path = TimePath::real(sc.time)?;
    let opts = IntegratorOptions::default();
    let mut csv = String::from("level,k,q0,p0,q_t,p_t,turning_points,label\n");
    for level in levels {
        let points = sigma_contour(&sc.packet, level, c.contour_samples)?;
        let rows: Vec<String> = points
            .par_iter()
            .enumerate()
            .map(|(k, pt)| {
                let start = ComplexPhasePoint::real(pt.p.as_slice(), pt.q.as_slice());
                let rec = integrate(sc.hamiltonian(), &start, &path, &opts, &[])?;
                let end = rec.final_point();
                let count = count_turning_points(&rec);
                let label = if level == c.sigma_level && !run.foliations.is_empty() { label_of(count) } else { 0 };
                Ok(csv_row(&[level, k as f64, pt.q[0], pt.p[0], end.q[0].re, end.p[0].re, count as f64, label as f64]))
            })
            .collect::<ggwpd::Result<_>>()?;
        rows.iter().for_each(|r| csv.push_str(r));
    }
    out.write("fig5_contours.csv", &csv)?;

    let mut csv = String::from("label,re_q0,im_q0,re_p0,im_p0,re_q_t,im_q_t,re_p_t,im_p_t,exposed\n");
    for f in &run.families {
        let s = f.anchor_member(sc);
        let (a, b) = (&s.initial_point, &s.final_point);
        csv.push_str(&csv_row(&[
            f.label as f64,
            a.q[0].re,
            a.q[0].im,
            a.p[0].re,
            a.p[0].im,
            b.q[0].re,
            b.q[0].im,
            b.p[0].re,
            b.p[0].im,
            flag(f.exposed[sc.anchor]),
        ]));
    }
    out.write("fig5_saddles.csv", &csv)
}

fn stability_csv(record: &TrajectoryRecord) -> String {
    let n = record.dim;
    let mut csv = String::from("t,re_m11,im_m11,re_m12,im_m12,re_m21,im_m21,re_m22,im_m22\n");
    for s in &record.samples {
        let m = s.stability(n);
        let (a, b, c, d) = (m.m11()[(0, 0)], m.m12()[(0, 0)], m.m21()[(0, 0)], m.m22()[(0, 0)]);
        csv.push_str(&csv_row(&[s.t.re, a.re, a.im, b.re, b.im, c.re, c.im, d.re, d.im]));
    }
    csv
}

/// `fig6_7_*`: stability matrix elements of each anchor saddle and its seed.
pub fn stability(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    for f in &run.families {
        let s = f.anchor_member(sc);
        out.write(&format!("fig6_7_F{}_saddle.csv", f.label), &stability_csv(&s.trajectory))?;
        match seed_record(run, s) {
            Some(Ok(r)) => out.write(&format!("fig6_7_F{}_seed.csv", f.label), &stability_csv(&r))?,
            Some(Err(e)) => out.warnings.push(format!("fig6_7: seed of family {}: {e}", f.label)),
            None => {}
        }
    }
    Ok(())
}

/// `fig8_*`: rotation sense of each anchor saddle's determinant.
pub fn rotation(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    for f in &run.families {
        let h = &f.anchor_member(sc).history;
        let mut csv = String::from("s,t,phase,sense\n");
        let mut sense = 0.0;
        for (k, p) in h.samples.iter().enumerate() {
            if let Some(next) = h.samples.get(k + 1) {
                let d = next.phase - p.phase;
                if d != 0.0 {
                    sense = d.signum();
                }
            }
            csv.push_str(&csv_row(&[p.s, p.t.re, p.phase, sense]));
        }
        out.write(&format!("fig8_F{}.csv", f.label), &csv)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct FamilySummary {
    label: usize,
    turning_points: Option<usize>,
    members: usize,
    exposed: usize,
    corrections: usize,
    removed_jumps: Vec<f64>,
    anchored: bool,
    excluded: bool,
    naive_phase_jumps: Vec<f64>,
    phase_jumps: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    name: &'a str,
    method: String,
    axis: Axis,
    time: f64,
    tau: Option<f64>,
    anchor: f64,
    foliations: Vec<(usize, usize)>,
    families: Vec<FamilySummary>,
    norm: Option<f64>,
}

/// `∫|φ|²` over a position grid by the trapezoid rule.
pub fn grid_norm(grid: &[f64], values: &[ggwpd::Complex64]) -> Option<f64> {
    if grid.len() < 2 || values.len() != grid.len() {
        return None;
    }
    Some(grid.windows(2).zip(values.windows(2)).map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0].norm_sqr() + v[1].norm_sqr())).sum())
}

fn family_summary(sc: &Scenario, f: &Family) -> FamilySummary {
    let at = |ks: Vec<usize>| ks.into_iter().map(|k| sc.grid[k]).collect();
    FamilySummary {
        label: f.label,
        turning_points: f.turning_points,
        members: f.members.len(),
        exposed: f.exposed.iter().filter(|&&e| e).count(),
        corrections: f.corrections(),
        removed_jumps: at(f.jumps.clone()),
        anchored: f.anchored,
        excluded: sc.config.exclude_families.contains(&f.label),
        naive_phase_jumps: at(f.residual_jumps(sc, true, FRAC_PI_2)),
        phase_jumps: at(f.residual_jumps(sc, false, FRAC_PI_2)),
    }
}

pub fn summary(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    let s = Summary {
        name: &sc.config.name,
        method: run.method.to_string(),
        axis: sc.axis,
        time: sc.time,
        tau: sc.tau,
        anchor: sc.grid[sc.anchor],
        foliations: run.foliations.iter().map(|f| (f.label, f.turning_points)).collect(),
        families: run.families.iter().map(|f| family_summary(sc, f)).collect(),
        norm: if sc.axis == Axis::X { grid_norm(&sc.grid, &run.total) } else { None },
    };
    out.write_json("summary.json", &s)
}

/// Every dataset for a run.
pub fn emit_all(sc: &Scenario, run: &Run, out: &mut OutputDir) -> Result<()> {
    signals(sc, run, out)?;
    phase_curves(sc, run, out)?;
    zero_map(sc, run, out)?;
    contours(sc, run, out)?;
    stability(sc, run, out)?;
    rotation(sc, run, out)?;
    summary(sc, run, out)
}
