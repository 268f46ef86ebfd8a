use std::f64::consts::PI;

use ggwpd::dynamics::period_quartic;
use ggwpd::maslovfix::{enforce_continuity, enforce_continuity_refined};
use ggwpd::saddles::{continue_saddle, newton_search, ContinuationOptions, NewtonOptions};
use ggwpd::*;

/// Near the edge of the classical region several determinant zeros cross
/// between neighbouring grid points; bisecting the step recovers them.
#[test]
fn refinement_resolves_multi_zero_jumps() {
    let g = WavePacketParams::one_dim(0.0, 20.0, Complex64::new(32.0, 0.0), 1.0);
    let h = HamiltonianSpec::quartic(0.05);
    let t = 3.0 * period_quartic(200.0, 0.05).unwrap();
    let line = SeedLine::scan(&g, &h, t, 5.0, 801, &IntegratorOptions::default()).unwrap();
    let problem = |x: f64| SaddleProblem::wavefunction(g.clone(), h.clone(), t, &[x]);

    let seed = line.seed_for_position(0.0, 5).unwrap().unwrap();
    let start = newton_search(&problem(0.0), &seed, 6, &NewtonOptions::default()).unwrap();
    let path: Vec<_> = (0..=60).map(|k| problem(0.1 * k as f64)).collect();
    let family = continue_saddle(&start, &path, &ContinuationOptions::default(), None).unwrap();
    let edge = &family[58..];

    assert!(matches!(enforce_continuity(edge), Err(Error::AmbiguousJump { .. })));
    let report = enforce_continuity_refined(edge, Some(&ContinuationOptions::default())).unwrap();
    // corrected total phase moves by less than π between neighbours
    let phases: Vec<f64> = report
        .reports
        .iter()
        .map(|r| 2.0 * r.theta + r.corrected_index as f64 * PI)
        .collect();
    for w in phases.windows(2) {
        assert!((w[1] - w[0]).abs() < PI, "{phases:?}");
    }
}
