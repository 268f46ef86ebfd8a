//! Complexified Hamiltonian flow and its linearization.
//!
//! The flow is integrated along piecewise-linear paths in the complex time
//! plane. The stability matrix is transported together with the phase-space
//! point, using the `(δp, δq)` block ordering throughout:
//!
//! ```text
//! (δp_t)   (M11 M12) (δp_0)
//! (δq_t) = (M21 M22) (δq_0)
//! ```

mod hamiltonian;
mod integrator;
mod period;
mod tableau;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use hamiltonian::HamiltonianSpec;
pub use integrator::{integrate, propagate, IntegratorOptions};
pub(crate) use integrator::walk;
pub use period::{period_quartic, quartic_period_integral};

/// Analytically continued phase-space point `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPhasePoint {
    pub p: DVector<Complex64>,
    pub q: DVector<Complex64>,
}

impl ComplexPhasePoint {
    pub fn new(p: DVector<Complex64>, q: DVector<Complex64>) -> Self {
        assert_eq!(p.len(), q.len(), "p and q must share a dimension");
        ComplexPhasePoint { p, q }
    }

    pub fn one_dim(p: Complex64, q: Complex64) -> Self {
        ComplexPhasePoint { p: DVector::from_element(1, p), q: DVector::from_element(1, q) }
    }

    pub fn real(p: &[f64], q: &[f64]) -> Self {
        ComplexPhasePoint {
            p: DVector::from_iterator(p.len(), p.iter().map(|&v| Complex64::new(v, 0.0))),
            q: DVector::from_iterator(q.len(), q.iter().map(|&v| Complex64::new(v, 0.0))),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.q.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest imaginary component in either coordinate.
    pub fn max_imag(&self) -> f64 {
        self.p.iter().chain(self.q.iter()).map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Linearized flow map in `(δp, δq)` ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMatrix {
    pub m: DMatrix<Complex64>,
}

impl StabilityMatrix {
    pub fn identity(n: usize) -> Self {
        StabilityMatrix { m: DMatrix::identity(2 * n, 2 * n) }
    }

    pub fn from_blocks(
        m11: &DMatrix<Complex64>,
        m12: &DMatrix<Complex64>,
        m21: &DMatrix<Complex64>,
        m22: &DMatrix<Complex64>,
    ) -> Self {
        let n = m11.nrows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(m11);
        m.view_mut((0, n), (n, n)).copy_from(m12);
        m.view_mut((n, 0), (n, n)).copy_from(m21);
        m.view_mut((n, n), (n, n)).copy_from(m22);
        StabilityMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows() / 2
    }

    fn block(&self, row: usize, col: usize) -> DMatrix<Complex64> {
        let n = self.dim();
        self.m.view((row * n, col * n), (n, n)).into_owned()
    }

    pub fn m11(&self) -> DMatrix<Complex64> {
        self.block(0, 0)
    }

    pub fn m12(&self) -> DMatrix<Complex64> {
        self.block(0, 1)
    }

    pub fn m21(&self) -> DMatrix<Complex64> {
        self.block(1, 0)
    }

    pub fn m22(&self) -> DMatrix<Complex64> {
        self.block(1, 1)
    }

    /// `max |Mᵀ J M − J|` with `J = [[0, I], [−I, 0]]`.
    pub fn symplectic_defect(&self) -> f64 {
        let n = self.dim();
        let mut j = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = Complex64::new(1.0, 0.0);
            j[(n + i, i)] = Complex64::new(-1.0, 0.0);
        }
        let defect = self.m.transpose() * &j * &self.m - j;
        defect.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Piecewise-linear path in the complex time plane starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePath {
    nodes: Vec<Complex64>,
}

impl TimePath {
    pub fn new(nodes: Vec<Complex64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two nodes".into()));
        }
        if nodes[0] != Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidPath(format!("first node must be 0, got {}", nodes[0])));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!("repeated node {}", w[0])));
        }
        if nodes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidPath("non-finite node".into()));
        }
        Ok(TimePath { nodes })
    }

    /// Straight real-time path `[0, t]`.
    pub fn real(t: f64) -> Result<Self> {
        TimePath::new(vec![Complex64::new(0.0, 0.0), Complex64::new(t, 0.0)])
    }

    /// Real axis up to `Re t`, then vertically to `t`.
    pub fn real_then_vertical(t: Complex64) -> Result<Self> {
        let mut nodes = vec![Complex64::new(0.0, 0.0)];
        if t.re != 0.0 {
            nodes.push(Complex64::new(t.re, 0.0));
        }
        if t.im != 0.0 {
            nodes.push(t);
        }
        TimePath::new(nodes)
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn end(&self) -> Complex64 {
        *self.nodes.last().expect("non-empty path")
    }

    /// Total arc length of the path.
    pub fn length(&self) -> f64 {
        self.nodes.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// One accepted integration node.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Arc-length parameter along the path.
    pub s: f64,
    pub t: Complex64,
    /// Packed state `[p, q, M (row-major), S]`.
    pub y: Vec<Complex64>,
}

impl Sample {
    pub fn point(&self, n: usize) -> ComplexPhasePoint {
        ComplexPhasePoint {
            p: DVector::from_column_slice(&self.y[..n]),
            q: DVector::from_column_slice(&self.y[n..2 * n]),
        }
    }

    pub fn stability(&self, n: usize) -> StabilityMatrix {
        StabilityMatrix { m: DMatrix::from_row_slice(2 * n, 2 * n, &self.y[2 * n..2 * n + 4 * n * n]) }
    }

    /// Accumulated action `∫ (P·dQ − H dt)` from the path start.
    pub fn action(&self) -> Complex64 {
        *self.y.last().expect("packed state is never empty")
    }
}

/// Time-sampled trajectory with its transported stability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub dim: usize,
    pub path: TimePath,
    pub samples: Vec<Sample>,
}

impl TrajectoryRecord {
    pub fn initial_point(&self) -> ComplexPhasePoint {
        self.samples[0].point(self.dim)
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("records always hold the initial sample")
    }

    pub fn final_point(&self) -> ComplexPhasePoint {
        self.final_sample().point(self.dim)
    }

    pub fn final_stability(&self) -> StabilityMatrix {
        self.final_sample().stability(self.dim)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub(crate) fn pack_state(point: &ComplexPhasePoint, m: &StabilityMatrix) -> Vec<Complex64> {
    let n = point.dim();
    let mut y = Vec::with_capacity(2 * n + 4 * n * n);
    y.extend(point.p.iter());
    y.extend(point.q.iter());
    for r in 0..2 * n {
        for c in 0..2 * n {
            y.push(m.m[(r, c)]);
        }
    }
    y.push(Complex64::new(0.0, 0.0));
    y
}

/// Hamilton's equations plus the variational equations, scaled by the
/// complex path direction `dt/ds`.
pub(crate) fn packed_rhs(
    spec: &HamiltonianSpec,
    n: usize,
    y: &[Complex64],
    direction: Complex64,
    out: &mut [Complex64],
) {
    let inv_m = spec.inverse_mass();
    let two_n = 2 * n;
    let mut kinetic = Complex64::new(0.0, 0.0);
    let mut potential = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let (v, _, _) = spec.potential(y[n + i]);
        kinetic += y[i] * y[i] * inv_m;
        potential += v;
    }
    // S' = P·Q' − H
    out[two_n + 4 * n * n] = (kinetic * 0.5 - potential) * direction;
    for i in 0..n {
        let p = y[i];
        let q = y[n + i];
        let (_, dv, _) = spec.potential(q);
        out[i] = -dv * direction;
        out[n + i] = p * inv_m * direction;
    }
    // M' = K M with K = [[0, -V''], [1/m, 0]] (separable, no p-q mixing).
    let m = &y[two_n..two_n + 4 * n * n];
    let dm = &mut out[two_n..two_n + 4 * n * n];
    for i in 0..n {
        let (_, _, d2v) = spec.potential(y[n + i]);
        let k_pq = -d2v * direction;
        let k_qp = inv_m * direction;
        for c in 0..two_n {
            // row i (δp_i) draws on δq_i, row n+i (δq_i) on δp_i
            dm[i * two_n + c] = k_pq * m[(n + i) * two_n + c];
            dm[(n + i) * two_n + c] = k_qp * m[i * two_n + c];
        }
    }
}

/// Time derivative of the phase-space point and of the stability matrix.
pub fn flow_derivative(
    spec: &HamiltonianSpec,
    state: &ComplexPhasePoint,
    m: &StabilityMatrix,
) -> (ComplexPhasePoint, StabilityMatrix) {
    let n = state.dim();
    let y = pack_state(state, m);
    let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
    packed_rhs(spec, n, &y, Complex64::new(1.0, 0.0), &mut dy);
    let sample = Sample { s: 0.0, t: Complex64::new(0.0, 0.0), y: dy };
    (sample.point(n), sample.stability(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quartic_flow_derivative() {
        let h = HamiltonianSpec::quartic(0.05);
        let state = ComplexPhasePoint::one_dim(c(1.0, 0.0), c(2.0, 0.0));
        let (d, _) = flow_derivative(&h, &state, &StabilityMatrix::identity(1));
        assert!((d.q[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((d.p[0] - c(-1.6, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn free_particle_flow_derivative() {
        let h = HamiltonianSpec::FreeParticle;
        let state = ComplexPhasePoint::one_dim(c(0.3, -1.0), c(5.0, 2.0));
        let (d, dm) = flow_derivative(&h, &state, &StabilityMatrix::identity(1));
        assert_eq!(d.q[0], c(0.3, -1.0));
        assert_eq!(d.p[0], c(0.0, 0.0));
        assert_eq!(dm.m21()[(0, 0)], c(1.0, 0.0));
        assert_eq!(dm.m12()[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn quartic_at_origin_has_only_the_kinetic_block() {
        let h = HamiltonianSpec::quartic(0.05);
        let state = ComplexPhasePoint::one_dim(c(4.0, 0.0), c(0.0, 0.0));
        let (_, dm) = flow_derivative(&h, &state, &StabilityMatrix::identity(1));
        assert_eq!(dm.m21()[(0, 0)], c(1.0, 0.0));
        assert_eq!(dm.m11()[(0, 0)], c(0.0, 0.0));
        assert_eq!(dm.m12()[(0, 0)], c(0.0, 0.0));
        assert_eq!(dm.m22()[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn time_path_validation() {
        assert!(TimePath::new(vec![c(0.0, 0.0)]).is_err());
        assert!(TimePath::new(vec![c(1.0, 0.0), c(2.0, 0.0)]).is_err());
        assert!(TimePath::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        let p = TimePath::new(vec![c(0.0, 0.0), c(0.0, -1.0), c(3.0, -1.0), c(3.0, 0.0)]).unwrap();
        assert!((p.length() - 5.0).abs() < 1e-15);
        assert_eq!(p.end(), c(3.0, 0.0));
    }

    #[test]
    fn identity_is_symplectic() {
        assert_eq!(StabilityMatrix::identity(3).symplectic_defect(), 0.0);
    }
}
