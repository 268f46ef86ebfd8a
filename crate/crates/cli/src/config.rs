use std::fmt;
use std::path::{Path, PathBuf};

use ggwpd::dynamics::period_quartic;
use ggwpd::{Complex64, HamiltonianSpec, WavePacketParams};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Gaussian packet `exp[−(x−q)·b·(x−q)/2ħ + i p·(x−q)/ħ]`, `b = b_re + i b_im`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub b_re: Vec<Vec<f64>>,
    /// Omitted means a real width matrix.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b_im: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl PacketConfig {
    /// One degree of freedom with scalar `b`.
    pub fn one_dim(q: f64, p: f64, b: Complex64) -> Self {
        PacketConfig { q: vec![q], p: vec![p], b_re: vec![vec![b.re]], b_im: vec![vec![b.im]], hbar: 1.0 }
    }

    pub fn params(&self) -> Result<WavePacketParams, String> {
        let n = self.q.len();
        let square = |m: &[Vec<f64>]| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&self.b_re) || !(self.b_im.is_empty() || square(&self.b_im)) {
            return Err(format!("width matrices must be {n}×{n}"));
        }
        let b = DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(self.b_re[i][j], self.b_im.get(i).map_or(0.0, |r| r[j]))
        });
        let params = WavePacketParams {
            q: DVector::from_column_slice(&self.q),
            p: DVector::from_column_slice(&self.p),
            b,
            hbar: self.hbar,
        };
        params.validate().map_err(|e| e.to_string())?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Absolute(f64),
    TauMultiple { tau_multiple: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    /// Values are multiples of the centroid period (time axes only).
    #[serde(default)]
    pub tau_units: bool,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Range>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Contour,
    #[default]
    Practical,
    Continuity,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Contour => "contour",
            Method::Practical => "practical",
            Method::Continuity => "continuity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroMap {
    pub family: usize,
    pub x: Vec<f64>,
}

/// Scenario-specific expectations checked by `verify`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foliations: Option<usize>,
    /// Check `∫|φ|² dx` over the grid against `[0.8, 1.2]`.
    #[serde(default)]
    pub norm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub hamiltonian: HamiltonianSpec,
    pub packet: PacketConfig,
    /// Reference packet for transport coefficients (time grids only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bra: Option<PacketConfig>,
    /// Propagation time (position grids only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSpec>,
    pub grid: GridSpec,
    /// Grid value at which families are seeded; defaults to the final
    /// centroid position (position grids) or the first time (time grids).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma_level: f64,
    #[serde(default = "default_samples")]
    pub contour_samples: usize,
    #[serde(default = "default_seed_points")]
    pub seed_line_points: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Seed for the randomized integrity checks.
    #[serde(default)]
    pub seed: u64,
    /// Family labels left out of sums (e.g. saddles past a Stokes line).
    #[serde(default)]
    pub exclude_families: Vec<usize>,
    #[serde(default = "default_relevance")]
    pub relevance_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_map: Option<ZeroMap>,
    #[serde(default)]
    pub expect: Expectations,
}

fn one() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    5.0
}

fn default_samples() -> usize {
    2048
}

fn default_seed_points() -> usize {
    801
}

fn default_relevance() -> f64 {
    ggwpd::reconstruct::DEFAULT_RELEVANCE
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<FieldError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    T,
}

/// A validated config with derived quantities filled in.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub packet: WavePacketParams,
    pub bra: Option<WavePacketParams>,
    pub axis: Axis,
    pub grid: Vec<f64>,
    /// Propagation time for position grids, the anchor time for time grids.
    pub time: f64,
    pub anchor: usize,
    /// Period of the centroid orbit (quartic only).
    pub tau: Option<f64>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        ScenarioConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolve(&self) -> Result<Scenario, ConfigError> {
        let mut errors = Vec::new();
        let mut err = |field: &str, message: String| errors.push(FieldError { field: field.into(), message });

        if self.name.trim().is_empty() {
            err("name", "must not be empty".into());
        }
        if let Err(e) = self.hamiltonian.validate() {
            err("hamiltonian", e.to_string());
        }
        for (field, packet) in [("packet", Some(&self.packet)), ("bra", self.bra.as_ref())] {
            match packet.map(PacketConfig::params) {
                Some(Ok(p)) if p.dim() != 1 => err(field, format!("scenarios have one degree of freedom, got {}", p.dim())),
                Some(Ok(_)) | None => {}
                Some(Err(e)) => err(field, e),
            }
        }
        let quartic = matches!(self.hamiltonian, HamiltonianSpec::Quartic { .. });
        let tau = match &self.hamiltonian {
            HamiltonianSpec::Quartic { lambda } if self.packet.params().is_ok() => {
                let point = ggwpd::ComplexPhasePoint::real(&self.packet.p, &self.packet.q);
                period_quartic(self.hamiltonian.energy(&point).re, *lambda).ok()
            }
            _ => None,
        };

        let axis = match (&self.grid.x, &self.grid.t) {
            (Some(_), None) => Some(Axis::X),
            (None, Some(_)) => Some(Axis::T),
            _ => {
                err("grid", "exactly one of `x` and `t` must be given".into());
                None
            }
        };
        let range = self.grid.x.as_ref().or(self.grid.t.as_ref());
        let field = if self.grid.x.is_some() { "grid.x" } else { "grid.t" };
        let mut grid = Vec::new();
        if let Some(r) = range {
            if r.count == 0 {
                err(&format!("{field}.count"), "empty grid".into());
            } else if !(r.min.is_finite() && r.max.is_finite()) || r.max < r.min {
                err(field, format!("need finite min <= max, got [{}, {}]", r.min, r.max));
            } else if r.count > 1 && r.max == r.min {
                err(field, "a grid of several points needs max > min".into());
            } else {
                grid = r.values();
            }
            if r.tau_units && axis == Some(Axis::X) {
                err(&format!("{field}.tau_units"), "only time grids can be given in periods".into());
            }
            if r.tau_units && axis == Some(Axis::T) {
                match tau {
                    Some(tau) => grid.iter_mut().for_each(|t| *t *= tau),
                    None => err(&format!("{field}.tau_units"), "periods require a quartic hamiltonian".into()),
                }
            }
        }

        let mut time = None;
        match (axis, &self.time) {
            (Some(Axis::X), None) => err("time", "required for position grids".into()),
            (Some(Axis::X), Some(TimeSpec::Absolute(t))) => time = Some(*t),
            (Some(Axis::X), Some(TimeSpec::TauMultiple { tau_multiple })) => match (quartic, tau) {
                (true, Some(tau)) => time = Some(tau_multiple * tau),
                _ => err("time.tau_multiple", "requires a quartic hamiltonian".into()),
            },
            (Some(Axis::T), Some(_)) => err("time", "not used with a time grid; remove it".into()),
            _ => {}
        }
        if let Some(t) = time.filter(|t| !(*t > 0.0 && t.is_finite())) {
            err("time", format!("must be positive, got {t}"));
        }
        let time = time.unwrap_or(0.0);
        if axis == Some(Axis::T) && grid.iter().any(|&t| !(t > 0.0)) {
            err(field, "times must be positive".into());
        }
        match (axis, &self.bra) {
            (Some(Axis::X), Some(_)) => err("bra", "transport coefficients need a time grid".into()),
            (Some(Axis::T), None) => err("bra", "required for time grids".into()),
            _ => {}
        }
        if !(self.sigma_level > 0.0) {
            err("sigma_level", format!("must be positive, got {}", self.sigma_level));
        }
        if self.contour_samples < 8 {
            err("contour_samples", format!("need at least 8, got {}", self.contour_samples));
        }
        if self.seed_line_points < 2 {
            err("seed_line_points", format!("need at least 2, got {}", self.seed_line_points));
        }
        if self.exclude_families.contains(&0) {
            err("exclude_families", "family labels start at 1".into());
        }
        if !(self.relevance_threshold >= 0.0) {
            err("relevance_threshold", "must be non-negative".into());
        }
        if let Some(z) = &self.zero_map {
            if axis != Some(Axis::X) {
                err("zero_map", "only available for position grids".into());
            }
            if z.family == 0 {
                err("zero_map.family", "family labels start at 1".into());
            }
        }
        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors));
        }

        let axis = axis.expect("checked");
        let packet = self.packet.params().expect("validated");
        let (time, default_anchor) = match axis {
            Axis::X => (time, centroid_position(&packet, &self.hamiltonian, time)),
            Axis::T => (grid[0], grid[0]),
        };
        let target = self.anchor.map(|a| if axis == Axis::T && range.is_some_and(|r| r.tau_units) { a * tau.unwrap() } else { a });
        let target = target.unwrap_or(default_anchor);
        let anchor = grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .map(|(k, _)| k)
            .expect("non-empty grid");
        let time = if axis == Axis::T { grid[anchor] } else { time };
        Ok(Scenario {
            config: self.clone(),
            packet,
            bra: self.bra.as_ref().map(|b| b.params().expect("validated")),
            axis,
            grid,
            time,
            anchor,
            tau,
        })
    }
}

/// Position of the centroid orbit after `time`; the packet's own position
/// if the orbit cannot be integrated.
fn centroid_position(packet: &WavePacketParams, hamiltonian: &HamiltonianSpec, time: f64) -> f64 {
    let start = ggwpd::ComplexPhasePoint::real(packet.p.as_slice(), packet.q.as_slice());
    ggwpd::TimePath::real(time)
        .and_then(|path| ggwpd::dynamics::propagate(hamiltonian, &start, &path, &Default::default(), &[]))
        .map_or(packet.q[0], |end| end.point(1).q[0].re)
}

impl Scenario {
    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.config.hamiltonian
    }

    /// Quadratic Hamiltonians have a single saddle per grid point.
    pub fn is_quadratic(&self) -> bool {
        match self.hamiltonian() {
            HamiltonianSpec::FreeParticle | HamiltonianSpec::Harmonic { .. } => true,
            HamiltonianSpec::Polynomial { coefficients, .. } => coefficients.iter().skip(3).all(|&c| c == 0.0),
            HamiltonianSpec::Quartic { .. } => false,
        }
    }

    pub fn problem_at(&self, k: usize) -> ggwpd::SaddleProblem {
        let h = self.hamiltonian().clone();
        match (self.axis, &self.bra) {
            (Axis::X, _) => ggwpd::SaddleProblem::wavefunction(self.packet.clone(), h, self.time, &[self.grid[k]]),
            (Axis::T, Some(bra)) => ggwpd::SaddleProblem::transport(self.packet.clone(), bra.clone(), h, self.grid[k]),
            (Axis::T, None) => unreachable!("validated"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "name": "t",
            "hamiltonian": {"kind": "quartic", "lambda": 0.05},
            "packet": {"q": [0.0], "p": [20.0], "b_re": [[32.0]]},
            "time": {"tau_multiple": 3},
            "grid": {"x": {"min": -3.0, "max": 3.0, "count": 121}}
        })
    }

    fn parse(v: serde_json::Value) -> Result<Scenario, ConfigError> {
        ScenarioConfig::parse(&v.to_string())?.resolve()
    }

    fn fields(e: ConfigError) -> Vec<String> {
        match e {
            ConfigError::Invalid(v) => v.into_iter().map(|f| f.field).collect(),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn tau_multiples_resolve_against_the_centroid_period() {
        let s = parse(base()).unwrap();
        assert!((s.time - 3.0 * 2.08524562206917).abs() < 1e-9);
        assert_eq!(s.grid.len(), 121);
        // the centroid returns to q = 0 after whole periods
        assert_eq!(s.grid[s.anchor], 0.0);
        assert_eq!(s.config.method, Method::Practical);
    }

    #[test]
    fn empty_grid_is_a_field_error() {
        let mut v = base();
        v["grid"]["x"]["count"] = 0.into();
        assert_eq!(fields(parse(v).unwrap_err()), vec!["grid.x.count"]);
    }

    #[test]
    fn tau_multiple_requires_a_quartic() {
        let mut v = base();
        v["hamiltonian"] = serde_json::json!({"kind": "harmonic", "omega": 1.0});
        assert_eq!(fields(parse(v).unwrap_err()), vec!["time.tau_multiple"]);
    }

    #[test]
    fn several_problems_are_reported_together() {
        let mut v = base();
        v["grid"]["t"] = serde_json::json!({"min": 1.0, "max": 2.0, "count": 3});
        v["packet"]["b_re"] = serde_json::json!([[-1.0]]);
        let f = fields(parse(v).unwrap_err());
        assert!(f.contains(&"grid".to_string()) && f.contains(&"packet".to_string()), "{f:?}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = base();
        v["colour"] = "blue".into();
        assert!(matches!(parse(v), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::parse(&base().to_string()).unwrap();
        let b = ScenarioConfig::parse(&base().to_string()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut v = base();
        v["sigma_level"] = 3.0.into();
        assert_ne!(a.hash(), ScenarioConfig::parse(&v.to_string()).unwrap().hash());
    }
}
