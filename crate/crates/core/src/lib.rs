//! Semiclassical propagation of Gaussian wave packets along complex
//! trajectories, with Maslov-index bookkeeping for the complex determinants
//! that enter the prefactors.

pub mod dynamics;
pub mod error;
pub mod io;
pub mod maslovfix;
pub mod phasetrack;
pub mod reconstruct;
pub mod reference;
pub mod saddles;
pub mod states;

pub use dynamics::{
    ComplexPhasePoint, HamiltonianSpec, IntegratorOptions, StabilityMatrix, TimePath, TrajectoryRecord,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use phasetrack::{Determinant, MaslovDecomposition, PhaseHistory, Shapes};
pub use maslovfix::{CorrectionMethod, CorrectionReport, DetZero, SearchRegion};
pub use reconstruct::{Contribution, FamilySignal};
pub use saddles::{Foliation, SaddleProblem, SaddleResult, SeedLine};
pub use states::{CoherentStateParams, RealPhasePoint, WavePacketParams};
