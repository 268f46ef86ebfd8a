//! Shared setup for the benchmarks: the quartic scenario at three periods.

use ggwpd::dynamics::period_quartic;
use ggwpd::{Complex64, HamiltonianSpec, IntegratorOptions, SaddleProblem, SeedLine, WavePacketParams};

pub struct Quartic {
    pub packet: WavePacketParams,
    pub hamiltonian: HamiltonianSpec,
    pub time: f64,
    pub line: SeedLine,
}

impl Quartic {
    pub fn new() -> Quartic {
        let packet = WavePacketParams::one_dim(0.0, 20.0, Complex64::new(32.0, 0.0), 1.0);
        let hamiltonian = HamiltonianSpec::quartic(0.05);
        let time = 3.0 * period_quartic(200.0, 0.05).expect("period");
        let line = SeedLine::scan(&packet, &hamiltonian, time, 5.0, 801, &IntegratorOptions::default()).expect("seed line");
        Quartic { packet, hamiltonian, time, line }
    }

    pub fn problem(&self, x: f64) -> SaddleProblem {
        SaddleProblem::wavefunction(self.packet.clone(), self.hamiltonian.clone(), self.time, &[x])
    }
}

impl Default for Quartic {
    fn default() -> Self {
        Self::new()
    }
}
