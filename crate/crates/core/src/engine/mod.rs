//! Register evolution under pulse programs: conditional-unitary fast path,
//! joint density-matrix reference, trajectories, readout and noise.

pub mod density;
pub mod noise;
pub mod readout;
pub mod toggling;
pub mod trace;

pub use density::{
    electron_p_down, evolve_density, evolve_density_detuned, initial_state, joint_hamiltonian, nuclear_bloch,
    product_state, DensityOutcome, Detuning,
};
pub use noise::{quasistatic_dephasing_scan, NoiseTarget};
pub use readout::{photon_readout_mc, spin_projection, ReadoutSample};
pub use toggling::{
    conditional_unitaries, dd_signal, effective_gate, electron_rotation, toggle_block, xy8_pair, ConditionalGate,
    ConditionalPair, ToggledBlock,
};
pub use trace::{bloch_trace, BranchTrajectories, Trajectory, TrajectoryPoint, DEFAULT_SAMPLES_PER_DELAY};
