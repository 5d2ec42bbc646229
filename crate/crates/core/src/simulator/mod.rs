//! Synthetic data: an exact dense backend for small registers and an order-`k` Taylor
//! expansion of the propagated error generators for large ones, plus shot noise.

pub mod dense;
pub mod taylor;
pub mod data;

pub use data::{
    add_shot_noise, simulate_design, simulate_exact, Backend, DatasetMeta, ExactData, SimDataset, SimRow,
    SimulatorConfig,
};
pub use dense::{simulate_dense, DenseOptions, DenseOutcome};
pub use taylor::{simulate_taylor, TaylorCircuit, TaylorStrategy};
