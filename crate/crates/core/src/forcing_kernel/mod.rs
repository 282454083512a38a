//! Linear machinery of the half-line problem: the kernel `B`, the free group
//! `e^{it∂ₓ⁴}`, the Duhamel term, the boundary forcing operators `L^λ` and the
//! linear star-graph reconstruction `u_j = Σ_i L^{λ_ji} γ_ji + F_j`.

mod boundary;
mod field;
mod kernel;
mod propagator;
mod reconstruct;

pub use boundary::{
    derivative, fd_weights, forcing_l0, forcing_llambda, trace_check, ForcingGrid, LZeroOperator,
    LambdaField, LambdaPotential, NegativeOrderRoute, TraceCheck, WeylForm, WeylIntegrator,
    TRUNCATION_WARNING,
};
pub use field::{SpaceTimeField, FIELD_MAGIC};
pub use kernel::{
    kernel_b, kernel_b_asymptotic, kernel_b_at, kernel_moments, KernelMoments, KernelTable,
};
pub use propagator::{duhamel, free_point_values, free_propagator, PeriodicGrid};
pub use reconstruct::{linear_reconstruct, Reconstruction, ReconstructConfig, RowResidual};
