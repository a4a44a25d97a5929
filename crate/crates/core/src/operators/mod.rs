//! Discretized transition operator P, its dual P*, and invariant densities.

mod closed_form;
mod grid;
mod kernel;
mod sources;

pub use closed_form::d1_closed_form;
pub use grid::{l1, GridDensity, GridFunction, SimplexGrid};
pub use kernel::{
    apply_p, apply_pstar, build_kernel_matrix, cell_points, degenerate_reason, estimate_rate, power_iterate, pstar_integral, segment_cells,
    IterationStatus, KernelMatrix, KernelOptions, PowerResult, RateEstimate, TransferOperator, RATE_FLOOR,
};
pub use sources::{beta_nodes, face_adapted_points, MIN_FACE_EXPONENT};
