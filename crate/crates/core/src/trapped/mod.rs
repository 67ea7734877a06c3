//! Trapped sets `T_T(D)` on phase-space grids, their exponential shrinkage,
//! and the microlocal cutoff built from exit times.

mod cutoff;
mod grid;
mod shrinkage;

pub use cutoff::{build_cutoff, cutoff_derivative_ladder, smooth_step, CutoffLadder, CutoffSymbol};
pub use grid::{
    check_distbic, compute_trapped_set, phase_space_exit, read_membership, DistbicReport, ExitTable, GridLayout,
    GridSpec, MembershipFile, TrappedSetGrid,
};
pub use shrinkage::{
    chessboard_distance, shrinkage_fit, shrinkage_fit_table, ShrinkageFit, ShrinkagePoint, SliceTable,
    T_STAR_CANDIDATES,
};
