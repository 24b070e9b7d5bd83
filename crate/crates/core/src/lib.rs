//! Numerical core for large deviations of SDEs driven by scaled
//! semimartingale noise.
//!
//! Everything here is `no_std` (with `alloc`): piecewise càdlàg paths and
//! their statistics, exact simulation and characteristics of scaled Lévy
//! noise, pathwise solvers for driven SDEs and their deterministic skeleton
//! equations, and rate-function evaluation and minimization. File formats,
//! Monte Carlo experiments and the command line live in the `ldplab` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod ext;
mod linalg;
pub mod levy;
pub mod optim;
pub mod paths;
pub mod ratefn;
pub mod sde;

pub use error::{LdpError, Result};
pub use ext::ExtReal;
pub use paths::{merged_breakpoints, CadlagPath, JumpStats, ModulusOptions, PartitionModulus, PathBuilder, SegmentMode};
pub use levy::{Atom, CharTriplet, DriftRule, JumpMeasure, LegendreOptions, LevyTriplet, ThreeFamilies};
pub use sde::{residual, solve_ito, solve_sde, solve_skeleton, FieldKind, ItoParts, SdeProblem, VectorField};
pub use optim::{bfgs, nelder_mead, InnerOptions, Minimum};
pub use ratefn::{
    eval_composite_rate, eval_control_rate, minimize_endpoint, ControlGrid, EndpointResult, EventKind,
    MinimizeOptions, PathEvent, RateModel, TraceRecord,
};
