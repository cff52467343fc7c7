//! Numerical laboratory for recovering the diagonal zeroth-order coefficients
//! of a coupled 1D wave pair from interior observation of its solutions.
//!
//! The crate provides, in dependency order:
//!
//! * [`grid`]: uniform lattices, node fields, half-open node ranges;
//! * [`quad`]: trapezoid and Simpson weights;
//! * [`domain`]: the nested observation subdomains, cutoffs, and the
//!   geometric admissibility checks;
//! * [`solver`]: the leapfrog scheme for the coupled system, its energy
//!   audit, observation traces, calibrated noise, and the even/odd time
//!   extensions;
//! * [`fbi`]: the complex-shift Gaussian kernel, the plateau window, the
//!   windowed transform in time, and its identity/Parseval/mean-value
//!   diagnostics;
//! * [`carleman`]: level functions, admissible weight parameters, and the
//!   weighted-inequality ratio diagnostic;
//! * [`inversion`]: admissible projection, misfit, the exact discrete
//!   adjoint gradient, projected descent, and the linearized-map singular
//!   value analysis.

pub mod carleman;
pub mod domain;
pub mod fbi;
pub mod grid;
pub mod inversion;
pub mod profile;
pub mod quad;
pub mod solver;

#[cfg(test)]
pub(crate) mod fixtures;
