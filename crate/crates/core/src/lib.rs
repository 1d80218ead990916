//! Structural stability and continuation toolkit built on a black-box
//! operator contract: external force `P`, residual `R(u)`, load-scaled residual
//! `R(u, λ)`, linear stiffness `K_L`, mass `M` and tangent `K(u)`.
//!
//! Solver families: Newton and dynamic relaxation ([`statics`]), modal and
//! buckling analysis ([`eigen`]), arc-length continuation with singular-point
//! computation and branch switching ([`continuation`]), and the adaptive
//! parallel arc-length method ([`apalm`]). [`models`] ships analytic benchmark
//! systems; [`materials`] the hyperelastic laws; [`mappedbasis`] spline
//! interface smoothing.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod numerics;
pub mod apalm;
pub mod cli;
pub mod continuation;
pub mod eigen;
pub mod io;
pub mod mappedbasis;
pub mod materials;
pub mod models;
pub mod operators;
pub mod statics;

pub use numerics::{LinalgError, Matrix};
pub use operators::{OpError, OpResult, OpStatus, Operators};
