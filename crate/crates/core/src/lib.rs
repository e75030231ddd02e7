//! Negative-imaginary (NI) analysis for linear time-invariant systems whose
//! transfer matrices may carry poles at the origin (free body motion), and
//! stability tests for positive-feedback loops closed around them with
//! strictly negative-imaginary (SNI) controllers.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, reports and the command-line front end live in the
//! companion `ni-freebody-cli` crate.
//!
//! Layout:
//!
//! * [`linalg`]: definiteness, PSD square roots and factors, null spaces,
//!   matrix exponential.
//! * [`lti`]: state-space and modal models, transfer evaluation,
//!   interconnection and Hurwitz tests.
//! * [`ni`]: NI / SNI classification and imaginary-axis residues.
//! * [`freebody`]: block-diagonal realization, Laurent coefficients at the
//!   origin, the projector and Hankel subspace constructions.
//! * [`verdict`]: stability dispatch across the free-body cases plus the
//!   closed-loop eigenvalue oracle.
//! * [`montecarlo`]: random NI/SNI pairs for checking verdicts against the
//!   oracle.
//! * [`irc`]: integral resonant controllers.
//! * [`beam`]: the slewing-beam (flexible robotic arm) model.
//! * [`sim`]: exact-discretization step responses of closed loops.
//! * [`case_study`]: the robotic-arm plant and controller used in examples.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod beam;
pub mod case_study;
mod error;
pub mod freebody;
pub mod irc;
pub mod linalg;
pub mod lti;
pub mod montecarlo;
pub mod ni;
pub mod sim;
pub mod verdict;

pub use error::{Error, Result};

pub use nalgebra::{Complex, DMatrix, DVector};

pub type CMatrix = DMatrix<Complex<f64>>;
