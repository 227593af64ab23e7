//! Controlled-NOT gates for detuned, weakly coupled qubits.
//!
//! Two capacitively coupled qubits with splittings `omega` and `omega + delta`
//! are modelled in the rotating-wave approximation. The crate finds the
//! entangling evolution that lands in the CNOT local-equivalence class,
//! either by a two-step sequence (interact, flip, interact) or by a single
//! driven step. It then fits the local rotations that turn that evolution
//! into the canonical CNOT.
//!
//! ```
//! use detuned_cnot::equivclass::{makhlin_invariants, InvariantPair};
//! use detuned_cnot::model::SystemParams;
//! use detuned_cnot::sequences::{entangling_product, two_step_time, Frame};
//!
//! let p = SystemParams::new(1.2, 0.05, 0.0);
//! let t = two_step_time(&p)?;
//! let inv = makhlin_invariants(&entangling_product(t, &p, Frame::Doubly))?;
//! assert!(inv.max_abs_diff(&InvariantPair::CNOT) < 1e-10);
//! # Ok::<(), detuned_cnot::Error>(())
//! ```
//!
//! Modules, roughly bottom-up:
//!
//! - [`qmat`]: 4x4 operators, skew-Hermitian generators, exponentials
//! - [`model`]: generator basis and Hamiltonians in both rotating frames
//! - [`propagate`]: closed-form propagators and a stepwise integrator
//! - [`equivclass`]: Makhlin invariants, Weyl coordinates, trajectories
//! - [`sequences`]: gate assembly, local rotations, fidelity
//! - [`optimize`]: Nelder-Mead and the calibration drivers
//! - [`verify`]: the property suite
//! - [`cli`]: the `detuned-cnot` command

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod equivclass;
pub mod error;
mod fmt;
pub mod model;
pub mod optimize;
pub mod propagate;
pub mod qmat;
pub mod sequences;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod chapter_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/conventions.md")]
pub mod chapter_conventions {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/propagators.md")]
pub mod chapter_propagators {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/equivalence-classes.md")]
pub mod chapter_equivalence_classes {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/sequences.md")]
pub mod chapter_sequences {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/calibration.md")]
pub mod chapter_calibration {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod chapter_cli {}
