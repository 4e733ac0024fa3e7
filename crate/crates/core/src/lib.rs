//! Hybrid quantum-classical reservoir computing on a simulated neutral-atom
//! register.
//!
//! The pipeline, per time step `t`:
//!
//! ```text
//! u_t ─► encoder ─► Y_1..Y_n ─► qsim (layered pulses) ─► |ψ_t⟩ ─► observables ─► M_t
//!  │                                                                            │
//!  └──────────────────────────► reservoir (leaky update) ◄───────────────────────┘
//!                                        │
//!                                    R_t = (1, f_u(u_t), f_R(r_t))
//!                                        │
//!                               readout (ridge) ─► y_{t+1}
//! ```
//!
//! [`experiment`] wires the stages together for Lorenz63 forecasting across
//! seeds and ablation modes. Seed-level work is dispatched through
//! [`par`], which uses rayon when the `parallel` feature is enabled and
//! falls back to plain iteration otherwise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod observables;
pub mod par;
pub mod pipeline;
pub mod plot;
pub mod qsim;
pub mod readout;
pub mod reservoir;
pub mod rng;

pub use error::{Error, Result};
