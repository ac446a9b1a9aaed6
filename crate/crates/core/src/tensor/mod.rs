//! Minimal reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every primitive applied to [`Var`] handles; calling
//! [`Tape::backward`] on a scalar loss walks the record in reverse and
//! accumulates gradients for every leased parameter. Everything is 64-bit:
//! the models here are tiny and exact gradient checks matter more than
//! speed.

mod blocks;
mod checkpoint;
mod params;
mod tape;

pub use blocks::{attention, lstm_step, AttentionVars, LstmVars};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use params::{GradAccum, ParamId, ParamStore, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use tape::{Tape, Value, Var};
