//! Joint self-play optimisation of a task-oriented dialogue system (DS) and a
//! user simulator (US).
//!
//! The crate covers the full loop at desk scale:
//!
//! - a closed-world ontology/database with deterministic constraint queries
//!   and delexicalization ([`ontology`]),
//! - the state machines both agents run: user goal / goal state on the US
//!   side, belief state and its binary summary on the DS side ([`state`]),
//! - a minimal tape-based reverse-mode autodiff core with the primitives the
//!   encoder-decoder agents need ([`tensor`]),
//! - the two LSTM agents themselves, wired as DST -> DB query -> context ->
//!   policy -> NLG ([`agents`]),
//! - dialogue-level and turn-level reward functions ([`rewards`]),
//! - supervised pre-training, self-play rollouts, REINFORCE fine-tuning and
//!   transfer-learning (naive / EWC) harnesses ([`training`]),
//! - inform/success/BLEU evaluation plus error and exploration analysis
//!   ([`evaluation`]),
//! - a synthetic corpus generator and transfer splits ([`corpus`]),
//! - stage-level pipeline entry points shared by the CLI ([`pipeline`]).

pub mod agents;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod ontology;
pub mod pipeline;
pub mod rewards;
pub mod seeding;
pub mod state;
pub mod tensor;
pub mod training;
pub mod vocab;

pub use error::{Error, Result};
