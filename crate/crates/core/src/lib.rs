//! Reranking for neural semantic parsers.
//!
//! A generator (any beam-search parser) proposes candidate logical forms; this
//! crate turns the candidates into text, scores each against the input
//! utterance with a pluggable critic, and decides whether to replace the
//! generator's top-1 with the critic's favourite.
//!
//! ```
//! use lfrerank::lf::{lf_equal, parse, Formalism};
//!
//! let a = parse("(_lambda $0 e (_and (_to $0 b) (_from $0 a)))", Formalism::Lambda).unwrap();
//! let b = parse("(_lambda $7 e (_and (_from $7 a) (_to $7 b)))", Formalism::Lambda).unwrap();
//! assert!(lf_equal(&a, &b).unwrap());
//! ```

pub mod beam;
pub mod dataset;
pub mod eval;
pub mod lf;
pub mod pairgen;
mod par;
pub mod preprocess;
pub mod rerank;
pub mod scorer;
pub mod synth;
