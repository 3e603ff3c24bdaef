//! Evolution strategies with Adam-style momentum and dampening.
//!
//! The crate covers the whole loop for derivative-free search over
//! parameter vectors: Gaussian populations ([`population`]), policy networks
//! flattened to vectors ([`network`]), fitness tasks ([`objectives`]),
//! rollout storage ([`buffer`]), reward transforms ([`signal`]), the ES and
//! AdamES updates ([`optimizer`]), a logged and seeded training loop
//! ([`runtime`]) and the `adames` command line ([`cli`]).

pub mod buffer;
pub mod cli;
pub mod error;
pub mod network;
pub mod objectives;
pub mod optimizer;
pub mod population;
pub mod runtime;
pub mod signal;

pub use error::{Error, Result};
