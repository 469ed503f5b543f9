//! Iterated text transformation as a Markov process.
//!
//! A [`kernels::Kernel`] maps a sentence to its successor (a synthetic
//! logit table, a scripted map, or a prompted chat model). The
//! [`runner`] iterates kernels into trajectories and measures recurrence;
//! [`markov`] analyzes the induced finite chains; [`metrics`] and
//! [`stats`] quantify drift and length effects; [`experiment`] ties it
//! together behind a config file.

pub mod kernels;
pub mod llm_client;
pub mod markov;
pub mod textunit;
pub mod runner;
pub mod metrics;
pub mod stats;
pub mod experiment;
