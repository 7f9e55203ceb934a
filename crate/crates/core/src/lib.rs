//! Grounding of spatial pick/place instructions in a voxel grid world.
//!
//! The crate is `no_std` (with `alloc`) and contains every algorithmic piece of
//! the pipeline: the vocabulary and grid encoding, a deterministic instruction
//! grammar that compiles to module programs, the neural modules with exact
//! backpropagation and Adam, the curriculum trainer, a simulated anchoring
//! layer, Bayesian revision of anchor labels, and the interactive session
//! logic. File formats, the CLI and the HTTP service live in the `reground`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod anchor;
pub mod belief;
pub mod error;
pub mod expr;
pub mod graph;
pub mod nn;
pub mod parser;
pub mod rng;
pub mod session;
pub mod synth;
pub mod trainer;
pub mod vocab;
pub mod world;

pub use error::{Error, Result};
pub use graph::{Node, ProgramGraph, Source};
pub use vocab::{Preposition, VerbClass, Vocabulary};
pub use world::{Cell, GridSpec, GridTensor, ObjectInstance, SceneState};
