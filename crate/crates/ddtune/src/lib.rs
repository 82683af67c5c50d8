//! IO, file formats, and batch orchestration around [`ddtune_core`].
//!
//! The core crate holds the coherence engine and search algorithms; this
//! crate adds cache persistence, JSON/CSV wire formats, deterministic
//! parallel batch runs, and the `ddtune` command-line interface.

pub use ddtune_core as core;

pub mod batch;
pub mod cache_io;
pub mod cli;
pub mod formats;
