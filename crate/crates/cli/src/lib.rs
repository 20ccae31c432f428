//! File formats, instance generators, λ-sweeps and the `ctr` command line
//! on top of [`ctr_core`].

pub mod commands;
pub mod error;
pub mod format;
pub mod generate;
pub mod rule;
pub mod sweep;

pub use error::{exit, CliError, Result};
pub use format::{load_profile, ProfileFile};
pub use generate::Generator;
pub use rule::Rule;
