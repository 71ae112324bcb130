pub mod algebra;
pub mod cli;
pub mod config;
pub mod error;
pub mod flows;
pub mod identities;
pub mod lattice;
pub mod mappings;
pub mod numerics;
pub mod solitons;

pub use error::{Error, Result};
