pub mod cardy;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod field;
pub mod lattice;
pub mod map;
pub mod measure;
pub mod percolation;
pub mod pivotal;
pub mod rng;

pub use error::{Error, Result};
