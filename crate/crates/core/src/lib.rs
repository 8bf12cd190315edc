pub mod augment;
pub mod bench;
pub mod cli;
pub mod constraints;
pub mod datagen;
pub mod dpg;
pub mod error;
pub mod forest;
pub mod ga;
pub mod predicate;
pub mod report;
pub mod samplers;
pub mod seed;
pub mod tabular;

pub use error::{Error, Result};
