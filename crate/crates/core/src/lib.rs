pub mod error;
pub mod expr;

pub use error::{Error, Result};
pub mod jet;
pub mod catalog;
pub mod numeval;
pub mod verify;
pub mod transforms;
pub mod cli;
