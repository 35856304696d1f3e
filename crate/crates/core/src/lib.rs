pub mod cli;
pub mod error;
pub mod fock;
pub mod locc;
pub mod protocols;
pub mod resources;
pub mod ssr;

pub use error::{Error, Result};
