#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod connes;
pub mod error;
pub mod json;
pub mod linalg;
pub mod lp;
pub mod models;
pub mod transport;
pub mod triple;
pub mod verify;
pub mod wd;

pub use error::{Error, Result};
