pub mod cli;
pub mod error;
pub mod io;
pub mod laurent;
pub mod linalg;
pub mod moments;
pub mod noise;
pub mod operator;
pub mod rng;
pub mod scenarios;
pub mod simulate;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
