pub mod error;
pub mod functions;
pub mod geometry;
pub mod lp;
pub mod rng;
pub mod oracles;
pub mod tree;
pub mod gb2;
pub mod g2b2;
pub mod warmstart;
pub mod instances;
pub mod bench;

pub use error::{Error, Result};
