//! Super KLR diagrammatics in an exterior-algebra model and the bigraded link
//! homology built from it.

pub mod cli;
pub mod cube;
pub mod error;
pub mod exterior;
pub mod homology;
pub mod oracles;
pub mod superdiagram;
pub mod webs;

pub use error::{Error, Result};
