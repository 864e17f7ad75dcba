pub mod crypto;
pub mod de;
pub mod decoder;
pub mod error;
pub mod graph;
pub mod qc;
pub mod ring;
pub mod sim;

pub use error::{Error, Result};
pub use qc::{BaseMatrix, BlockCirculantMatrix, BlockVector};
pub use ring::PolyGF2;
