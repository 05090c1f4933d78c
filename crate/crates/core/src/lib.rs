pub mod error;
pub mod fields;
pub mod geometry;
pub mod indicator;
pub mod interp;
pub mod mesh;
pub mod refine;
pub mod regularity;
pub mod verify;

pub use error::{Error, Result};
