pub mod blaschke_models;
pub mod cf_arith;
pub mod circle_dyn;
pub mod drops;
pub mod error;
pub mod geometry;
pub mod poly;
pub mod rational_maps;
pub mod rays_combinatorics;
pub mod render;

pub use error::{Error, Result};
