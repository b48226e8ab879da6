pub mod error;
pub mod raster_io;
pub mod vector_io;
pub mod parcel_extract;
pub mod annotation;
pub mod dataset;
pub mod augment;
pub mod detection_geom;
pub mod evaluation;
pub mod occupancy;
pub mod cli;

pub use error::{Error, Result};
