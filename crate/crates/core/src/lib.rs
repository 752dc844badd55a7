//! Coronary artery segmentation, catheter tracking and centerline
//! extraction for X-ray angiogram frames.

pub mod catheter;
pub mod config;
pub mod enhance;
pub mod error;
pub mod imgcore;
pub mod phantom;
pub mod pipeline;
pub mod ridgedet;
pub mod segment;
pub mod superpix;
pub mod vesselness;

pub use error::{Error, Result};
pub use imgcore::{BinaryMask, GrayImage};
