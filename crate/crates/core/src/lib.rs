//! Seam placement for partitioning composite plies into spool-width
//! sub-plies.
//!
//! A ply is cut along seams parallel to its fiber direction. The search in
//! [`search`] places seams bundle by bundle so that every sub-ply fits on
//! the spool, overlaps do not stack, and seams avoid stay-out zones and
//! poor-quality vertices. [`cost`] prices a finished design.

pub mod constraints;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod lp;
pub mod model;
pub mod search;
pub mod synthetic;

pub use error::{PlyError, Result};
pub use model::{CostParams, Design, LineStd, ManufacturingConfig, Ply, Point2, StayOutZone, Tolerance};
