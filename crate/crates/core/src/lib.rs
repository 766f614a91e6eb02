//! Low-exposure school route search.
//!
//! Load a street network ([`netmodel`]), enumerate feasible walking and
//! cycling alternatives to a current route ([`routegen`]), score them
//! against hourly NO2 rasters ([`exposure`]), quantify the benefit of
//! switching ([`benefit`]) and assemble a participant's information package
//! ([`package`]).

pub mod benefit;
pub mod exposure;
pub mod fixtures;
pub mod geometry;
pub mod netmodel;
pub mod package;
pub mod routegen;

pub use geometry::Coord;
pub use netmodel::{EdgeId, NodeId, StreetGraph};
pub use routegen::TravelMode;
