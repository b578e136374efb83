//! Torus geometry: points, grid-sampled maps and their calculus.

mod certificate;
mod format;
mod gridmap;
pub(crate) mod interp;
mod reference;
mod torus;

pub use certificate::{Certificate, CertificateKind};
pub use format::{read_gmap, read_gmap_str, write_gmap, write_gmap_string, Storage};
pub use gridmap::{
    compose, coordinate_projection, invert, jacobian, submersion_certificate, sup_distance, verification_grid, GridMap,
    InvertOptions, MapKind, Target, MIN_GRID,
};
pub use interp::{grid_total, Interp};
pub use reference::Reference;
pub use torus::{torus_distance, wrap, Point, TorusShape};
