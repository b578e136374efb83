//! Numerical constructions on the space of fibrations of flat tori.

// NaN must fail tolerance checks, hence `!(x <= tol)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baseaction;
pub mod chart;
pub mod error;
pub mod geom;
pub mod linalg;
pub mod orbit;
pub mod sample;
pub mod scalar;
pub mod transport;
pub mod tubular;

pub use error::{ChartCause, Error, Result};
pub use geom::{Certificate, GridMap, Interp, Point, Reference, Target, TorusShape};
pub use scalar::Real;

pub type GridMap64 = GridMap<f64>;
pub type GridMap32 = GridMap<f32>;
pub type TorusShape64 = TorusShape<f64>;
pub type Point64 = Point<f64>;
