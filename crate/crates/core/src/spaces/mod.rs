//! Finite-dimensional normed spaces, test maps and the pseudocontraction toolkit.

pub mod linalg;
pub mod maps;
pub mod point;
pub mod solver;
pub mod space;

pub use maps::{map_library, MapClass, MapInstance, MapKind};
pub use point::Point;
pub use solver::{f_map, g_map, h_map, resolvent_point, SolverOptions};
pub use space::{sample_cube, sample_unit_sphere, DualPoint, FeasibleSet, Interval, Space, SQRT_BITS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("operation needs the exact Hilbert (p = 2) path")]
    NotExact,
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("solver did not converge: residual {residual:e} at best iterate {best:?}")]
    Nonconvergence { best: Vec<f64>, residual: f64 },
    #[error("singular linear system")]
    Singular,
}
