//! Discrete weighted anisotropic Cheeger problems on 2-D Cartesian grids.
//!
//! Sets are unions of grid cells. Volumes are weighted by a positive density
//! `f`, perimeters by a direction-dependent surface weight `g` through a
//! Crofton-type stencil. On top of the measures sit an exact min-cut solver,
//! sampling-based checks of the standard inequalities, and a Cantor-type
//! domain whose rough boundary can be refined level by level.
//!
//! Everything is generic over the scalar type; `f64` aliases are provided
//! at the crate root with `f32` variants suffixed `32`.
//!
//! ```
//! use cheeger::grid::make_disk;
//! use cheeger::solver::{dinkelbach_solve, DinkelbachOptions};
//! use cheeger::{CheegerProblem64, Grid64, Stencil};
//!
//! let grid = Grid64::square(64, 1.0)?;
//! let domain = make_disk(grid, [0.5, 0.5], 0.45)?;
//! let problem = CheegerProblem64::uniform(domain, Stencil::Crofton16, 1.0)?;
//! let result = dinkelbach_solve(&problem, DinkelbachOptions::default())?;
//! assert!((result.ratio - 2.0 / 0.45).abs() < 0.05 * 2.0 / 0.45);
//! # Ok::<(), cheeger::CheegerError>(())
//! ```

pub mod anisotropy;
pub mod cantor;
pub mod error;
pub mod grid;
pub mod io;
pub mod maxflow;
pub mod measures;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use anisotropy::{Anisotropy, Stencil};
pub use error::{CheegerError, Result};
pub use grid::{CellSet, Grid, ScalarField};
pub use scalar::Scalar;
pub use solver::{CheegerProblem, CheegerResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Grid64 = Grid<f64>;
pub type CellSet64 = CellSet<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type Anisotropy64 = Anisotropy<f64>;
pub type CheegerProblem64 = CheegerProblem<f64>;

pub type Grid32 = Grid<f32>;
pub type CellSet32 = CellSet<f32>;
pub type ScalarField32 = ScalarField<f32>;
pub type Anisotropy32 = Anisotropy<f32>;
pub type CheegerProblem32 = CheegerProblem<f32>;
