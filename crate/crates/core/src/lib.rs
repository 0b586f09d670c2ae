//! Fluctuating hydrodynamics on a grid.
//!
//! The crate discretizes the compressible Navier-Stokes-Fourier equations in a
//! box coupled to reservoirs, computes nonequilibrium steady states, linearizes
//! the dynamics around them and builds the Ornstein-Uhlenbeck process of
//! small fluctuations. Its stationary covariance is obtained from a Lyapunov
//! equation and compared with local equilibrium to expose long-range
//! correlations.
//!
//! ```
//! use hydrofluct::prelude::*;
//!
//! let eos = IdealGas::default();
//! let state = LocalState::new(1.0, 1.0, &[0.0]);
//! let theta = conjugate(&eos, &state).unwrap();
//! assert!((theta.theta[0] - 1.5).abs() < 1e-14);
//! ```

pub mod analysis;
pub mod discretization;
pub mod eos;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod matrix_io;
pub mod noise;
pub mod ns_model;
pub mod process;

pub use error::{Error, ErrorKind, Result};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod prelude {
    pub use crate::discretization::{BoundarySpec, Discretization, SteadyState, Wall};
    pub use crate::eos::{
        conjugate, entropy_lab, entropy_rest, hessian_pi, hessian_s, invert_conjugate, legendre_pi, pressure,
        ConjugatePoint, EquationOfState, IdealGas, LocalState,
    };
    pub use crate::error::{Error, Result};
    pub use crate::grid::Grid;
    pub use crate::ns_model::{PowerLaw, Transport};
}
