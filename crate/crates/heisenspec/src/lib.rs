//! Spherical-transform calculus on the Heisenberg group H_n and solvers for the
//! nonlocal diffusion equation u_t = J∗u - u.

pub mod error;
pub mod group_core;
pub mod special_functions;
pub mod spherical_transform;
pub mod nonlocal_grid_solver;
pub mod cauchy_solver;
pub mod local_heat_reference;
pub mod eigen_solver;
pub mod io;
pub mod fit;

pub use error::{Error, Result};
