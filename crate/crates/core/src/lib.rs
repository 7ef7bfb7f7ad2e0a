//! Momentum-space solver for three-body systems with unequal masses, based on
//! the three-dimensional Faddeev equations with separable pair interactions.

pub mod eigen;
pub mod error;
pub mod faddeev;
pub mod grids;
pub mod io;
pub mod kinematics;
pub mod scattering;
pub mod singularity;
pub mod solve;
pub mod twobody;

pub use error::{Error, Result};
