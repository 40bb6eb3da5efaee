//! Quadrotor attitude and altitude tracking with strictly negative imaginary
//! (SNI) controllers whose gains are adapted online by fuzzy Q-learning.
//!
//! The plant is a 6-DOF rigid-body model integrated with RK4. A feedback
//! linearizer turns it into four decoupled double integrators, each closed
//! by one of PID, fixed SNI, fuzzy-scheduled SNI or fuzzy-Q-learning SNI.

pub mod controllers;
pub mod disturbances;
pub mod error;
pub mod fb_lin;
pub mod fql;
pub mod fuzzy;
pub mod harness;
pub mod ni_core;
pub mod plant;

pub use error::{Error, Result};
