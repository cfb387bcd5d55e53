//! Logistic population models with time-varying carrying capacity.
//!
//! `dP/dt = r(M(t) − P)P` is solved three independent ways (closed forms,
//! adaptive Runge–Kutta on the equation and on its Riccati form, and an
//! integrating-factor quadrature), its periodic steady states are located
//! and characterised, and the discrete version of the map is scanned for
//! period doubling.

// `!(x > 0.0)` is how NaN is rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod closedform;
pub mod config;
pub mod discretemap;
pub mod error;
pub mod odesolve;
pub mod periodic;
pub mod trajectory;

pub use capacity::{CapacitySchedule, Table};
pub use closedform::LogisticParams;
pub use config::SolverConfig;
pub use error::{Error, ErrorClass, Result};
pub use trajectory::{Sample, Trajectory};
