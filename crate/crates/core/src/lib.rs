//! Numerical toolkit for scalar radiative shock profiles: profile
//! construction, Evans-function stability checks and nonlinear simulation.

pub mod evans;
pub mod io;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod profile;
pub mod series;
pub mod simulate;
pub mod spectral;

pub use num_complex::Complex64;

pub use model::{check_assumptions, AssumptionReport, ModelError, ModelSpec};
pub use profile::{Profile, ProfileError, ProfileOptions};
