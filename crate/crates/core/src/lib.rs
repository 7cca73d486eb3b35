//! Spectral machinery for the prescribed-mean-curvature conformal flow on
//! the boundary sphere of the unit ball.
//!
//! The crate provides:
//!
//! * [`spharm`] — Gauss-Legendre grids, orthonormal real spherical-harmonic
//!   transforms, quadrature, and diagonal spectral operators;
//! * [`conformal`] — the Dirichlet-to-Neumann map of the harmonic extension,
//!   the boundary mean-curvature operator, and the flow's scalar functionals;
//! * [`geometry`] — stereographic maps to the upper half space and the
//!   concentrating bubble family used as initial data;
//! * [`symmetry`] — reflection/rotation actions, defect measurement, and the
//!   checker for the realization hypotheses;
//! * [`flow`] — the adaptive RK4 integrator with conservation/monotonicity
//!   monitors and the cap-mass blow-up detector;
//! * [`io`] — plain-text snapshot formats and the trajectory CSV;
//! * [`verify`] — the built-in acceptance battery used by the CLI.

pub mod conformal;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod spharm;
pub mod symmetry;
pub mod verify;

pub use conformal::{Dimension, EnergyReport};
pub use error::{Error, Result};
pub use flow::{
    ConcentrationReport, FlowConfig, FlowState, Outcome, RunResult, Trajectory, TrajectoryRow,
};
pub use geometry::{BallPoint, BubbleParams, HalfSpacePoint, Rotation, SpherePoint};
pub use spharm::{GridField, GridSpec, SpectralField};
pub use symmetry::{HypothesisReport, SymmetryAction};
