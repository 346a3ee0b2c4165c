//! Hierarchical selective recruitment for linear-threshold rate networks.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`);
//! the aliases below fix it to `f64`, which is what the CLI and the
//! identification pipeline use.

pub mod control;
pub mod equilibria;
pub mod error;
pub mod hierarchy;
pub mod io;
mod lp;
pub mod ltn;
pub mod ode;
pub mod scalar;
pub mod stability;
pub mod sysid;
pub mod trajectory;

pub use error::{HsrError, Result};
pub use scalar::Scalar;

pub type Network = ltn::LtNetwork<f64>;
pub type Ceiling = ltn::Ceiling<f64>;
pub type Map = equilibria::PiecewiseAffineMap<f64>;
pub type Piece = equilibria::AffinePiece<f64>;
pub type Certificate = stability::GesCertificate<f64>;
pub type Control = control::ControlLaw<f64>;
pub type HierarchyF64 = hierarchy::Hierarchy<f64>;
pub type Traj = trajectory::Trajectory<f64>;
