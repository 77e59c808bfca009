//! Numerical laboratory for one-dimensional curve shortening flow with
//! radial ends: curve discretization, geometric functionals, flow
//! integration, exact comparison solutions, and property verification.

pub mod curve;
pub mod exact;
pub mod flow;
pub mod functionals;
pub mod geom;
pub mod numerics;
pub mod scene;
pub mod verify;
