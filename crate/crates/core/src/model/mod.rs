//! Domain types for non-smooth periodic Hamiltonians.

pub mod function;
pub mod kinetic;
pub mod momentum;
pub mod spin;
pub mod system;

pub use function::{Harmonic, PiecewisePeriodicFunction, Segment, SmoothFn, MAX_DERIVATIVE_ORDER};
pub use kinetic::{KineticForm, PiecewisePolynomial, PolyPiece};
pub use momentum::{MomentumFunction, MomentumTerm, Region};
pub use spin::{spin_to_circle, SpinBlock, SpinMonomial, SpinSystem};
pub use system::{Axis, CircleSystem, Jump, MixedTerm, NonSmoothLocus};
