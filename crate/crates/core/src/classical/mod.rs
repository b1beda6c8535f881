//! Classical tori, actions, EBK levels and transition paths.

pub mod ebk;
pub mod paths;
pub mod torus;

pub use ebk::{action, ebk_levels, period, quantum_number, EbkLevel};
pub use paths::{find_transition_paths, TransitionPath};
pub use torus::{solve_momentum, Caustic, CausticKind, Sheet, Torus, TorusClass, TorusPoint};
