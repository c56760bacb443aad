//! Stable matchings that stay stable under small preference errors.
//!
//! An instance's stable matchings form a distributive lattice generated by
//! its rotation poset. An upward shift moves one entry of one list up past a
//! few neighbours; the matchings it destabilizes form a sublattice entered
//! and left through at most one rotation each. Given a distribution over
//! shifts, a min-cut on the rotation poset finds a stable matching least
//! likely to be destabilized, and the residual graph describes all of them.

pub mod cli;
pub mod error;
pub mod instance;
pub mod matching;
pub mod oracle;
pub mod order;
pub mod random;
pub mod robust_flow;
pub mod robust_lattice;
pub mod rotations;
pub mod shift_analysis;
pub mod verify;

#[cfg(test)]
mod test_fixtures;

pub use error::{Error, ParseErrorKind, Result};
pub use instance::{
    apply_shift, enumerate_shift_domain, parse_distribution, parse_instance, PreferenceInstance, Shift,
    ShiftDistribution, Side,
};
pub use matching::{blocking_pairs, boy_optimal, girl_optimal, is_stable, Matching};
pub use robust_flow::{robust_matching, RobustSolution};
pub use robust_lattice::{build_robust_poset, enumerate_robust, robust_members, RobustPoset};
pub use rotations::{build_rotation_poset, ClosedSet, PosetNode, Rotation, RotationId, RotationPoset};
pub use shift_analysis::{analyze_shift, ShiftAnalysis, ShiftAnalyzer, ShiftStatus};
