//! Two-dimensional cellular automata over finite alphabets: simulation,
//! directional Lyapunov exponents, the always finite entropy and the lattice
//! surfaces that relate them.
//!
//! ```
//! use ca2d_core::{builtin_rule, entropy::trajectory_rank};
//!
//! let f3 = builtin_rule("F3", 0).unwrap();
//! assert_eq!(trajectory_rank(&f3, 2, 1).unwrap(), 7);
//! ```

pub mod bounds;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod lyapunov;

pub use bounds::{assemble_report, BoundReport};
pub use entropy::{EntropyEstimate, ShiftEntropyEstimate};
pub use error::{Error, Result};
pub use geometry::CellSet;
pub use grid::{builtin_rule, parse_rule, Axis, Boundary, Configuration, Coord, MeasureSpec, Rect, RuleSpec};
pub use lyapunov::{DirectionProfile, Strategy};
