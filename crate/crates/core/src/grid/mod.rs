//! Finite patches of the two-dimensional full shift, local rules, and their
//! synchronous iteration.
//!
//! Lattice coordinates are `(i, j)` with `i` horizontal and `j` vertical. A
//! [`Configuration`] is a rectangular window onto the lattice; under the
//! [`Boundary::Shrink`] policy it tracks the sub-rectangle whose contents are
//! guaranteed to agree with the evolution of any infinite configuration that
//! extends the initial window.

mod config;
mod measure;
mod packed;
mod powers;
mod rule;

pub use config::{Axis, Boundary, Configuration};
pub use measure::{sample_configuration, sample_window, MeasureSpec, SampleStream};
pub use powers::{Kernel, KernelPowers};
pub use rule::{builtin_rule, parse_rule, LinearTerm, Offset, RuleKind, RuleSpec, MAX_ALPHABET};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub i: i64,
    pub j: i64,
}

impl Coord {
    pub const ORIGIN: Coord = Coord { i: 0, j: 0 };

    pub const fn new(i: i64, j: i64) -> Self {
        Coord { i, j }
    }
}

impl From<(i64, i64)> for Coord {
    fn from((i, j): (i64, i64)) -> Self {
        Coord { i, j }
    }
}

impl std::ops::Add for Coord {
    type Output = Coord;
    fn add(self, o: Coord) -> Coord {
        Coord::new(self.i + o.i, self.j + o.j)
    }
}

impl std::ops::Sub for Coord {
    type Output = Coord;
    fn sub(self, o: Coord) -> Coord {
        Coord::new(self.i - o.i, self.j - o.j)
    }
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Half-open lattice rectangle `[i0, i1) x [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub i0: i64,
    pub j0: i64,
    pub i1: i64,
    pub j1: i64,
}

impl Rect {
    pub const fn new(i0: i64, j0: i64, i1: i64, j1: i64) -> Self {
        Rect { i0, j0, i1, j1 }
    }

    pub fn from_origin(origin: Coord, width: usize, height: usize) -> Self {
        Rect::new(origin.i, origin.j, origin.i + width as i64, origin.j + height as i64)
    }

    pub fn is_empty(&self) -> bool {
        self.i1 <= self.i0 || self.j1 <= self.j0
    }

    pub fn width(&self) -> i64 {
        (self.i1 - self.i0).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.j1 - self.j0).max(0)
    }

    pub fn area(&self) -> u64 {
        (self.width() * self.height()) as u64
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.i >= self.i0 && c.i < self.i1 && c.j >= self.j0 && c.j < self.j1
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        o.is_empty() || (o.i0 >= self.i0 && o.i1 <= self.i1 && o.j0 >= self.j0 && o.j1 <= self.j1)
    }

    /// Contracts every side by `by` cells.
    pub fn shrink(&self, by: i64) -> Rect {
        Rect::new(self.i0 + by, self.j0 + by, self.i1 - by, self.j1 - by)
    }

    pub fn grow(&self, by: i64) -> Rect {
        self.shrink(-by)
    }

    pub fn translate(&self, di: i64, dj: i64) -> Rect {
        Rect::new(self.i0 + di, self.j0 + dj, self.i1 + di, self.j1 + dj)
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, o: &Rect) -> Rect {
        if self.is_empty() {
            return *o;
        }
        if o.is_empty() {
            return *self;
        }
        Rect::new(self.i0.min(o.i0), self.j0.min(o.j0), self.i1.max(o.i1), self.j1.max(o.j1))
    }

    /// Row-major iteration (j outer, i inner).
    pub fn cells(&self) -> impl Iterator<Item = Coord> + '_ {
        let r = *self;
        (r.j0..r.j1).flat_map(move |j| (r.i0..r.i1).map(move |i| Coord::new(i, j)))
    }
}
