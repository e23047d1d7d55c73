//! Periodic geometry on a square arena.
//!
//! Points live in `[0, L)²` and every operation wraps its result back into
//! that square. Distances take the shorter of the direct and wrapped
//! displacement on each axis independently.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("arena side length must be positive and finite, got {0}")]
    InvalidSide(f64),
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
}

/// Square periodic arena of side `side_length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArenaSpec {
    side_length: f64,
}

impl ArenaSpec {
    pub fn new(side_length: f64) -> Result<Self, GeometryError> {
        if side_length.is_finite() && side_length > 0.0 {
            Ok(ArenaSpec { side_length })
        } else {
            Err(GeometryError::InvalidSide(side_length))
        }
    }

    #[inline]
    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    /// Largest possible torus distance: half the diagonal.
    pub fn max_distance(&self) -> f64 {
        self.side_length * std::f64::consts::SQRT_2 / 2.0
    }
}

/// A position on the torus; both coordinates lie in `[0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

impl TorusPoint {
    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
}

// `rem_euclid` can return exactly `side` for tiny negative inputs
// (e.g. -1e-17 mod 20 rounds to 20.0), which would break the half-open
// interval.
#[inline]
fn wrap_axis(v: f64, side: f64) -> f64 {
    let r = v.rem_euclid(side);
    if r >= side {
        0.0
    } else {
        r
    }
}

/// Maps a raw point onto the arena by mathematical modulo on each axis.
pub fn wrap(x: f64, y: f64, arena: ArenaSpec) -> Result<TorusPoint, GeometryError> {
    if !x.is_finite() || !y.is_finite() {
        return Err(GeometryError::NonFinite { x, y });
    }
    let side = arena.side_length;
    Ok(TorusPoint {
        x: wrap_axis(x, side),
        y: wrap_axis(y, side),
    })
}

#[inline]
fn axis_gap(a: f64, b: f64, side: f64) -> f64 {
    let direct = (a - b).abs();
    direct.min(side - direct)
}

/// Shortest Euclidean distance between two points on the torus.
pub fn torus_distance(a: TorusPoint, b: TorusPoint, arena: ArenaSpec) -> f64 {
    let side = arena.side_length;
    axis_gap(a.x, b.x, side).hypot(axis_gap(a.y, b.y, side))
}

/// Moves `p` by `speed` along `heading` (radians, counter-clockwise from +x)
/// and wraps the result.
pub fn step_along(p: TorusPoint, heading: f64, speed: f64, arena: ArenaSpec) -> TorusPoint {
    if speed == 0.0 {
        return p;
    }
    let side = arena.side_length;
    TorusPoint {
        x: wrap_axis(p.x + speed * heading.cos(), side),
        y: wrap_axis(p.y + speed * heading.sin(), side),
    }
}
