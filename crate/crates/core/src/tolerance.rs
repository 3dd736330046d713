//! Rasterization slacks.
//!
//! Every place where a continuum identity is checked on the grid uses one of
//! these offsets, expressed in multiples of the cell size `h`. Nothing else in
//! the crate hard-codes a slack.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    /// Cell size the multipliers below are applied to.
    pub h: f64,
    /// Closed balls: `closure(B(x, r)) = {y : d(x, y) <= r + closure * h}`.
    pub closure: f64,
    /// A ball touches the boundary if a boundary vertex lies within
    /// `radius + contact * h` of its center. One diagonal step is `√2 h`, so
    /// the band `[r, r + 1.5h)` is met by every geodesic toward the boundary.
    pub contact: f64,
    /// Cone tests (John curves, visibility) are relaxed by `john * h` added to `d_Ω`.
    pub john: f64,
    /// Separation of generation points: `8 η^k r - separation * h`.
    pub separation: f64,
    /// Boundary proximity used when comparing rasterized boundaries.
    pub boundary: f64,
    /// Relative tolerance for floating-point comparisons of sums of lengths.
    pub rel: f64,
}

impl Slack {
    pub fn for_cell(h: f64) -> Self {
        Self {
            h,
            closure: 0.5,
            contact: 1.5,
            john: 2.0,
            separation: 2.0,
            boundary: 2.0,
            rel: 1e-9,
        }
    }

    pub fn closure_len(&self) -> f64 {
        self.closure * self.h
    }

    pub fn contact_len(&self) -> f64 {
        self.contact * self.h
    }

    pub fn john_len(&self) -> f64 {
        self.john * self.h
    }

    pub fn separation_len(&self) -> f64 {
        self.separation * self.h
    }

    pub fn boundary_len(&self) -> f64 {
        self.boundary * self.h
    }

    /// `a <= b` up to the relative tolerance.
    pub fn le(&self, a: f64, b: f64) -> bool {
        a <= b + self.rel * a.abs().max(b.abs()).max(self.h)
    }
}
