//! Symmetric 2x2 matrices, the only linear algebra the estimators need.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Sym2 { xx, yy, xy }
    }

    pub fn diag(xx: f64, yy: f64) -> Self {
        Sym2 { xx, yy, xy: 0.0 }
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, k: f64) -> Self {
        Sym2::new(self.xx * k, self.yy * k, self.xy * k)
    }

    pub fn add(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }

    pub fn sub(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }

    /// Returns `None` when the determinant vanishes exactly.
    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.yy / d, self.xx / d, -self.xy / d))
    }

    /// Tr(self * other).
    pub fn trace_product(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        [mean - r, mean + r]
    }

    /// Ratio of the extreme eigenvalue magnitudes; infinite when singular.
    pub fn condition_number(&self) -> f64 {
        let [lo, hi] = self.eigenvalues();
        let (lo, hi) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    /// Normalized off-diagonal element, zero when either diagonal vanishes.
    pub fn correlation(&self) -> f64 {
        let denom = (self.xx * self.yy).sqrt();
        if denom > 0.0 {
            self.xy / denom
        } else {
            0.0
        }
    }
}
