use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of `(-Delta)^s u = lambda u + a(x)|u|^{p-2}u`, `||u||_2 = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    /// Target L2 norm `c` (the mass constraint is `||u||_2 = c`).
    pub mass: f64,
}

impl PhysParams {
    /// Production parameters: `d > 2s`, `2 + 4s/d < p < 2d/(d - 2s)`, `c > 0`.
    pub fn new(dim: usize, s: f64, p: f64, mass: f64) -> Result<Self> {
        let params = Self::relaxed(dim, s, p, mass)?;
        let d = dim as f64;
        if s < 1.0 && d <= 2.0 * s {
            return Err(Error::InvalidParams(format!("need d > 2s, got d={dim}, s={s}")));
        }
        let (lo, hi) = params.supercritical_window();
        if !(p > lo && p < hi) {
            return Err(Error::InvalidParams(format!(
                "p = {p} outside the mass-supercritical window ({lo}, {hi})"
            )));
        }
        Ok(params)
    }

    /// Oracle-test parameters: only `0 < s <= 1`, `p > 2`, `c > 0`.
    pub fn relaxed(dim: usize, s: f64, p: f64, mass: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParams(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParams(format!("s = {s} not in (0, 1]")));
        }
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("p = {p} must exceed 2")));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParams(format!("mass c = {mass} must be positive")));
        }
        Ok(Self { dim, s, p, mass })
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::relaxed(self.dim, self.s, self.p, mass)
    }

    pub fn d(&self) -> f64 {
        self.dim as f64
    }

    /// `(2 + 4s/d, 2d/(d - 2s))`; the upper end is infinite when `d <= 2s`.
    pub fn supercritical_window(&self) -> (f64, f64) {
        let d = self.d();
        let hi = if d > 2.0 * self.s { 2.0 * d / (d - 2.0 * self.s) } else { f64::INFINITY };
        (2.0 + 4.0 * self.s / d, hi)
    }

    /// `d(p-2)/(2p)`, the coefficient of the potential term in the Pohozaev scalar.
    pub fn pohozaev_coefficient(&self) -> f64 {
        self.d() * (self.p - 2.0) / (2.0 * self.p)
    }

    /// `d(p-2) - 4s`, positive exactly in the mass-supercritical regime.
    pub fn supercritical_gap(&self) -> f64 {
        self.d() * (self.p - 2.0) - 4.0 * self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_window() {
        assert!(PhysParams::new(2, 0.5, 3.5, 1.0).is_ok());
        // below the L2-critical exponent 2 + 4s/d = 3
        assert!(PhysParams::new(2, 0.5, 2.9, 1.0).is_err());
        // above 2d/(d-2s) = 4
        assert!(PhysParams::new(2, 0.5, 4.1, 1.0).is_err());
        assert!(PhysParams::new(1, 0.5, 3.0, 1.0).is_err());
        assert!(PhysParams::relaxed(1, 0.5, 3.0, 1.0).is_ok());
        assert!(PhysParams::relaxed(1, 1.0, 3.0, 1.0).is_ok());
        assert!(PhysParams::relaxed(1, 0.5, 2.0, 1.0).is_err());
        assert!(PhysParams::relaxed(1, 0.5, 3.0, 0.0).is_err());
    }
}
