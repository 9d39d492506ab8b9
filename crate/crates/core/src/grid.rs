use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement of sample points within a sweep window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// `n` points including both endpoints.
    #[default]
    Inclusive,
    /// `n` cell midpoints, offset half a step from the edges.
    CellCentered,
}

/// A uniform one-dimensional sweep over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
    #[serde(default)]
    pub kind: GridKind,
}

impl Grid {
    pub fn inclusive(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        Self::build(lo, hi, n_points, GridKind::Inclusive)
    }

    pub fn cell_centered(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        Self::build(lo, hi, n_points, GridKind::CellCentered)
    }

    fn build(lo: f64, hi: f64, n_points: usize, kind: GridKind) -> Result<Self> {
        let grid = Grid {
            lo,
            hi,
            n_points,
            kind,
        };
        grid.validate()
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::EmptyWindow {
                lo: self.lo,
                hi: self.hi,
            });
        }
        let min = match self.kind {
            GridKind::Inclusive => 2,
            GridKind::CellCentered => 1,
        };
        if self.n_points < min {
            return Err(Error::GridTooSmall {
                min,
                got: self.n_points,
            });
        }
        Ok(self)
    }

    pub fn step(&self) -> f64 {
        match self.kind {
            GridKind::Inclusive => (self.hi - self.lo) / (self.n_points - 1) as f64,
            GridKind::CellCentered => (self.hi - self.lo) / self.n_points as f64,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        let h = self.step();
        match self.kind {
            GridKind::Inclusive if i + 1 == self.n_points => self.hi,
            GridKind::Inclusive => self.lo + i as f64 * h,
            GridKind::CellCentered => self.lo + (i as f64 + 0.5) * h,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_hits_both_ends() {
        let g = Grid::inclusive(-10.0, 10.0, 2001).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 2001);
        assert_eq!(p[0], -10.0);
        assert_eq!(p[1000], 0.0);
        assert_eq!(p[2000], 10.0);
    }

    #[test]
    fn cell_centered_avoids_midpoint() {
        let g = Grid::cell_centered(-10.0, 10.0, 2000).unwrap();
        assert!(g.points().iter().all(|&x| x != 0.0));
        assert!((g.point(0) + 9.995).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(matches!(
            Grid::inclusive(1.0, 1.0, 10),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(
            Grid::inclusive(0.0, f64::INFINITY, 10),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(
            Grid::inclusive(0.0, 1.0, 1),
            Err(Error::GridTooSmall { .. })
        ));
    }
}
