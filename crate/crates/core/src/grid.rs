use crate::error::{arg, Error, Result};

/// Uniform time grid `t_i = i·dt`, `i = 0..=n_steps`, starting at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

/// Relative slack used when snapping a real time onto the grid.
const GRID_SNAP: f64 = 1e-9;

#[allow(clippy::len_without_is_empty)]
impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return arg("grid step must be positive and finite");
        }
        if n_steps == 0 {
            return arg("grid needs at least one step");
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid covering `[0, horizon]`; `horizon` must be a multiple of `dt`.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return arg("grid step must be positive");
        }
        let ratio = horizon / dt;
        let n = libm::round(ratio);
        if !(n >= 1.0) || libm::fabs(ratio - n) > GRID_SNAP * n.max(1.0) {
            return arg("horizon must be a positive multiple of dt");
        }
        Self::new(dt, n as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Grid index of `t`. Times past the horizon are accepted as long as they
    /// are multiples of `dt`; callers decide whether that is meaningful.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let ratio = t / self.dt;
        let i = libm::round(ratio);
        if !(i >= 0.0) || libm::fabs(ratio - i) > GRID_SNAP * i.max(1.0) {
            return Err(Error::OffGrid { t, dt: self.dt });
        }
        Ok(i as usize)
    }

    /// Index of the last grid time not after `t` (clamped to the grid).
    pub fn floor_index(&self, t: f64) -> usize {
        let i = libm::floor(t / self.dt + GRID_SNAP);
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n_steps)
        }
    }

    pub(crate) fn truncated(&self, n_steps: usize) -> Self {
        Self { dt: self.dt, n_steps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = TimeGrid::new(0.25, 8).unwrap();
        assert_eq!(g.index_of(0.5).unwrap(), 2);
        assert_eq!(g.horizon(), 2.0);
        assert!(matches!(g.index_of(0.3), Err(Error::OffGrid { .. })));
        assert!(g.index_of(-0.25).is_err());
    }

    #[test]
    fn horizon_must_divide() {
        assert_eq!(TimeGrid::with_horizon(1.0 / 256.0, 1.0).unwrap().n_steps(), 256);
        assert!(TimeGrid::with_horizon(0.3, 1.0).is_err());
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(0.1, 0).is_err());
    }

    #[test]
    fn floor_index_clamps() {
        let g = TimeGrid::new(0.5, 4).unwrap();
        assert_eq!(g.floor_index(0.74), 1);
        assert_eq!(g.floor_index(1.0), 2);
        assert_eq!(g.floor_index(9.0), 4);
        assert_eq!(g.floor_index(-1.0), 0);
    }
}
