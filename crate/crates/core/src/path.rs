//! Grid paths with explicit jump records and the shift / stop / difference
//! operators on them.
//!
//! A [`CadlagPath`] holds one point of `R^m` per grid time. Between grid times
//! the path is constant (right-continuous), so every operator is exact at grid
//! resolution. Transitions that were produced by jumps carry a record of the
//! jump vector; a single grid step may carry several jumps.

use alloc::vec::Vec;

use crate::error::{arg, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    /// Grid index `i ≥ 1`: the jump happens inside the step `(t_{i-1}, t_i]`.
    pub index: usize,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
    jumps: Vec<Jump>,
}

impl CadlagPath {
    /// `values` is row-major: `values[i*dim .. (i+1)*dim]` is the point at `t_i`.
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>, jumps: Vec<Jump>) -> Result<Self> {
        if dim == 0 {
            return arg("path dimension must be positive");
        }
        if values.len() != grid.len() * dim {
            return arg("path needs exactly one point per grid time");
        }
        let mut last = 0;
        for j in &jumps {
            if j.index == 0 || j.index > grid.n_steps() {
                return arg("jump index outside (0, n_steps]");
            }
            if j.index < last {
                return arg("jumps must be sorted by grid index");
            }
            if j.delta.len() != dim || j.delta.iter().all(|v| *v == 0.0) {
                return arg("jump vectors must be nonzero and match the path dimension");
            }
            last = j.index;
        }
        Ok(Self { grid, dim, values, jumps })
    }

    pub fn constant(grid: TimeGrid, point: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * point.len());
        for _ in 0..grid.len() {
            values.extend_from_slice(point);
        }
        Self::new(grid, point.len(), values, Vec::new())
    }

    /// Path sitting at zero, the starting point of every increment path.
    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        Self { grid, dim, values: alloc::vec![0.0; grid.len() * dim], jumps: Vec::new() }
    }

    pub(crate) fn from_parts_unchecked(grid: TimeGrid, dim: usize, values: Vec<f64>, jumps: Vec<Jump>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * dim);
        Self { grid, dim, values, jumps }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.at(self.grid.n_steps())
    }

    /// Value at an arbitrary time `t ≥ 0`, read off the piecewise-constant path.
    pub fn value_at(&self, t: f64) -> &[f64] {
        self.at(self.grid.floor_index(t))
    }

    /// Jumps recorded inside step `index`, in the order they happened.
    pub fn jumps_at(&self, index: usize) -> &[Jump] {
        let lo = self.jumps.partition_point(|j| j.index < index);
        let hi = self.jumps.partition_point(|j| j.index <= index);
        &self.jumps[lo..hi]
    }

    /// Shift operator: `result(s) = x(t + s)`. A jump sitting exactly at `t`
    /// becomes part of the initial value and is dropped from the record.
    pub fn shift(&self, t: f64) -> Result<Self> {
        let k = self.shift_index(t)?;
        Ok(self.shifted(k))
    }

    /// Stopping operator: `result(s) = x(min(t, s))`; jumps after `t` are removed.
    pub fn stop(&self, t: f64) -> Result<Self> {
        let k = self.grid.index_of(t)?;
        Ok(self.stopped(k))
    }

    /// Difference operator: `result(s) = x(t + s) − x(t)`.
    pub fn diff(&self, t: f64) -> Result<Self> {
        let k = self.shift_index(t)?;
        Ok(self.differenced(k))
    }

    fn shift_index(&self, t: f64) -> Result<usize> {
        let k = self.grid.index_of(t)?;
        if k >= self.grid.n_steps() {
            return arg("shift time must lie strictly before the horizon");
        }
        Ok(k)
    }

    pub fn shifted(&self, k: usize) -> Self {
        let grid = self.grid.truncated(self.grid.n_steps() - k);
        let values = self.values[k * self.dim..].to_vec();
        let jumps =
            self.jumps.iter().filter(|j| j.index > k).map(|j| Jump { index: j.index - k, delta: j.delta.clone() }).collect();
        Self::from_parts_unchecked(grid, self.dim, values, jumps)
    }

    pub fn stopped(&self, k: usize) -> Self {
        let k = k.min(self.grid.n_steps());
        let mut values = self.values.clone();
        let frozen = self.at(k).to_vec();
        for i in k + 1..self.grid.len() {
            values[i * self.dim..(i + 1) * self.dim].copy_from_slice(&frozen);
        }
        let jumps = self.jumps.iter().filter(|j| j.index <= k).cloned().collect();
        Self::from_parts_unchecked(self.grid, self.dim, values, jumps)
    }

    pub fn differenced(&self, k: usize) -> Self {
        let mut out = self.shifted(k);
        let origin = self.at(k).to_vec();
        for chunk in out.values.chunks_exact_mut(self.dim) {
            for (v, o) in chunk.iter_mut().zip(&origin) {
                *v -= o;
            }
        }
        out
    }

    /// Coordinate `c` of the path as a scalar series.
    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn floor_path() -> CadlagPath {
        // x(s) = floor(2s) on [0, 2], grid step 1/2: jumps of +1 at every step.
        let grid = TimeGrid::new(0.5, 4).unwrap();
        let jumps = (1..=4).map(|i| Jump { index: i, delta: vec![1.0] }).collect();
        CadlagPath::new(grid, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0], jumps).unwrap()
    }

    #[test]
    fn shift_of_constant_is_constant() {
        let grid = TimeGrid::new(0.1, 10).unwrap();
        let x = CadlagPath::constant(grid, &[5.0]).unwrap();
        let y = x.shift(0.4).unwrap();
        assert!(y.values().iter().all(|v| *v == 5.0));
        assert_eq!(y.grid().n_steps(), 6);
    }

    #[test]
    fn shift_absorbs_jump_at_origin() {
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let x = CadlagPath::new(grid, 1, vec![0.0, 0.0, 1.0, 1.0, 1.0], vec![Jump { index: 2, delta: vec![1.0] }]).unwrap();
        let y = x.shift(0.5).unwrap();
        assert_eq!(y.at(0), &[1.0]);
        assert!(y.jumps().is_empty());
    }

    #[test]
    fn floor_path_operators() {
        let x = floor_path();
        assert_eq!(x.shift(1.0).unwrap().values(), &[2.0, 3.0, 4.0]);
        assert_eq!(x.stop(1.0).unwrap().values(), &[0.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(x.diff(0.5).unwrap().values(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(x.stop(1.0).unwrap().jumps().len(), 2);
        assert_eq!(x.diff(0.5).unwrap().jumps()[0].index, 1);
    }

    #[test]
    fn stop_edge_cases() {
        let x = floor_path();
        assert!(x.stop(0.0).unwrap().values().iter().all(|v| *v == 0.0));
        assert_eq!(x.stop(2.0).unwrap(), x);
        assert_eq!(x.stop(7.5).unwrap(), x);
    }

    #[test]
    fn diff_at_zero_recenters() {
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let x = CadlagPath::new(grid, 1, vec![3.0, 4.0, 2.5], vec![]).unwrap();
        assert_eq!(x.diff(0.0).unwrap().values(), &[0.0, 1.0, -0.5]);
        let c = CadlagPath::constant(grid, &[7.0, -1.0]).unwrap();
        assert!(c.diff(0.5).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn off_grid_is_rejected() {
        let x = floor_path();
        assert!(x.shift(0.3).is_err());
        assert!(x.stop(0.3).is_err());
        assert!(x.diff(2.0).is_err());
    }

    #[test]
    fn constructor_validates() {
        let grid = TimeGrid::new(0.5, 2).unwrap();
        assert!(CadlagPath::new(grid, 1, vec![0.0, 1.0], vec![]).is_err());
        assert!(CadlagPath::new(grid, 1, vec![0.0; 3], vec![Jump { index: 0, delta: vec![1.0] }]).is_err());
        assert!(CadlagPath::new(grid, 1, vec![0.0; 3], vec![Jump { index: 1, delta: vec![0.0] }]).is_err());
        assert!(CadlagPath::new(
            grid,
            1,
            vec![0.0; 3],
            vec![Jump { index: 2, delta: vec![1.0] }, Jump { index: 1, delta: vec![1.0] }]
        )
        .is_err());
    }

    #[test]
    fn jumps_at_groups_by_index() {
        let grid = TimeGrid::new(0.5, 3).unwrap();
        let jumps =
            vec![Jump { index: 1, delta: vec![1.0] }, Jump { index: 3, delta: vec![1.0] }, Jump { index: 3, delta: vec![2.0] }];
        let x = CadlagPath::new(grid, 1, vec![0.0, 1.0, 1.0, 4.0], jumps).unwrap();
        assert_eq!(x.jumps_at(3).len(), 2);
        assert!(x.jumps_at(2).is_empty());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn arb_path() -> impl Strategy<Value = CadlagPath> {
        (1usize..20, 1usize..3).prop_flat_map(|(n, dim)| {
            (
                Just(n),
                Just(dim),
                proptest::collection::vec(-8i32..8, (n + 1) * dim),
                proptest::collection::vec((1usize..=n, -4i32..4), 0..5),
            )
                .prop_map(|(n, dim, vals, raw_jumps)| {
                    let grid = TimeGrid::new(0.125, n).unwrap();
                    let values = vals.into_iter().map(|v| v as f64 * 0.5).collect();
                    let mut jumps: Vec<Jump> = raw_jumps
                        .into_iter()
                        .filter(|(_, v)| *v != 0)
                        .map(|(i, v)| Jump { index: i, delta: vec![v as f64; dim] })
                        .collect();
                    jumps.sort_by_key(|j| j.index);
                    CadlagPath::new(grid, dim, values, jumps).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn stop_is_idempotent_in_the_smaller_time(x in arb_path(), a in 0usize..25, b in 0usize..25) {
            let (s, t) = if a <= b { (a, b) } else { (b, a) };
            prop_assert_eq!(x.stopped(t).stopped(s), x.stopped(s));
        }

        #[test]
        fn diff_starts_at_zero(x in arb_path(), k in 0usize..25) {
            let k = k % x.grid().n_steps();
            prop_assert!(x.differenced(k).at(0).iter().all(|v| *v == 0.0));
        }
    }
}
