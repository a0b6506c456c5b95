//! Test functions for comparing jump compensators.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::kernel::{norm, truncated_square};
use crate::truncation::Truncation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `(a|x| − 1)⁺ ∧ 1`
    Ramp { a: f64 },
    /// `h_i(x)·h_j(x)` for a hard-cutoff truncation function `h`.
    TruncationProduct { i: usize, j: usize, truncation: Truncation },
    /// `1 ∧ |x|²`
    TruncatedSquare,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Ramp { a } => (a * norm(x) - 1.0).clamp(0.0, 1.0),
            TestFunction::TruncationProduct { i, j, truncation } => {
                if truncation.keeps(x) {
                    x[*i] * x[*j]
                } else {
                    0.0
                }
            }
            TestFunction::TruncatedSquare => truncated_square(x),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Ramp { a } => format!("ramp_{a}"),
            TestFunction::TruncationProduct { i, j, .. } => format!("hh_{i}{j}"),
            TestFunction::TruncatedSquare => String::from("min1_sq"),
        }
    }
}

pub const DEFAULT_SLOPES: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionFamily {
    members: Vec<TestFunction>,
}

impl TestFunctionFamily {
    /// Ramps with the given slopes, `h_i h_j` for `i ≤ j` when `truncation`
    /// is a hard cutoff (the canonical `h` is unbounded and is skipped), and
    /// `1 ∧ |x|²`.
    pub fn new(d: usize, slopes: &[f64], truncation: Truncation) -> Self {
        let mut members: Vec<TestFunction> = slopes.iter().map(|a| TestFunction::Ramp { a: *a }).collect();
        if truncation.threshold().is_some() {
            for i in 0..d {
                for j in i..d {
                    members.push(TestFunction::TruncationProduct { i, j, truncation });
                }
            }
        }
        members.push(TestFunction::TruncatedSquare);
        Self { members }
    }

    pub fn standard(d: usize, truncation: Truncation) -> Self {
        Self::new(d, &DEFAULT_SLOPES, truncation)
    }

    pub fn members(&self) -> &[TestFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramps_vanish_near_origin_and_are_capped() {
        for a in DEFAULT_SLOPES {
            let f = TestFunction::Ramp { a };
            assert_eq!(f.eval(&[1.0 / a]), 0.0);
            assert_eq!(f.eval(&[0.5 / a]), 0.0);
            assert_eq!(f.eval(&[-3.0 / a]), 1.0);
        }
        assert_eq!(TestFunction::Ramp { a: 3.0 }.eval(&[1.0]), 1.0);
        assert_eq!(TestFunction::Ramp { a: 0.25 }.eval(&[1.0]), 0.0);
    }

    #[test]
    fn family_composition() {
        let h = Truncation::default();
        assert_eq!(TestFunctionFamily::standard(2, h).len(), 6 + 3 + 1);
        assert_eq!(TestFunctionFamily::standard(1, Truncation::canonical()).len(), 7);
        let hh = TestFunction::TruncationProduct { i: 0, j: 1, truncation: h };
        assert_eq!(hh.eval(&[0.2, 0.3]), 0.2 * 0.3);
        assert_eq!(hh.eval(&[1.0, 0.3]), 0.0);
    }
}
