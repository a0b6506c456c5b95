//! Updating functions `Φ(e, x)`: state paths driven by an increment path.
//!
//! Each built-in is evaluated one grid step at a time through
//! [`UpdatingFunction::step`], which sees only the previous state, the new
//! increment value and the jumps inside the step. The simulators and
//! [`UpdatingFunction::apply`] share that code path, so a state path rebuilt
//! from `(Z₀, Y)` matches the simulated one bit for bit.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{arg, Error, Result};
use crate::grid::TimeGrid;
use crate::path::{CadlagPath, Jump};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdatingKind {
    ProcessItself,
    IntegralToDate,
    SupremumToDate,
    MaxJumpToDate,
}

impl UpdatingKind {
    pub const ALL: [UpdatingKind; 4] =
        [UpdatingKind::ProcessItself, UpdatingKind::IntegralToDate, UpdatingKind::SupremumToDate, UpdatingKind::MaxJumpToDate];

    pub fn name(&self) -> &'static str {
        match self {
            UpdatingKind::ProcessItself => "process_itself",
            UpdatingKind::IntegralToDate => "integral_to_date",
            UpdatingKind::SupremumToDate => "supremum_to_date",
            UpdatingKind::MaxJumpToDate => "max_jump_to_date",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Argument(alloc::format!("unknown updating function `{name}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    None,
    /// `e₁ ≤ e₂`
    Ordered,
    /// `e₂ ≥ 0`
    SecondNonnegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    pub dim: usize,
    pub constraint: Constraint,
}

impl StateSpace {
    pub fn contains(&self, e: &[f64]) -> bool {
        if e.len() != self.dim || e.iter().any(|v| v.is_nan()) {
            return false;
        }
        match self.constraint {
            Constraint::None => true,
            Constraint::Ordered => e[0] <= e[1],
            Constraint::SecondNonnegative => e[1] >= 0.0,
        }
    }
}

/// Anything that maps `(e, x)` to a state path; the axiom checker works on
/// this trait so that rules violating the axioms can be exercised too.
pub trait UpdatingRule {
    fn state_space(&self) -> StateSpace;
    fn increment_dim(&self) -> usize;
    fn apply(&self, e: &[f64], x: &CadlagPath) -> Result<CadlagPath>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdatingFunction {
    kind: UpdatingKind,
    d: usize,
}

impl UpdatingFunction {
    pub fn builtin(kind: UpdatingKind, d: usize) -> Result<Self> {
        if d == 0 {
            return arg("increment dimension must be positive");
        }
        if kind != UpdatingKind::ProcessItself && d != 1 {
            return Err(Error::Argument(alloc::format!("{} is defined for scalar increments only", kind.name())));
        }
        Ok(Self { kind, d })
    }

    pub fn kind(&self) -> UpdatingKind {
        self.kind
    }

    pub fn name(&self) -> String {
        String::from(self.kind.name())
    }

    pub fn state_space(&self) -> StateSpace {
        match self.kind {
            UpdatingKind::ProcessItself => StateSpace { dim: self.d, constraint: Constraint::None },
            UpdatingKind::IntegralToDate => StateSpace { dim: 2, constraint: Constraint::None },
            UpdatingKind::SupremumToDate => StateSpace { dim: 2, constraint: Constraint::Ordered },
            UpdatingKind::MaxJumpToDate => StateSpace { dim: 2, constraint: Constraint::SecondNonnegative },
        }
    }

    pub fn increment_dim(&self) -> usize {
        self.d
    }

    pub fn state_dim(&self) -> usize {
        self.state_space().dim
    }

    /// One grid step: from the state `z_prev` at `t_{i-1}` to `z_next` at
    /// `t_i`, where `x_next = x(t_i)` and `jumps` are the jumps of `x` inside
    /// the step. With `dt = 0` this gives the state right after a partial
    /// sequence of jumps.
    pub fn step<'a>(
        &self,
        e: &[f64],
        z_prev: &[f64],
        x_next: &[f64],
        jumps: impl IntoIterator<Item = &'a [f64]>,
        dt: f64,
        z_next: &mut [f64],
    ) {
        match self.kind {
            UpdatingKind::ProcessItself => {
                for k in 0..self.d {
                    z_next[k] = e[k] + x_next[k];
                }
            }
            UpdatingKind::IntegralToDate => {
                z_next[0] = e[0] + x_next[0];
                z_next[1] = z_prev[1] + z_prev[0] * dt;
            }
            UpdatingKind::SupremumToDate => {
                z_next[0] = e[0] + x_next[0];
                z_next[1] = z_prev[1].max(z_next[0]);
            }
            UpdatingKind::MaxJumpToDate => {
                z_next[0] = e[0] + x_next[0];
                z_next[1] = jumps.into_iter().fold(z_prev[1], |m, j| m.max(j[0]));
            }
        }
    }

    pub fn apply(&self, e: &[f64], x: &CadlagPath) -> Result<CadlagPath> {
        if x.dim() != self.d {
            return arg("increment path has the wrong dimension");
        }
        if !self.state_space().contains(e) {
            return arg("initial state violates the state-space constraint");
        }
        if x.at(0).iter().any(|v| *v != 0.0) {
            return arg("increment path must start at zero");
        }
        let grid = *x.grid();
        let m = self.state_dim();
        let mut values = Vec::with_capacity(grid.len() * m);
        values.extend_from_slice(e);
        let mut next = alloc::vec![0.0; m];
        for i in 1..grid.len() {
            let prev = &values[(i - 1) * m..i * m];
            self.step(e, prev, x.at(i), x.jumps_at(i).iter().map(|j| j.delta.as_slice()), grid.dt(), &mut next);
            values.extend_from_slice(&next);
        }
        Ok(CadlagPath::from_parts_unchecked(grid, m, values, Vec::new()))
    }
}

impl UpdatingRule for UpdatingFunction {
    fn state_space(&self) -> StateSpace {
        UpdatingFunction::state_space(self)
    }

    fn increment_dim(&self) -> usize {
        self.d
    }

    fn apply(&self, e: &[f64], x: &CadlagPath) -> Result<CadlagPath> {
        UpdatingFunction::apply(self, e, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    InitialCondition,
    Nonanticipativity,
    Flow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomWitness {
    pub axiom: Axiom,
    pub trial: usize,
    pub t: f64,
    pub e: Vec<f64>,
    pub x: CadlagPath,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AxiomReport {
    pub trials: usize,
    pub checks: usize,
    pub initial_violations: usize,
    pub nonanticipativity_violations: usize,
    pub flow_violations: usize,
    pub witnesses: Vec<AxiomWitness>,
}

impl AxiomReport {
    pub fn violations(&self) -> usize {
        self.initial_violations + self.nonanticipativity_violations + self.flow_violations
    }
}

const MAX_WITNESSES: usize = 8;

fn lattice<R: Rng>(rng: &mut R, lo: i32, hi: i32) -> f64 {
    rng.random_range(lo..=hi) as f64 / 8.0
}

/// Random piecewise-constant path on a dyadic grid with dyadic values, so
/// every built-in evaluates without rounding.
fn random_increment_path<R: Rng>(rng: &mut R, d: usize) -> CadlagPath {
    let n = rng.random_range(1..=24usize);
    let grid = TimeGrid::new(0.125, n).expect("positive step count");
    let mut values = alloc::vec![0.0; d];
    let mut jumps = Vec::new();
    let mut cur = alloc::vec![0.0; d];
    for i in 1..=n {
        if rng.random::<f64>() < 0.5 {
            for v in cur.iter_mut() {
                *v += lattice(rng, -8, 8);
            }
        }
        let n_jumps = match rng.random::<f64>() {
            u if u < 0.6 => 0,
            u if u < 0.9 => 1,
            _ => 2,
        };
        for _ in 0..n_jumps {
            let mut delta: Vec<f64> = (0..d).map(|_| lattice(rng, -16, 16)).collect();
            if delta.iter().all(|v| *v == 0.0) {
                delta[0] = 0.125;
            }
            for (v, j) in cur.iter_mut().zip(&delta) {
                *v += j;
            }
            jumps.push(Jump { index: i, delta });
        }
        values.extend_from_slice(&cur);
    }
    CadlagPath::new(grid, d, values, jumps).expect("generated path is valid")
}

fn random_state<R: Rng>(rng: &mut R, space: &StateSpace) -> Vec<f64> {
    let mut e: Vec<f64> = (0..space.dim).map(|_| lattice(rng, -16, 16)).collect();
    match space.constraint {
        Constraint::None => {}
        Constraint::Ordered => {
            if e[0] > e[1] {
                e.swap(0, 1);
            }
        }
        Constraint::SecondNonnegative => e[1] = libm::fabs(e[1]),
    }
    e
}

/// Check the initial-condition, nonanticipativity and flow identities on
/// `trials` random grid paths, each at `times_per_trial` random grid times.
/// Equality is exact.
pub fn check_axioms<U: UpdatingRule + ?Sized>(rule: &U, trials: usize, times_per_trial: usize, seed: u64) -> AxiomReport {
    let mut report = AxiomReport { trials, ..AxiomReport::default() };
    let space = rule.state_space();
    for trial in 0..trials {
        let mut rng = substream(seed, Domain::Axioms, trial as u64);
        let x = random_increment_path(&mut rng, rule.increment_dim());
        let e = random_state(&mut rng, &space);
        let witness = |axiom: Axiom, t: f64, report: &mut AxiomReport| {
            match axiom {
                Axiom::InitialCondition => report.initial_violations += 1,
                Axiom::Nonanticipativity => report.nonanticipativity_violations += 1,
                Axiom::Flow => report.flow_violations += 1,
            }
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(AxiomWitness { axiom, trial, t, e: e.clone(), x: x.clone() });
            }
        };
        let z = match rule.apply(&e, &x) {
            Ok(z) => z,
            Err(_) => {
                witness(Axiom::InitialCondition, 0.0, &mut report);
                continue;
            }
        };
        report.checks += 1;
        if z.at(0) != e.as_slice() {
            witness(Axiom::InitialCondition, 0.0, &mut report);
        }
        let n = x.grid().n_steps();
        for _ in 0..times_per_trial {
            let k = rng.random_range(0..n);
            let t = x.grid().time(k);
            report.checks += 2;
            let lhs = z.stopped(k);
            let ok = rule.apply(&e, &x.stopped(k)).map(|r| r.stopped(k) == lhs).unwrap_or(false);
            if !ok {
                witness(Axiom::Nonanticipativity, t, &mut report);
            }
            let lhs = z.shifted(k);
            let ok = rule.apply(z.at(k), &x.differenced(k)).map(|r| r == lhs).unwrap_or(false);
            if !ok {
                witness(Axiom::Flow, t, &mut report);
            }
        }
    }
    report
}
