//! Uniform grids on `[a - tau, b]` and sampled functions.

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a length is an integer number
/// of steps.
const ALIGN_TOL: f64 = 1e-9;

fn steps_in(length: f64, h: f64, what: &str) -> Result<usize> {
    let ratio = length / h;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > ALIGN_TOL * rounded.max(1.0) {
        return Err(Error::Grid(format!(
            "delay-grid alignment: {what} = {length} is not an integer multiple of h = {h}"
        )));
    }
    Ok(rounded as usize)
}

/// Uniform discretisation of `[a - tau, b]` with the delay aligned to the step.
///
/// Global node `i` sits at `a - tau + i * h`; the first `n_history` nodes form
/// the history segment `[a - tau, a)`, the remaining `n_active` nodes cover
/// `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    tau: f64,
    h: f64,
    n_active: usize,
    n_history: usize,
}

impl Grid {
    /// Builds a grid with `n_active` nodes on `[a, b]`.
    pub fn new(a: f64, b: f64, tau: f64, n_active: usize) -> Result<Self> {
        if n_active < 2 {
            return Err(Error::Grid(format!(
                "n_active = {n_active} must be at least 2"
            )));
        }
        let h = (b - a) / (n_active - 1) as f64;
        Self::build(a, b, tau, h, n_active)
    }

    /// Builds a grid from the step size; `b - a` and `tau` must both be
    /// integer multiples of `h`.
    pub fn with_step(a: f64, b: f64, tau: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Grid(format!("step h = {h} must be positive")));
        }
        let cells = steps_in(b - a, h, "b - a")?;
        Self::build(a, b, tau, (b - a) / cells as f64, cells + 1)
    }

    /// A grid without history segment, used when only the operators on
    /// `[a, b]` matter.
    pub fn undelayed(a: f64, b: f64, n_active: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Grid(format!("need a < b, got a = {a}, b = {b}")));
        }
        if n_active < 2 {
            return Err(Error::Grid(format!(
                "n_active = {n_active} must be at least 2"
            )));
        }
        Ok(Self {
            a,
            b,
            tau: 0.0,
            h: (b - a) / (n_active - 1) as f64,
            n_active,
            n_history: 0,
        })
    }

    fn build(a: f64, b: f64, tau: f64, h: f64, n_active: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Grid(format!("need a < b, got a = {a}, b = {b}")));
        }
        if !(tau > 0.0) {
            return Err(Error::Grid(format!("delay tau = {tau} must be positive")));
        }
        if tau >= b - a {
            return Err(Error::Grid(format!(
                "delay tau = {tau} must satisfy tau < b - a = {} (0 < tau < b - a)",
                b - a
            )));
        }
        let n_history = steps_in(tau, h, "tau")?;
        Ok(Self {
            a,
            b,
            tau: n_history as f64 * h,
            h,
            n_active,
            n_history,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn n_history(&self) -> usize {
        self.n_history
    }

    /// Total number of nodes, history included.
    pub fn len(&self) -> usize {
        self.n_history + self.n_active
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time of global node `i`.
    pub fn t(&self, i: usize) -> f64 {
        if i >= self.n_history {
            self.active_t(i - self.n_history)
        } else {
            self.a - (self.n_history - i) as f64 * self.h
        }
    }

    /// Time of active node `j` (node 0 is `a`).
    pub fn active_t(&self, j: usize) -> f64 {
        if j + 1 == self.n_active {
            self.b
        } else {
            self.a + j as f64 * self.h
        }
    }

    /// Active index of the split point `b - tau`.
    pub fn split_index(&self) -> usize {
        self.n_active - 1 - self.n_history
    }

    /// Active index of the node closest to `t`, if `t` is a node.
    pub fn active_index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.a) / self.h;
        let j = x.round();
        if (x - j).abs() <= 1e-8 * j.abs().max(1.0) && j >= 0.0 && (j as usize) < self.n_active {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Same domain with the step halved.
    pub fn refined(&self) -> Self {
        Self {
            h: self.h / 2.0,
            n_active: 2 * self.n_active - 1,
            n_history: 2 * self.n_history,
            ..*self
        }
    }

    /// Same domain with the step doubled, if the delay stays aligned.
    pub fn coarsened(&self) -> Option<Self> {
        if !(self.n_active - 1).is_multiple_of(2) || !self.n_history.is_multiple_of(2) {
            return None;
        }
        Some(Self {
            h: self.h * 2.0,
            n_active: (self.n_active - 1) / 2 + 1,
            n_history: self.n_history / 2,
            ..*self
        })
    }
}

/// Samples of a function on uniformly spaced nodes `start + i * step`.
///
/// This is the working type of every operator: sub-intervals such as
/// `[a, b - tau]` are just shorter segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl Segment {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Shape(format!(
                "segment step {step} must be positive"
            )));
        }
        if values.is_empty() {
            return Err(Error::Shape("segment has no samples".into()));
        }
        Ok(Self {
            start,
            step,
            values,
        })
    }

    /// Samples `f` on `n` equally spaced nodes of `[start, end]`.
    pub fn from_fn(start: f64, end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(end > start) {
            return Err(Error::Shape(format!(
                "cannot sample [{start}, {end}] with {n} nodes"
            )));
        }
        let step = (end - start) / (n - 1) as f64;
        let values = (0..n)
            .map(|i| {
                f(if i + 1 == n {
                    end
                } else {
                    start + i as f64 * step
                })
            })
            .collect();
        Self::new(start, step, values)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.t(self.values.len() - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.t(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same nodes, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                self.len(),
                values.len()
            )));
        }
        Ok(Self { values, ..*self })
    }

    /// Nodes `from..=to` as a new segment.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from > to || to >= self.len() {
            return Err(Error::Shape(format!(
                "slice {from}..={to} out of range for {} samples",
                self.len()
            )));
        }
        Ok(Self {
            start: self.t(from),
            step: self.step,
            values: self.values[from..=to].to_vec(),
        })
    }

    /// Reflection `t -> start + end - t` on the same nodes.
    pub fn mirrored(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, ..*self }
    }

    /// Index of the node at time `t`, if there is one.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.start) / self.step;
        let i = x.round();
        if (x - i).abs() <= 1e-8 * i.abs().max(1.0) && i >= 0.0 && (i as usize) < self.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn same_nodes(&self, other: &Segment) -> bool {
        self.len() == other.len()
            && (self.start - other.start).abs() <= 1e-12 * self.start.abs().max(1.0)
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }

    pub fn check_same_nodes(&self, other: &Segment) -> Result<()> {
        if self.same_nodes(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "segments differ: [{}, {}] with {} nodes vs [{}, {}] with {} nodes",
                self.start,
                self.end(),
                self.len(),
                other.start,
                other.end(),
                other.len()
            )))
        }
    }

    /// Composite trapezoid integral over the whole segment.
    pub fn trapezoid(&self) -> f64 {
        trapezoid(&self.values, self.step)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid weights for `n` nodes with step `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Values of a function on every node of a [`Grid`], history included.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid has {} nodes, got {} values",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.t(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn active_values(&self) -> &[f64] {
        &self.values[self.grid.n_history()..]
    }

    pub fn history_values(&self) -> &[f64] {
        &self.values[..=self.grid.n_history()]
    }

    /// The samples on `[a, b]`.
    pub fn active(&self) -> Segment {
        Segment {
            start: self.grid.a(),
            step: self.grid.h(),
            values: self.active_values().to_vec(),
        }
    }

    /// The samples on `[a - tau, a]` (the node at `a` is shared with the
    /// active segment).
    pub fn history(&self) -> Segment {
        Segment {
            start: self.grid.t(0),
            step: self.grid.h(),
            values: self.history_values().to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_must_be_aligned() {
        let err = Grid::with_step(0.0, 1.0, 0.1, 1.0 / 64.0).unwrap_err();
        assert!(err.to_string().contains("delay-grid alignment"));
        let g = Grid::with_step(0.0, 1.0, 0.25, 1.0 / 64.0).unwrap();
        assert_eq!(g.n_history(), 16);
        assert_eq!(g.n_active(), 65);
        assert_eq!(g.split_index(), 48);
        assert!((g.t(0) + 0.25).abs() < 1e-15);
        assert_eq!(g.t(g.len() - 1), 1.0);
    }

    #[test]
    fn delay_bounds() {
        assert!(Grid::with_step(0.0, 1.0, 1.0, 0.25).is_err());
        assert!(Grid::with_step(0.0, 1.0, 0.0, 0.25).is_err());
        assert!(Grid::with_step(1.0, 0.0, 0.25, 0.25).is_err());
    }

    #[test]
    fn refine_and_coarsen() {
        let g = Grid::new(0.0, 1.0, 0.25, 33).unwrap();
        let f = g.refined();
        assert_eq!(f.n_active(), 65);
        assert_eq!(f.n_history(), 16);
        assert_eq!(f.coarsened().unwrap(), g);
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let s = Segment::from_fn(0.0, 2.0, 9, |t| 3.0 * t + 1.0).unwrap();
        assert!((s.trapezoid() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn mirrored_reverses_values() {
        let s = Segment::from_fn(0.0, 1.0, 5, |t| t).unwrap();
        let m = s.mirrored();
        assert_eq!(m.values()[0], 1.0);
        assert_eq!(m.start(), 0.0);
    }
}
