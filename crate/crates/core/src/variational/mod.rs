//! The delayed fractional variational problem: functional, first variation,
//! Euler-Lagrange and transversality residuals, and a direct solver.
//!
//! The functional is transcribed on the grid as a trapezoid sum of the
//! integrand over the active nodes. Fractional channels come from the
//! operators of a [`Scheme`] (L1 Caputo by default), classical derivatives
//! from the summation-by-parts difference. The residuals are evaluated
//! independently with the collocated operators of [`crate::fracops`].

mod channels;
mod residual;
mod solver;
mod transcription;

pub use channels::{Augmented, ChannelLayout, ChannelTable, Integrand, Scheme, Weighted};
pub use residual::{
    el_residual, el_residual_with, transversality_residual, transversality_residual_with, BetaTail,
    BoundaryTerm, ElOptions, ElResidual, TransversalityForm,
};
pub use solver::{solve, solve_with, variation_basis, Solution, SolveOptions};
pub(crate) use transcription::Transcription;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fd;
use crate::fracops::is_integer_order;
use crate::grid::{trapezoid_weights, Grid, SampledFunction};

/// Data of the delayed problem: orders, terminal values, history and the
/// integrand.
#[derive(Clone)]
pub struct DelayedProblem {
    grid: Grid,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    k: usize,
    d: usize,
    terminal: Vec<Vec<f64>>,
    history: Vec<Vec<f64>>,
    integrand: Arc<dyn Integrand>,
    scheme: Scheme,
    control: bool,
}

impl std::fmt::Debug for DelayedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DelayedProblem")
            .field("grid", &self.grid)
            .field("alphas", &self.alphas)
            .field("betas", &self.betas)
            .field("k", &self.k)
            .field("d", &self.d)
            .field("terminal", &self.terminal)
            .field("channels", &self.integrand.channels())
            .field("scheme", &self.scheme)
            .finish()
    }
}

/// Builder for [`DelayedProblem`].
#[derive(Clone)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub k: usize,
    pub d: usize,
    /// `terminal[z][l] = y_z^(l)(b)`, `l < k`.
    pub terminal: Vec<Vec<f64>>,
    /// `history[z]` on the nodes of `[a - tau, a]`.
    pub history: Vec<Vec<f64>>,
    pub integrand: Arc<dyn Integrand>,
    pub scheme: Scheme,
    pub control: bool,
}

impl ProblemSpec {
    /// Channel names the integrand must declare.
    pub fn channel_names(&self) -> Vec<String> {
        self.layout().names()
    }

    fn layout(&self) -> ChannelLayout {
        ChannelLayout {
            d: self.d,
            n_left: self.alphas.len(),
            n_right: self.betas.len(),
            k: self.k,
            control: self.control,
        }
    }

    pub fn build(self) -> Result<DelayedProblem> {
        let bad = |m: String| Err(Error::Problem(m));
        if self.d == 0 {
            return bad("number of components d must be at least 1".into());
        }
        for (name, orders) in [("alphas", &self.alphas), ("betas", &self.betas)] {
            for &o in orders.iter() {
                if !(o > 0.0) || !o.is_finite() || is_integer_order(o) {
                    return bad(format!(
                        "{name}: order {o} must be positive and non-integer"
                    ));
                }
            }
        }
        let max = self
            .alphas
            .iter()
            .chain(&self.betas)
            .cloned()
            .fold(f64::NAN, f64::max);
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !max.is_nan() && !((self.k - 1) as f64 <= max && max < self.k as f64) {
            return bad(format!(
                "orders require k - 1 <= max order < k, got max order {max} with k = {}",
                self.k
            ));
        }
        let n = self.grid.n_active();
        if n < 2 * self.k + 6 {
            return bad(format!(
                "grid has {n} active nodes, too few for k = {}",
                self.k
            ));
        }
        if self.terminal.len() != self.d || self.terminal.iter().any(|c| c.len() != self.k) {
            return bad(format!(
                "terminal values must be {} lists of length k = {}",
                self.d, self.k
            ));
        }
        let nh = self.grid.n_history() + 1;
        if self.history.len() != self.d || self.history.iter().any(|h| h.len() != nh) {
            return bad(format!(
                "history must be {} lists of {nh} samples on [a - tau, a]",
                self.d
            ));
        }
        if self
            .history
            .iter()
            .flatten()
            .chain(self.terminal.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return bad("history and terminal values must be finite".into());
        }
        let layout = self.layout();
        let names = layout.names();
        if self.integrand.channels() != names.as_slice() {
            return bad(format!(
                "integrand channels [{}] do not match the argument list [{}]",
                self.integrand.channels().join(", "),
                names.join(", ")
            ));
        }
        Ok(DelayedProblem {
            grid: self.grid,
            alphas: self.alphas,
            betas: self.betas,
            k: self.k,
            d: self.d,
            terminal: self.terminal,
            history: self.history,
            integrand: self.integrand,
            scheme: self.scheme,
            control: self.control,
        })
    }
}

/// Samples `f` on the history nodes `[a - tau, a]` of `grid`.
pub fn sample_history(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..=grid.n_history()).map(|i| f(grid.t(i))).collect()
}

/// Solves `A x = rhs` for a small dense system by Gaussian elimination with
/// partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[piv][col] == 0.0 {
            return Err(Error::Problem("singular terminal-condition system".into()));
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (r, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            rhs[col + 1 + r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / a[r][r];
    }
    Ok(x)
}

impl DelayedProblem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terminal(&self) -> &[Vec<f64>] {
        &self.terminal
    }

    pub fn history(&self) -> &[Vec<f64>] {
        &self.history
    }

    pub fn integrand(&self) -> &Arc<dyn Integrand> {
        &self.integrand
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn has_control(&self) -> bool {
        self.control
    }

    pub fn layout(&self) -> ChannelLayout {
        ChannelLayout {
            d: self.d,
            n_left: self.alphas.len(),
            n_right: self.betas.len(),
            k: self.k,
            control: self.control,
        }
    }

    /// Same problem with another integrand over the same channels.
    pub fn with_integrand(&self, integrand: Arc<dyn Integrand>) -> Result<Self> {
        if integrand.channels() != self.integrand.channels() {
            return Err(Error::Problem(
                "replacement integrand has different channels".into(),
            ));
        }
        Ok(Self {
            integrand,
            ..self.clone()
        })
    }

    /// Same data on another grid (history resampled by `history`).
    pub fn regridded(&self, grid: Grid, history: Vec<Vec<f64>>) -> Result<Self> {
        ProblemSpec {
            grid,
            alphas: self.alphas.clone(),
            betas: self.betas.clone(),
            k: self.k,
            d: self.d,
            terminal: self.terminal.clone(),
            history,
            integrand: self.integrand.clone(),
            scheme: self.scheme.clone(),
            control: self.control,
        }
        .build()
    }

    /// Values of the last `k` active nodes of component `z` implied by the
    /// terminal conditions.
    pub fn terminal_nodes(&self, z: usize) -> Result<Vec<f64>> {
        let n = self.grid.n_active();
        let k = self.k;
        let h = self.grid.h();
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|l| fd::sbp_last_row(n, h, l)[n - k..].to_vec())
            .collect();
        solve_dense(rows, self.terminal[z].clone())
    }

    /// Number of free active nodes per component: all but `a` and the last
    /// `k`.
    pub fn free_nodes(&self) -> usize {
        self.grid.n_active() - 1 - self.k
    }

    /// Straight line from `y(a)` to the terminal nodes, with the history.
    pub fn initial_guess(&self) -> Result<Trajectory> {
        let g = self.grid;
        let nh = g.n_history();
        let n = g.n_active();
        let mut comps = Vec::with_capacity(self.d);
        for z in 0..self.d {
            let tail = self.terminal_nodes(z)?;
            let mut v = vec![0.0; g.len()];
            v[..=nh].copy_from_slice(&self.history[z]);
            let ya = self.history[z][nh];
            let first_fixed = n - self.k;
            let yb = tail[0];
            for j in 1..first_fixed {
                let s = j as f64 / first_fixed as f64;
                v[nh + j] = ya + (yb - ya) * s;
            }
            v[nh + first_fixed..].copy_from_slice(&tail);
            comps.push(SampledFunction::new(g, v)?);
        }
        Trajectory::new(comps)
    }

    /// Checks that `y` lives on the problem grid, has `d` components and
    /// carries the history.
    pub fn check_trajectory(&self, y: &Trajectory) -> Result<()> {
        if y.d() != self.d {
            return Err(Error::Shape(format!(
                "trajectory has {} components, problem has {}",
                y.d(),
                self.d
            )));
        }
        if *y.grid() != self.grid {
            return Err(Error::Shape(
                "trajectory grid differs from the problem grid".into(),
            ));
        }
        for (z, (c, h)) in y.components().iter().zip(&self.history).enumerate() {
            for (i, (v, w)) in c.history_values().iter().zip(h).enumerate() {
                if (v - w).abs() > 1e-12 * w.abs().max(1.0) {
                    return Err(Error::Admissibility(format!(
                        "component {} differs from the history at t = {}: {v} vs {w}",
                        z + 1,
                        self.grid.t(i)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks the variation conditions: zero on `[a - tau, a]`, and zero on
    /// the last `k` active nodes (so every discrete `eta^(l)(b)`, `l < k`,
    /// vanishes).
    pub fn check_variation(&self, eta: &Variation) -> Result<()> {
        let e = &eta.0;
        if e.d() != self.d || *e.grid() != self.grid {
            return Err(Error::Shape("variation does not match the problem".into()));
        }
        let n = self.grid.n_active();
        for (z, c) in e.components().iter().enumerate() {
            let hist = c.history_values();
            let act = c.active_values();
            if hist.iter().chain(&act[n - self.k..]).any(|v| *v != 0.0) {
                return Err(Error::Admissibility(format!(
                    "variation component {} must vanish on [a - tau, a] and on the last {} nodes",
                    z + 1,
                    self.k
                )));
            }
        }
        Ok(())
    }

    /// Channel table of `y` (and the control `u` when present).
    pub fn table(&self, y: &Trajectory, u: Option<&[f64]>) -> Result<ChannelTable> {
        let layout = self.layout();
        let n = self.grid.n_active();
        let mut table = ChannelTable::new(n, layout.len());
        for i in 0..n {
            table.set(i, layout.t(), self.grid.active_t(i));
        }
        match (layout.u(), u) {
            (Some(ch), Some(u)) if u.len() == n => {
                for (i, v) in u.iter().enumerate() {
                    table.set(i, ch, *v);
                }
            }
            (Some(_), _) => {
                return Err(Error::Shape(format!(
                    "control needs {n} samples on the active grid"
                )))
            }
            (None, Some(_)) => return Err(Error::Shape("problem has no control channel".into())),
            (None, None) => {}
        }
        for z in 0..self.d {
            let cols = channels::component_channels(
                &self.grid,
                &self.scheme,
                &self.alphas,
                &self.betas,
                self.k,
                y.component(z).values(),
            )?;
            for (c, col) in cols.iter().enumerate() {
                let ch = layout.local_to_channel(z, c);
                for (i, v) in col.iter().enumerate() {
                    table.set(i, ch, *v);
                }
            }
        }
        Ok(table)
    }

    /// Trapezoid sum of the integrand over the rows of `table`.
    pub fn integrate(&self, table: &ChannelTable) -> Result<f64> {
        integrate_with(&*self.integrand, table, self.grid.h())
    }

    /// `J(y)` for problems without control.
    #[allow(non_snake_case)]
    pub fn evaluate_J(&self, y: &Trajectory) -> Result<f64> {
        self.evaluate(y, None)
    }

    /// `J(y, u)`.
    pub fn evaluate(&self, y: &Trajectory, u: Option<&[f64]>) -> Result<f64> {
        self.evaluate_for(&*self.integrand, y, u)
    }

    /// `∫ l` along `(y, u)` for another integrand over the same channels.
    pub fn evaluate_for(
        &self,
        l: &dyn Integrand,
        y: &Trajectory,
        u: Option<&[f64]>,
    ) -> Result<f64> {
        self.check_trajectory(y)?;
        let table = self.table(y, u)?;
        integrate_with(l, &table, self.grid.h())
    }

    /// Central difference `[J(y + eps eta) - J(y - eps eta)] / (2 eps)`.
    pub fn first_variation(&self, y: &Trajectory, eta: &Variation, eps: f64) -> Result<f64> {
        self.first_variation_with(y, None, eta, None, eps)
    }

    /// First variation in the joint direction `(eta, nu)`; `nu` perturbs the
    /// control.
    pub fn first_variation_with(
        &self,
        y: &Trajectory,
        u: Option<&[f64]>,
        eta: &Variation,
        nu: Option<&[f64]>,
        eps: f64,
    ) -> Result<f64> {
        self.first_variation_for(&*self.integrand, y, u, eta, nu, eps)
    }

    /// First variation of `∫ l`.
    pub fn first_variation_for(
        &self,
        l: &dyn Integrand,
        y: &Trajectory,
        u: Option<&[f64]>,
        eta: &Variation,
        nu: Option<&[f64]>,
        eps: f64,
    ) -> Result<f64> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("eps = {eps} must be positive")));
        }
        self.check_variation(eta)?;
        let shift = |s: f64| -> Result<f64> {
            let yy = y.add_scaled(&eta.0, s)?;
            let uu = match (u, nu) {
                (Some(u), Some(nu)) => {
                    Some(u.iter().zip(nu).map(|(a, b)| a + s * b).collect::<Vec<_>>())
                }
                (Some(u), None) => Some(u.to_vec()),
                (None, Some(_)) => {
                    return Err(Error::Shape("control direction without control".into()))
                }
                (None, None) => None,
            };
            self.evaluate_for(l, &yy, uu.as_deref())
        };
        Ok((shift(eps)? - shift(-eps)?) / (2.0 * eps))
    }
}

pub(crate) fn integrate_with(l: &dyn Integrand, table: &ChannelTable, h: f64) -> Result<f64> {
    let n = table.nodes();
    let w = trapezoid_weights(n, h);
    let mut sum = 0.0;
    for (i, wi) in w.iter().enumerate() {
        sum += wi * l.value(i, table.row(i))?;
    }
    Ok(sum)
}

/// The `d` state components on the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    components: Vec<SampledFunction>,
}

impl Trajectory {
    pub fn new(components: Vec<SampledFunction>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Shape(
                "a trajectory needs at least one component".into(),
            ));
        };
        let g = *first.grid();
        if components.iter().any(|c| *c.grid() != g) {
            return Err(Error::Shape(
                "trajectory components live on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn from_fn(grid: Grid, d: usize, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        Self::new(
            (0..d)
                .map(|z| SampledFunction::from_fn(grid, |t| f(z, t)))
                .collect(),
        )
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn d(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SampledFunction] {
        &self.components
    }

    pub fn component(&self, z: usize) -> &SampledFunction {
        &self.components[z]
    }

    pub fn component_mut(&mut self, z: usize) -> &mut SampledFunction {
        &mut self.components[z]
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Trajectory, s: f64) -> Result<Trajectory> {
        if other.d() != self.d() || other.grid() != self.grid() {
            return Err(Error::Shape("trajectories do not match".into()));
        }
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let v = a
                    .values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| x + s * y)
                    .collect();
                SampledFunction::new(*a.grid(), v)
            })
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(comps)
    }

    /// Every other node, if the grid can be coarsened.
    pub fn coarsened(&self) -> Option<Trajectory> {
        let g = self.grid().coarsened()?;
        let comps = self
            .components
            .iter()
            .map(|c| SampledFunction::new(g, c.values().iter().step_by(2).copied().collect()).ok())
            .collect::<Option<Vec<_>>>()?;
        Trajectory::new(comps).ok()
    }

    /// Rows `t,component,value` over the whole grid, history included,
    /// components 1-based.
    pub fn rows(&self) -> Vec<(f64, usize, f64)> {
        let g = self.grid();
        let mut out = Vec::new();
        for (z, c) in self.components.iter().enumerate() {
            for (i, v) in c.values().iter().enumerate() {
                out.push((g.t(i), z + 1, *v));
            }
        }
        out
    }
}

/// An admissible perturbation direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Variation(pub Trajectory);

impl Variation {
    /// Samples `f(z, t)` on the active interval and zeroes it where the
    /// problem requires it (history, `a`, last `k` nodes).
    pub fn projected(problem: &DelayedProblem, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let g = *problem.grid();
        let nh = g.n_history();
        let n = g.n_active();
        let mut t = Trajectory::from_fn(g, problem.d(), f)?;
        for z in 0..problem.d() {
            let v = t.component_mut(z).values_mut();
            v[..=nh].iter_mut().for_each(|x| *x = 0.0);
            v[nh + n - problem.k()..].iter_mut().for_each(|x| *x = 0.0);
        }
        Ok(Self(t))
    }

    /// Builds a variation from active-node values per component (the history
    /// part is zero).
    pub fn from_active(problem: &DelayedProblem, active: Vec<Vec<f64>>) -> Result<Self> {
        let g = *problem.grid();
        let nh = g.n_history();
        let comps = active
            .into_iter()
            .map(|a| {
                let mut v = vec![0.0; nh];
                v.extend(a);
                SampledFunction::new(g, v)
            })
            .collect::<Result<Vec<_>>>()?;
        let eta = Self(Trajectory::new(comps)?);
        problem.check_variation(&eta)?;
        Ok(eta)
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.0
    }

    pub fn zero(problem: &DelayedProblem) -> Self {
        Self::projected(problem, |_, _| 0.0).expect("zero variation is admissible")
    }
}

#[cfg(test)]
mod tests;
