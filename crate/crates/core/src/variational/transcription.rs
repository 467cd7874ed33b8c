//! Decision variables of the direct method and the finite-difference
//! gradient of the transcribed functional.
//!
//! The variables are the free active nodes of every component (all but `a`
//! and the last `k`), followed by the control at every active node when the
//! problem has one. The channel table is affine in the variables, so the
//! response of the table to one variable is precomputed once and a central
//! difference of `J` only needs the rows that variable touches.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{trapezoid_weights, SampledFunction};

use super::{channels, ChannelTable, DelayedProblem, Integrand, Trajectory};

/// Rows touched by one variable: `(node, [(channel, d channel / d x)])`.
type Response = Vec<(usize, Vec<(usize, f64)>)>;

pub(crate) struct Transcription<'a> {
    problem: &'a DelayedProblem,
    free: usize,
    tails: Vec<Vec<f64>>,
    /// Response to free node `j` (index `j - 1`), in local channel numbering.
    state_response: Vec<Response>,
    weights: Vec<f64>,
}

/// Relative step of the central difference in the gradient.
pub(crate) const GRADIENT_STEP: f64 = 1e-6;

impl<'a> Transcription<'a> {
    pub(crate) fn new(problem: &'a DelayedProblem) -> Result<Self> {
        let g = problem.grid();
        let nh = g.n_history();
        let free = problem.free_nodes();
        let tails = (0..problem.d())
            .map(|z| problem.terminal_nodes(z))
            .collect::<Result<Vec<_>>>()?;
        let state_response = (1..=free)
            .into_par_iter()
            .map(|j| {
                let mut unit = vec![0.0; g.len()];
                unit[nh + j] = 1.0;
                let cols = channels::component_channels(
                    g,
                    problem.scheme(),
                    problem.alphas(),
                    problem.betas(),
                    problem.k(),
                    &unit,
                )?;
                let mut resp: Response = Vec::new();
                for i in 0..g.n_active() {
                    let entries: Vec<(usize, f64)> = cols
                        .iter()
                        .enumerate()
                        .filter(|(_, col)| col[i] != 0.0)
                        .map(|(c, col)| (c, col[i]))
                        .collect();
                    if !entries.is_empty() {
                        resp.push((i, entries));
                    }
                }
                Ok(resp)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            problem,
            free,
            tails,
            state_response,
            weights: trapezoid_weights(g.n_active(), g.h()),
        })
    }

    pub(crate) fn n_state(&self) -> usize {
        self.free * self.problem.d()
    }

    pub(crate) fn n_vars(&self) -> usize {
        self.n_state()
            + if self.problem.has_control() {
                self.problem.grid().n_active()
            } else {
                0
            }
    }

    pub(crate) fn pack(&self, y: &Trajectory, u: Option<&[f64]>) -> Vec<f64> {
        let nh = self.problem.grid().n_history();
        let mut x = Vec::with_capacity(self.n_vars());
        for c in y.components() {
            x.extend_from_slice(&c.values()[nh + 1..=nh + self.free]);
        }
        if let Some(u) = u {
            x.extend_from_slice(u);
        }
        x
    }

    pub(crate) fn unpack(&self, x: &[f64]) -> Result<(Trajectory, Option<Vec<f64>>)> {
        let g = *self.problem.grid();
        let comps = (0..self.problem.d())
            .map(|z| {
                let mut v = self.problem.history()[z].clone();
                v.extend_from_slice(&x[z * self.free..(z + 1) * self.free]);
                v.extend_from_slice(&self.tails[z]);
                SampledFunction::new(g, v)
            })
            .collect::<Result<Vec<_>>>()?;
        let u = self
            .problem
            .has_control()
            .then(|| x[self.n_state()..].to_vec());
        Ok((Trajectory::new(comps)?, u))
    }

    pub(crate) fn table(&self, x: &[f64]) -> Result<ChannelTable> {
        let (y, u) = self.unpack(x)?;
        self.problem.table(&y, u.as_deref())
    }

    pub(crate) fn objective(&self, integrand: &dyn Integrand, x: &[f64]) -> Result<f64> {
        let table = self.table(x)?;
        super::integrate_with(integrand, &table, self.problem.grid().h())
    }

    /// Central differences of `J` in every variable.
    pub(crate) fn gradient(&self, integrand: &dyn Integrand, x: &[f64]) -> Result<Vec<f64>> {
        let table = self.table(x)?;
        let layout = self.problem.layout();
        let n_state = self.n_state();
        (0..self.n_vars())
            .into_par_iter()
            .map(|v| {
                let delta = GRADIENT_STEP * x[v].abs().max(1.0);
                let mut row = vec![0.0; table.width()];
                let mut diff =
                    |node: usize, entries: &mut dyn Iterator<Item = (usize, f64)>| -> Result<f64> {
                        row.copy_from_slice(table.row(node));
                        let base = row.clone();
                        let touched: Vec<(usize, f64)> = entries.collect();
                        for &(ch, s) in &touched {
                            row[ch] = base[ch] + delta * s;
                        }
                        let plus = integrand.value(node, &row)?;
                        for &(ch, s) in &touched {
                            row[ch] = base[ch] - delta * s;
                        }
                        let minus = integrand.value(node, &row)?;
                        Ok(self.weights[node] * (plus - minus))
                    };
                let mut sum = 0.0;
                if v < n_state {
                    let (z, j) = (v / self.free, v % self.free);
                    for (node, entries) in &self.state_response[j] {
                        let mut it = entries
                            .iter()
                            .map(|&(c, s)| (layout.local_to_channel(z, c), s))
                            .filter(|&(c, _)| integrand.uses(c))
                            .peekable();
                        if it.peek().is_some() {
                            sum += diff(*node, &mut it)?;
                        }
                    }
                } else {
                    let node = v - n_state;
                    let ch = layout
                        .u()
                        .expect("control variables imply a control channel");
                    sum += diff(node, &mut std::iter::once((ch, 1.0)))?;
                }
                Ok(sum / (2.0 * delta))
            })
            .collect()
    }
}
