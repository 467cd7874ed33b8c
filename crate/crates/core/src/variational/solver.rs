//! Direct minimisation of the transcribed functional.

use std::f64::consts::PI;

use crate::error::Result;
use crate::optim::{bfgs, BfgsOptions, IterRecord, Termination};

use super::{DelayedProblem, Integrand, Trajectory, Transcription, Variation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub bfgs: BfgsOptions,
    /// Bound on `|first_variation|` over the basis for the result to count
    /// as stationary.
    pub stationarity_tol: f64,
    /// Step of the first-variation central difference.
    pub variation_eps: f64,
    /// Basis variations per component in the certificate.
    pub basis_size: usize,
    /// The minimiser also stops once `‖∇J‖∞ ≤ gradient_floor · h`. Each
    /// gradient entry is about `h` times a pointwise residual, so this bounds
    /// that residual; it matters for warm starts, where the relative test
    /// alone asks for less than rounding.
    pub gradient_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            bfgs: BfgsOptions::default(),
            stationarity_tol: 1e-5,
            variation_eps: 1e-4,
            basis_size: 20,
            gradient_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub y: Trajectory,
    pub u: Option<Vec<f64>>,
    pub value: f64,
    pub termination: Termination,
    pub log: Vec<IterRecord>,
    /// First variation along each basis direction.
    pub certificate: Vec<f64>,
    pub stationary: bool,
    /// Stationary, and stopped before the iteration limit.
    pub converged: bool,
}

impl Solution {
    pub fn max_certificate(&self) -> f64 {
        self.certificate.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `sin(mπs)(1-s)^(k-1)`, `s = (t-a)/(b-a)`, `m = 1..=count`, for every
/// component, made admissible.
pub fn variation_basis(problem: &DelayedProblem, count: usize) -> Result<Vec<Variation>> {
    let g = problem.grid();
    let (a, b) = (g.a(), g.b());
    let k = problem.k() as i32;
    let mut out = Vec::with_capacity(count * problem.d());
    for z in 0..problem.d() {
        for m in 1..=count {
            out.push(Variation::projected(problem, |zz, t| {
                if zz != z || t < a {
                    return 0.0;
                }
                let s = (t - a) / (b - a);
                (m as f64 * PI * s).sin() * (1.0 - s).powi(k - 1)
            })?);
        }
    }
    Ok(out)
}

/// Minimises `J` from `y0` with default options.
pub fn solve(problem: &DelayedProblem, y0: &Trajectory) -> Result<Solution> {
    solve_with(
        problem,
        &**problem.integrand(),
        y0,
        None,
        &SolveOptions::default(),
    )
}

/// Minimises the transcribed integral of `l` (which must use the problem's
/// channels) from `(y0, u0)`.
pub fn solve_with(
    problem: &DelayedProblem,
    l: &dyn Integrand,
    y0: &Trajectory,
    u0: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<Solution> {
    problem.check_trajectory(y0)?;
    let tr = Transcription::new(problem)?;
    let x0 = tr.pack(y0, u0);
    let bfgs_opts = BfgsOptions {
        grad_atol: opts
            .bfgs
            .grad_atol
            .max(opts.gradient_floor * problem.grid().h()),
        ..opts.bfgs
    };
    let res = bfgs(
        |x| tr.objective(l, x),
        |x| tr.gradient(l, x),
        x0,
        &bfgs_opts,
    )?;
    let (y, u) = tr.unpack(&res.x)?;
    let certificate = variation_basis(problem, opts.basis_size)?
        .iter()
        .map(|eta| problem.first_variation_for(l, &y, u.as_deref(), eta, None, opts.variation_eps))
        .collect::<Result<Vec<_>>>()?;
    let stationary = certificate.iter().all(|v| v.abs() <= opts.stationarity_tol);
    Ok(Solution {
        y,
        u,
        value: res.value,
        termination: res.termination,
        log: res.log,
        certificate,
        stationary,
        converged: stationary && res.termination != Termination::MaxIterations,
    })
}
