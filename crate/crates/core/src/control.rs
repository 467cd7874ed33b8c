//! Optimal control with a delayed state: minimise `∫ F` subject to `G = 0`
//! pointwise, through the augmented index `F + λ G`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Segment;
use crate::optim::Termination;
use crate::variational::{
    el_residual_with, solve_with, transversality_residual_with, Augmented, DelayedProblem,
    ElOptions, ElResidual, Integrand, SolveOptions, Trajectory, TransversalityForm, Variation,
    Weighted,
};

/// A delayed problem with a control channel, a performance integrand `F` and
/// a constraint `G`, both over the problem's channels.
#[derive(Clone)]
pub struct ControlProblem {
    base: DelayedProblem,
    f: Arc<dyn Integrand>,
    g: Arc<dyn Integrand>,
}

impl std::fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ControlProblem")
            .field("base", &self.base)
            .field("channels", &self.f.channels())
            .finish()
    }
}

impl ControlProblem {
    pub fn new(base: DelayedProblem, f: Arc<dyn Integrand>, g: Arc<dyn Integrand>) -> Result<Self> {
        if !base.has_control() {
            return Err(Error::Problem(
                "a control problem needs the u channel".into(),
            ));
        }
        let names = base.layout().names();
        for (what, l) in [("F", &f), ("G", &g)] {
            if l.channels() != names.as_slice() {
                return Err(Error::Problem(format!(
                    "{what} channels {:?} do not match the problem channels {names:?}",
                    l.channels()
                )));
            }
        }
        let base = base.with_integrand(f.clone())?;
        Ok(Self { base, f, g })
    }

    pub fn base(&self) -> &DelayedProblem {
        &self.base
    }

    pub fn f(&self) -> &Arc<dyn Integrand> {
        &self.f
    }

    pub fn g(&self) -> &Arc<dyn Integrand> {
        &self.g
    }

    /// Same problem with `G` replaced by `c·G`.
    pub fn with_constraint(&self, g: Arc<dyn Integrand>) -> Result<Self> {
        Self::new(self.base.clone(), self.f.clone(), g)
    }

    /// `G` at every active node.
    pub fn constraint_values(&self, y: &Trajectory, u: &[f64]) -> Result<Vec<f64>> {
        let table = self.base.table(y, Some(u))?;
        (0..table.nodes())
            .map(|i| self.g.value(i, table.row(i)))
            .collect()
    }

    fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        let n = self.base.grid().n_active();
        if lambda.len() != n {
            return Err(Error::Shape(format!(
                "lambda has {} samples, the active grid {n}",
                lambda.len()
            )));
        }
        Ok(())
    }
}

/// State, control and multiplier; `u` and `lambda` live on the active grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSolution {
    pub y: Trajectory,
    pub u: Segment,
    pub lambda: Segment,
}

impl ControlSolution {
    /// Straight-line state, zero control and multiplier.
    pub fn initial(p: &ControlProblem) -> Result<Self> {
        let g = p.base.grid();
        let zero = Segment::new(g.a(), g.h(), vec![0.0; g.n_active()])?;
        Ok(Self {
            y: p.base.initial_guess()?,
            u: zero.clone(),
            lambda: zero,
        })
    }

    fn check(&self, p: &ControlProblem) -> Result<()> {
        let g = p.base.grid();
        for (name, s) in [("u", &self.u), ("lambda", &self.lambda)] {
            if s.len() != g.n_active()
                || (s.start() - g.a()).abs() > 1e-12
                || (s.step() - g.h()).abs() > 1e-15
            {
                return Err(Error::Shape(format!(
                    "{name} must be sampled on the active grid"
                )));
            }
        }
        p.base.check_trajectory(&self.y)
    }
}

/// `F + λ G` as an integrand.
pub fn augmented_index(p: &ControlProblem, lambda: &[f64]) -> Result<Augmented> {
    p.check_lambda(lambda)?;
    Ok(Augmented {
        f: p.f.clone(),
        g: p.g.clone(),
        lambda: lambda.to_vec(),
        mu: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcResidual {
    pub el: ElResidual,
    /// `∂F/∂u + λ ∂G/∂u` at every active node.
    pub stationarity_u: Segment,
}

/// Necessary-condition residuals of `(y, u, λ)` with default options.
pub fn oc_residual(p: &ControlProblem, s: &ControlSolution) -> Result<OcResidual> {
    oc_residual_with(p, s, &ElOptions::default())
}

pub fn oc_residual_with(
    p: &ControlProblem,
    s: &ControlSolution,
    opts: &ElOptions,
) -> Result<OcResidual> {
    s.check(p)?;
    let aug = augmented_index(p, s.lambda.values())?;
    let el = el_residual_with(&p.base, &aug, &s.y, Some(s.u.values()), opts)?;
    let table = p.base.table(&s.y, Some(s.u.values()))?;
    let uc = p.base.layout().u().expect("checked at construction");
    let st = (0..table.nodes())
        .map(|i| aug.partial(i, uc, table.row(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OcResidual {
        el,
        stationarity_u: s.u.with_values(st)?,
    })
}

/// `el_residual(F)` and `el_residual(λ G)` separately; their sum is the
/// Euler-Lagrange part of [`oc_residual`].
pub fn oc_residual_parts(
    p: &ControlProblem,
    s: &ControlSolution,
    opts: &ElOptions,
) -> Result<(ElResidual, ElResidual)> {
    s.check(p)?;
    let u = Some(s.u.values());
    let f = el_residual_with(&p.base, &*p.f, &s.y, u, opts)?;
    let lg = Weighted {
        weights: s.lambda.values().to_vec(),
        inner: p.g.clone(),
    };
    let g = el_residual_with(&p.base, &lg, &s.y, u, opts)?;
    Ok((f, g))
}

/// Transversality residual of the augmented index.
pub fn oc_transversality(p: &ControlProblem, s: &ControlSolution, eta: &Variation) -> Result<f64> {
    s.check(p)?;
    let aug = augmented_index(p, s.lambda.values())?;
    let terms = transversality_residual_with(
        &p.base,
        &aug,
        &s.y,
        Some(s.u.values()),
        eta,
        TransversalityForm::default(),
    )?;
    Ok(terms.iter().map(|t| t.value).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcOptions {
    pub inner: SolveOptions,
    pub mu0: f64,
    /// Penalty growth factor.
    pub growth: f64,
    /// The penalty grows unless `‖G‖∞` falls below this fraction of its
    /// previous value.
    pub required_decrease: f64,
    pub tol_g: f64,
    pub max_outer: usize,
}

impl Default for OcOptions {
    fn default() -> Self {
        Self {
            inner: SolveOptions::default(),
            mu0: 10.0,
            growth: 10.0,
            required_decrease: 0.25,
            tol_g: 1e-6,
            max_outer: 30,
        }
    }
}

/// One outer iteration; `mu` is the penalty the inner solve used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcLogRow {
    pub outer_iter: usize,
    pub mu: f64,
    pub norm_g: f64,
    pub j: f64,
    pub j_hat: f64,
}

impl OcLogRow {
    pub const CSV_HEADER: &'static str = "outer_iter,mu,norm_G,J,J_hat";
}

#[derive(Debug, Clone)]
pub struct OcResult {
    pub solution: ControlSolution,
    pub log: Vec<OcLogRow>,
    /// Feasible within `tol_g` and the last inner solve was stationary.
    pub converged: bool,
    pub norm_g: f64,
    pub inner_termination: Termination,
    pub certificate: Vec<f64>,
}

/// Augmented-Lagrangian loop: each outer iteration minimises
/// `F + λ G + (μ/2) G²` over `(y, u)`, then sets `λ ← λ + μ G`.
pub fn solve_oc(p: &ControlProblem, init: &ControlSolution, opts: &OcOptions) -> Result<OcResult> {
    init.check(p)?;
    if !(opts.mu0 > 0.0) || !(opts.growth >= 1.0) || !(opts.tol_g > 0.0) {
        return Err(Error::Domain(
            "penalty and tolerance parameters must be positive".into(),
        ));
    }
    let mut y = init.y.clone();
    let mut u = init.u.values().to_vec();
    let mut lambda = init.lambda.values().to_vec();
    let mut mu = opts.mu0;
    let mut log = Vec::new();
    let mut prev = f64::INFINITY;
    let mut last = None;
    for outer in 1..=opts.max_outer {
        let aug = Augmented {
            f: p.f.clone(),
            g: p.g.clone(),
            lambda: lambda.clone(),
            mu,
        };
        let sol = solve_with(&p.base, &aug, &y, Some(&u), &opts.inner)?;
        y = sol.y.clone();
        u = sol.u.clone().expect("control problems carry u");
        let g = p.constraint_values(&y, &u)?;
        let norm_g = g.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let j = p.base.evaluate_for(&*p.f, &y, Some(&u))?;
        let j_hat = p
            .base
            .evaluate_for(&augmented_index(p, &lambda)?, &y, Some(&u))?;
        log.push(OcLogRow {
            outer_iter: outer,
            mu,
            norm_g,
            j,
            j_hat,
        });
        for (l, gv) in lambda.iter_mut().zip(&g) {
            *l += mu * gv;
        }
        let done = norm_g <= opts.tol_g && sol.stationary;
        last = Some((sol, norm_g));
        if done {
            break;
        }
        if norm_g > opts.required_decrease * prev {
            mu *= opts.growth;
        }
        prev = norm_g;
    }
    let (sol, norm_g) = last.ok_or_else(|| Error::Domain("max_outer must be at least 1".into()))?;
    let grid = p.base.grid();
    Ok(OcResult {
        solution: ControlSolution {
            y,
            u: Segment::new(grid.a(), grid.h(), u)?,
            lambda: Segment::new(grid.a(), grid.h(), lambda)?,
        },
        log,
        converged: norm_g <= opts.tol_g && sol.stationary,
        norm_g,
        inner_termination: sol.termination,
        certificate: sol.certificate,
    })
}
