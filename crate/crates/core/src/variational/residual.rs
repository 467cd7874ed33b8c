//! Euler-Lagrange and transversality residuals of the delayed problem.
//!
//! The partial derivatives of the integrand are sampled at the active nodes
//! from the transcription's channel table; the operators acting on them are
//! the collocated ones of [`crate::fracops`] on the sub-intervals
//! `[a, r]` and `[r, b]`, `r = b - tau`.

use crate::error::{Error, Result};
use crate::fd;
use crate::fracops::{interior_max_abs, layer_nodes, FracOpSpec, OpKind};
use crate::grid::Segment;
use crate::ibp::{rl_tail_kernel, TailSide};

use super::{ChannelLayout, ChannelTable, DelayedProblem, Integrand, Trajectory, Variation};

/// Which delayed boundary term the transversality expression uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransversalityForm {
    /// `(d^q ∂L/∂y^(p)(t-τ))(t+τ) · η^(p-q-1)(t)` on `[a, b-τ]`, the term
    /// produced by integrating the delayed channel by parts.
    #[default]
    Derived,
    /// `(d^q ∂L/∂y^(p)(t-τ))(t+τ) · η^(p-q-1)(t+τ)` on `[a, b-τ]`.
    ShiftedEta,
    /// `(d^q ∂L/∂y^(p)(t-τ))(t) · η^(p-q-1)(t+τ)` on `[a, b-τ]`.
    UnshiftedPartial,
}

/// Sign of the tail-kernel term of the right-sided orders on `[b-τ, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaTail {
    #[default]
    Subtract,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ElOptions {
    pub transversality: TransversalityForm,
    pub beta_tail: BetaTail,
}

/// Residuals per component on `[a, b-τ]` (inner) and `[b-τ, b]` (outer).
#[derive(Debug, Clone, PartialEq)]
pub struct ElResidual {
    pub inner: Vec<Segment>,
    pub outer: Vec<Segment>,
}

impl ElResidual {
    /// Max norm over both pieces and all components, excluding closed layers
    /// of width `layer` (default `4h`) at `a`, `b - τ` (both sides) and `b`.
    pub fn interior_max(&self, layer: Option<f64>) -> f64 {
        self.inner
            .iter()
            .chain(&self.outer)
            .map(|s| {
                let m = layer_nodes(s.step(), layer);
                interior_max_abs(s.values(), m, m)
            })
            .fold(0.0, f64::max)
    }

    /// `∫ inner·η + ∫ outer·η` by the trapezoid rule on each piece.
    pub fn pair(&self, eta: &Variation) -> Result<f64> {
        let mut sum = 0.0;
        for (z, (inn, out)) in self.inner.iter().zip(&self.outer).enumerate() {
            let e = eta.0.component(z).active();
            for piece in [inn, out] {
                let i0 = e.index_of(piece.start()).ok_or_else(|| {
                    Error::Shape("residual piece is off the variation grid".into())
                })?;
                let prod: Vec<f64> = piece
                    .values()
                    .iter()
                    .zip(&e.values()[i0..])
                    .map(|(r, v)| r * v)
                    .collect();
                sum += crate::grid::trapezoid(&prod, piece.step());
            }
        }
        Ok(sum)
    }

    /// Scales every sample by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let sc = |v: &Vec<Segment>| {
            v.iter()
                .map(|s| {
                    s.with_values(s.values().iter().map(|x| c * x).collect())
                        .expect("same length")
                })
                .collect()
        };
        Self {
            inner: sc(&self.inner),
            outer: sc(&self.outer),
        }
    }
}

/// One boundary evaluation of the transversality expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTerm {
    /// 1-based component.
    pub component: usize,
    pub p: usize,
    pub q: usize,
    pub delayed: bool,
    pub t: f64,
    pub value: f64,
}

/// Partial derivatives of the integrand at every active node, one column per
/// channel (all zero for channels the integrand ignores).
pub(crate) fn partial_columns(l: &dyn Integrand, table: &ChannelTable) -> Result<Vec<Vec<f64>>> {
    let n = table.nodes();
    (0..table.width())
        .map(|ch| {
            if !l.uses(ch) {
                return Ok(vec![0.0; n]);
            }
            (0..n).map(|i| l.partial(i, ch, table.row(i))).collect()
        })
        .collect()
}

fn op(kind: OpKind, order: f64, f: &Segment) -> Result<Segment> {
    Ok(FracOpSpec::spanning(kind, order, f)?.apply(f)?.samples)
}

fn sub(a: &Segment, b: &Segment) -> Result<Segment> {
    a.check_same_nodes(b)?;
    a.with_values(
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .collect(),
    )
}

fn add_into(acc: &mut [f64], v: &[f64], s: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

fn sign(p: usize) -> f64 {
    if p.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

struct Pieces {
    h: f64,
    a: f64,
    r: f64,
    /// Active index of `r`.
    s: usize,
    nh: usize,
    n: usize,
}

impl Pieces {
    fn of(problem: &DelayedProblem) -> Self {
        let g = problem.grid();
        Self {
            h: g.h(),
            a: g.a(),
            r: g.active_t(g.split_index()),
            s: g.split_index(),
            nh: g.n_history(),
            n: g.n_active(),
        }
    }

    fn left(&self, col: &[f64]) -> Result<Segment> {
        Segment::new(self.a, self.h, col[..=self.s].to_vec())
    }

    fn right(&self, col: &[f64]) -> Result<Segment> {
        Segment::new(self.r, self.h, col[self.s..].to_vec())
    }

    /// `col` on `[a + τ, b]`, relabelled onto `[a, r]`.
    fn shifted(&self, col: &[f64]) -> Result<Segment> {
        Segment::new(self.a, self.h, col[self.nh..].to_vec())
    }
}

pub(crate) fn residual_from_partials(
    problem: &DelayedProblem,
    partials: &[Vec<f64>],
    opts: &ElOptions,
) -> Result<ElResidual> {
    let pc = Pieces::of(problem);
    let layout = problem.layout();
    let mut inner = Vec::with_capacity(problem.d());
    let mut outer = Vec::with_capacity(problem.d());
    let beta_sign = match opts.beta_tail {
        BetaTail::Subtract => -1.0,
        BetaTail::Add => 1.0,
    };
    for z in 0..problem.d() {
        let mut ri = vec![0.0; pc.s + 1];
        let mut ro = vec![0.0; pc.n - pc.s];
        for (i, &alpha) in problem.alphas().iter().enumerate() {
            let p = &partials[layout.left(z, i)];
            let (pl, pr) = (pc.left(p)?, pc.right(p)?);
            let (w, tk) = right_tail(&pr, alpha, pc.a)?;
            acc_add(&mut ri, &op(OpKind::RlRight, alpha, &sub(&pl, &tk)?)?);
            add_into(&mut ro, w.values(), 1.0);
        }
        for (j, &beta) in problem.betas().iter().enumerate() {
            let p = &partials[layout.right(z, j)];
            let (pl, pr) = (pc.left(p)?, pc.right(p)?);
            let (w, tk) = left_tail(&pl, beta, problem.grid().b())?;
            add_into(&mut ri, w.values(), 1.0);
            let mut arg = pr.values().to_vec();
            add_into(&mut arg, tk.values(), beta_sign);
            acc_add(&mut ro, &op(OpKind::RlLeft, beta, &pr.with_values(arg)?)?);
        }
        for p in 0..=problem.k() {
            let col = &partials[layout.state(z, p)];
            let s = sign(p);
            add_into(
                &mut ri,
                &fd::derivative(pc.left(col)?.values(), pc.h, p)?,
                s,
            );
            add_into(
                &mut ro,
                &fd::derivative(pc.right(col)?.values(), pc.h, p)?,
                s,
            );
            let dcol = &partials[layout.delayed(z, p)];
            add_into(
                &mut ri,
                &fd::derivative(pc.shifted(dcol)?.values(), pc.h, p)?,
                s,
            );
        }
        if let Some(u) = layout.u() {
            add_into(&mut ri, &partials[u][..=pc.s], 1.0);
            add_into(&mut ro, &partials[u][pc.s..], 1.0);
        }
        inner.push(Segment::new(pc.a, pc.h, ri)?);
        outer.push(Segment::new(pc.r, pc.h, ro)?);
    }
    Ok(ElResidual { inner, outer })
}

/// `w = D_b^α p` on `[r, b]` and its tail kernel on `[a, r]`.
fn right_tail(pr: &Segment, alpha: f64, a: f64) -> Result<(Segment, Segment)> {
    let w = op(OpKind::RlRight, alpha, pr)?;
    Ok((w, rl_tail_kernel(pr, alpha, TailSide::FromRight, a)?))
}

/// `w = ₐD^β p` on `[a, r]` and its tail kernel on `[r, b]`.
fn left_tail(pl: &Segment, beta: f64, b: f64) -> Result<(Segment, Segment)> {
    let w = op(OpKind::RlLeft, beta, pl)?;
    Ok((w, rl_tail_kernel(pl, beta, TailSide::FromLeft, b)?))
}

fn acc_add(acc: &mut [f64], s: &Segment) {
    add_into(acc, s.values(), 1.0);
}

/// Euler-Lagrange residuals of `y` (and `u`) with default options.
pub fn el_residual(
    problem: &DelayedProblem,
    y: &Trajectory,
    u: Option<&[f64]>,
) -> Result<ElResidual> {
    el_residual_with(problem, &**problem.integrand(), y, u, &ElOptions::default())
}

/// Euler-Lagrange residuals of `y` for the integrand `l`, which must use the
/// problem's channels.
pub fn el_residual_with(
    problem: &DelayedProblem,
    l: &dyn Integrand,
    y: &Trajectory,
    u: Option<&[f64]>,
    opts: &ElOptions,
) -> Result<ElResidual> {
    check_channels(&problem.layout(), l)?;
    problem.check_trajectory(y)?;
    let table = problem.table(y, u)?;
    let partials = partial_columns(l, &table)?;
    residual_from_partials(problem, &partials, opts)
}

fn check_channels(layout: &ChannelLayout, l: &dyn Integrand) -> Result<()> {
    if l.channels() != layout.names().as_slice() {
        return Err(Error::Problem(
            "integrand channels do not match the problem".into(),
        ));
    }
    Ok(())
}

/// Transversality expression for the variation `eta`, default form.
pub fn transversality_residual(
    problem: &DelayedProblem,
    y: &Trajectory,
    u: Option<&[f64]>,
    eta: &Variation,
) -> Result<f64> {
    let terms = transversality_residual_with(
        problem,
        &**problem.integrand(),
        y,
        u,
        eta,
        TransversalityForm::default(),
    )?;
    Ok(terms.iter().map(|t| t.value).sum())
}

/// Every boundary evaluation of the transversality expression; their sum is
/// the residual.
pub fn transversality_residual_with(
    problem: &DelayedProblem,
    l: &dyn Integrand,
    y: &Trajectory,
    u: Option<&[f64]>,
    eta: &Variation,
    form: TransversalityForm,
) -> Result<Vec<BoundaryTerm>> {
    check_channels(&problem.layout(), l)?;
    problem.check_trajectory(y)?;
    problem.check_variation(eta)?;
    let table = problem.table(y, u)?;
    let partials = partial_columns(l, &table)?;
    let pc = Pieces::of(problem);
    let layout = problem.layout();
    let (a, r, b) = (pc.a, pc.r, problem.grid().b());
    let tau = problem.grid().tau();
    let mut terms = Vec::new();
    for z in 0..problem.d() {
        let e = eta.0.component(z).active_values().to_vec();
        let eta_d: Vec<Vec<f64>> = (0..problem.k())
            .map(|m| fd::derivative(&e, pc.h, m))
            .collect::<Result<_>>()?;
        let at = |m: usize, t: f64| -> f64 {
            let i = ((t - a) / pc.h).round() as usize;
            eta_d[m][i]
        };
        let mut push = |p, q, delayed, t, value| {
            terms.push(BoundaryTerm {
                component: z + 1,
                p,
                q,
                delayed,
                t,
                value,
            })
        };
        for p in 1..=problem.k() {
            let col = &partials[layout.state(z, p)];
            let dl = fd_all(pc.left(col)?.values(), pc.h, p)?;
            let dr = fd_all(pc.right(col)?.values(), pc.h, p)?;
            let dcol = &partials[layout.delayed(z, p)];
            let dd = match form {
                TransversalityForm::UnshiftedPartial => fd_all(pc.left(dcol)?.values(), pc.h, p)?,
                _ => fd_all(pc.shifted(dcol)?.values(), pc.h, p)?,
            };
            for q in 0..p {
                let m = p - q - 1;
                let s = sign(q);
                let (l0, l1) = (dl[q][0], *dl[q].last().unwrap());
                let (r0, r1) = (dr[q][0], *dr[q].last().unwrap());
                push(p, q, false, r, s * l1 * at(m, r));
                push(p, q, false, a, -s * l0 * at(m, a));
                push(p, q, false, b, s * r1 * at(m, b));
                push(p, q, false, r, -s * r0 * at(m, r));
                let (d0, d1) = (dd[q][0], *dd[q].last().unwrap());
                let (e0, e1) = match form {
                    TransversalityForm::Derived => (at(m, a), at(m, r)),
                    _ => (at(m, a + tau), at(m, b)),
                };
                push(p, q, true, r, s * d1 * e1);
                push(p, q, true, a, -s * d0 * e0);
            }
        }
    }
    Ok(terms)
}

/// Derivatives of orders `0..p` (collocated).
fn fd_all(v: &[f64], h: f64, p: usize) -> Result<Vec<Vec<f64>>> {
    (0..p).map(|q| fd::derivative(v, h, q)).collect()
}
