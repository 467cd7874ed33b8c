//! Quasi-Newton minimisation (BFGS with a dense inverse Hessian and
//! Armijo backtracking).

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop once `‖g‖∞ ≤ max(grad_rtol · ‖g₀‖∞, grad_atol)`.
    pub grad_rtol: f64,
    pub grad_atol: f64,
    /// Armijo constant.
    pub c1: f64,
    /// Backtracking factor.
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            grad_rtol: 1e-8,
            grad_atol: 0.0,
            c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 50,
        }
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    /// No step along the search direction decreases the objective beyond
    /// rounding, or several accepted steps in a row did not.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub initial_grad_norm: f64,
    pub termination: Termination,
    pub log: Vec<IterRecord>,
}

impl BfgsResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Consecutive accepted steps without a decrease beyond rounding before the
/// run counts as stalled.
const IDLE_LIMIT: usize = 10;

/// Minimises `f` from `x0`; `grad` returns the gradient.
pub fn bfgs(
    f: impl Fn(&[f64]) -> Result<f64>,
    grad: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: Vec<f64>,
    opts: &BfgsOptions,
) -> Result<BfgsResult> {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut g = grad(&x)?;
    let g0 = norm_inf(&g);
    let mut log = vec![IterRecord {
        iter: 0,
        value: fx,
        grad_norm: g0,
        step: 0.0,
    }];
    let done = |gn: f64| gn <= (opts.grad_rtol * g0).max(opts.grad_atol) || gn == 0.0;
    let finish = |x, value, gn, termination, log| BfgsResult {
        x,
        value,
        grad_norm: gn,
        initial_grad_norm: g0,
        termination,
        log,
    };
    if n == 0 || done(g0) {
        return Ok(finish(x, fx, g0, Termination::GradientTolerance, log));
    }
    // inverse Hessian, row-major; starts as a multiple of the identity
    let mut hinv = vec![0.0; n * n];
    let mut scaled = false;
    let mut init_scale = 1.0 / g0;
    for i in 0..n {
        hinv[i * n + i] = 1.0;
    }
    let mut d = vec![0.0; n];
    let mut idle = 0;
    for iter in 1..=opts.max_iter {
        for i in 0..n {
            d[i] = -init_scale * dot(&hinv[i * n..(i + 1) * n], &g);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // lost descent: restart from steepest descent
            hinv.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                hinv[i * n + i] = 1.0;
            }
            init_scale = 1.0 / norm_inf(&g);
            scaled = false;
            for i in 0..n {
                d[i] = -init_scale * g[i];
            }
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=opts.max_backtracks {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let ft = f(&xt)?;
            if ft <= fx + opts.c1 * step * slope {
                accepted = Some((xt, ft, None));
                break;
            }
            if step == 1.0
                && (ft - fx).abs() <= 64.0 * f64::EPSILON * fx.abs().max(f64::MIN_POSITIVE)
            {
                // flat within rounding: keep the full step if it shrinks the
                // gradient
                let gt = grad(&xt)?;
                if norm_inf(&gt) < norm_inf(&g) {
                    fallback = Some((xt, ft, Some(gt)));
                }
            }
            step *= opts.shrink;
        }
        let Some((xt, ft, gt)) = accepted.or(fallback) else {
            let gn = norm_inf(&g);
            return Ok(finish(x, fx, gn, Termination::Stalled, log));
        };
        let gt = match gt {
            Some(gt) => gt,
            None => grad(&xt)?,
        };
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() {
            if !scaled {
                // fold the initial scale into the matrix, then rescale by s'y/y'y
                let gamma = sy / dot(&yv, &yv);
                hinv.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..n {
                    hinv[i * n + i] = gamma;
                }
                init_scale = 1.0;
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n)
                .map(|i| dot(&hinv[i * n..(i + 1) * n], &yv))
                .collect();
            let yhy = dot(&yv, &hy);
            let coef = (1.0 + rho * yhy) * rho;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        if fx - ft <= 16.0 * f64::EPSILON * fx.abs() {
            idle += 1;
        } else {
            idle = 0;
        }
        x = xt;
        fx = ft;
        g = gt;
        let gn = norm_inf(&g);
        log.push(IterRecord {
            iter,
            value: fx,
            grad_norm: gn,
            step,
        });
        if done(gn) {
            return Ok(finish(x, fx, gn, Termination::GradientTolerance, log));
        }
        if idle >= IDLE_LIMIT {
            return Ok(finish(x, fx, gn, Termination::Stalled, log));
        }
    }
    let gn = norm_inf(&g);
    Ok(finish(x, fx, gn, Termination::MaxIterations, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Ok(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2));
        let g = |x: &[f64]| {
            Ok(vec![
                -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ])
        };
        let r = bfgs(f, g, vec![-1.2, 1.0], &BfgsOptions::default()).unwrap();
        assert!(r.converged(), "{:?}", r.termination);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            r.x
        );
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let n = 40;
        let diag: Vec<f64> = (0..n)
            .map(|i| 10f64.powf(4.0 * i as f64 / (n - 1) as f64))
            .collect();
        let f = |x: &[f64]| Ok(0.5 * x.iter().zip(&diag).map(|(v, d)| d * v * v).sum::<f64>());
        let g = |x: &[f64]| Ok(x.iter().zip(&diag).map(|(v, d)| d * v).collect());
        let r = bfgs(f, g, vec![1.0; n], &BfgsOptions::default()).unwrap();
        assert!(r.converged());
        assert!(r
            .x
            .iter()
            .zip(&diag)
            .all(|(v, d)| (d * v).abs() <= 1e-8 * 1e4));
        assert_eq!(r.log.first().unwrap().iter, 0);
    }

    #[test]
    fn power_of_two_scaling_gives_identical_iterates() {
        let f1 = |x: &[f64]| Ok((x[0] - 1.0).powi(4) + (x[0] + x[1]).powi(2));
        let g1 = |x: &[f64]| {
            Ok(vec![
                4.0 * (x[0] - 1.0).powi(3) + 2.0 * (x[0] + x[1]),
                2.0 * (x[0] + x[1]),
            ])
        };
        let a = bfgs(f1, g1, vec![0.0, 0.0], &BfgsOptions::default()).unwrap();
        let f2 = |x: &[f64]| Ok(8.0 * f1(x)?);
        let g2 = |x: &[f64]| Ok(g1(x)?.into_iter().map(|v| 8.0 * v).collect());
        let b = bfgs(f2, g2, vec![0.0, 0.0], &BfgsOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.log.len(), b.log.len());
    }
}
