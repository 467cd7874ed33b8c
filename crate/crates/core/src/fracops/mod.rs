//! Fractional integrals and derivatives on uniform nodes.
//!
//! Integrals use product-trapezoid quadrature (exact kernel moments against a
//! piecewise-linear interpolant). Riemann-Liouville derivatives differentiate
//! the integral of order `n - α` with fourth-order collocated stencils; Caputo
//! derivatives integrate the `n`-th finite-difference derivative. Right-sided
//! operators are the left ones conjugated by the reflection
//! `t -> a + b - t`, so left/right symmetry holds exactly.

pub mod quadrature;
pub mod registry;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fd;
use crate::gamma::{gamma_real, rgamma};
use crate::grid::Segment;

pub use registry::{FractionalOperator, OperatorRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    IntegralLeft,
    IntegralRight,
    RlLeft,
    RlRight,
    CaputoLeft,
    CaputoRight,
}

impl OpKind {
    pub const ALL: [OpKind; 6] = [
        OpKind::IntegralLeft,
        OpKind::IntegralRight,
        OpKind::RlLeft,
        OpKind::RlRight,
        OpKind::CaputoLeft,
        OpKind::CaputoRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::IntegralLeft => "integral-left",
            OpKind::IntegralRight => "integral-right",
            OpKind::RlLeft => "rl-left",
            OpKind::RlRight => "rl-right",
            OpKind::CaputoLeft => "caputo-left",
            OpKind::CaputoRight => "caputo-right",
        }
    }

    pub fn side(self) -> Side {
        match self {
            OpKind::IntegralLeft | OpKind::RlLeft | OpKind::CaputoLeft => Side::Left,
            _ => Side::Right,
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(self, OpKind::IntegralLeft | OpKind::IntegralRight)
    }

    pub fn is_caputo(self) -> bool {
        matches!(self, OpKind::CaputoLeft | OpKind::CaputoRight)
    }

    fn left_version(self) -> OpKind {
        match self {
            OpKind::IntegralRight => OpKind::IntegralLeft,
            OpKind::RlRight => OpKind::RlLeft,
            OpKind::CaputoRight => OpKind::CaputoLeft,
            k => k,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown operator kind `{s}`")))
    }
}

/// Which operator, at which order, on which interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOpSpec {
    pub kind: OpKind,
    pub order: f64,
    pub anchor_left: f64,
    pub anchor_right: f64,
}

/// Result of applying an operator: samples on `[anchor_left, anchor_right]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub samples: Segment,
    /// The order was an integer and a classical derivative was taken.
    pub classical_fallback: bool,
    /// Nodes at each end computed with non-centred stencils.
    pub one_sided: usize,
}

/// `n = ceil(order)` for non-integer orders, `order` itself for integers.
pub fn integer_part_up(order: f64) -> usize {
    order.ceil() as usize
}

pub fn is_integer_order(order: f64) -> bool {
    order == order.round()
}

impl FracOpSpec {
    pub fn new(kind: OpKind, order: f64, anchor_left: f64, anchor_right: f64) -> Result<Self> {
        if !(order > 0.0) || !order.is_finite() {
            return Err(Error::Domain(format!(
                "order must be positive, got {order}"
            )));
        }
        if !(anchor_right > anchor_left) {
            return Err(Error::Domain(format!(
                "anchors must satisfy {anchor_left} < {anchor_right}"
            )));
        }
        Ok(Self {
            kind,
            order,
            anchor_left,
            anchor_right,
        })
    }

    /// The operator anchored at the two ends of `f`.
    pub fn spanning(kind: OpKind, order: f64, f: &Segment) -> Result<Self> {
        Self::new(kind, order, f.start(), f.end())
    }

    /// `n` with `n - 1 < order <= n`.
    pub fn n(&self) -> usize {
        integer_part_up(self.order)
    }

    fn restrict(&self, f: &Segment) -> Result<Segment> {
        let i0 = f.index_of(self.anchor_left);
        let i1 = f.index_of(self.anchor_right);
        match (i0, i1) {
            (Some(i0), Some(i1)) if i1 > i0 => f.slice(i0, i1),
            _ => Err(Error::Shape(format!(
                "anchors [{}, {}] are not nodes of the segment [{}, {}] with step {}",
                self.anchor_left,
                self.anchor_right,
                f.start(),
                f.end(),
                f.step()
            ))),
        }
    }

    /// Applies the operator to samples covering the anchors.
    pub fn apply(&self, f: &Segment) -> Result<Applied> {
        let seg = self.restrict(f)?;
        if self.kind.side() == Side::Right {
            let left = FracOpSpec {
                kind: self.kind.left_version(),
                ..*self
            };
            let out = left.apply_left(&seg.mirrored())?;
            return Ok(Applied {
                samples: out.samples.mirrored(),
                ..out
            });
        }
        self.apply_left(&seg)
    }

    fn apply_left(&self, seg: &Segment) -> Result<Applied> {
        let h = seg.step();
        let v = seg.values();
        let alpha = self.order;
        let n = self.n();
        let (values, classical, one_sided) = match self.kind {
            OpKind::IntegralLeft => (quadrature::left_integral(v, h, alpha), false, 0),
            OpKind::RlLeft | OpKind::CaputoLeft if is_integer_order(alpha) => {
                (fd::derivative(v, h, n)?, true, fd::one_sided_width(n))
            }
            OpKind::RlLeft => {
                let inner = quadrature::left_integral(v, h, n as f64 - alpha);
                (fd::derivative(&inner, h, n)?, false, fd::one_sided_width(n))
            }
            OpKind::CaputoLeft => {
                let dn = fd::derivative(v, h, n)?;
                (
                    quadrature::left_integral(&dn, h, n as f64 - alpha),
                    false,
                    fd::one_sided_width(n),
                )
            }
            _ => unreachable!("right kinds are mirrored before this point"),
        };
        Ok(Applied {
            samples: seg.with_values(values)?,
            classical_fallback: classical,
            one_sided,
        })
    }
}

fn check_kind(spec: &FracOpSpec, ok: fn(OpKind) -> bool, what: &str) -> Result<()> {
    if ok(spec.kind) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{} is not {what}", spec.kind)))
    }
}

/// Left or right Riemann-Liouville integral.
pub fn frac_integral(f: &Segment, spec: &FracOpSpec) -> Result<Segment> {
    check_kind(spec, OpKind::is_integral, "a fractional integral")?;
    Ok(spec.apply(f)?.samples)
}

/// Left or right Riemann-Liouville derivative.
pub fn rl_derivative(f: &Segment, spec: &FracOpSpec) -> Result<Applied> {
    check_kind(
        spec,
        |k| matches!(k, OpKind::RlLeft | OpKind::RlRight),
        "a Riemann-Liouville derivative",
    )?;
    spec.apply(f)
}

/// Left or right Caputo derivative.
pub fn caputo_derivative(f: &Segment, spec: &FracOpSpec) -> Result<Applied> {
    check_kind(spec, OpKind::is_caputo, "a Caputo derivative")?;
    spec.apply(f)
}

/// Pointwise defect of the Caputo/Riemann-Liouville connection formula,
/// `C(f) - RL(f) + sum_k f^(k)(a) (t - a)^(k - α) / Γ(k - α + 1)` for the left
/// operators and the mirrored expression for the right ones. Endpoint
/// derivatives come from one-sided stencils. The anchor node itself, where the
/// terms are infinite, is set to zero.
pub fn connection_defect(f: &Segment, spec: &FracOpSpec) -> Result<Segment> {
    check_kind(spec, OpKind::is_caputo, "a Caputo derivative")?;
    let seg = spec.restrict(f)?;
    let (seg, mirrored) = match spec.kind.side() {
        Side::Left => (seg, false),
        Side::Right => (seg.mirrored(), true),
    };
    let left = |kind| FracOpSpec { kind, ..*spec }.spanning_of(&seg);
    let caputo = left(OpKind::CaputoLeft)?.apply(&seg)?.samples;
    let rl = left(OpKind::RlLeft)?.apply(&seg)?.samples;
    let h = seg.step();
    let n = spec.n();
    let alpha = spec.order;
    let mut taylor = Vec::with_capacity(n);
    for k in 0..n {
        taylor.push(fd::derivative_at(seg.values(), h, k, 0)?);
    }
    let mut out: Vec<f64> = (0..seg.len())
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let x = i as f64 * h;
            let boundary: f64 = taylor
                .iter()
                .enumerate()
                .map(|(k, dk)| dk * x.powf(k as f64 - alpha) * rgamma(k as f64 - alpha + 1.0))
                .sum();
            caputo.values()[i] - rl.values()[i] + boundary
        })
        .collect();
    if mirrored {
        out.reverse();
    }
    let base = spec.restrict(f)?;
    base.with_values(out)
}

impl FracOpSpec {
    fn spanning_of(self, seg: &Segment) -> Result<Self> {
        Self::new(self.kind, self.order, seg.start(), seg.end())
    }
}

/// Max norm of the connection defect away from boundary layers of width
/// `layer` (time units) at both ends; `None` means four steps.
pub fn connection_residual(f: &Segment, spec: &FracOpSpec, layer: Option<f64>) -> Result<f64> {
    let d = connection_defect(f, spec)?;
    let nodes = layer_nodes(d.step(), layer);
    Ok(interior_max_abs(d.values(), nodes, nodes))
}

/// Default boundary-layer width in steps.
pub const LAYER_STEPS: usize = 4;

/// Number of nodes at one end lying in the closed layer of the given width
/// (default `4h`), the endpoint included.
pub fn layer_nodes(h: f64, layer: Option<f64>) -> usize {
    match layer {
        None => LAYER_STEPS + 1,
        Some(w) => (w / h + 1e-9).floor().max(0.0) as usize + 1,
    }
}

/// Max of `|v_i|` over `skip_start <= i < len - skip_end`.
pub fn interior_max_abs(values: &[f64], skip_start: usize, skip_end: usize) -> f64 {
    let n = values.len();
    if skip_start + skip_end >= n {
        return 0.0;
    }
    values[skip_start..n - skip_end]
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Which numerator the power rule is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerRuleNumerator {
    /// `Γ(β + 1)`, the form confirmed by quadrature.
    #[default]
    Beta,
    /// `Γ(α + 1)`, kept for comparison.
    Alpha,
}

/// `ₐD^α (t - a)^β` evaluated at `t - a`.
pub fn analytic_power_rl(
    beta: f64,
    alpha: f64,
    t_minus_a: f64,
    numerator: PowerRuleNumerator,
) -> Result<f64> {
    if !(beta > -1.0) || !(alpha >= 0.0) || !(t_minus_a >= 0.0) {
        return Err(Error::Domain(format!(
            "power rule needs beta > -1, alpha >= 0, t - a >= 0; got beta = {beta}, alpha = {alpha}, t - a = {t_minus_a}"
        )));
    }
    let r = rgamma(beta - alpha + 1.0);
    if r == 0.0 {
        return Ok(0.0);
    }
    let num = match numerator {
        PowerRuleNumerator::Beta => gamma_real(beta + 1.0),
        PowerRuleNumerator::Alpha => gamma_real(alpha + 1.0),
    };
    Ok(num * t_minus_a.powf(beta - alpha) * r)
}

/// `ₐD^α C = C (t - a)^(-α) / Γ(1 - α)`.
pub fn analytic_constant_rl(c: f64, alpha: f64, t_minus_a: f64) -> f64 {
    c * t_minus_a.powf(-alpha) * rgamma(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(n: usize, f: impl Fn(f64) -> f64) -> Segment {
        Segment::from_fn(0.0, 1.0, n, f).unwrap()
    }

    #[test]
    fn integral_examples() {
        let f = unit(1025, |_| 1.0);
        let spec = FracOpSpec::spanning(OpKind::IntegralLeft, 0.5, &f).unwrap();
        let out = frac_integral(&f, &spec).unwrap();
        assert_relative_eq!(
            *out.values().last().unwrap(),
            2.0 / PI.sqrt(),
            max_relative = 1e-12
        );

        let spec = FracOpSpec::spanning(OpKind::IntegralLeft, 1.0, &f).unwrap();
        let out = frac_integral(&f, &spec).unwrap();
        for (t, v) in out.times().zip(out.values()) {
            assert!((t - v).abs() < 1e-13);
        }
    }

    #[test]
    fn caputo_of_constant_is_zero() {
        let f = unit(65, |_| 7.3);
        for alpha in [0.2, 0.5, 0.9, 1.4] {
            let spec = FracOpSpec::spanning(OpKind::CaputoLeft, alpha, &f).unwrap();
            let out = caputo_derivative(&f, &spec).unwrap();
            assert!(out.samples.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn caputo_of_line() {
        let f = unit(257, |t| t);
        let spec = FracOpSpec::spanning(OpKind::CaputoLeft, 0.5, &f).unwrap();
        let out = caputo_derivative(&f, &spec).unwrap().samples;
        assert_relative_eq!(
            *out.values().last().unwrap(),
            2.0 / PI.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn right_ops_mirror_left() {
        let f = unit(129, |t| (2.0 * t).sin() + t * t);
        let g = f.mirrored();
        for (l, r) in [
            (OpKind::IntegralLeft, OpKind::IntegralRight),
            (OpKind::RlLeft, OpKind::RlRight),
            (OpKind::CaputoLeft, OpKind::CaputoRight),
        ] {
            let left = FracOpSpec::spanning(l, 0.6, &f)
                .unwrap()
                .apply(&f)
                .unwrap()
                .samples;
            let right = FracOpSpec::spanning(r, 0.6, &g)
                .unwrap()
                .apply(&g)
                .unwrap()
                .samples;
            assert_eq!(left.values(), right.mirrored().values());
        }
    }

    #[test]
    fn right_caputo_of_line_has_sign() {
        // D_b^α (b - t) for b = 1 is the mirror of the left derivative of t
        let f = unit(257, |t| 1.0 - t);
        let spec = FracOpSpec::spanning(OpKind::CaputoRight, 0.5, &f).unwrap();
        let out = caputo_derivative(&f, &spec).unwrap().samples;
        assert_relative_eq!(out.values()[0], 2.0 / PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn integer_order_is_classical() {
        let f = unit(65, |t| t * t);
        let spec = FracOpSpec::spanning(OpKind::CaputoLeft, 1.0, &f).unwrap();
        let out = caputo_derivative(&f, &spec).unwrap();
        assert!(out.classical_fallback);
        assert_relative_eq!(out.samples.values()[32], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn anchors_on_subinterval() {
        let f = unit(65, |t| t);
        let spec = FracOpSpec::new(OpKind::IntegralLeft, 1.0, 0.5, 1.0).unwrap();
        let out = frac_integral(&f, &spec).unwrap();
        assert_eq!(out.len(), 33);
        assert_relative_eq!(*out.values().last().unwrap(), 0.375, max_relative = 1e-13);
        let bad = FracOpSpec::new(OpKind::IntegralLeft, 1.0, 0.51, 1.0).unwrap();
        assert!(frac_integral(&f, &bad).is_err());
    }

    #[test]
    fn wrong_kind_rejected() {
        let f = unit(65, |t| t);
        let spec = FracOpSpec::spanning(OpKind::RlLeft, 0.5, &f).unwrap();
        assert!(caputo_derivative(&f, &spec).is_err());
        assert!(FracOpSpec::spanning(OpKind::RlLeft, 0.0, &f).is_err());
    }

    #[test]
    fn power_rule_forms() {
        let v = analytic_power_rl(1.0, 0.5, 1.0, PowerRuleNumerator::Beta).unwrap();
        assert_relative_eq!(v, 1.0 / gamma_real(1.5), max_relative = 1e-13);
        assert_relative_eq!(
            analytic_power_rl(2.0, 0.0, 0.7, PowerRuleNumerator::Beta).unwrap(),
            0.49,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            analytic_power_rl(1.0, 1.0, 0.3, PowerRuleNumerator::Beta).unwrap(),
            1.0,
            max_relative = 1e-13
        );
        // D^2 t = 0 through the pole of 1/Γ
        assert_eq!(
            analytic_power_rl(1.0, 2.0, 0.3, PowerRuleNumerator::Beta).unwrap(),
            0.0
        );
        assert!(analytic_power_rl(-1.5, 0.5, 1.0, PowerRuleNumerator::Beta).is_err());
    }

    #[test]
    fn constant_rule() {
        assert_relative_eq!(
            analytic_constant_rl(1.0, 0.5, 1.0),
            1.0 / PI.sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn connection_of_constant_vanishes_under_refinement() {
        let mut last = f64::INFINITY;
        for n in [65, 129, 257, 513] {
            let f = unit(n, |_| 1.0);
            let spec = FracOpSpec::spanning(OpKind::CaputoLeft, 0.5, &f).unwrap();
            let r = connection_residual(&f, &spec, Some(4.0 / 64.0)).unwrap();
            assert!(r < last, "{r} >= {last}");
            last = r;
        }
        assert!(last < 1e-4, "{last}");
    }

    #[test]
    fn layer_nodes_rounding() {
        assert_eq!(layer_nodes(0.25, None), 5);
        assert_eq!(layer_nodes(1.0 / 64.0, Some(4.0 / 16.0)), 17);
        assert_eq!(interior_max_abs(&[9.0, 1.0, -2.0, 9.0], 1, 1), 2.0);
    }
}
