//! Channel layout of the integrand and assembly of channel values from a
//! trajectory.
//!
//! The argument list is `t`, then `u` when a control is present, then per
//! component `z`: the left Caputo derivatives `D1..Dn`, the right Caputo
//! derivatives `B1..Bm`, the classical derivatives `y0..yk` and the delayed
//! ones `yd0..ydk`. With several components every name except `t` and `u`
//! carries the suffix `_z` (1-based), and each group is laid out component by
//! component.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::ExprFunction;
use crate::fd;
use crate::fracops::{FractionalOperator, OperatorRegistry, Side};
use crate::grid::{Grid, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelLayout {
    pub d: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub k: usize,
    pub control: bool,
}

impl ChannelLayout {
    pub fn len(&self) -> usize {
        1 + usize::from(self.control) + self.d * (self.n_left + self.n_right + 2 * (self.k + 1))
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self) -> usize {
        0
    }

    pub fn u(&self) -> Option<usize> {
        self.control.then_some(1)
    }

    fn base(&self) -> usize {
        1 + usize::from(self.control)
    }

    /// Left Caputo channel of order `alphas[i]` for component `z`.
    pub fn left(&self, z: usize, i: usize) -> usize {
        self.base() + z * self.n_left + i
    }

    /// Right Caputo channel of order `betas[j]` for component `z`.
    pub fn right(&self, z: usize, j: usize) -> usize {
        self.base() + self.d * self.n_left + z * self.n_right + j
    }

    /// `y_z^(p)(t)`.
    pub fn state(&self, z: usize, p: usize) -> usize {
        self.base() + self.d * (self.n_left + self.n_right) + z * (self.k + 1) + p
    }

    /// `y_z^(p)(t - tau)`.
    pub fn delayed(&self, z: usize, p: usize) -> usize {
        self.base() + self.d * (self.n_left + self.n_right + self.k + 1) + z * (self.k + 1) + p
    }

    pub fn names(&self) -> Vec<String> {
        let suffix = |z: usize| {
            if self.d > 1 {
                format!("_{}", z + 1)
            } else {
                String::new()
            }
        };
        let mut out = vec!["t".to_string()];
        if self.control {
            out.push("u".into());
        }
        for z in 0..self.d {
            out.extend((1..=self.n_left).map(|i| format!("D{i}{}", suffix(z))));
        }
        for z in 0..self.d {
            out.extend((1..=self.n_right).map(|j| format!("B{j}{}", suffix(z))));
        }
        for z in 0..self.d {
            out.extend((0..=self.k).map(|p| format!("y{p}{}", suffix(z))));
        }
        for z in 0..self.d {
            out.extend((0..=self.k).map(|p| format!("yd{p}{}", suffix(z))));
        }
        out
    }
}

/// An integrand `L(node, channels)`. The node index lets multipliers vary
/// along the grid.
pub trait Integrand: Send + Sync {
    fn channels(&self) -> &[String];

    fn value(&self, node: usize, row: &[f64]) -> Result<f64>;

    fn partial(&self, node: usize, channel: usize, row: &[f64]) -> Result<f64>;

    /// False only if the partial with respect to `channel` vanishes
    /// identically.
    fn uses(&self, channel: usize) -> bool {
        let _ = channel;
        true
    }
}

impl Integrand for ExprFunction {
    fn channels(&self) -> &[String] {
        ExprFunction::channels(self)
    }

    fn value(&self, _node: usize, row: &[f64]) -> Result<f64> {
        Ok(self.eval(row)?)
    }

    fn partial(&self, _node: usize, channel: usize, row: &[f64]) -> Result<f64> {
        Ok(ExprFunction::partial(self, channel, row)?)
    }

    fn uses(&self, channel: usize) -> bool {
        ExprFunction::uses(self, channel)
    }
}

/// `F + λ G + (μ/2) G²` with `λ` given per active node.
pub struct Augmented {
    pub f: Arc<dyn Integrand>,
    pub g: Arc<dyn Integrand>,
    pub lambda: Vec<f64>,
    pub mu: f64,
}

impl Integrand for Augmented {
    fn channels(&self) -> &[String] {
        self.f.channels()
    }

    fn value(&self, node: usize, row: &[f64]) -> Result<f64> {
        let g = self.g.value(node, row)?;
        let mut v = self.f.value(node, row)? + self.lambda[node] * g;
        if self.mu != 0.0 {
            v += 0.5 * self.mu * g * g;
        }
        Ok(v)
    }

    fn partial(&self, node: usize, channel: usize, row: &[f64]) -> Result<f64> {
        let fp = if self.f.uses(channel) {
            self.f.partial(node, channel, row)?
        } else {
            0.0
        };
        if !self.g.uses(channel) {
            return Ok(fp);
        }
        let gp = self.g.partial(node, channel, row)?;
        let mut v = fp + self.lambda[node] * gp;
        if self.mu != 0.0 {
            v += self.mu * self.g.value(node, row)? * gp;
        }
        Ok(v)
    }

    fn uses(&self, channel: usize) -> bool {
        self.f.uses(channel) || self.g.uses(channel)
    }
}

/// `w(node) · L`.
pub struct Weighted {
    pub weights: Vec<f64>,
    pub inner: Arc<dyn Integrand>,
}

impl Integrand for Weighted {
    fn channels(&self) -> &[String] {
        self.inner.channels()
    }

    fn value(&self, node: usize, row: &[f64]) -> Result<f64> {
        Ok(self.weights[node] * self.inner.value(node, row)?)
    }

    fn partial(&self, node: usize, channel: usize, row: &[f64]) -> Result<f64> {
        Ok(self.weights[node] * self.inner.partial(node, channel, row)?)
    }

    fn uses(&self, channel: usize) -> bool {
        self.inner.uses(channel)
    }
}

/// The discrete operators used to form the fractional channels.
#[derive(Clone)]
pub struct Scheme {
    pub left: Arc<dyn FractionalOperator>,
    pub right: Arc<dyn FractionalOperator>,
}

impl Scheme {
    pub const DEFAULT_LEFT: &'static str = "caputo-l1-left";
    pub const DEFAULT_RIGHT: &'static str = "caputo-l1-right";

    pub fn from_registry(registry: &OperatorRegistry, left: &str, right: &str) -> Result<Self> {
        let l = registry.get(left)?;
        let r = registry.get(right)?;
        if l.side() != Side::Left || r.side() != Side::Right {
            return Err(Error::Problem(format!(
                "operators `{left}` and `{right}` must be left- and right-sided respectively"
            )));
        }
        Ok(Self { left: l, right: r })
    }
}

impl Default for Scheme {
    fn default() -> Self {
        Self::from_registry(
            &OperatorRegistry::with_builtins(),
            Self::DEFAULT_LEFT,
            Self::DEFAULT_RIGHT,
        )
        .expect("built-in operators are registered")
    }
}

impl std::fmt::Debug for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Scheme({}, {})", self.left.name(), self.right.name())
    }
}

/// Channel values at every active node, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable {
    width: usize,
    data: Vec<f64>,
}

impl ChannelTable {
    pub fn new(nodes: usize, width: usize) -> Self {
        Self {
            width,
            data: vec![0.0; nodes * width],
        }
    }

    pub fn nodes(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn get(&self, i: usize, ch: usize) -> f64 {
        self.data[i * self.width + ch]
    }

    pub fn set(&mut self, i: usize, ch: usize, v: f64) {
        self.data[i * self.width + ch] = v;
    }

    /// Channel `ch` at every node.
    pub fn column(&self, ch: usize) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.get(i, ch)).collect()
    }
}

/// Derivative of order `p` of the value seen at `t - tau`, for every active
/// node, from samples on the full grid. The history and the active segment
/// are differentiated separately; at `t - tau = a` the active side is used.
fn delayed_derivatives(
    full: &[f64],
    n_history: usize,
    h: f64,
    p: usize,
    active_d: &[f64],
) -> Vec<f64> {
    let n_active = full.len() - n_history;
    let history_d = if n_history > 0 {
        fd::sbp_derivative(&full[..=n_history], h, p)
    } else {
        vec![]
    };
    (0..n_active)
        .map(|i| {
            if i < n_history {
                history_d[i]
            } else {
                active_d[i - n_history]
            }
        })
        .collect()
}

/// Channel columns of one component from its full-grid samples, in the order
/// left orders, right orders, `y0..yk`, `yd0..ydk`.
pub(crate) fn component_channels(
    grid: &Grid,
    scheme: &Scheme,
    alphas: &[f64],
    betas: &[f64],
    k: usize,
    full: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let nh = grid.n_history();
    let h = grid.h();
    let active = Segment::new(grid.a(), h, full[nh..].to_vec())?;
    let mut cols = Vec::with_capacity(alphas.len() + betas.len() + 2 * (k + 1));
    for &alpha in alphas {
        cols.push(scheme.left.apply(&active, alpha)?.samples.into_values());
    }
    for &beta in betas {
        cols.push(scheme.right.apply(&active, beta)?.samples.into_values());
    }
    let mut delayed = Vec::with_capacity(k + 1);
    for p in 0..=k {
        let d = fd::sbp_derivative(active.values(), h, p);
        delayed.push(delayed_derivatives(full, nh, h, p, &d));
        cols.push(d);
    }
    cols.extend(delayed);
    Ok(cols)
}

impl ChannelLayout {
    /// Layout index of local column `c` of [`component_channels`] for
    /// component `z`.
    pub(crate) fn local_to_channel(&self, z: usize, c: usize) -> usize {
        let (n, m, kp) = (self.n_left, self.n_right, self.k + 1);
        if c < n {
            self.left(z, c)
        } else if c < n + m {
            self.right(z, c - n)
        } else if c < n + m + kp {
            self.state(z, c - n - m)
        } else {
            self.delayed(z, c - n - m - kp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_argument_order() {
        let l = ChannelLayout {
            d: 1,
            n_left: 2,
            n_right: 1,
            k: 1,
            control: true,
        };
        assert_eq!(
            l.names(),
            ["t", "u", "D1", "D2", "B1", "y0", "y1", "yd0", "yd1"]
        );
        assert_eq!(l.len(), 9);
        assert_eq!(l.left(0, 1), 3);
        assert_eq!(l.right(0, 0), 4);
        assert_eq!(l.state(0, 1), 6);
        assert_eq!(l.delayed(0, 0), 7);
    }

    #[test]
    fn names_with_components() {
        let l = ChannelLayout {
            d: 2,
            n_left: 1,
            n_right: 0,
            k: 1,
            control: false,
        };
        let names = l.names();
        assert_eq!(
            names,
            [
                "t", "D1_1", "D1_2", "y0_1", "y1_1", "y0_2", "y1_2", "yd0_1", "yd1_1", "yd0_2",
                "yd1_2"
            ]
        );
        assert_eq!(names[l.left(1, 0)], "D1_2");
        assert_eq!(names[l.state(1, 1)], "y1_2");
        assert_eq!(names[l.delayed(0, 1)], "yd1_1");
    }

    #[test]
    fn default_scheme_is_l1() {
        let s = Scheme::default();
        assert_eq!(s.left.name(), "caputo-l1-left");
        let r = OperatorRegistry::with_builtins();
        assert!(Scheme::from_registry(&r, "caputo-right", "caputo-left").is_err());
    }
}
