//! Named operator implementations selectable at run time.
//!
//! The collocated operators serve verification; the L1 Caputo operators are
//! the ones the direct transcription uses by default, because their
//! discrete adjoint is free of the odd-even decoupling that centred
//! stencils introduce in a minimisation.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fd;
use crate::grid::Segment;

use super::{integer_part_up, is_integer_order, quadrature, Applied, FracOpSpec, OpKind, Side};

/// A fractional operator acting on samples spanning its anchors.
pub trait FractionalOperator: Send + Sync {
    fn name(&self) -> &str;

    fn side(&self) -> Side;

    /// Applies the operator of the given order, anchored at the ends of `f`.
    fn apply(&self, f: &Segment, order: f64) -> Result<Applied>;
}

/// The collocated operators of [`OpKind`].
pub struct Collocated(pub OpKind);

impl FractionalOperator for Collocated {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn side(&self) -> Side {
        self.0.side()
    }

    fn apply(&self, f: &Segment, order: f64) -> Result<Applied> {
        FracOpSpec::spanning(self.0, order, f)?.apply(f)
    }
}

/// Caputo derivative by the L1 scheme. Orders above one first take
/// `n - 1` summation-by-parts differences.
pub struct L1Caputo(pub Side);

impl FractionalOperator for L1Caputo {
    fn name(&self) -> &str {
        match self.0 {
            Side::Left => "caputo-l1-left",
            Side::Right => "caputo-l1-right",
        }
    }

    fn side(&self) -> Side {
        self.0
    }

    fn apply(&self, f: &Segment, order: f64) -> Result<Applied> {
        if !(order > 0.0) || !order.is_finite() {
            return Err(Error::Domain(format!(
                "order must be positive, got {order}"
            )));
        }
        let h = f.step();
        let flip = self.0 == Side::Right;
        let mut v = f.values().to_vec();
        if flip {
            v.reverse();
        }
        let (mut out, classical) = if is_integer_order(order) {
            (fd::sbp_derivative(&v, h, order as usize), true)
        } else {
            let n = integer_part_up(order);
            let w = fd::sbp_derivative(&v, h, n - 1);
            (
                quadrature::l1_left_caputo(&w, h, order - (n - 1) as f64),
                false,
            )
        };
        if flip {
            out.reverse();
        }
        Ok(Applied {
            samples: f.with_values(out)?,
            classical_fallback: classical,
            one_sided: 1,
        })
    }
}

/// Operators registered by name.
#[derive(Clone, Default)]
pub struct OperatorRegistry {
    ops: BTreeMap<String, Arc<dyn FractionalOperator>>,
}

impl OperatorRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        for k in OpKind::ALL {
            r.register(Arc::new(Collocated(k)));
        }
        r.register(Arc::new(L1Caputo(Side::Left)));
        r.register(Arc::new(L1Caputo(Side::Right)));
        r
    }

    /// Adds an operator, replacing any previous one with the same name.
    pub fn register(&mut self, op: Arc<dyn FractionalOperator>) {
        self.ops.insert(op.name().to_string(), op);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn FractionalOperator>> {
        self.ops.get(name).cloned().ok_or_else(|| {
            Error::Domain(format!(
                "no operator named `{name}` (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.ops.keys().cloned().collect()
    }
}

impl std::fmt::Debug for OperatorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.ops.keys()).finish()
    }
}
