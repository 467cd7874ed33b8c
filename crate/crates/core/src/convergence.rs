//! Grid-refinement studies. A [`ConvergenceCheck`] returns one error number
//! per grid; [`run`] halves the step a number of times and estimates the
//! order from consecutive errors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fracops::{
    analytic_constant_rl, analytic_power_rl, caputo_derivative, connection_residual, frac_integral,
    interior_max_abs, layer_nodes, rl_derivative, FracOpSpec, OpKind, PowerRuleNumerator,
    LAYER_STEPS,
};
use crate::gamma::{gamma_real, rgamma};
use crate::grid::Segment;
use crate::ibp::{ibp_split_with, ibp_whole, ibp_whole_deriv, CorrectionForm, Lemma, SplitSpec};

/// Errors at or below this are reported as exact.
pub const EXACT_TOL: f64 = 1e-14;

/// Test functions on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestFunction {
    /// `t + 1`
    Linear,
    /// `t²`
    Square,
    /// `sin t`
    #[default]
    Sine,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [
        TestFunction::Linear,
        TestFunction::Square,
        TestFunction::Sine,
    ];

    pub fn eval(self, t: f64) -> f64 {
        match self {
            TestFunction::Linear => t + 1.0,
            TestFunction::Square => t * t,
            TestFunction::Sine => t.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Linear => "t+1",
            TestFunction::Square => "t^2",
            TestFunction::Sine => "sin",
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown test function `{s}` (expected t+1, t^2 or sin)"
                ))
            })
    }
}

/// Overrides for the parameters of a registered check; `None` keeps the
/// check's default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckParams {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub function: Option<TestFunction>,
    pub r: Option<f64>,
    pub form: Option<CorrectionForm>,
}

pub trait ConvergenceCheck: Send + Sync {
    fn name(&self) -> &str;

    /// Expected order of the error in `h`.
    fn advertised_order(&self) -> f64;

    /// Error on the grid with `intervals` steps over `[0, 1]`. `layer` is the
    /// boundary-layer width (time units) to exclude from pointwise norms,
    /// fixed across a study.
    fn error(&self, intervals: usize, layer: f64) -> Result<f64>;

    /// The same check with some parameters replaced.
    fn with_params(&self, params: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>>;

    fn describe(&self) -> String {
        self.name().to_string()
    }
}

fn unit(intervals: usize, f: impl Fn(f64) -> f64) -> Result<Segment> {
    Segment::from_fn(0.0, 1.0, intervals + 1, f)
}

fn check_order(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    Ok(alpha)
}

fn unused(params: &CheckParams, name: &str, allowed: &[&str]) -> Result<()> {
    let given = [
        ("alpha", params.alpha.is_some()),
        ("beta", params.beta.is_some()),
        ("function", params.function.is_some()),
        ("r", params.r.is_some()),
        ("form", params.form.is_some()),
    ];
    for (field, set) in given {
        if set && !allowed.contains(&field) {
            return Err(Error::Domain(format!(
                "check `{name}` takes no parameter `{field}`"
            )));
        }
    }
    Ok(())
}

/// Max relative error against `exact` away from the layer.
fn relative_interior(approx: &Segment, exact: impl Fn(f64) -> f64, layer: f64) -> f64 {
    let m = layer_nodes(approx.step(), Some(layer));
    let rel: Vec<f64> = approx
        .times()
        .zip(approx.values())
        .map(|(t, v)| {
            let e = exact(t);
            (v - e).abs() / e.abs().max(f64::MIN_POSITIVE)
        })
        .collect();
    interior_max_abs(&rel, m, m)
}

/// Left Caputo derivative of `t^β` against the power rule.
#[derive(Debug, Clone, Copy)]
pub struct CaputoPower {
    pub alpha: f64,
    pub beta: f64,
}

impl ConvergenceCheck for CaputoPower {
    fn name(&self) -> &str {
        "caputo-power"
    }

    fn advertised_order(&self) -> f64 {
        2.0
    }

    fn error(&self, intervals: usize, layer: f64) -> Result<f64> {
        let f = unit(intervals, |t| t.powf(self.beta))?;
        let d = caputo_derivative(
            &f,
            &FracOpSpec::new(OpKind::CaputoLeft, self.alpha, 0.0, 1.0)?,
        )?
        .samples;
        let num = PowerRuleNumerator::default();
        let exact = |t: f64| analytic_power_rl(self.beta, self.alpha, t, num).unwrap_or(f64::NAN);
        Ok(relative_interior(&d, exact, layer))
    }

    fn with_params(&self, p: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>> {
        unused(p, self.name(), &["alpha", "beta"])?;
        let beta = p.beta.unwrap_or(self.beta);
        let alpha = check_order(p.alpha.unwrap_or(self.alpha))?;
        if beta.fract() != 0.0 || beta < alpha.ceil() {
            return Err(Error::Domain(format!(
                "beta must be an integer of at least ceil(alpha) = {}, got {beta}",
                alpha.ceil()
            )));
        }
        Ok(Arc::new(Self { alpha, beta }))
    }

    fn describe(&self) -> String {
        format!("caputo-power alpha={} beta={}", self.alpha, self.beta)
    }
}

/// Left Caputo derivative of a constant, which is zero.
#[derive(Debug, Clone, Copy)]
pub struct CaputoConstant {
    pub alpha: f64,
}

impl ConvergenceCheck for CaputoConstant {
    fn name(&self) -> &str {
        "caputo-constant"
    }

    fn advertised_order(&self) -> f64 {
        2.0
    }

    fn error(&self, intervals: usize, _layer: f64) -> Result<f64> {
        let f = unit(intervals, |_| 1.0)?;
        let d = caputo_derivative(
            &f,
            &FracOpSpec::new(OpKind::CaputoLeft, self.alpha, 0.0, 1.0)?,
        )?
        .samples;
        Ok(d.max_abs())
    }

    fn with_params(&self, p: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>> {
        unused(p, self.name(), &["alpha"])?;
        Ok(Arc::new(Self {
            alpha: check_order(p.alpha.unwrap_or(self.alpha))?,
        }))
    }

    fn describe(&self) -> String {
        format!("caputo-constant alpha={}", self.alpha)
    }
}

/// Left Riemann-Liouville derivative of `1` against `t^(-α)/Γ(1-α)`.
#[derive(Debug, Clone, Copy)]
pub struct RlConstant {
    pub alpha: f64,
}

impl ConvergenceCheck for RlConstant {
    fn name(&self) -> &str {
        "rl-constant"
    }

    fn advertised_order(&self) -> f64 {
        2.0
    }

    fn error(&self, intervals: usize, layer: f64) -> Result<f64> {
        let f = unit(intervals, |_| 1.0)?;
        let d = rl_derivative(&f, &FracOpSpec::new(OpKind::RlLeft, self.alpha, 0.0, 1.0)?)?.samples;
        Ok(relative_interior(
            &d,
            |t| analytic_constant_rl(1.0, self.alpha, t),
            layer,
        ))
    }

    fn with_params(&self, p: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>> {
        unused(p, self.name(), &["alpha"])?;
        let alpha = check_order(p.alpha.unwrap_or(self.alpha))?;
        if alpha.fract() == 0.0 {
            return Err(Error::Domain(
                "rl-constant needs a non-integer alpha".into(),
            ));
        }
        Ok(Arc::new(Self { alpha }))
    }

    fn describe(&self) -> String {
        format!("rl-constant alpha={}", self.alpha)
    }
}

/// Defect of the Caputo/Riemann-Liouville connection formula.
#[derive(Debug, Clone, Copy)]
pub struct Connection {
    pub alpha: f64,
    pub function: TestFunction,
}

impl ConvergenceCheck for Connection {
    fn name(&self) -> &str {
        "connection"
    }

    fn advertised_order(&self) -> f64 {
        1.0
    }

    fn error(&self, intervals: usize, layer: f64) -> Result<f64> {
        let f = unit(intervals, |t| self.function.eval(t))?;
        connection_residual(
            &f,
            &FracOpSpec::new(OpKind::CaputoLeft, self.alpha, 0.0, 1.0)?,
            Some(layer),
        )
    }

    fn with_params(&self, p: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>> {
        unused(p, self.name(), &["alpha", "function"])?;
        Ok(Arc::new(Self {
            alpha: check_order(p.alpha.unwrap_or(self.alpha))?,
            function: p.function.unwrap_or(self.function),
        }))
    }

    fn describe(&self) -> String {
        format!("connection alpha={} f={}", self.alpha, self.function.name())
    }
}

/// Left Riemann-Liouville integral of `t^β` against
/// `Γ(β+1)/Γ(β+α+1) t^(β+α)`.
#[derive(Debug, Clone, Copy)]
pub struct IntegralPower {
    pub alpha: f64,
    pub beta: f64,
}

impl ConvergenceCheck for IntegralPower {
    fn name(&self) -> &str {
        "integral-power"
    }

    fn advertised_order(&self) -> f64 {
        2.0
    }

    fn error(&self, intervals: usize, _layer: f64) -> Result<f64> {
        let f = unit(intervals, |t| t.powf(self.beta))?;
        let v = frac_integral(
            &f,
            &FracOpSpec::new(OpKind::IntegralLeft, self.alpha, 0.0, 1.0)?,
        )?;
        let c = gamma_real(self.beta + 1.0) * rgamma(self.beta + self.alpha + 1.0);
        Ok(v.times()
            .zip(v.values())
            .map(|(t, x)| (x - c * t.powf(self.beta + self.alpha)).abs())
            .fold(0.0, f64::max))
    }

    fn with_params(&self, p: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>> {
        unused(p, self.name(), &["alpha", "beta"])?;
        let beta = p.beta.unwrap_or(self.beta);
        if !(beta >= 0.0) {
            return Err(Error::Domain(format!(
                "beta must be non-negative, got {beta}"
            )));
        }
        Ok(Arc::new(Self {
            alpha: check_order(p.alpha.unwrap_or(self.alpha))?,
            beta,
        }))
    }

    fn describe(&self) -> String {
        format!("integral-power alpha={} beta={}", self.alpha, self.beta)
    }
}

/// Residual of one integration-by-parts identity on its polynomial pair.
///
/// Each pair vanishes where the identity needs it: the function under a left
/// derivative at the left end of its interval and the function under a right
/// derivative at the right end. On `[a, b]` and for the split identities with
/// left derivatives, `f = t²(1+t)` and `g = (1-t)²(2-t)`, with `g` replaced by
/// `(r-t)²(2-t)` when its interval ends at `r`. The identities with right
/// derivatives use the mirrored pair about the mirrored split point. The
/// whole-interval identities use `φ = t², ψ = 1 - t` and `f = t², g = (1-t)²`.
#[derive(Debug, Clone)]
pub struct IbpCheck {
    pub lemma: Lemma,
    pub alpha: f64,
    pub r: f64,
    pub form: CorrectionForm,
    name: String,
}

impl IbpCheck {
    pub fn new(lemma: Lemma, alpha: f64, r: f64, form: CorrectionForm) -> Self {
        Self {
            lemma,
            alpha,
            r,
            form,
            name: format!("ibp-{lemma}"),
        }
    }

    /// `(g, f)` for the lemma.
    pub fn pair(&self, intervals: usize) -> Result<(Segment, Segment)> {
        let left_pair = |r: f64, at_r: bool| -> Result<(Segment, Segment)> {
            let f = unit(intervals, |t| t * t * (1.0 + t))?;
            let end = if at_r { r } else { 1.0 };
            let g = unit(intervals, |t| (end - t).powi(2) * (2.0 - t))?;
            Ok((g, f))
        };
        let mirror = |(g, f): (Segment, Segment)| (g.mirrored(), f.mirrored());
        match self.lemma {
            Lemma::L1a => Ok((unit(intervals, |t| t * t)?, unit(intervals, |t| 1.0 - t)?)),
            Lemma::L1b => Ok((
                unit(intervals, |t| (1.0 - t).powi(2))?,
                unit(intervals, |t| t * t)?,
            )),
            Lemma::L2b => left_pair(self.r, false),
            Lemma::L2a => left_pair(self.r, true),
            Lemma::L3a => left_pair(1.0 - self.r, true).map(mirror),
            Lemma::L3b => left_pair(1.0 - self.r, false).map(mirror),
        }
    }

    pub fn report(&self, intervals: usize) -> Result<crate::ibp::IbpReport> {
        let (g, f) = self.pair(intervals)?;
        match self.lemma {
            Lemma::L1a => ibp_whole(&g, &f, self.alpha),
            Lemma::L1b => ibp_whole_deriv(&g, &f, self.alpha),
            _ => ibp_split_with(
                &g,
                &f,
                self.alpha,
                SplitSpec::new(self.r, self.lemma)?,
                self.form,
            ),
        }
    }
}

impl ConvergenceCheck for IbpCheck {
    fn name(&self) -> &str {
        &self.name
    }

    fn advertised_order(&self) -> f64 {
        1.0
    }

    fn error(&self, intervals: usize, _layer: f64) -> Result<f64> {
        Ok(self.report(intervals)?.residual)
    }

    fn with_params(&self, p: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>> {
        let allowed: &[&str] = if self.lemma.is_split() {
            &["alpha", "r", "form"]
        } else {
            &["alpha"]
        };
        unused(p, self.name(), allowed)?;
        Ok(Arc::new(Self::new(
            self.lemma,
            check_order(p.alpha.unwrap_or(self.alpha))?,
            p.r.unwrap_or(self.r),
            p.form.unwrap_or(self.form),
        )))
    }

    fn describe(&self) -> String {
        if self.lemma.is_split() {
            format!(
                "{} alpha={} r={} form={:?}",
                self.name, self.alpha, self.r, self.form
            )
        } else {
            format!("{} alpha={}", self.name, self.alpha)
        }
    }
}

/// Named checks.
#[derive(Clone)]
pub struct CheckRegistry {
    checks: BTreeMap<String, Arc<dyn ConvergenceCheck>>,
}

impl CheckRegistry {
    pub fn empty() -> Self {
        Self {
            checks: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(CaputoPower {
            alpha: 0.5,
            beta: 3.0,
        }));
        reg.register(Arc::new(CaputoConstant { alpha: 0.5 }));
        reg.register(Arc::new(RlConstant { alpha: 0.5 }));
        reg.register(Arc::new(Connection {
            alpha: 0.5,
            function: TestFunction::Sine,
        }));
        reg.register(Arc::new(IntegralPower {
            alpha: 0.5,
            beta: 1.0,
        }));
        for lemma in Lemma::ALL {
            reg.register(Arc::new(IbpCheck::new(
                lemma,
                0.5,
                0.5,
                CorrectionForm::default(),
            )));
        }
        reg
    }

    pub fn register(&mut self, check: Arc<dyn ConvergenceCheck>) {
        self.checks.insert(check.name().to_string(), check);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ConvergenceCheck>> {
        self.checks.get(name).cloned().ok_or_else(|| {
            Error::Domain(format!(
                "unknown check `{name}` (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.checks.keys().cloned().collect()
    }
}

impl Default for CheckRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    /// `log2(error(2h) / error(h))`; `None` on the first row or when either
    /// error is exact.
    pub estimated_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub check: String,
    pub advertised_order: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "h,error,estimated_order";

    /// Every error is at or below [`EXACT_TOL`].
    pub fn exact(&self) -> bool {
        self.rows.iter().all(|r| r.error <= EXACT_TOL)
    }

    /// Errors decrease strictly from each grid to the next.
    pub fn monotone(&self) -> bool {
        self.exact() || self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    /// Least-squares slope of `log2 error` against `log2 h`, `None` when an
    /// error is exact or non-positive.
    pub fn fitted_order(&self) -> Option<f64> {
        if self.rows.len() < 2 || self.rows.iter().any(|r| !(r.error > EXACT_TOL)) {
            return None;
        }
        let xs: Vec<f64> = self.rows.iter().map(|r| r.h.log2()).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.error.log2()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// Order on the two finest grids.
    pub fn final_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.estimated_order)
    }

    /// Exact, or monotone with a final order of at least the advertised
    /// order minus `0.25`.
    pub fn passes(&self) -> bool {
        self.exact()
            || (self.monotone()
                && self
                    .final_order()
                    .is_some_and(|o| o >= self.advertised_order - 0.25))
    }
}

/// Runs `check` on `levels` grids starting from `base_intervals` steps and
/// halving the step each time. The boundary layer is `4h` of the coarsest
/// grid on every level, so each error is taken over the same set of times.
pub fn run(
    check: &dyn ConvergenceCheck,
    base_intervals: usize,
    levels: usize,
) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::Domain(format!(
            "a refinement study needs at least 2 levels, got {levels}"
        )));
    }
    if base_intervals < 8 {
        return Err(Error::Domain(format!(
            "base grid needs at least 8 steps, got {base_intervals}"
        )));
    }
    let layer = LAYER_STEPS as f64 / base_intervals as f64;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let intervals = base_intervals << level;
        let error = check.error(intervals, layer)?;
        if !error.is_finite() {
            return Err(Error::Domain(format!(
                "{} produced a non-finite error at h = 1/{intervals}",
                check.name()
            )));
        }
        let estimated_order = rows.last().and_then(|prev| {
            (prev.error > EXACT_TOL && error > EXACT_TOL).then(|| (prev.error / error).log2())
        });
        rows.push(ConvergenceRow {
            h: 1.0 / intervals as f64,
            error,
            estimated_order,
        });
    }
    Ok(ConvergenceReport {
        check: check.describe(),
        advertised_order: check.advertised_order(),
        rows,
    })
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} (advertised order {})",
            self.check, self.advertised_order
        )?;
        for r in &self.rows {
            match r.estimated_order {
                Some(o) => writeln!(
                    f,
                    "  h = {:.6e}  error = {:.6e}  order = {o:.3}",
                    r.h, r.error
                )?,
                None => writeln!(f, "  h = {:.6e}  error = {:.6e}", r.h, r.error)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_builtins() {
        let reg = CheckRegistry::with_builtins();
        for name in [
            "caputo-power",
            "caputo-constant",
            "rl-constant",
            "connection",
            "integral-power",
            "ibp-L2b",
        ] {
            assert!(reg.get(name).is_ok(), "{name}");
        }
        assert!(reg.get("nope").is_err());
    }

    #[test]
    fn constant_is_exact() {
        let rep = run(&CaputoConstant { alpha: 0.5 }, 64, 3).unwrap();
        assert!(rep.exact() && rep.passes());
        assert!(rep.rows.iter().all(|r| r.estimated_order.is_none()));
    }

    #[test]
    fn rejects_foreign_parameters() {
        let reg = CheckRegistry::with_builtins();
        let p = CheckParams {
            function: Some(TestFunction::Square),
            ..Default::default()
        };
        assert!(reg.get("caputo-power").unwrap().with_params(&p).is_err());
        assert!(reg.get("connection").unwrap().with_params(&p).is_ok());
    }

    #[test]
    fn order_from_synthetic_errors() {
        struct Square;
        impl ConvergenceCheck for Square {
            fn name(&self) -> &str {
                "square"
            }
            fn advertised_order(&self) -> f64 {
                2.0
            }
            fn error(&self, n: usize, _: f64) -> Result<f64> {
                Ok((n as f64).powi(-2))
            }
            fn with_params(&self, _: &CheckParams) -> Result<Arc<dyn ConvergenceCheck>> {
                Ok(Arc::new(Square))
            }
        }
        let rep = run(&Square, 16, 4).unwrap();
        assert!((rep.fitted_order().unwrap() - 2.0).abs() < 1e-12);
        assert!((rep.final_order().unwrap() - 2.0).abs() < 1e-12);
        assert!(rep.passes());
    }
}
