//! Run configuration: a JSON tree validated field by field.
//!
//! ```json
//! {
//!   "problem": { "a": 0, "b": 1, "tau": 0.25, "h": 0.00390625, "k": 1,
//!                "alphas": [0.7], "history": "0", "c": [1], "L": "0.5*D1^2" },
//!   "solver": { "max_iter": 2000 },
//!   "output": { "dir": "out" }
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracdelay::control::{ControlProblem, OcOptions};
use fracdelay::convergence::{CheckParams, CheckRegistry, ConvergenceCheck, IbpCheck};
use fracdelay::expr::ExprFunction;
use fracdelay::fracops::{FractionalOperator, OperatorRegistry};
use fracdelay::ibp::{CorrectionForm, Lemma};
use fracdelay::variational::{DelayedProblem, ProblemSpec, Scheme, SolveOptions, Trajectory};
use fracdelay::{Grid, SampledFunction, Segment};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

const SECTIONS: [&str; 9] = [
    "problem",
    "solver",
    "output",
    "ops",
    "ibp",
    "el",
    "solve",
    "oc",
    "convergence",
];

#[derive(Debug)]
pub enum Problem {
    Variational(DelayedProblem),
    Control(ControlProblem),
}

impl Problem {
    pub fn base(&self) -> &DelayedProblem {
        match self {
            Problem::Variational(p) => p,
            Problem::Control(c) => c.base(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

pub struct OpsConfig {
    pub operator: Arc<dyn FractionalOperator>,
    pub order: f64,
    pub samples: Segment,
    pub exact: Option<Vec<f64>>,
}

pub struct IbpConfig {
    pub check: IbpCheck,
    pub base_intervals: usize,
    pub levels: usize,
}

/// Trajectory at which `el` evaluates the residuals; absent means solve
/// first.
pub struct ElConfig {
    pub y: Trajectory,
    pub u: Option<Segment>,
    pub lambda: Option<Segment>,
}

pub struct ConvergenceConfig {
    pub check: Arc<dyn ConvergenceCheck>,
    pub base_intervals: usize,
    pub levels: usize,
}

pub struct RunConfig {
    pub problem: Option<Problem>,
    pub solve: SolveOptions,
    pub oc: OcOptions,
    pub output: OutputConfig,
    pub ops: Option<OpsConfig>,
    pub ibp: Option<IbpConfig>,
    pub el: Option<ElConfig>,
    /// Reference solution for `solve`, one expression per component.
    pub solve_exact: Option<Vec<ExprFunction>>,
    /// Reference control for `oc`.
    pub oc_exact_u: Option<ExprFunction>,
    pub convergence: Option<ConvergenceConfig>,
}

impl RunConfig {
    pub fn problem(&self, command: &str) -> Result<&Problem> {
        self.problem.as_ref().ok_or_else(|| {
            CliError::config(
                "problem",
                format!("missing section (required by `{command}`)"),
            )
        })
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::config("<root>", format!("not valid JSON: {e}")))?;
    let root = Node::root(&value)?;
    root.allow(&SECTIONS)?;

    let solver = root.child("solver")?;
    let (solve, oc, scheme) = solver_section(solver.as_ref())?;
    let output = output_section(root.child("output")?.as_ref())?;
    let problem = root
        .child("problem")?
        .map(|p| problem_section(&p, scheme))
        .transpose()?;

    let ops = root.child("ops")?.map(|n| ops_section(&n)).transpose()?;
    let ibp = root.child("ibp")?.map(|n| ibp_section(&n)).transpose()?;
    let el = match root.child("el")? {
        Some(n) => el_section(&n, problem.as_ref())?,
        None => None,
    };
    let solve_exact = match root.child("solve")? {
        Some(n) => {
            n.allow(&["exact"])?;
            let d = problem.as_ref().map_or(1, |p| p.base().d());
            n.expressions("exact", d, &["t"])?
        }
        None => None,
    };
    let oc_exact_u = match root.child("oc")? {
        Some(n) => {
            n.allow(&["exact_u"])?;
            n.expression("exact_u", &["t"])?
        }
        None => None,
    };
    let convergence = root
        .child("convergence")?
        .map(|n| convergence_section(&n))
        .transpose()?;

    Ok(RunConfig {
        problem,
        solve,
        oc,
        output,
        ops,
        ibp,
        el,
        solve_exact,
        oc_exact_u,
        convergence,
    })
}

/// An object in the tree together with its dotted path.
struct Node<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Node<'a> {
    fn root(v: &'a Value) -> Result<Self> {
        match v {
            Value::Object(map) => Ok(Self {
                path: String::new(),
                map,
            }),
            _ => Err(CliError::config("<root>", "expected an object")),
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn err(&self, key: &str, message: impl ToString) -> CliError {
        CliError::config(self.field(key), message)
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(self.err(
                k,
                format!("unknown key (expected one of {})", keys.join(", ")),
            )),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| self.err(key, "missing key"))
    }

    fn child(&self, key: &str) -> Result<Option<Node<'a>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Object(map)) => Ok(Some(Node {
                path: self.field(key),
                map,
            })),
            Some(_) => Err(self.err(key, "expected an object")),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.err(key, format!("expected a finite number, got {v}"))),
            },
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.f64(key)? {
            Some(x) if !(x > 0.0) => Err(self.err(key, format!("must be positive, got {x}"))),
            x => Ok(x),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.as_u64() {
                Some(n) => Ok(Some(n as usize)),
                None => Err(self.err(key, format!("expected a non-negative integer, got {v}"))),
            },
        }
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(self.err(key, format!("expected a string, got {v}"))),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => numbers(v)
                .map(Some)
                .ok_or_else(|| self.err(key, format!("expected a list of numbers, got {v}"))),
        }
    }

    fn expression(&self, key: &str, channels: &[&str]) -> Result<Option<ExprFunction>> {
        match self.str(key)? {
            None => Ok(None),
            Some(src) => ExprFunction::parse(src, channels)
                .map(Some)
                .map_err(|e| self.err(key, e)),
        }
    }

    /// A single expression shared by all `d` components, or a list of `d`.
    fn expressions(
        &self,
        key: &str,
        d: usize,
        channels: &[&str],
    ) -> Result<Option<Vec<ExprFunction>>> {
        let sources: Vec<&str> = match self.get(key) {
            None => return Ok(None),
            Some(Value::String(s)) => vec![s.as_str(); d],
            Some(Value::Array(items)) => {
                let list: Option<Vec<&str>> = items.iter().map(Value::as_str).collect();
                match list {
                    Some(l) if l.len() == d => l,
                    Some(l) => {
                        return Err(
                            self.err(key, format!("expected {d} expressions, got {}", l.len()))
                        )
                    }
                    None => return Err(self.err(key, "expected a string or a list of strings")),
                }
            }
            Some(v) => {
                return Err(self.err(
                    key,
                    format!("expected a string or a list of strings, got {v}"),
                ))
            }
        };
        sources
            .iter()
            .enumerate()
            .map(|(z, src)| {
                ExprFunction::parse(src, channels).map_err(|e| self.err(&indexed(key, z, d), e))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

fn indexed(key: &str, z: usize, d: usize) -> String {
    if d == 1 {
        key.to_string()
    } else {
        format!("{key}[{z}]")
    }
}

fn numbers(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?
        .iter()
        .map(|x| x.as_f64().filter(|x| x.is_finite()))
        .collect()
}

/// Samples a function of `t`, naming `field` if evaluation fails.
fn sample(f: &ExprFunction, times: impl Iterator<Item = f64>, field: &str) -> Result<Vec<f64>> {
    times
        .map(|t| {
            f.eval(&[t])
                .map_err(|e| CliError::config(field, format!("at t = {t}: {e}")))
        })
        .collect()
}

fn solver_section(node: Option<&Node>) -> Result<(SolveOptions, OcOptions, Scheme)> {
    let mut solve = SolveOptions::default();
    let mut oc = OcOptions::default();
    let registry = OperatorRegistry::with_builtins();
    let Some(n) = node else {
        oc.inner = solve;
        return Ok((solve, oc, Scheme::default()));
    };
    n.allow(&[
        "max_iter",
        "grad_rtol",
        "grad_atol",
        "stationarity_tol",
        "variation_eps",
        "basis_size",
        "gradient_floor",
        "left_operator",
        "right_operator",
        "mu0",
        "growth",
        "required_decrease",
        "tol_G",
        "max_outer",
    ])?;
    if let Some(v) = n.usize("max_iter")? {
        solve.bfgs.max_iter = v;
    }
    if let Some(v) = n.positive("grad_rtol")? {
        solve.bfgs.grad_rtol = v;
    }
    if let Some(v) = n.f64("grad_atol")? {
        if v < 0.0 {
            return Err(n.err("grad_atol", "must be non-negative"));
        }
        solve.bfgs.grad_atol = v;
    }
    if let Some(v) = n.positive("stationarity_tol")? {
        solve.stationarity_tol = v;
    }
    if let Some(v) = n.positive("variation_eps")? {
        solve.variation_eps = v;
    }
    if let Some(v) = n.usize("basis_size")? {
        if v == 0 {
            return Err(n.err("basis_size", "must be at least 1"));
        }
        solve.basis_size = v;
    }
    if let Some(v) = n.f64("gradient_floor")? {
        if v < 0.0 {
            return Err(n.err("gradient_floor", "must be non-negative"));
        }
        solve.gradient_floor = v;
    }
    if let Some(v) = n.positive("mu0")? {
        oc.mu0 = v;
    }
    if let Some(v) = n.f64("growth")? {
        if !(v >= 1.0) {
            return Err(n.err("growth", format!("must be at least 1, got {v}")));
        }
        oc.growth = v;
    }
    if let Some(v) = n.f64("required_decrease")? {
        if !(v > 0.0 && v <= 1.0) {
            return Err(n.err("required_decrease", format!("must lie in (0, 1], got {v}")));
        }
        oc.required_decrease = v;
    }
    if let Some(v) = n.positive("tol_G")? {
        oc.tol_g = v;
    }
    if let Some(v) = n.usize("max_outer")? {
        if v == 0 {
            return Err(n.err("max_outer", "must be at least 1"));
        }
        oc.max_outer = v;
    }
    oc.inner = solve;
    let left = n.str("left_operator")?.unwrap_or(Scheme::DEFAULT_LEFT);
    let right = n.str("right_operator")?.unwrap_or(Scheme::DEFAULT_RIGHT);
    for (key, name) in [("left_operator", left), ("right_operator", right)] {
        registry.get(name).map_err(|e| n.err(key, e))?;
    }
    let scheme =
        Scheme::from_registry(&registry, left, right).map_err(|e| n.err("left_operator", e))?;
    Ok((solve, oc, scheme))
}

fn output_section(node: Option<&Node>) -> Result<OutputConfig> {
    let Some(n) = node else {
        return Ok(OutputConfig {
            dir: PathBuf::from("out"),
        });
    };
    n.allow(&["dir", "precision"])?;
    if let Some(p) = n.usize("precision")? {
        if p != 17 {
            return Err(n.err(
                "precision",
                format!("only 17 significant digits are supported, got {p}"),
            ));
        }
    }
    let dir = n.str("dir")?.unwrap_or("out");
    if dir.is_empty() {
        return Err(n.err("dir", "must not be empty"));
    }
    Ok(OutputConfig {
        dir: PathBuf::from(dir),
    })
}

/// Attributes a grid construction error to the key that caused it.
fn grid_field(message: &str, by_step: bool) -> &'static str {
    if message.contains("tau") {
        "tau"
    } else if message.contains("a < b") {
        "b"
    } else if by_step {
        "h"
    } else {
        "n_active"
    }
}

/// Attributes a problem construction error to the key that caused it.
fn problem_field(message: &str) -> &'static str {
    if message.contains("alphas") {
        "alphas"
    } else if message.contains("betas") {
        "betas"
    } else if message.contains("terminal") {
        "c"
    } else if message.contains("history") {
        "history"
    } else if message.contains("active nodes") {
        "h"
    } else if message.contains("components") {
        "d"
    } else {
        "k"
    }
}

fn problem_section(n: &Node, scheme: Scheme) -> Result<Problem> {
    n.allow(&[
        "a", "b", "tau", "h", "n_active", "alphas", "betas", "k", "d", "c", "history", "L", "F",
        "G",
    ])?;
    let a = n.require("a", n.f64("a")?)?;
    let b = n.require("b", n.f64("b")?)?;
    let tau = n.require("tau", n.f64("tau")?)?;
    let grid = match (n.f64("h")?, n.usize("n_active")?) {
        (Some(_), Some(_)) => return Err(n.err("h", "give either h or n_active, not both")),
        (None, None) => return Err(n.err("h", "missing key (or give n_active)")),
        (Some(h), None) => Grid::with_step(a, b, tau, h).map_err(|e| {
            let m = e.to_string();
            n.err(grid_field(&m, true), m)
        })?,
        (None, Some(m)) => Grid::new(a, b, tau, m).map_err(|e| {
            let msg = e.to_string();
            n.err(grid_field(&msg, false), msg)
        })?,
    };
    let alphas = n.f64_list("alphas")?.unwrap_or_default();
    let betas = n.f64_list("betas")?.unwrap_or_default();
    let k = n.require("k", n.usize("k")?)?;
    let d = n.usize("d")?.unwrap_or(1);
    if d == 0 {
        return Err(n.err("d", "must be at least 1"));
    }
    let terminal = terminal_values(n, d)?;
    let history = n
        .require("history", n.expressions("history", d, &["t"])?)?
        .iter()
        .enumerate()
        .map(|(z, f)| {
            let field = n.field(&indexed("history", z, d));
            let nodes: Vec<f64> = (0..=grid.n_history()).map(|i| grid.t(i)).collect();
            sample(f, nodes.into_iter(), &field)
        })
        .collect::<Result<Vec<_>>>()?;

    let lagrangian = n.str("L")?;
    let perf = n.str("F")?;
    let constraint = n.str("G")?;
    let control = match (lagrangian, perf, constraint) {
        (Some(_), None, None) => false,
        (None, Some(_), Some(_)) => true,
        (Some(_), _, _) => return Err(n.err("L", "give either L or F and G, not both")),
        (None, Some(_), None) => return Err(n.err("G", "missing key (required with F)")),
        (None, None, Some(_)) => return Err(n.err("F", "missing key (required with G)")),
        (None, None, None) => return Err(n.err("L", "missing key (or give F and G)")),
    };
    let mut spec = ProblemSpec {
        grid,
        alphas,
        betas,
        k,
        d,
        terminal,
        history,
        integrand: Arc::new(ExprFunction::parse("0", &["t"])?),
        scheme,
        control,
    };
    let names = spec.channel_names();
    let bind = |key: &str, src: &str| -> Result<Arc<ExprFunction>> {
        ExprFunction::parse(src, &names)
            .map(Arc::new)
            .map_err(|e| n.err(key, e))
    };
    let (main_key, main_src) = if control {
        ("F", perf)
    } else {
        ("L", lagrangian)
    };
    let main = bind(main_key, main_src.unwrap_or_default())?;
    spec.integrand = main.clone();
    let base = spec.build().map_err(|e| {
        let m = e.to_string();
        n.err(problem_field(&m), m)
    })?;
    if !control {
        return Ok(Problem::Variational(base));
    }
    let g = bind("G", constraint.unwrap_or_default())?;
    let cp = ControlProblem::new(base, main, g).map_err(|e| n.err("G", e))?;
    Ok(Problem::Control(cp))
}

/// `c`: `[c_0, ..., c_{k-1}]` for a scalar state, otherwise one such list
/// per component.
fn terminal_values(n: &Node, d: usize) -> Result<Vec<Vec<f64>>> {
    let v = n.require("c", n.get("c"))?;
    let bad = || {
        n.err(
            "c",
            format!(
                "expected {} list of numbers, got {v}",
                if d == 1 { "a" } else { "a list of" }
            ),
        )
    };
    if d == 1 {
        if let Some(flat) = numbers(v) {
            return Ok(vec![flat]);
        }
    }
    let rows = v.as_array().ok_or_else(bad)?;
    if rows.len() != d {
        return Err(n.err(
            "c",
            format!("expected {d} lists, one per component, got {}", rows.len()),
        ));
    }
    rows.iter().map(|r| numbers(r).ok_or_else(bad)).collect()
}

fn ops_section(n: &Node) -> Result<OpsConfig> {
    n.allow(&["operator", "order", "function", "a", "b", "h", "n", "exact"])?;
    let registry = OperatorRegistry::with_builtins();
    let name = n.require("operator", n.str("operator")?)?;
    let operator = registry.get(name).map_err(|e| n.err("operator", e))?;
    let order = n.require("order", n.f64("order")?)?;
    if order < 0.0 {
        return Err(n.err("order", format!("must be non-negative, got {order}")));
    }
    let a = n.f64("a")?.unwrap_or(0.0);
    let b = n.f64("b")?.unwrap_or(1.0);
    if !(b > a) {
        return Err(n.err("b", format!("need a < b, got a = {a}, b = {b}")));
    }
    let count = match (n.positive("h")?, n.usize("n")?) {
        (Some(_), Some(_)) => return Err(n.err("h", "give either h or n, not both")),
        (Some(h), None) => {
            let cells = (b - a) / h;
            if (cells - cells.round()).abs() > 1e-9 * cells.round().max(1.0) {
                return Err(n.err(
                    "h",
                    format!("b - a = {} is not an integer multiple of h = {h}", b - a),
                ));
            }
            cells.round() as usize + 1
        }
        (None, Some(m)) => m,
        (None, None) => 1025,
    };
    if count < 11 {
        return Err(n.err(
            if n.get("h").is_some() { "h" } else { "n" },
            format!("need at least 11 nodes, got {count}"),
        ));
    }
    let f = n.require("function", n.expression("function", &["t"])?)?;
    let step = (b - a) / (count - 1) as f64;
    let times = (0..count).map(|i| a + i as f64 * step);
    let samples = Segment::new(a, step, sample(&f, times.clone(), &n.field("function"))?)?;
    // the reference may be singular at the anchor; such nodes are skipped
    let exact = n
        .expression("exact", &["t"])?
        .map(|e| times.map(|t| e.eval(&[t]).unwrap_or(f64::NAN)).collect());
    Ok(OpsConfig {
        operator,
        order,
        samples,
        exact,
    })
}

fn lemma(n: &Node) -> Result<Lemma> {
    n.require("lemma", n.str("lemma")?)?
        .parse()
        .map_err(|e| n.err("lemma", e))
}

fn form(n: &Node) -> Result<Option<CorrectionForm>> {
    n.str("form")?
        .map(|s| s.parse().map_err(|e| n.err("form", e)))
        .transpose()
}

fn order_in_unit(n: &Node, key: &str) -> Result<Option<f64>> {
    match n.f64(key)? {
        Some(v) if !(v > 0.0 && v < 1.0) => Err(n.err(key, format!("must lie in (0, 1), got {v}"))),
        v => Ok(v),
    }
}

fn ibp_section(n: &Node) -> Result<IbpConfig> {
    n.allow(&["lemma", "alpha", "r", "form", "base_intervals", "levels"])?;
    let lemma = lemma(n)?;
    let alpha = order_in_unit(n, "alpha")?.unwrap_or(0.5);
    let r = order_in_unit(n, "r")?.unwrap_or(0.5);
    let check = IbpCheck::new(lemma, alpha, r, form(n)?.unwrap_or_default());
    let base_intervals = base_intervals(n, 128)?;
    let levels = n.usize("levels")?.unwrap_or(4);
    Ok(IbpConfig {
        check,
        base_intervals,
        levels,
    })
}

fn base_intervals(n: &Node, default: usize) -> Result<usize> {
    let m = n.usize("base_intervals")?.unwrap_or(default);
    if m < 8 || m % 2 != 0 {
        return Err(n.err(
            "base_intervals",
            format!("must be an even number of at least 8, got {m}"),
        ));
    }
    Ok(m)
}

fn el_section(n: &Node, problem: Option<&Problem>) -> Result<Option<ElConfig>> {
    n.allow(&["y", "u", "lambda"])?;
    if n.get("y").is_none() {
        for key in ["u", "lambda"] {
            if n.get(key).is_some() {
                return Err(n.err(key, "only allowed together with el.y"));
            }
        }
        return Ok(None);
    }
    let p =
        problem.ok_or_else(|| CliError::config("problem", "missing section (required by el.y)"))?;
    let base = p.base();
    let grid = *base.grid();
    let exprs = n.expressions("y", base.d(), &["t"])?.unwrap_or_default();
    let comps = exprs
        .iter()
        .enumerate()
        .map(|(z, f)| {
            let field = n.field(&indexed("y", z, base.d()));
            let values = sample(f, (0..grid.len()).map(|i| grid.t(i)), &field)?;
            Ok(SampledFunction::new(grid, values)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let y = Trajectory::new(comps)?;
    base.check_trajectory(&y).map_err(|e| n.err("y", e))?;
    let active = |key: &str| -> Result<Option<Segment>> {
        match n.expression(key, &["t"])? {
            None => Ok(None),
            Some(f) => {
                let v = sample(
                    &f,
                    (0..grid.n_active()).map(|i| grid.active_t(i)),
                    &n.field(key),
                )?;
                Ok(Some(Segment::new(grid.a(), grid.h(), v)?))
            }
        }
    };
    let u = active("u")?;
    let lambda = active("lambda")?;
    match p {
        Problem::Control(_) if u.is_none() => {
            return Err(n.err("u", "missing key (required for a control problem)"))
        }
        Problem::Variational(_) if u.is_some() || lambda.is_some() => {
            let key = if u.is_some() { "u" } else { "lambda" };
            return Err(n.err(key, "only allowed for a control problem"));
        }
        _ => {}
    }
    Ok(Some(ElConfig { y, u, lambda }))
}

fn convergence_section(n: &Node) -> Result<ConvergenceConfig> {
    n.allow(&[
        "check",
        "alpha",
        "beta",
        "function",
        "r",
        "form",
        "base_intervals",
        "levels",
    ])?;
    let registry = CheckRegistry::with_builtins();
    let name = n.require("check", n.str("check")?)?;
    let proto = registry.get(name).map_err(|e| n.err("check", e))?;
    let function = n
        .str("function")?
        .map(|s| s.parse().map_err(|e| n.err("function", e)))
        .transpose()?;
    let params = CheckParams {
        alpha: n.f64("alpha")?,
        beta: n.f64("beta")?,
        function,
        r: order_in_unit(n, "r")?,
        form: form(n)?,
    };
    let check = proto.with_params(&params).map_err(|e| n.err("check", e))?;
    Ok(ConvergenceConfig {
        check,
        base_intervals: base_intervals(n, 64)?,
        levels: n.usize("levels")?.unwrap_or(5),
    })
}
