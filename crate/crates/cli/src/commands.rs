//! Subcommand drivers. Each builds a [`Report`]: the summary text, the CSV
//! tables to write and the exit status.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fracdelay::control::{
    oc_residual, oc_transversality, solve_oc, ControlProblem, ControlSolution,
};
use fracdelay::convergence::{run, ConvergenceCheck, ConvergenceReport, EXACT_TOL};
use fracdelay::csv::{self, Table};
use fracdelay::fracops::{interior_max_abs, layer_nodes};
use fracdelay::variational::{
    el_residual, solve_with, transversality_residual, variation_basis, DelayedProblem, ElResidual,
    Trajectory,
};
use fracdelay::Segment;

use crate::config::{Problem, RunConfig};
use crate::error::{CliError, Result, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Apply one fractional operator to a sampled function.
    Ops,
    /// Refinement study of an integration-by-parts identity.
    Ibp,
    /// Euler-Lagrange and transversality residuals.
    El,
    /// Minimise the delayed functional.
    Solve,
    /// Solve the constrained optimal control problem.
    Oc,
    /// Grid-refinement study of a named check.
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ops => "ops",
            Command::Ibp => "ibp",
            Command::El => "el",
            Command::Solve => "solve",
            Command::Oc => "oc",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug)]
pub struct Report {
    pub summary: String,
    /// File name and contents, written in this order.
    pub files: Vec<(String, Table)>,
    pub status: Status,
}

impl Report {
    fn new() -> Self {
        Self {
            summary: String::new(),
            files: Vec::new(),
            status: Status::Ok,
        }
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.summary.push_str(text.as_ref());
        self.summary.push('\n');
    }

    fn file(&mut self, name: &str, table: Table) {
        self.files.push((name.to_string(), table));
    }

    /// Writes every table into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        self.files
            .iter()
            .map(|(name, table)| {
                let path = dir.join(name);
                table.write_file(&path)?;
                Ok(path)
            })
            .collect()
    }
}

/// Runs `command`; `levels` overrides the configured number of refinement
/// levels.
pub fn execute(command: Command, cfg: &RunConfig, levels: Option<usize>) -> Result<Report> {
    match command {
        Command::Ops => cmd_ops(cfg),
        Command::Ibp => cmd_ibp(cfg, levels),
        Command::El => cmd_el(cfg),
        Command::Solve => cmd_solve(cfg),
        Command::Oc => cmd_oc(cfg),
        Command::Convergence => cmd_convergence(cfg, levels).map(|(report, _)| report),
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref()
        .ok_or_else(|| CliError::config(name, format!("missing section (required by `{name}`)")))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn cmd_ops(cfg: &RunConfig) -> Result<Report> {
    let ops = section(&cfg.ops, "ops")?;
    let f = &ops.samples;
    let applied = ops.operator.apply(f, ops.order)?;
    let mut r = Report::new();
    r.line(format!(
        "{} of order {} on [{}, {}] with {} nodes (h = {:.6e})",
        ops.operator.name(),
        ops.order,
        f.start(),
        f.end(),
        f.len(),
        f.step()
    ));
    if applied.classical_fallback {
        r.line("integer order: classical derivative used");
    }
    if let Some(exact) = &ops.exact {
        let values = applied.samples.values();
        let abs: Vec<f64> = values
            .iter()
            .zip(exact)
            .map(|(v, e)| if e.is_finite() { v - e } else { 0.0 })
            .collect();
        let rel: Vec<f64> = values
            .iter()
            .zip(exact)
            .map(|(v, e)| {
                if e.is_finite() && *e != 0.0 {
                    (v - e) / e
                } else {
                    0.0
                }
            })
            .collect();
        let m = layer_nodes(f.step(), None);
        r.line(format!(
            "max abs error (outside 4h layers) {:.6e}",
            interior_max_abs(&abs, m, m)
        ));
        r.line(format!(
            "max rel error (outside 4h layers) {:.6e}",
            interior_max_abs(&rel, m, m)
        ));
    }
    r.file("ops.csv", csv::segment(&applied.samples)?);
    Ok(r)
}

pub fn cmd_ibp(cfg: &RunConfig, levels: Option<usize>) -> Result<Report> {
    let ibp = section(&cfg.ibp, "ibp")?;
    let levels = levels.unwrap_or(ibp.levels);
    if levels < 2 {
        return Err(CliError::config(
            "ibp.levels",
            format!("need at least 2 levels, got {levels}"),
        ));
    }
    let reports = (0..levels)
        .map(|l| ibp.check.report(ibp.base_intervals << l))
        .collect::<fracdelay::Result<Vec<_>>>()?;
    let mut r = Report::new();
    r.line(format!("{} over {levels} grids", ibp.check.describe()));
    for rep in &reports {
        r.line(format!(
            "  h = {:.6e}  residual = {:.6e}",
            rep.h, rep.residual
        ));
    }
    let decreasing = reports
        .windows(2)
        .all(|w| w[1].residual < w[0].residual || w[1].residual <= EXACT_TOL);
    if decreasing {
        r.line("residuals decrease under refinement");
    } else {
        r.line("FLAGGED: residuals do not decrease under refinement");
        r.status = Status::Flagged;
    }
    r.file("ibp.csv", csv::ibp_reports(&reports)?);
    Ok(r)
}

fn residual_lines(r: &mut Report, el: &ElResidual, transversality: &[f64]) -> Result<()> {
    r.line(format!(
        "EL residual max (outside 4h layers) {:.6e}",
        el.interior_max(None)
    ));
    r.line(format!(
        "transversality max over {} basis variations {:.6e}",
        transversality.len(),
        max_abs(transversality)
    ));
    r.file("el_inner.csv", csv::pieces(&el.inner)?);
    r.file("el_outer.csv", csv::pieces(&el.outer)?);
    let mut t = Table::new("index,value");
    for (i, v) in transversality.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), csv::number(*v)])?;
    }
    r.file("transversality.csv", t);
    Ok(())
}

pub fn cmd_el(cfg: &RunConfig) -> Result<Report> {
    let problem = cfg.problem("el")?;
    let mut r = Report::new();
    match problem {
        Problem::Variational(p) => {
            let y = match &cfg.el {
                Some(el) => el.y.clone(),
                None => {
                    let sol = solve_variational(p, cfg, &mut r)?;
                    sol.y
                }
            };
            let el = el_residual(p, &y, None)?;
            let tr = variation_basis(p, cfg.solve.basis_size)?
                .iter()
                .map(|eta| transversality_residual(p, &y, None, eta))
                .collect::<fracdelay::Result<Vec<_>>>()?;
            residual_lines(&mut r, &el, &tr)?;
        }
        Problem::Control(cp) => {
            let s = match &cfg.el {
                Some(el) => {
                    let zero = Segment::new(
                        el.y.grid().a(),
                        el.y.grid().h(),
                        vec![0.0; el.y.grid().n_active()],
                    )?;
                    ControlSolution {
                        y: el.y.clone(),
                        u: el.u.clone().unwrap_or_else(|| zero.clone()),
                        lambda: el.lambda.clone().unwrap_or(zero),
                    }
                }
                None => solve_control(cp, cfg, &mut r)?,
            };
            let res = oc_residual(cp, &s)?;
            let tr = variation_basis(cp.base(), cfg.solve.basis_size)?
                .iter()
                .map(|eta| oc_transversality(cp, &s, eta))
                .collect::<fracdelay::Result<Vec<_>>>()?;
            residual_lines(&mut r, &res.el, &tr)?;
            r.line(format!(
                "control stationarity max {:.6e}",
                res.stationarity_u.max_abs()
            ));
            r.file("el_u.csv", csv::segment(&res.stationarity_u)?);
        }
    }
    Ok(r)
}

fn solve_variational(
    p: &DelayedProblem,
    cfg: &RunConfig,
    r: &mut Report,
) -> Result<fracdelay::variational::Solution> {
    let sol = solve_with(p, &**p.integrand(), &p.initial_guess()?, None, &cfg.solve)?;
    r.line(format!("J = {:.12e}", sol.value));
    r.line(format!(
        "termination {:?} after {} iterations",
        sol.termination,
        sol.log.last().map_or(0, |l| l.iter)
    ));
    r.line(format!(
        "max |first variation| over {} basis variations {:.6e}",
        sol.certificate.len(),
        sol.max_certificate()
    ));
    r.line(if sol.converged {
        "converged"
    } else {
        "NOT CONVERGED"
    });
    if !sol.converged {
        r.status = Status::NotConverged;
    }
    Ok(sol)
}

fn solve_control(cp: &ControlProblem, cfg: &RunConfig, r: &mut Report) -> Result<ControlSolution> {
    let res = solve_oc(cp, &ControlSolution::initial(cp)?, &cfg.oc)?;
    let last = res.log.last();
    r.line(format!("outer iterations {}", res.log.len()));
    r.line(format!("J = {:.12e}", last.map_or(f64::NAN, |l| l.j)));
    r.line(format!("||G||_inf = {:.6e}", res.norm_g));
    r.line(format!("inner termination {:?}", res.inner_termination));
    r.line(format!(
        "max |first variation| of the augmented index {:.6e}",
        max_abs(&res.certificate)
    ));
    r.line(if res.converged {
        "converged"
    } else {
        "NOT CONVERGED"
    });
    if !res.converged {
        r.status = Status::NotConverged;
    }
    r.file("oc_log.csv", csv::oc_log(&res.log)?);
    Ok(res.solution)
}

fn state_error(y: &Trajectory, exact: &[fracdelay::expr::ExprFunction]) -> Result<f64> {
    let g = y.grid();
    let mut err: f64 = 0.0;
    for (z, f) in exact.iter().enumerate() {
        for (j, v) in y.component(z).active_values().iter().enumerate() {
            let t = g.active_t(j);
            let e = f
                .eval(&[t])
                .map_err(|e| CliError::config("solve.exact", format!("at t = {t}: {e}")))?;
            err = err.max((v - e).abs());
        }
    }
    Ok(err)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Report> {
    let Problem::Variational(p) = cfg.problem("solve")? else {
        return Err(CliError::config(
            "problem.F",
            "`solve` needs a Lagrangian L; use `oc` for F and G",
        ));
    };
    let mut r = Report::new();
    let sol = solve_variational(p, cfg, &mut r)?;
    if let Some(exact) = &cfg.solve_exact {
        r.line(format!(
            "max-norm error against solve.exact {:.6e}",
            state_error(&sol.y, exact)?
        ));
    }
    r.file("solution.csv", csv::trajectory(&sol.y)?);
    r.file("iterations.csv", csv::iteration_log(&sol.log)?);
    let mut cert = Table::new("index,first_variation");
    for (i, v) in sol.certificate.iter().enumerate() {
        cert.push(vec![(i + 1).to_string(), csv::number(*v)])?;
    }
    r.file("certificate.csv", cert);
    Ok(r)
}

pub fn cmd_oc(cfg: &RunConfig) -> Result<Report> {
    let Problem::Control(cp) = cfg.problem("oc")? else {
        return Err(CliError::config(
            "problem.L",
            "`oc` needs F and G in place of L",
        ));
    };
    let mut r = Report::new();
    let s = solve_control(cp, cfg, &mut r)?;
    if let Some(exact) = &cfg.oc_exact_u {
        let mut err: f64 = 0.0;
        for (t, v) in s.u.times().zip(s.u.values()) {
            let e = exact
                .eval(&[t])
                .map_err(|e| CliError::config("oc.exact_u", format!("at t = {t}: {e}")))?;
            err = err.max((v - e).abs());
        }
        r.line(format!(
            "max-norm control error against oc.exact_u {err:.6e}"
        ));
    }
    r.file("oc_solution.csv", csv::control_solution(&s)?);
    Ok(r)
}

pub fn cmd_convergence(
    cfg: &RunConfig,
    levels: Option<usize>,
) -> Result<(Report, ConvergenceReport)> {
    let c = section(&cfg.convergence, "convergence")?;
    let levels = levels.unwrap_or(c.levels);
    if levels < 3 {
        return Err(CliError::config(
            "convergence.levels",
            format!("need at least 3 levels, got {levels}"),
        ));
    }
    let report = run(&*c.check, c.base_intervals, levels)?;
    let mut r = Report::new();
    r.summary.push_str(&report.to_string());
    let mut verdict = String::new();
    if report.exact() {
        verdict.push_str("exact at every level (order undefined)");
    } else {
        let _ = write!(
            verdict,
            "final order {}, fitted order {}",
            report
                .final_order()
                .map_or("undefined".into(), |o| format!("{o:.3}")),
            report
                .fitted_order()
                .map_or("undefined".into(), |o| format!("{o:.3}")),
        );
    }
    r.line(verdict);
    if report.passes() {
        r.line("PASS");
    } else {
        r.line(if report.monotone() {
            "FLAGGED: order below advertised - 0.25"
        } else {
            "FLAGGED: error sequence is not monotone"
        });
        r.status = Status::Flagged;
    }
    r.file("convergence.csv", csv::convergence(&report)?);
    Ok((r, report))
}
