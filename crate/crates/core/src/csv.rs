//! CSV emission with a fixed numeric format: 17 significant digits in
//! scientific notation, so every value round-trips and identical runs give
//! identical bytes.

use std::io::Write;

use crate::control::{ControlSolution, OcLogRow};
use crate::convergence::ConvergenceReport;
use crate::error::{Error, Result};
use crate::grid::Segment;
use crate::ibp::IbpReport;
use crate::optim::IterRecord;
use crate::variational::Trajectory;

pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn output_err(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

/// A header and rows of already formatted fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Shape(format!(
                "row has {} fields, header {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_numbers(&mut self, row: &[f64]) -> Result<()> {
        self.push(row.iter().map(|x| number(*x)).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_to(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header).map_err(output_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(output_err)?;
        }
        w.flush().map_err(output_err)
    }

    pub fn render(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        String::from_utf8(buf).map_err(output_err)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)
            .map_err(|e| Error::Output(format!("{}: {e}", path.display())))?;
        self.write_to(std::io::BufWriter::new(f))
    }
}

/// `t,value`
pub fn segment(s: &Segment) -> Result<Table> {
    let mut t = Table::new("t,value");
    for (x, v) in s.times().zip(s.values()) {
        t.push_numbers(&[x, *v])?;
    }
    Ok(t)
}

/// `t,component,value` over the whole grid.
pub fn trajectory(y: &Trajectory) -> Result<Table> {
    let mut t = Table::new("t,component,value");
    for (x, z, v) in y.rows() {
        t.push(vec![number(x), z.to_string(), number(v)])?;
    }
    Ok(t)
}

/// `t,component,value` for one residual piece per component.
pub fn pieces(segments: &[Segment]) -> Result<Table> {
    let mut t = Table::new("t,component,value");
    for (z, s) in segments.iter().enumerate() {
        for (x, v) in s.times().zip(s.values()) {
            t.push(vec![number(x), (z + 1).to_string(), number(*v)])?;
        }
    }
    Ok(t)
}

pub fn ibp_reports(reports: &[IbpReport]) -> Result<Table> {
    let mut t = Table::new(IbpReport::CSV_HEADER);
    for r in reports {
        let mut row = vec![r.lemma.to_string()];
        row.extend([r.alpha, r.r, r.h, r.lhs, r.rhs, r.correction, r.residual].map(number));
        t.push(row)?;
    }
    Ok(t)
}

/// `iter,J,grad_norm,step`
pub fn iteration_log(log: &[IterRecord]) -> Result<Table> {
    let mut t = Table::new("iter,J,grad_norm,step");
    for r in log {
        t.push(vec![
            r.iter.to_string(),
            number(r.value),
            number(r.grad_norm),
            number(r.step),
        ])?;
    }
    Ok(t)
}

/// `t,y,u,lambda` on the active grid; with several components the state
/// columns are `y_1, y_2, ...`.
pub fn control_solution(s: &ControlSolution) -> Result<Table> {
    let d = s.y.d();
    let header = if d == 1 {
        "t,y,u,lambda".to_string()
    } else {
        let ys: Vec<String> = (1..=d).map(|z| format!("y_{z}")).collect();
        format!("t,{},u,lambda", ys.join(","))
    };
    let mut t = Table::new(&header);
    for i in 0..s.u.len() {
        let mut row = vec![s.u.t(i)];
        row.extend(s.y.components().iter().map(|c| c.active_values()[i]));
        row.push(s.u.values()[i]);
        row.push(s.lambda.values()[i]);
        t.push_numbers(&row)?;
    }
    Ok(t)
}

pub fn oc_log(log: &[OcLogRow]) -> Result<Table> {
    let mut t = Table::new(OcLogRow::CSV_HEADER);
    for r in log {
        t.push(vec![
            r.outer_iter.to_string(),
            number(r.mu),
            number(r.norm_g),
            number(r.j),
            number(r.j_hat),
        ])?;
    }
    Ok(t)
}

/// `h,error,estimated_order`, the order empty where undefined.
pub fn convergence(report: &ConvergenceReport) -> Result<Table> {
    let mut t = Table::new(ConvergenceReport::CSV_HEADER);
    for r in &report.rows {
        t.push(vec![
            number(r.h),
            number(r.error),
            r.estimated_order.map(number).unwrap_or_default(),
        ])?;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(number(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn segment_table() {
        let s = Segment::new(0.0, 0.5, vec![1.0, 2.0, 3.0]).unwrap();
        let out = segment(&s).unwrap().render().unwrap();
        assert_eq!(out.lines().count(), 4);
        assert!(out.starts_with("t,value\n0.0000000000000000e0,1.0000000000000000e0\n"));
    }

    #[test]
    fn rejects_ragged_rows() {
        let mut t = Table::new("a,b");
        assert!(t.push_numbers(&[1.0]).is_err());
    }
}
