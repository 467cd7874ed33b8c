//! Finite-difference derivatives on uniform nodes.
//!
//! Two families are provided:
//!
//! * collocated stencils of fourth order (central in the interior, shifted
//!   windows of the same width near the ends), used by the verification
//!   operators;
//! * the second-order summation-by-parts first difference that is paired with
//!   trapezoid weights, used inside the direct transcription of the
//!   functional.

use crate::error::{Error, Result};

/// Finite-difference weights for the `m`-th derivative at `x0` from the
/// given nodes (Fornberg's recursion).
pub fn fornberg(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Half-width of the central stencil used for an `m`-th derivative.
pub fn central_half_width(m: usize) -> usize {
    m.div_ceil(2) + 1
}

/// Number of nodes in the stencils used for an `m`-th derivative.
pub fn stencil_len(m: usize) -> usize {
    (2 * central_half_width(m) + 1).max(m + 4)
}

/// Number of nodes at each end of a segment where the collocated stencil is
/// not centred.
pub fn one_sided_width(m: usize) -> usize {
    if m == 0 {
        0
    } else {
        central_half_width(m)
    }
}

struct Stencil {
    first: usize,
    weights: Vec<f64>,
}

fn stencil_at(i: usize, n: usize, m: usize, h: f64) -> Stencil {
    let w = central_half_width(m);
    let (first, len) = if i >= w && i + w < n {
        (i - w, 2 * w + 1)
    } else {
        let len = stencil_len(m).min(n);
        let first = if i < w { 0 } else { n - len };
        (first, len)
    };
    let nodes: Vec<f64> = (first..first + len).map(|j| j as f64).collect();
    let scale = h.powi(m as i32);
    let weights = fornberg(i as f64, &nodes, m)
        .into_iter()
        .map(|c| c / scale)
        .collect();
    Stencil { first, weights }
}

fn apply(st: &Stencil, values: &[f64], center: f64) -> f64 {
    // the weights of a derivative sum to zero, so subtracting the centre value
    // keeps constants exact
    st.weights
        .iter()
        .zip(&values[st.first..])
        .map(|(c, v)| c * (v - center))
        .sum()
}

fn check_len(n: usize, m: usize) -> Result<()> {
    if n < stencil_len(m) {
        return Err(Error::Shape(format!(
            "need at least {} nodes for a derivative of order {m}, got {n}",
            stencil_len(m)
        )));
    }
    Ok(())
}

/// `m`-th derivative at every node with fourth-order collocated stencils.
pub fn derivative(values: &[f64], h: f64, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Ok(values.to_vec());
    }
    let n = values.len();
    check_len(n, m)?;
    let w = central_half_width(m);
    let central = stencil_at(w, 2 * w + 1, m, h).weights;
    Ok((0..n)
        .map(|i| {
            if i >= w && i + w < n {
                central
                    .iter()
                    .zip(&values[i - w..])
                    .map(|(c, v)| c * (v - values[i]))
                    .sum()
            } else {
                apply(&stencil_at(i, n, m, h), values, values[i])
            }
        })
        .collect())
}

/// `m`-th derivative at a single node, same stencils as [`derivative`].
pub fn derivative_at(values: &[f64], h: f64, m: usize, i: usize) -> Result<f64> {
    if m == 0 {
        return Ok(values[i]);
    }
    check_len(values.len(), m)?;
    Ok(apply(&stencil_at(i, values.len(), m, h), values, values[i]))
}

/// Summation-by-parts first difference: one-sided first order at the two ends,
/// central second order inside. With trapezoid weights `w` it satisfies
/// `sum_i w_i (D v)_i = v_last - v_first` for every `v`.
pub fn sbp_first(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let mut out = vec![0.0; n];
            out[0] = (values[1] - values[0]) / h;
            for i in 1..n - 1 {
                out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
            }
            out[n - 1] = (values[n - 1] - values[n - 2]) / h;
            out
        }
    }
}

/// `m` applications of [`sbp_first`].
pub fn sbp_derivative(values: &[f64], h: f64, m: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    for _ in 0..m {
        v = sbp_first(&v, h);
    }
    v
}

/// Coefficients `r` with `(D^m v)_last = sum_j r_j v_j` for the SBP difference.
pub fn sbp_last_row(n: usize, h: f64, m: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    let support = (2 * m + 2).min(n);
    let mut unit = vec![0.0; n];
    for j in n - support..n {
        unit[j] = 1.0;
        row[j] = sbp_derivative(&unit, h, m)[n - 1];
        unit[j] = 0.0;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fornberg_central_first_derivative() {
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_on_quartics() {
        let h = 0.05;
        let v: Vec<f64> = (0..21).map(|i| (i as f64 * h).powi(4)).collect();
        let d = derivative(&v, h, 1).unwrap();
        for (i, di) in d.iter().enumerate() {
            let t = i as f64 * h;
            assert_abs_diff_eq!(*di, 4.0 * t.powi(3), epsilon = 1e-10);
        }
        let d2 = derivative(&v, h, 2).unwrap();
        for (i, di) in d2.iter().enumerate() {
            let t = i as f64 * h;
            assert_abs_diff_eq!(*di, 12.0 * t * t, epsilon = 1e-8);
        }
    }

    #[test]
    fn constants_are_annihilated_exactly() {
        let v = vec![7.3; 40];
        for m in 1..4 {
            assert!(derivative(&v, 0.013, m).unwrap().iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn too_short_is_an_error() {
        assert!(derivative(&[1.0, 2.0, 3.0], 0.1, 1).is_err());
    }

    #[test]
    fn sbp_telescopes() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|i| ((i * 7 % 5) as f64).sin()).collect();
        let d = sbp_first(&v, h);
        let w = crate::grid::trapezoid_weights(v.len(), h);
        let s: f64 = w.iter().zip(&d).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(s, v[10] - v[0], epsilon = 1e-13);
    }

    #[test]
    fn sbp_last_row_matches_operator() {
        let h = 0.25;
        let v: Vec<f64> = (0..9).map(|i| (i as f64).powi(3) * 0.1).collect();
        for m in 0..3 {
            let row = sbp_last_row(v.len(), h, m);
            let direct = sbp_derivative(&v, h, m)[8];
            let via_row: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(direct, via_row, epsilon = 1e-10);
        }
    }
}
