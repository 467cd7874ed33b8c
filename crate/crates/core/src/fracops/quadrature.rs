//! Product-integration weights for the weakly singular power kernel.
//!
//! Everything is expressed through the cell moments
//!
//! ```text
//! A_q = ∫_0^1 (q + x)^(α-1) dx,    B_q = ∫_0^1 (q + x)^(α-1) x dx,
//! ```
//!
//! which integrate a linear interpolant against the kernel exactly. For
//! `q >= 2` the integrands are smooth and a 10-point Gauss-Legendre rule is
//! accurate to rounding, which avoids the cancellation of the closed forms
//! at large `q`.

use crate::gamma::gamma_real;

const GAUSS_10: [(f64, f64); 10] = [
    (0.013_046_735_741_414_128, 0.033_335_672_154_344_034),
    (0.067_468_316_655_507_73, 0.074_725_674_575_290_18),
    (0.160_295_215_850_487_78, 0.109_543_181_257_991),
    (0.283_302_302_935_376_4, 0.134_633_359_654_998_26),
    (0.425_562_830_509_184_4, 0.147_762_112_357_376_5),
    (0.574_437_169_490_815_6, 0.147_762_112_357_376_5),
    (0.716_697_697_064_623_6, 0.134_633_359_654_998_26),
    (0.839_704_784_149_512_2, 0.109_543_181_257_991),
    (0.932_531_683_344_492_3, 0.074_725_674_575_290_18),
    (0.986_953_264_258_585_9, 0.033_335_672_154_344_034),
];

/// Cell moments `(A_q, B_q)` for `q = 0..count`.
pub fn cell_moments(alpha: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    for q in 0..count {
        let qf = q as f64;
        if q < 2 {
            let am = ((qf + 1.0).powf(alpha) - qf.powf(alpha)) / alpha;
            let bm =
                ((qf + 1.0).powf(alpha + 1.0) - qf.powf(alpha + 1.0)) / (alpha + 1.0) - qf * am;
            a.push(am);
            b.push(bm);
        } else {
            let (mut am, mut bm) = (0.0, 0.0);
            for &(x, w) in &GAUSS_10 {
                let k = (qf + x).powf(alpha - 1.0);
                am += w * k;
                bm += w * k * x;
            }
            a.push(am);
            b.push(bm);
        }
    }
    (a, b)
}

/// Product-trapezoid left Riemann-Liouville integral of order `alpha > 0`,
/// anchored at the first node.
///
/// Exact for piecewise-linear data; second order for smooth data.
pub fn left_integral(values: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return vec![];
    }
    let (a, b) = cell_moments(alpha, n);
    // weight of f_i at lag k = n - i, for 0 <= k < n
    let lag: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                a[0] - b[0]
            } else {
                a[k] - b[k] + b[k - 1]
            }
        })
        .collect();
    let scale = h.powf(alpha) / gamma_real(alpha);
    let mut out = vec![0.0; n];
    for (m, o) in out.iter_mut().enumerate().skip(1) {
        let mut acc = b[m - 1] * values[0];
        for i in 1..=m {
            acc += lag[m - i] * values[i];
        }
        *o = scale * acc;
    }
    out
}

/// Right integral `I_b^alpha`, anchored at the last node.
pub fn right_integral(values: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    mirror(&left_integral(&mirror(values), h, alpha))
}

/// L1 approximation of the left Caputo derivative of order `0 < alpha < 1`:
/// the kernel is integrated exactly against the slopes of the piecewise-linear
/// interpolant.
pub fn l1_left_caputo(values: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    let n = values.len();
    let (a, _) = cell_moments(1.0 - alpha, n.max(1));
    let scale = h.powf(-alpha) / gamma_real(1.0 - alpha);
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![0.0; n];
    for (m, o) in out.iter_mut().enumerate().skip(1) {
        let acc: f64 = (0..m).map(|j| a[m - j - 1] * diffs[j]).sum();
        *o = scale * acc;
    }
    out
}

/// Tail integral `(1/Γ(α)) ∫_r^{r+M h} w(s) (s - t)^(α-1) ds` at the nodes
/// `t = r - m h`, `m = 0..=count-1`, where `w` holds the samples on
/// `[r, r + M h]` (first sample at `r`).
pub fn tail_from_right(w: &[f64], h: f64, alpha: f64, count: usize) -> Vec<f64> {
    let cells = w.len().saturating_sub(1);
    let (a, b) = cell_moments(alpha, cells + count + 1);
    let scale = h.powf(alpha) / gamma_real(alpha);
    (0..count)
        .map(|m| {
            let acc: f64 = (0..cells)
                .map(|j| {
                    let q = m + j;
                    w[j] * (a[q] - b[q]) + w[j + 1] * b[q]
                })
                .sum();
            scale * acc
        })
        .collect()
}

pub(crate) fn mirror(values: &[f64]) -> Vec<f64> {
    values.iter().rev().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::gamma_real;
    use approx::assert_relative_eq;

    #[test]
    fn moments_match_closed_forms() {
        let alpha = 0.37;
        let (a, b) = cell_moments(alpha, 50);
        for q in [2usize, 5, 49] {
            let qf = q as f64;
            let am = ((qf + 1.0).powf(alpha) - qf.powf(alpha)) / alpha;
            let bm =
                ((qf + 1.0).powf(alpha + 1.0) - qf.powf(alpha + 1.0)) / (alpha + 1.0) - qf * am;
            assert_relative_eq!(a[q], am, max_relative = 1e-12);
            assert_relative_eq!(b[q], bm, max_relative = 1e-9);
        }
    }

    #[test]
    fn integral_of_one_is_exact() {
        let h = 1.0 / 32.0;
        let alpha = 0.5;
        let v = vec![1.0; 33];
        let out = left_integral(&v, h, alpha);
        for (i, o) in out.iter().enumerate() {
            let t = i as f64 * h;
            assert_relative_eq!(
                *o,
                t.powf(alpha) / gamma_real(alpha + 1.0),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn integral_of_order_one_is_trapezoid() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|i| ((i as f64) * h).exp()).collect();
        let out = left_integral(&v, h, 1.0);
        let last = crate::grid::trapezoid(&v, h);
        assert_relative_eq!(out[10], last, max_relative = 1e-13);
    }

    #[test]
    fn l1_is_exact_for_lines() {
        let h = 1.0 / 64.0;
        let alpha = 0.5;
        let v: Vec<f64> = (0..65).map(|i| 2.0 * i as f64 * h + 3.0).collect();
        let out = l1_left_caputo(&v, h, alpha);
        for (i, o) in out.iter().enumerate().skip(1) {
            let t = i as f64 * h;
            assert_relative_eq!(
                *o,
                2.0 * t.powf(1.0 - alpha) / gamma_real(2.0 - alpha),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn tail_of_one() {
        let h = 1.0 / 16.0;
        let alpha = 0.6;
        let w = vec![1.0; 9]; // [0.5, 1]
        let tk = tail_from_right(&w, h, alpha, 9); // t = 0.5 down to 0
        for (m, v) in tk.iter().enumerate() {
            let t = 0.5 - m as f64 * h;
            let expect = ((1.0 - t).powf(alpha) - (0.5 - t).powf(alpha)) / gamma_real(alpha + 1.0);
            assert_relative_eq!(*v, expect, max_relative = 1e-12);
        }
    }
}
