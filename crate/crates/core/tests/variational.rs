use std::f64::consts::PI;
use std::sync::Arc;

use fracdelay::expr::ExprFunction;
use fracdelay::grid::trapezoid;
use fracdelay::variational::{
    el_residual, sample_history, solve, transversality_residual, variation_basis, DelayedProblem,
    ElResidual, ProblemSpec, Scheme, Trajectory, Variation,
};
use fracdelay::Grid;

fn problem(src: &str, alphas: Vec<f64>, n: usize, hist: impl Fn(f64) -> f64) -> DelayedProblem {
    let grid = Grid::new(0.0, 1.0, 0.25, n).unwrap();
    let mut spec = ProblemSpec {
        grid,
        alphas,
        betas: vec![],
        k: 1,
        d: 1,
        terminal: vec![vec![1.0]],
        history: vec![sample_history(&grid, hist)],
        integrand: Arc::new(ExprFunction::parse("0", &["t"]).unwrap()),
        scheme: Scheme::default(),
        control: false,
    };
    spec.integrand = Arc::new(ExprFunction::parse(src, &spec.channel_names()).unwrap());
    spec.build().unwrap()
}

fn reparsed(p: &DelayedProblem, src: &str) -> DelayedProblem {
    p.with_integrand(Arc::new(
        ExprFunction::parse(src, &p.layout().names()).unwrap(),
    ))
    .unwrap()
}

/// Satisfies the terminal condition and is not stationary for anything below.
fn trial(p: &DelayedProblem) -> Trajectory {
    Trajectory::from_fn(*p.grid(), 1, |_, t| {
        if t < 0.0 {
            t
        } else {
            t + 0.3 * t * t * (1.0 - t)
        }
    })
    .unwrap()
}

fn samples(r: &ElResidual) -> Vec<f64> {
    r.inner
        .iter()
        .chain(&r.outer)
        .flat_map(|s| s.values().to_vec())
        .collect()
}

const LAGRANGIAN: &str = "0.5*D1^2 + y0*yd0 + sin(t)*y1^2";

#[test]
fn scaling_the_integrand_scales_everything() {
    let p = problem(LAGRANGIAN, vec![0.6], 129, |t| t);
    let y = trial(&p);
    let eta = variation_basis(&p, 3).unwrap().remove(2);
    let base = samples(&el_residual(&p, &y, None).unwrap());
    let j = p.evaluate_J(&y).unwrap();
    let fv = p.first_variation(&y, &eta, 1e-4).unwrap();
    let tr = transversality_residual(&p, &y, None, &eta).unwrap();

    // a power of two scales every rounding step exactly
    let q = reparsed(&p, &format!("4*({LAGRANGIAN})"));
    assert_eq!(
        samples(&el_residual(&q, &y, None).unwrap()),
        base.iter().map(|x| 4.0 * x).collect::<Vec<_>>()
    );
    assert_eq!(q.evaluate_J(&y).unwrap(), 4.0 * j);
    assert_eq!(q.first_variation(&y, &eta, 1e-4).unwrap(), 4.0 * fv);
    assert_eq!(
        transversality_residual(&q, &y, None, &eta).unwrap(),
        4.0 * tr
    );

    let q = reparsed(&p, &format!("3*({LAGRANGIAN})"));
    for (x, z) in base
        .iter()
        .zip(samples(&el_residual(&q, &y, None).unwrap()))
    {
        assert!((z - 3.0 * x).abs() <= 1e-12 * (1.0 + x.abs()), "{z} {x}");
    }
    assert!((q.evaluate_J(&y).unwrap() - 3.0 * j).abs() <= 1e-12 * (1.0 + j.abs()));
    assert!(
        (q.first_variation(&y, &eta, 1e-4).unwrap() - 3.0 * fv).abs() <= 1e-9 * (1.0 + fv.abs())
    );
}

#[test]
fn adding_a_constant_shifts_only_the_value() {
    let p = problem(LAGRANGIAN, vec![0.6], 129, |t| t);
    let q = reparsed(&p, &format!("{LAGRANGIAN} + 2.5"));
    let y = trial(&p);
    let eta = variation_basis(&p, 2).unwrap().remove(1);
    assert_eq!(
        samples(&el_residual(&p, &y, None).unwrap()),
        samples(&el_residual(&q, &y, None).unwrap())
    );
    let shift = q.evaluate_J(&y).unwrap() - p.evaluate_J(&y).unwrap();
    assert!((shift - 2.5).abs() < 1e-13, "{shift}");
    let (fp, fq) = (
        p.first_variation(&y, &eta, 1e-4).unwrap(),
        q.first_variation(&y, &eta, 1e-4).unwrap(),
    );
    assert!((fp - fq).abs() < 1e-10, "{fp} {fq}");
}

#[test]
fn classical_lagrangian_recovers_the_classical_equation() {
    // L = y'²/2 + y²/2: δJ pairs η with y - y''
    let p = problem("0.5*y1^2 + 0.5*y0^2", vec![], 257, |t| t * t * t);
    let y = Trajectory::from_fn(*p.grid(), 1, |_, t| t * t * t).unwrap();
    let r = el_residual(&p, &y, None).unwrap();
    let expected = |t: f64| t.powi(3) - 6.0 * t;
    let layer = 5;
    for piece in r.inner.iter().chain(&r.outer) {
        let n = piece.len();
        for (i, (t, v)) in piece.times().zip(piece.values()).enumerate() {
            if i >= layer && i + layer < n {
                assert!(
                    (v - expected(t)).abs() < 1e-8,
                    "t = {t}: {v} vs {}",
                    expected(t)
                );
            }
        }
    }
    let eta = Variation::projected(&p, |_, t| (PI * t).sin()).unwrap();
    let fv = p.first_variation(&y, &eta, 1e-4).unwrap();
    assert!((r.pair(&eta).unwrap() - fv).abs() < 1e-3, "{fv}");
}

#[test]
fn delayed_state_reads_the_history() {
    // J = ∫_0^1 y(t - τ)² dt = ∫_{-τ}^{1-τ} y², and δJ = 2 ∫_0^{1-τ} y η
    let hist = |t: f64| 1.0 + t;
    let p = problem("yd0^2", vec![0.5], 257, hist);
    let y = Trajectory::from_fn(*p.grid(), 1, |_, t| {
        if t < 0.0 {
            hist(t)
        } else {
            (1.0 - t) + t * t
        }
    })
    .unwrap();
    let g = p.grid();
    let shifted: Vec<f64> = (0..g.n_active())
        .map(|i| y.component(0).values()[i].powi(2))
        .collect();
    let j = p.evaluate_J(&y).unwrap();
    assert!((j - trapezoid(&shifted, g.h())).abs() < 1e-14, "{j}");

    let eta = Variation::projected(&p, |_, t| (PI * t).sin()).unwrap();
    let cut = g.active_index_of(1.0 - g.tau()).unwrap();
    let prod: Vec<f64> = (0..=cut)
        .map(|i| {
            2.0 * y.component(0).active_values()[i]
                * eta.trajectory().component(0).active_values()[i]
        })
        .collect();
    let expected = trapezoid(&prod, g.h());
    let fv = p.first_variation(&y, &eta, 1e-4).unwrap();
    let paired = el_residual(&p, &y, None).unwrap().pair(&eta).unwrap();
    assert!((fv - expected).abs() < 1e-10, "{fv} {expected}");
    assert!((paired - expected).abs() < 1e-10, "{paired} {expected}");
}

#[test]
fn solver_finds_the_delayed_minimiser() {
    // y(t - τ)² + (y')²/2 with zero history: the delayed term is inactive on
    // [0, τ] and pulls y toward zero elsewhere
    let p = problem("0.5*y1^2 + yd0^2", vec![0.5], 65, |_| 0.0);
    let s = solve(&p, &p.initial_guess().unwrap()).unwrap();
    assert!(s.converged, "{:?}", s.termination);
    let guess = p.evaluate_J(&p.initial_guess().unwrap()).unwrap();
    assert!(s.value < guess, "{} {guess}", s.value);
    assert!(s.max_certificate() < 1e-5, "{}", s.max_certificate());
}
