use super::*;
use crate::expr::ExprFunction;

fn problem(
    src: &str,
    alphas: Vec<f64>,
    k: usize,
    n: usize,
    tau: f64,
    terminal: Vec<f64>,
    hist: impl Fn(f64) -> f64,
) -> DelayedProblem {
    let grid = Grid::new(0.0, 1.0, tau, n).unwrap();
    let mut spec = ProblemSpec {
        grid,
        alphas,
        betas: vec![],
        k,
        d: 1,
        terminal: vec![terminal],
        history: vec![sample_history(&grid, hist)],
        integrand: Arc::new(ExprFunction::parse("0", &["t".to_string()]).unwrap()),
        scheme: Scheme::default(),
        control: false,
    };
    spec.integrand = Arc::new(ExprFunction::parse(src, &spec.channel_names()).unwrap());
    spec.build().unwrap()
}

fn line(p: &DelayedProblem) -> Trajectory {
    Trajectory::from_fn(*p.grid(), 1, |_, t| t).unwrap()
}

#[test]
fn constant_integrand_measures_the_interval() {
    let p = problem("1", vec![0.5], 1, 65, 0.25, vec![1.0], |t| t);
    assert!((p.evaluate_J(&line(&p)).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn caputo_of_identity_squared() {
    // (2 sqrt(t/pi))^2 integrates to 2/pi
    let p = problem("D1^2", vec![0.5], 1, 513, 0.25, vec![1.0], |t| t);
    let j = p.evaluate_J(&line(&p)).unwrap();
    assert!((j - 2.0 / std::f64::consts::PI).abs() < 1e-3, "{j}");
}

#[test]
fn first_variation_of_square_matches_quadrature() {
    let p = problem("y0^2", vec![0.5], 1, 129, 0.25, vec![1.0], |t| t);
    let y = line(&p);
    let eta = Variation::projected(&p, |_, t| (std::f64::consts::PI * t).sin()).unwrap();
    let fv = p.first_variation(&y, &eta, 1e-4).unwrap();
    let g = p.grid();
    let prod: Vec<f64> = (0..g.n_active())
        .map(|i| 2.0 * g.active_t(i) * (std::f64::consts::PI * g.active_t(i)).sin())
        .collect();
    let reference = crate::grid::trapezoid(&prod, g.h());
    assert!((fv - reference).abs() < 1e-10, "{fv} {reference}");
}

#[test]
fn variation_rejects_nonzero_terminal_nodes() {
    let p = problem("y0^2", vec![0.5], 1, 33, 0.25, vec![1.0], |_| 0.0);
    let bad = Variation(Trajectory::from_fn(*p.grid(), 1, |_, t| t.max(0.0)).unwrap());
    assert!(p.check_variation(&bad).is_err());
    assert!(p
        .first_variation(&line(&p), &Variation::zero(&p), 0.0)
        .is_err());
}

#[test]
fn classical_el_vanishes_on_a_line() {
    let p = problem("0.5*y1^2", vec![0.5], 1, 129, 0.25, vec![1.0], |t| t);
    let r = el_residual(&p, &line(&p), None).unwrap();
    assert!(r.interior_max(None) < 1e-10, "{}", r.interior_max(None));
}

#[test]
fn constant_integrand_has_zero_residuals() {
    let p = problem("3", vec![0.7], 1, 65, 0.25, vec![1.0], |t| t);
    let y = line(&p);
    let r = el_residual(&p, &y, None).unwrap();
    assert!(r
        .inner
        .iter()
        .chain(&r.outer)
        .all(|s| s.values().iter().all(|v| *v == 0.0)));
    let eta = variation_basis(&p, 1).unwrap().remove(0);
    assert_eq!(transversality_residual(&p, &y, None, &eta).unwrap(), 0.0);
}

#[test]
fn residual_scales_with_integrand() {
    let p = problem(
        "0.5*D1^2 + y0*yd0",
        vec![0.7],
        1,
        65,
        0.25,
        vec![1.0],
        |t| t,
    );
    let q = p
        .with_integrand(Arc::new(
            ExprFunction::parse("3*(0.5*D1^2 + y0*yd0)", &p.layout().names()).unwrap(),
        ))
        .unwrap();
    let y = Trajectory::from_fn(*p.grid(), 1, |_, t| t + t.max(0.0).powf(1.5) * (1.0 - t)).unwrap();
    let r = el_residual(&p, &y, None).unwrap().scaled(3.0);
    let s = el_residual(&q, &y, None).unwrap();
    for (x, z) in r
        .inner
        .iter()
        .chain(&r.outer)
        .zip(s.inner.iter().chain(&s.outer))
    {
        for (u, v) in x.values().iter().zip(z.values()) {
            assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{u} {v}");
        }
    }
}

#[test]
fn delayed_derivative_boundary_term() {
    // J = ∫ y'(t - τ) dt, so δJ = η(b - τ) and the whole variation sits in
    // the delayed boundary term
    let p = problem("yd1", vec![0.5], 1, 129, 0.25, vec![1.0], |t| t);
    let eta = Variation::projected(&p, |_, t| (std::f64::consts::PI * t).sin().powi(2)).unwrap();
    let target = 0.5;
    let y = line(&p);
    let fv = p.first_variation(&y, &eta, 1e-4).unwrap();
    let tr = transversality_residual(&p, &y, None, &eta).unwrap();
    let el = el_residual(&p, &y, None).unwrap();
    assert!((fv - target).abs() < 1e-3, "{fv}");
    assert!((tr - target).abs() < 1e-3, "{tr}");
    assert!(el.pair(&eta).unwrap().abs() < 1e-10);
}

#[test]
fn straight_line_solve() {
    let p = problem("0.5*y1^2", vec![0.5], 1, 33, 0.25, vec![1.0], |_| 0.0);
    let y0 = Trajectory::from_fn(*p.grid(), 1, |_, t| if t <= 0.0 { 0.0 } else { t * t }).unwrap();
    let s = solve(&p, &y0).unwrap();
    assert!(s.converged, "{:?}", s.termination);
    let g = p.grid();
    let err = (0..g.n_active())
        .map(|i| (s.y.component(0).active_values()[i] - g.active_t(i)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}
