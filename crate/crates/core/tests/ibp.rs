use fracdelay::gamma::gamma;
use fracdelay::ibp::{ibp_split, ibp_whole, tail_kernel, Lemma, SplitSpec, TailSide};
use fracdelay::Segment;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(intervals: usize, f: impl Fn(f64) -> f64) -> Segment {
    Segment::from_fn(0.0, 1.0, intervals + 1, f).unwrap()
}

/// `w` on `[r, 1]` with 64 cells.
fn right_piece(r: f64, values: &[f64]) -> Segment {
    Segment::new(r, (1.0 - r) / (values.len() - 1) as f64, values.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_kernel_is_linear_and_positive(
        w1 in prop::collection::vec(0.0..5.0f64, 65),
        w2 in prop::collection::vec(-5.0..5.0f64, 65),
        c in -4.0..4.0f64,
        alpha in 0.1..1.9f64,
    ) {
        let r = 0.5;
        let a = right_piece(r, &w1);
        let b = right_piece(r, &w2);
        let combo = right_piece(r, &w1.iter().zip(&w2).map(|(x, y)| x + c * y).collect::<Vec<_>>());
        let ka = tail_kernel(&a, alpha, r, TailSide::FromRight, 0.0).unwrap();
        let kb = tail_kernel(&b, alpha, r, TailSide::FromRight, 0.0).unwrap();
        let kc = tail_kernel(&combo, alpha, r, TailSide::FromRight, 0.0).unwrap();
        prop_assert!(ka.values().iter().all(|v| *v >= 0.0));
        for ((x, y), z) in ka.values().iter().zip(kb.values()).zip(kc.values()) {
            prop_assert!((z - (x + c * y)).abs() <= 1e-12 * (1.0 + x.abs() + (c * y).abs()));
        }
    }
}

#[test]
fn tail_kernel_of_a_constant() {
    // (1/Γ(α)) ∫_r^b (s - t)^(α-1) ds = ((b - t)^α - (r - t)^α) / Γ(α + 1)
    let (r, b, alpha) = (0.5, 1.0, 0.6);
    for cells in [32, 64, 128] {
        let w = right_piece(r, &vec![1.0; cells + 1]);
        let k = tail_kernel(&w, alpha, r, TailSide::FromRight, 0.0).unwrap();
        let err = k
            .times()
            .zip(k.values())
            .map(|(t, v)| {
                (v - ((b - t).powf(alpha) - (r - t).powf(alpha)) / gamma(alpha + 1.0).unwrap())
                    .abs()
            })
            .fold(0.0, f64::max);
        // product integration is exact on piecewise-linear data
        assert!(err < 1e-14, "{cells}: {err}");
    }
}

#[test]
fn whole_interval_integrals_converge_for_random_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..8 {
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let alpha = rng.gen_range(0.2..1.8);
        let poly = |c: &[f64], t: f64| c.iter().rev().fold(0.0, |acc, x| acc * t + x);
        let residuals: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| {
                ibp_whole(&unit(n, |t| poly(&p, t)), &unit(n, |t| poly(&q, t)), alpha)
                    .unwrap()
                    .residual
            })
            .collect();
        let scale = 1.0 + p.iter().chain(&q).map(|x| x.abs()).sum::<f64>();
        for w in residuals.windows(2) {
            assert!(
                w[1] < w[0] || w[1] < 1e-13 * scale,
                "alpha {alpha}: {residuals:?}"
            );
        }
        assert!(
            *residuals.last().unwrap() < 1e-4 * scale,
            "alpha {alpha}: {residuals:?}"
        );
    }
}

/// Generic pairs rather than the acceptance ones: only an overall reduction
/// is required, the plateau-free decrease is checked in acceptance.
#[test]
fn split_identities_converge() {
    let r = 0.5;
    for lemma in [Lemma::L2a, Lemma::L2b, Lemma::L3a, Lemma::L3b] {
        // f vanishes at the anchor of its derivative, g at the anchor of the
        // opposite-sided one
        let (f_zero, g_zero) = match lemma {
            Lemma::L2a => (0.0, r),
            Lemma::L2b => (0.0, 1.0),
            Lemma::L3a => (1.0, r),
            _ => (1.0, 0.0),
        };
        let f = move |t: f64| (t - f_zero).powi(2) * (2.0 - t);
        let g = move |t: f64| (g_zero - t).powi(2) * (1.0 + t);
        let residuals: Vec<f64> = [64, 256, 1024]
            .iter()
            .map(|&n| {
                ibp_split(
                    &unit(n, g),
                    &unit(n, f),
                    0.5,
                    SplitSpec::new(r, lemma).unwrap(),
                )
                .unwrap()
                .residual
            })
            .collect();
        assert!(residuals[2] < residuals[0] / 4.0, "{lemma}: {residuals:?}");
        assert!(residuals[2] < 1e-5, "{lemma}: {residuals:?}");
    }
}
