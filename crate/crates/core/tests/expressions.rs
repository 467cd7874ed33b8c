use fracdelay::expr::{parse, BinOp, Expr, ExprFunction, Func, PartialMethod};
use proptest::prelude::*;

const VARS: [&str; 3] = ["t", "y0", "D1"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0.0..100.0f64).prop_map(Expr::Num),
        prop::sample::select(VARS.to_vec()).prop_map(|v| Expr::Var(v.to_string())),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop::sample::select(vec![
                    BinOp::Add,
                    BinOp::Sub,
                    BinOp::Mul,
                    BinOp::Div,
                    BinOp::Pow
                ]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
            (
                prop::sample::select(vec![Func::Sin, Func::Cos, Func::Exp, Func::Abs]),
                inner
            )
                .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

/// Random polynomial in `t`, `y0`, `D1`: a sum of monomials with small
/// integer powers.
fn polynomial() -> impl Strategy<Value = String> {
    prop::collection::vec((-3.0..3.0f64, 0u32..3, 0u32..4, 0u32..3), 1..5).prop_map(|terms| {
        terms
            .iter()
            .map(|(c, p, q, r)| format!("({c:?})*t^{p}*y0^{q}*D1^{r}"))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

proptest! {
    #[test]
    fn printed_trees_parse_back(e in tree()) {
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        prop_assert_eq!(back, e, "{}", printed);
    }

    #[test]
    fn polynomial_partials_match_differences(
        src in polynomial(),
        x in prop::array::uniform3(-1.5..1.5f64),
    ) {
        let f = ExprFunction::parse(&src, &VARS).unwrap();
        for c in 0..3 {
            prop_assert_eq!(f.partial_method(c), PartialMethod::Exact);
            let exact = f.partial(c, &x).unwrap();
            let step = 1e-5;
            let (mut lo, mut hi) = (x, x);
            lo[c] -= step;
            hi[c] += step;
            let fd = (f.eval(&hi).unwrap() - f.eval(&lo).unwrap()) / (2.0 * step);
            prop_assert!((exact - fd).abs() <= 1e-6 * (1.0 + exact.abs()), "{src}: {exact} vs {fd}");
        }
    }
}

#[test]
fn missing_channel_has_zero_partial() {
    let f = ExprFunction::parse("sin(t) * y0", &VARS).unwrap();
    assert_eq!(f.partial(2, &[0.3, 2.0, 5.0]).unwrap(), 0.0);
    assert!(!f.uses(2));
}
