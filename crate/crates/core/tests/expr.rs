use proptest::prelude::*;
use stefan_core::expr::{parse, BinOp, Constant, Expr, Func, Var};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0.0f64..1e3).prop_map(Expr::Num),
        (1u32..1000).prop_map(|k| Expr::Num(k as f64 * 1e-7)),
        Just(Expr::Var(Var::T)),
        Just(Expr::Var(Var::R)),
        Just(Expr::Const(Constant::Pi)),
        Just(Expr::Const(Constant::E)),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    let ops = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow];
    leaf().prop_recursive(6, 48, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (0..5usize, inner.clone(), inner.clone())
                .prop_map(move |(i, a, b)| Expr::Binary(ops[i], Box::new(a), Box::new(b))),
            (0..Func::ALL.len(), inner.clone(), inner).prop_map(|(i, a, b)| {
                let f = Func::ALL[i];
                let args = if f.arity() == 2 { vec![a, b] } else { vec![a] };
                Expr::Call(f, args)
            }),
        ]
    })
}

/// Plain recursive evaluator; `None` wherever a value is not finite or
/// leaves the domain.
fn reference(e: &Expr, t: f64, r: f64) -> Option<f64> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Var(Var::T) => t,
        Expr::Var(Var::R) => r,
        Expr::Const(Constant::Pi) => std::f64::consts::PI,
        Expr::Const(Constant::E) => std::f64::consts::E,
        Expr::Param(_) => return None,
        Expr::Neg(a) => -reference(a, t, r)?,
        Expr::Binary(op, a, b) => {
            let (x, y) = (reference(a, t, r)?, reference(b, t, r)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y == 0.0 => return None,
                BinOp::Div => x / y,
                BinOp::Pow => x.powf(y),
            }
        }
        Expr::Call(f, args) => {
            let x = reference(&args[0], t, r)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log if x <= 0.0 => return None,
                Func::Log => x.ln(),
                Func::Sqrt if x < 0.0 => return None,
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
                Func::Tanh => x.tanh(),
                Func::Min => x.min(reference(&args[1], t, r)?),
                Func::Max => x.max(reference(&args[1], t, r)?),
            }
        }
    };
    v.is_finite().then_some(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_is_a_fixpoint(e in tree()) {
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap();
        prop_assert_eq!(reparsed.to_string(), printed);
    }

    #[test]
    fn evaluation_matches_reference(e in tree(), t in 0.0f64..2.0, r in 0.0f64..10.0) {
        let got = parse(&e.to_string()).unwrap().eval_at(t, r).ok();
        let want = reference(&e, t, r);
        match (got, want) {
            (Some(g), Some(w)) => prop_assert!(g == w || (g - w).abs() <= 1e-12 * w.abs().max(1.0), "{} vs {}", g, w),
            (None, None) => {}
            (g, w) => prop_assert!(false, "{e}: {g:?} vs {w:?}"),
        }
    }
}

#[test]
fn precedence_examples() {
    let cases = [
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("1 + 2*3", 7.0),
        ("(1 + 2)*3", 9.0),
        ("max(1, 2) - min(3, 4)", -1.0),
        ("8/4/2", 1.0),
    ];
    for (text, want) in cases {
        assert_eq!(parse(text).unwrap().eval_at(0.0, 0.0).unwrap(), want, "{text}");
    }
}

#[test]
fn domain_errors_do_not_leak_nan() {
    for text in ["log(0)", "sqrt(-1)", "1/0", "exp(1000)", "log(r - 1)"] {
        assert!(parse(text).unwrap().eval_at(0.0, 0.5).is_err(), "{text}");
    }
}

#[test]
fn syntax_errors_carry_offsets() {
    let err = parse("sin(t").unwrap_err();
    assert!(err.to_string().contains("byte 5"), "{err}");
    assert!(parse("").is_err());
    assert!(parse("foo + 1").is_err());
}
