//! Property suites shared by the `properties` tests and the acceptance
//! runner. Each suite runs a fixed number of cases from a fixed seed and
//! returns the first counterexample as an error.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::common::central_difference;
use zvar_core::cov::{
    make_bridge_cov, make_exp_cov, make_finite_power_cov, make_linear_cov, make_power_cov, make_shift_cov,
    ChangeOfVariable,
};
use zvar_core::expr::{BinaryOp, Expr, UnaryOp};
use zvar_core::quad::{integrate, QuadOptions};
use zvar_core::zeval::{classify_sequence, Status};

pub type Suite = fn() -> Result<(), String>;

/// Every suite with a short name, in a stable order.
pub const ALL: [(&str, Suite); 9] = [
    ("expression print/parse round trip", expr_round_trip),
    ("substitution commutes with evaluation", substitution),
    ("simplification preserves values", simplification),
    ("derivatives vs central differences (200 ASTs)", derivatives),
    ("change-of-variable round trips", cov_round_trips),
    ("quadrature polynomial exactness", quad_polynomials),
    ("quadrature budget monotonicity", quad_budget),
    ("classification totality", classification_totality),
    ("classification symmetry", classification_symmetry),
];

const VARS: [&str; 2] = ["x", "y"];
const CASES: u32 = 256;

fn check<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-20.0..20.0f64).prop_map(Expr::Const),
        (0u8..=16).prop_map(|k| Expr::Const(f64::from(k) / 4.0)),
        Just(Expr::var("x")),
        Just(Expr::var("y")),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let unary = prop::sample::select(vec![
            UnaryOp::Neg,
            UnaryOp::Sin,
            UnaryOp::Cos,
            UnaryOp::Tan,
            UnaryOp::Exp,
            UnaryOp::Ln,
            UnaryOp::Sqrt,
            UnaryOp::Abs,
        ]);
        let binary = prop::sample::select(vec![
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::Div,
            BinaryOp::Pow,
        ]);
        prop_oneof![
            (unary, inner.clone()).prop_map(|(op, a)| Expr::unary(op, a)),
            (binary, inner.clone(), inner).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

pub fn expr_round_trip() -> Result<(), String> {
    check(arb_expr(), |e| {
        let text = e.to_string();
        let back = Expr::parse(&text, &VARS).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
        Ok(())
    })
}

pub fn substitution() -> Result<(), String> {
    check((arb_expr(), arb_expr(), 0.1..3.0f64), |(e, g, y)| {
        let g = g.substitute("x", &Expr::var("y"));
        let Ok(gy) = g.eval_at("y", y) else { return Ok(()) };
        let direct = e.substitute("x", &g).eval(&[("y", y)]);
        let staged = e.eval(&[("x", gy), ("y", y)]);
        match (direct, staged) {
            (Ok(a), Ok(b)) => prop_assert!(close(a, b, 1e-12), "{a} vs {b}"),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "fault mismatch: {a:?} vs {b:?}"),
        }
        Ok(())
    })
}

pub fn simplification() -> Result<(), String> {
    check((arb_expr(), 0.1..3.0f64, 0.1..3.0f64), |(e, x, y)| {
        let env = [("x", x), ("y", y)];
        if let Ok(v) = e.eval(&env) {
            let s = e.simplified().eval(&env);
            prop_assert!(
                matches!(s, Ok(w) if close(v, w, 1e-9)),
                "{} -> {}: {v} vs {s:?}",
                e,
                e.simplified()
            );
        }
        Ok(())
    })
}

/// Random tree over `x` for the derivative check; `depth` bounds nesting.
fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Expr::var("x")
        } else {
            Expr::Const(rng.gen_range(-3.0..3.0f64))
        };
    }
    if rng.gen_bool(0.4) {
        let ops = [
            UnaryOp::Neg,
            UnaryOp::Sin,
            UnaryOp::Cos,
            UnaryOp::Tan,
            UnaryOp::Exp,
            UnaryOp::Ln,
            UnaryOp::Sqrt,
            UnaryOp::Abs,
        ];
        let op = ops[rng.gen_range(0..ops.len())];
        Expr::unary(op, random_expr(rng, depth - 1))
    } else {
        let ops = [
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::Div,
            BinaryOp::Pow,
        ];
        let op = ops[rng.gen_range(0..ops.len())];
        let rhs = if op == BinaryOp::Pow && rng.gen_bool(0.5) {
            Expr::Const(f64::from(rng.gen_range(-3i8..=4)))
        } else {
            random_expr(rng, depth - 1)
        };
        Expr::binary(op, random_expr(rng, depth - 1), rhs)
    }
}

/// Evaluate `e` at `x`, treating faults and huge magnitudes as undefined.
fn eval_tame(e: &Expr, x: f64) -> Option<f64> {
    e.eval_at("x", x).ok().filter(|v| v.abs() < 1e6)
}

/// Symbolic derivatives of 200 seeded random trees against a fourth-order
/// central difference, at points where the difference itself is reliable.
pub fn derivatives() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1ff);
    let (mut checked, mut attempts) = (0, 0);
    while checked < 200 {
        attempts += 1;
        if attempts > 200_000 {
            return Err(format!("only {checked} usable expressions generated"));
        }
        let e = random_expr(&mut rng, 4);
        if !e.contains_var("x") {
            continue;
        }
        let x = rng.gen_range(0.3..2.5f64);
        // the reference needs the function smooth across the whole stencil
        let h = 1e-3 * x.abs().max(1.0);
        if (-4..=4).any(|k| eval_tame(&e, x + f64::from(k) * h / 2.0).is_none()) {
            continue;
        }
        let f = |t: f64| e.eval_at("x", t).unwrap_or(f64::NAN);
        let fd = central_difference(&f, x);
        let fd_half = central_difference(&|t: f64| f(x + (t - x) / 2.0), x) * 2.0;
        // kinks and near-poles make the stencil disagree with itself
        if !fd.is_finite() || !close(fd, fd_half, 1e-6) {
            continue;
        }
        let d = e.differentiate("x");
        let exact = d
            .eval_at("x", x)
            .map_err(|err| format!("derivative {d} of {e} faults at {x}: {err}"))?;
        if !close(exact, fd, 1e-5) {
            return Err(format!("d/dx {e} at {x}: symbolic {exact} ({d}), difference {fd}"));
        }
        checked += 1;
    }
    Ok(())
}

fn round_trip(cov: &ChangeOfVariable, s: f64) -> Result<(), TestCaseError> {
    let t = cov.eval_forward(s).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let back = cov.eval_inverse(t).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(close(back, s, 1e-10), "{}: {s} -> {t} -> {back}", cov.spec_string());
    Ok(())
}

pub fn cov_round_trips() -> Result<(), String> {
    check((0.1..5.0f64, 0.2..4.0f64, 1.0..100.0f64), |(d, r, x)| {
        let cov = make_power_cov(d, r, 1.0).unwrap();
        round_trip(&cov, x)?;
        let inv = cov.inverse().unwrap();
        let y = cov.eval_forward(x).unwrap();
        prop_assert!(close(inv.eval_forward(y).unwrap(), x, 1e-12));
        prop_assert!(close(inv.eval_inverse(x).unwrap(), y, 1e-12));
        Ok(())
    })?;
    check((0.1..5.0f64, 0u8..3, -10.0..10.0f64), |(d, k, x)| {
        round_trip(&make_power_cov(d, f64::from(2 * k + 1), -10.0).unwrap(), x)
    })?;
    check((0.1..5.0f64, 0.1..3.0f64, -5.0..5.0f64), |(d, alpha, x)| {
        round_trip(&make_exp_cov(d, alpha).unwrap(), x)?;
        round_trip(&make_bridge_cov(d, alpha).unwrap(), 4.0 * x + 5.0)
    })?;
    check((-50.0..50.0f64, 0.1..10.0f64, -100.0..100.0f64), |(k, d, x)| {
        round_trip(&make_shift_cov(k).unwrap(), x)?;
        round_trip(&make_linear_cov(d).unwrap(), x)
    })?;
    check((0.1..5.0f64, 0.2..4.0f64, 1e-6..1.0f64), |(d, r, u)| {
        round_trip(&make_finite_power_cov(d, r, 1.0).unwrap(), u)
    })
}

pub fn quad_polynomials() -> Result<(), String> {
    let strategy = (prop::collection::vec(-5.0..5.0f64, 1..=11), -3.0..3.0f64, 0.1..4.0f64);
    check(strategy, |(coeffs, lo, width)| {
        let hi = lo + width;
        let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let antiderivative = |x: f64| {
            coeffs
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + c / (k as f64 + 1.0))
                * x
        };
        let exact = antiderivative(hi) - antiderivative(lo);
        let opts = QuadOptions {
            abs_tol: 1e-12,
            max_evals: 21,
            ..QuadOptions::default()
        };
        let r = integrate(|x| Ok(poly(x)), lo, hi, &opts).unwrap();
        let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>() * 7f64.powi(11);
        prop_assert!((r.value - exact).abs() <= 1e-13 * scale, "{} vs {exact}", r.value);
        prop_assert_eq!(r.evaluations, 21);
        Ok(())
    })
}

pub fn quad_budget() -> Result<(), String> {
    check((21usize..2000, 1usize..2000), |(budget, extra)| {
        let f = |x: f64| Ok((1.0 / x).sin() / x);
        let opts = |max_evals| QuadOptions {
            abs_tol: 1e-14,
            max_evals,
            ..QuadOptions::default()
        };
        let small = integrate(f, 1e-3, 1.0, &opts(budget)).unwrap();
        let large = integrate(f, 1e-3, 1.0, &opts(budget + extra)).unwrap();
        prop_assert!(large.error_estimate <= small.error_estimate);
        prop_assert!(small.evaluations <= budget && large.evaluations <= budget + extra);
        Ok(())
    })
}

pub fn classification_totality() -> Result<(), String> {
    let strategy = (prop::collection::vec(-1e6..1e6f64, 3..40), 2usize..6, 0.0..1.0f64);
    check(strategy, |(values, window, tol)| {
        if values.len() < window {
            return Ok(());
        }
        prop_assert!(classify_sequence(&values, window, tol).is_ok());
        let mut poisoned = values.clone();
        poisoned[0] = f64::NAN;
        prop_assert_eq!(classify_sequence(&poisoned, window, tol).unwrap(), Status::Drifting);
        Ok(())
    })?;
    check(
        (prop::collection::vec(-1e3..1e3f64, 0..10), -1e3..1e3f64, 2usize..6),
        |(head, c, window)| {
            let mut values = head;
            values.extend(std::iter::repeat_n(c, window));
            prop_assert_eq!(classify_sequence(&values, window, 0.0).unwrap(), Status::Converged);
            Ok(())
        },
    )?;
    check(
        (-1e3..1e3f64, prop::collection::vec(1e-3..10.0f64, 4..30)),
        |(start, steps)| {
            let values: Vec<f64> = steps
                .iter()
                .scan(start, |acc, s| {
                    *acc += s;
                    Some(*acc)
                })
                .collect();
            prop_assert_eq!(classify_sequence(&values, 3, 1e-4).unwrap(), Status::Drifting);
            Ok(())
        },
    )
}

/// Negating a sequence, or scaling it and the tolerance by a power of two,
/// leaves its class unchanged.
pub fn classification_symmetry() -> Result<(), String> {
    let strategy = (
        prop::collection::vec(-1e3..1e3f64, 3..40),
        2usize..6,
        0.0..10.0f64,
        -8i32..8,
    );
    check(strategy, |(values, window, tol, power)| {
        if values.len() < window {
            return Ok(());
        }
        let status = classify_sequence(&values, window, tol).unwrap();
        let negated: Vec<f64> = values.iter().map(|v| -v).collect();
        prop_assert_eq!(classify_sequence(&negated, window, tol).unwrap(), status);
        let scale = 2f64.powi(power);
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        prop_assert_eq!(classify_sequence(&scaled, window, tol * scale).unwrap(), status);
        Ok(())
    })
}
