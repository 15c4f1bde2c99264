//! Adaptive quadrature: long oscillatory ranges, singular endpoints, budgets.

use zvar_core::expr::Expr;
use zvar_core::quad::{integrate, integrate_proper, QuadError, QuadOptions};

fn opts(abs_tol: f64, max_evals: usize) -> QuadOptions {
    QuadOptions {
        abs_tol,
        max_evals,
        ..QuadOptions::default()
    }
}

#[test]
fn long_sine_range_cancels() {
    let r = integrate(
        |x: f64| Ok(x.sin()),
        0.0,
        2000.0 * std::f64::consts::PI,
        &opts(1e-10, 10_000_000),
    )
    .unwrap();
    assert!(r.converged);
    assert!(r.value.abs() < 1e-8, "{}", r.value);
    assert!(r.evaluations <= 10_000_000);
}

#[test]
fn endpoint_singularity_is_never_sampled() {
    let r = integrate(
        |x: f64| Ok(x.powf(-0.5)),
        0.0,
        1.0,
        &QuadOptions {
            abs_tol: 1e-9,
            open_endpoints: true,
            ..QuadOptions::default()
        },
    )
    .unwrap();
    assert!(r.converged);
    assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
}

#[test]
fn error_estimate_bounds_the_true_error() {
    for (f, exact) in [
        (Expr::parse("exp(x)", &["x"]).unwrap(), 1f64.exp() - 1.0),
        (Expr::parse("sqrt(x)", &["x"]).unwrap(), 2.0 / 3.0),
        (Expr::parse("1/(1+25*x^2)", &["x"]).unwrap(), (5f64).atan() / 5.0),
    ] {
        let r = integrate_proper(&f, "x", 0.0, 1.0, 1e-11, 1_000_000, false).unwrap();
        assert!(r.converged, "{f}");
        assert!(
            (r.value - exact).abs() <= r.error_estimate.max(1e-14),
            "{f}: {} vs {exact}",
            r.value
        );
    }
}

#[test]
fn exhausted_budget_is_reported_not_raised() {
    let r = integrate(|x: f64| Ok((1.0 / x).sin()), 1e-9, 1.0, &opts(1e-14, 105)).unwrap();
    assert!(!r.converged);
    assert!(r.evaluations <= 105);
}

#[test]
fn bad_arguments_are_errors() {
    assert!(matches!(
        integrate(Ok, 1.0, 0.0, &QuadOptions::default()),
        Err(QuadError::InvalidInterval { .. })
    ));
    assert!(matches!(
        integrate(Ok, 0.0, 1.0, &opts(0.0, 100)),
        Err(QuadError::InvalidTolerance(_))
    ));
    let ln = Expr::parse("ln(x)", &["x"]).unwrap();
    assert!(matches!(
        integrate_proper(&ln, "x", -1.0, 1.0, 1e-8, 10_000, false),
        Err(QuadError::Integrand { .. })
    ));
}
