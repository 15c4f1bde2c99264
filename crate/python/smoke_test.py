"""Smoke test for the zvar Python extension.

Build and install the wheel first:

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/zvar-*.whl
"""

import math

import zvar


def main():
    tail = zvar.Integral.infinite("x^-2", 1.0)
    res = tail.evaluate({"b_step": 1.0, "b_count": 30})
    assert res["status"] == "converged", res
    assert abs(res["value"] - 1.0) < 1e-6, res["value"]

    tone = zvar.Integral.infinite("sin(x)", 1.0, z="matched:omega=1,c=1")
    res = tone.evaluate()
    assert res["status"] == "converged", res
    assert abs(res["value"] - math.cos(1.0)) < 1e-6, res["value"]

    plain = zvar.Integral.infinite("sin(x)", 1.0).evaluate()
    assert plain["status"] == "oscillatory", plain["status"]

    root = zvar.Integral.finite("u^(-1/2)", 1.0)
    assert abs(root.evaluate()["value"] - 2.0) < 1e-6

    shifted = tone.transform("shift:k=1")
    outcome = zvar.compare(tone, shifted, tol=1e-6)
    assert outcome["verdict"] == "equal_within_tol", outcome["verdict"]

    squared = tail.transform("power:d=1,r=2")
    report = zvar.validate_cov(tail, "power:d=1,r=2")
    assert report["verdict"] == "valid", report
    assert "y" in squared.integrand

    decay = zvar.Integral.infinite("exp(-x)", 0.0).bridge()
    assert not decay.is_infinite
    assert abs(decay.evaluate()["value"] - 1.0) < 1e-6

    z = zvar.TerminationFunction.matched_trig(1.0)
    cos_res, sin_res = z.moments(1.0)
    assert abs(cos_res) < 1e-10 and abs(sin_res) < 1e-10
    assert zvar.TerminationFunction.parse(str(z)).width == z.width

    assert zvar.classify([1.0] * 5, 3, 1e-8) == "converged"
    assert zvar.classify([math.sin(k) for k in range(1, 21)], 5, 1e-3) == "oscillatory"

    again = zvar.Integral.from_json(tail.to_json())
    assert str(again) == str(tail)

    try:
        zvar.Integral.infinite("sin(", 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
