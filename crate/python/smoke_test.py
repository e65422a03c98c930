"""Smoke test for the metastab_py extension.

Build and install first, e.g.
    cd crates/py && maturin build --release -o /tmp/wheels && pip install /tmp/wheels/metastab_py-*.whl
"""
import json

import metastab_py as m

AFFINE = json.dumps({
    "space": {"dim": 1},
    "map": {"name": "affine-1d", "params": {"slope": "-2", "intercept": "1"}},
    "schema": {"kind": "resolvent", "anchor": ["0"]},
    "epsilon": "1/10", "g": "const:10", "horizon": 100, "fuel": 1000,
    "realizer": {"mode": "skip"},
    "tolerances": {"residual_prefix": 20},
})


def main():
    e = m.Experiment.parse(AFFINE)
    # x_n = n/(3n+1)
    assert e.point(1) == ["1/4"], e.point(1)
    assert e.point(3) == ["3/10"], e.point(3)
    assert e.least_n() == 1
    theta, apps, stage = e.bound()
    assert theta == m.FUEL_EXCEEDED and apps >= 1000, (theta, apps, stage)
    report = json.loads(e.run())
    assert report["least_N"] == "1" and report["theta"] == m.FUEL_EXCEEDED

    passed, failed = m.limsup_batch(seed=1, contract=20, soundness=20)
    assert (passed, failed) == (40, 0)

    for name, checked, violations in m.check_moduli(dim=3, samples=200, seed=5):
        assert checked > 0 and violations == 0, name

    try:
        m.Experiment.parse(AFFINE.replace("affine-1d", "nope"))
    except ValueError as err:
        assert "map" in str(err)
    else:
        raise AssertionError("bad config accepted")
    print("metastab_py smoke test: ok")


if __name__ == "__main__":
    main()
