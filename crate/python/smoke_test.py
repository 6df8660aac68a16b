"""Smoke test for the slt_lab Python extension.

Build the module first, either with maturin:

    pip install maturin && maturin develop -m crates/py/Cargo.toml --release

or with cargo, copying the shared library next to this script:

    cargo build --release -p slt-lab-py --features extension-module
    cp target/release/libslt_lab.so python/slt_lab.so

Then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import slt_lab


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    assert slt_lab.model_ids() == ["regular1d", "singular_ab", "nonrenorm_a"]

    m = slt_lab.Model("regular1d")
    assert (m.dim_x, m.dim_w) == (1, 1)
    l0 = math.log(math.sqrt(2 * math.pi)) + 0.5
    assert close(m.min_loss(), l0, 1e-12)
    assert close(m.loss([0.3]) - l0, 0.045, 1e-12)

    card = slt_lab.Model("nonrenorm_a").theory_card()
    assert card["nu"] is None and close(card["Q"], 0.830860925029559, 1e-12)

    pred = slt_lab.theory_predict("regular1d", 1.0, 100)
    assert close(pred["Gg"] - l0, 0.01, 1e-15)
    assert slt_lab.theory_predict("singular_ab", 1.0, 100) is None

    try:
        slt_lab.Model("foo")
    except ValueError as e:
        assert "foo" in str(e)
    else:
        raise AssertionError("unknown model accepted")

    data = m.sample_true(200, 3)
    grid = slt_lab.run_quadrature(m, data, 1.0)
    draws = slt_lab.run_mcmc(m, data, 1.0, seed=5, burn_in=2000, kept_per_chain=1000)
    assert draws.min_ess > 100 and draws.max_rhat < 1.1
    a = slt_lab.observables(m, grid, data)
    b = slt_lab.observables(m, draws, data)
    for key in ["Bg", "Bt", "Gg", "Gt"]:
        assert close(a[key], b[key], 5e-3), (key, a[key], b[key])
    assert close(a["waic"], a["Bt"] + a["Yt"], 1e-12)

    cfg = "\n".join(
        [
            'model = "regular1d"',
            "n_grid = [100, 200]",
            "replications = 50",
            "master_seed = 1",
            'test_rule = "hermite"',
            "use_quadrature_oracle = true",
        ]
    )
    res = slt_lab.run_experiment(cfg)
    assert [r["n"] for r in res["aggregate"]] == [100, 200]
    assert res["fit"]["model"] == "regular1d"
    print("smoke test passed")


if __name__ == "__main__":
    main()
