"""Smoke test of the Python bindings.

Build and install first:

    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/ks_narmax_py-*.whl
    python python/smoke_test.py
"""

import cmath
import json
import math
import os
import tempfile

import ks_narmax_py as ks


def main():
    cfg = ks.FullRunConfig(transient=50.0, duration=200.0)
    assert cfg.grid_points == 96 and cfg.k_modes == 5
    series = cfg.generate()
    assert len(series) == 2001 and series.k == 5

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "obs.ksob")
        series.save(path)
        again = ks.ObservationSeries.load(path)
        assert again.content_hash() == series.content_hash()

    states = series.states()
    z = series.model_error()
    assert len(z) == len(states) - 1

    # Model error closes the truncated map exactly.
    u0, u1 = states[0], states[1]
    r = ks.rdelta(u0, series.length, series.delta)
    for k in range(5):
        rebuilt = u0[k] + series.delta * (r[k] + z[0][k])
        assert abs(rebuilt - u1[k]) < 1e-12 * (1 + abs(u1[k]))

    model = ks.fit(series, "0,2,1")
    assert model.orders == (0, 2, 1)
    coeffs = model.coefficients()
    assert len(coeffs) == 5 and all(len(c["c"]) == 6 for c in coeffs)
    assert all(s > 0 for s in model.sigma2)
    clone = ks.NarmaxModel.from_json(model.to_json())
    assert clone.sigma2 == model.sigma2
    assert json.loads(model.to_json())["orders"] == {"p": 0, "r": 2, "q": 1}

    trunc = ks.NarmaxModel.truncated(5, series.delta, series.length)
    window = states[:trunc.window_len()]
    path = trunc.simulate(window, 20)
    assert len(path) == 20 and all(cmath.isfinite(x) for row in path for x in row)

    x = series.real_part(2)
    gamma = ks.acf(x, 10)
    assert len(gamma) == 10 and gamma[0] > 0
    assert ks.pdf_l1_distance(x, x) == 0.0
    stats = ks.energy_stats(states)
    assert all(math.isclose(stats["cov"][i][j], stats["cov"][j][i]) for i in range(5) for j in range(5))

    print("ok:", model, "sigma2 =", ["%.3g" % s for s in model.sigma2])


if __name__ == "__main__":
    main()
