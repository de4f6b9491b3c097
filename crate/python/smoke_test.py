"""Smoke test for the extension module.

    maturin develop --release -m crates/python/Cargo.toml
    python python/smoke_test.py
"""
import json
import math

import moran_rte as m


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(abs(a), abs(b))


hd = m.Process(30, "hawk-dove", mu=1 / 30, selection="fermi", beta=1.0)
print(hd)
assert hd.state_count == 31 == m.state_count(30, 2)

rep = m.analyze(hd)
assert rep.method == "detailed-balance", rep.method
assert rep.global_max == [(15, 15)] and rep.global_max_unique
assert 0 <= rep.entropy_rate <= rep.entropy_rate_bound
for p, q in zip(rep.probabilities, rep.rtes):
    assert close(p * q, rep.entropy_rate)
assert math.isclose(sum(rep.probabilities), 1.0, abs_tol=1e-12)
assert rep.record([15, 15])["classification"] == "global-max"
doc = json.loads(rep.to_json())
assert doc["global_max"] == [[15, 15]]
assert rep.to_csv().startswith("a1,a2,s,rte,classification")

bits = m.analyze(hd, log_base="2")
assert close(bits.entropy_rate * math.log(2), rep.entropy_rate, 1e-9)

dense, method, residual, _ = m.stationary(hd, method="dense")
assert method == "dense-solve" and residual <= 1e-10
assert max(abs(a - b) for a, b in zip(dense, rep.probabilities)) < 1e-10

tt = m.Process(12, "threetype", mu=1 / 12, selection="fermi", beta=0.5)
assert m.analyze(tt).record([4, 4, 4])["classification"] in ("global-max", "local-max", "local-min", "global-min")

sw = m.sweep(hd, "beta", "0:4:5", track=["center", "corner"])
assert sw.grid == [0.0, 1.0, 2.0, 3.0, 4.0]
assert sw.labels == ["center", "corner1", "corner2"]
s = sw.series("center", "probability")
assert all(b > a for a, b in zip(s, s[1:]))
assert sw.to_csv().splitlines()[0].startswith("param_value,entropy_rate,s_center")
assert json.loads(sw.to_json())["parameter"] == "beta"

neutral = m.Process(4, "neutral:2", mu=0.25)
sim = m.simulate(neutral, [2, 2], samples=20000, seed=3)
assert abs(sim["mean_surprisal"] - sim["exact_rte"]) <= 4 * sim["se_surprisal"], sim
assert abs(sim["mean_length"] - sim["exact_return_time"]) <= 4 * sim["se_length"], sim

ra, rb = m.fixation(2.0, 3)
assert close(ra / rb, 4.0, 1e-12)
oa, ob = m.fixation_absorbing(m.Process(3, "r-game:2", mu=0.0))
assert close(oa, ra, 1e-10) and close(ob, rb, 1e-10)
assert close(m.entropy_rate_bound(3), 5 / 3 * math.log(3))

for bad in (lambda: m.Process(30, "hawk-dove", mu=2.0),
            lambda: m.Process(30, "chess", mu=0.1),
            lambda: m.Process(30, "hawk-dove", mu=0.1, selection="fermi"),
            lambda: m.simulate(neutral, [3, 3])):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

try:
    m.analyze(hd, method="power", max_iters=2)
except m.ConvergenceError as e:
    assert "did not converge" in str(e)
else:
    raise AssertionError("expected ConvergenceError")

print("smoke test passed (moran_rte %s)" % m.__version__)
