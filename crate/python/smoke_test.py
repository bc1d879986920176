"""Smoke test for the leviflat extension module.

Build and install first:  pip install -e crates/py --no-build-isolation
"""

import json
import math

import leviflat


def main():
    assert "t3_flat" in leviflat.builtins()
    ids = {i for i, _, _ in leviflat.identities()}
    assert len(ids) >= 25 and "prop.beth_squared" in ids

    assert abs(leviflat.evaluate("1/(2+cos(t))", ["x", "y", "t"], [0.0, 0.0, math.pi]) - 1.0) < 1e-14
    d = leviflat.differentiate("x*sin(y)", ["x", "y"], "y")
    assert abs(leviflat.evaluate(d, ["x", "y"], [2.0, 0.3]) - 2.0 * math.cos(0.3)) < 1e-14

    sc = leviflat.Scenario("t3_twisted_shifted")
    assert sc.dim == 3 and sc.kind == "levi_flat" and sc.leaf_complex_dim == 1
    pts = [[0.3, 1.2, 2.0], [4.0, 0.5, 1.0]]
    assert max(sc.frobenius(pts)) < 1e-9
    h = sc.h(pts[0])
    assert max(abs(v) for row in h for v in row) > 1e-3
    witness, rederived = sc.exactness(["sin(y)", "0"], pts)
    assert witness < 1e-9 and rederived < 1e-9
    assert sc.exactness(["0", "1"], pts)[0] > 1e-3

    broken = leviflat.Scenario("broken_nonintegrable")
    assert broken.frobenius(pts)[0] > 1e-2

    report = json.loads(leviflat.run("t3_flat", suite="frobenius,prop.*", points=3))
    assert report["schema"] == 1
    assert report["summary"]["failed"] == 0, report["summary"]
    again = leviflat.run("t3_flat", suite="frobenius,prop.*", points=3, jobs=1)
    assert json.loads(again) == report

    try:
        leviflat.Scenario("no_such_scenario")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown scenario accepted")

    print("leviflat smoke test passed:", len(ids), "identities")


if __name__ == "__main__":
    main()
