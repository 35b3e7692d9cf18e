"""Smoke test for the hypercert extension module.

Build with `maturin develop -m crates/python/Cargo.toml`, or
`cargo build -p hypercert-py --features extension-module` and put
target/debug/libhypercert.so on the path as hypercert.so.
"""

import json
import math

import hypercert


def main():
    assert "doubling" in hypercert.gallery()

    doubling = hypercert.System("doubling")
    assert doubling.map(0.3) == 0.6
    assert doubling.tangent_map(0.1, 3) == [[8.0]]
    assert abs(doubling.birkhoff_average(0.2, 50) + math.log(2)) < 1e-15

    cert = hypercert.certify(doubling, rate=0.6, depth_max=8)
    assert cert.nbar == 1 and cert.boxes >= 1
    assert abs(cert.sigma - math.exp(0.6)) < 1e-12
    assert cert.verify(samples=200, n_max=30) >= 1.0
    again = hypercert.Certificate.from_json(cert.to_json())
    assert again.to_json() == cert.to_json()

    try:
        hypercert.certify(hypercert.System("intermittent"), rate=0.1, n_max=4, depth_max=8)
    except hypercert.Inconclusive as e:
        report = json.loads(str(e))
        assert report["witnesses"], report
    else:
        raise AssertionError("intermittent map must not certify")

    witness = hypercert.falsify(hypercert.System("period2-cocycle"), period_max=2)
    assert witness["points"] == ["p", "q"]
    assert abs(witness["average"] - math.log(2)) < 1e-12
    assert hypercert.falsify(doubling, period_max=6) is None

    p2 = hypercert.System("period2-cocycle")
    e = p2.lyapunov_exponent("p", (0.6, 0.8), 1000)
    assert abs(e - 0.5 * math.log(1.5)) < 1e-9

    cat = hypercert.System("cat")
    rows = hypercert.lyapunov(cat, orbits=4, length=200, samples=10, seed=1)
    assert len(rows) == 10 and rows[-1][0] == 200
    assert abs(rows[-1][2] - math.log((3 + math.sqrt(5)) / 2)) < 0.05
    hyper = hypercert.certify(cat, rate=0.9, n_max=4, depth_max=6, observable="cu")
    assert hyper.observable == "cu" and hyper.nbar == 1

    print("smoke test passed")


if __name__ == "__main__":
    main()
