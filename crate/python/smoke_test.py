"""Smoke test for the hiddenosc_py extension module.

Build and install first:  pip install ./crates/python
"""

import json
import math

import hiddenosc_py as ho


def main():
    assert abs(ho.keldysh_threshold(0.2, 1.0) - 8 / math.pi * math.sqrt(2 * 0.2 / 3)) < 1e-12

    p = ho.KeldyshParams(friction=0.2, mu=-1.2987)
    hb = p.hb_predict()
    assert hb["cycle_count"] == 2, hb
    certified, margin, bound = p.stability_margin()
    assert not certified and margin < 0 < -bound

    model = ho.Model.keldysh(p)
    assert model.labels == ["x1", "x2"]
    tr = model.simulate([0.0, 0.5], integrator=json.dumps({"horizon": 60.0}))
    assert tr.status == "horizon_reached", tr.status
    assert set(tr.modes) <= {"plus", "minus", "sliding"}
    assert tr.to_csv().splitlines()[0] == "t,x1,x2,V,mode"

    cycles = model.find_cycles(epsilon=1e-3)
    assert [c["stability"] for c in cycles] == ["unstable", "stable"], cycles
    assert all(c["classification"] == "hidden" for c in cycles)

    pll = ho.Model.pll()
    report = pll.verify()
    assert all(c["status"] == "passed" for c in report["conditions"]), report
    bk = ho.Model.bk_example().verify()
    assert bk["conditions"][2]["status"] == "violated"

    result, csv = ho.sweep_keldysh(
        ho.KeldyshParams(friction=0.2, mu=0.0),
        json.dumps([{"param": "mu", "min": 0.0, "max": 1.0, "points": 3}]),
        options=json.dumps({"classify": False}),
    )
    assert [pt["cycle_count"] for pt in result["points"]] == [0, 0, 0]
    assert csv.startswith("mu,")

    try:
        ho.KeldyshParams(friction=-1.0, mu=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative friction accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
