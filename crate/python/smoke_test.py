"""Smoke test for the pymasim extension.

Build first: pip install --no-build-isolation -e crates/py
"""

import json

import pymasim

TWO_ARRAY = """\
.inputs x1 x2 x3
.node a = XOR(x1, x2, x3)
.node b = MAJ(x1, x2, x3)
.node c = XOR(x1, !x2, x3)
.node d = MAJ(x1, !x2, x3)
.node f = XOR(x1, x2, !x3)
.node h = MAJ(!x1, x2, x3)
.node e = XOR(a, b, 0)
.node g = XOR(c, d, 0)
.outputs e g
"""


def main():
    net = pymasim.parse(TWO_ARRAY)
    assert (net.num_pis, net.num_nodes) == (3, 8)
    assert net.simulate([True, False, True]) == [True, False]

    runs = {}
    for kind in ("naive", "greedy", "masim"):
        s = pymasim.schedule(net, 5, 2, restarts=16, seed=1, scheduler=kind)
        rep = pymasim.verify(net, s.to_text(), 5, 2, exhaustive=True)
        assert rep["valid"] and rep["equivalent"], rep
        assert pymasim.verify(net, s.to_json(), 5, 2)["valid"]
        assert s.computes == 8 and len(s) == s.copies + s.computes
        runs[kind] = s

    opt, witness = pymasim.min_copies(net, 5, 2)
    assert witness.copies == opt <= runs["masim"].copies < runs["naive"].copies
    assert abs(runs["masim"].energy() - (runs["masim"].computes + 1.87 * runs["masim"].copies)) < 1e-9

    big = pymasim.random_netlist(6, 40, 3, 7)
    a = pymasim.schedule(big, 14, 2, restarts=32, seed=5)
    b = pymasim.schedule(big, 14, 2, restarts=32, seed=5)
    assert a.to_text() == b.to_text()
    assert json.loads(a.to_json())["header"]["netlist_hash"] == big.content_hash

    try:
        pymasim.schedule(net, 3, 1)
    except pymasim.CapacityError:
        pass
    else:
        raise AssertionError("expected CapacityError")

    broken = "\n".join(runs["naive"].to_text().splitlines()[:-1])
    assert not pymasim.verify(net, broken, 5, 2)["valid"]

    print("ok:", {k: v.copies for k, v in runs.items()}, "optimum", opt)


if __name__ == "__main__":
    main()
