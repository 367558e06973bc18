#!/usr/bin/env python3
"""Writes the bundled networks and hydraulic schedules under data/.

Flows are not solved from heads and pump curves. Each period fixes the
injections (pump supply, booster flow, demands, tank fill/drain) and
splits them over the pipes with a linear conductance model, so junction
balance holds to rounding error. Output is deterministic.
"""
import argparse
import math
from pathlib import Path

import numpy as np

FT = 0.3048
INCH = 0.0254
GAL_FT3 = 0.133680556  # ft^3 per US gallon


def fmt(v):
    return repr(float(v))


def write_inp(path, junctions, reservoirs, tanks, pipes, pumps):
    lines = ["; generated by tools/gen_hydraulics.py", "[JUNCTIONS]"]
    lines += [j for j in junctions]
    lines += ["", "[RESERVOIRS]", "; id source_mg_per_l"]
    lines += [f"{r} {fmt(c)}" for r, c in reservoirs]
    lines += ["", "[TANKS]", "; id kb_per_h"]
    lines += [f"{t} {fmt(k)}" for t, k in tanks]
    lines += ["", "[PIPES]", "; id from to length_m diameter_m kb kw kf"]
    lines += [" ".join([p[0], p[1], p[2]] + [fmt(v) for v in p[3:]]) for p in pipes]
    lines += ["", "[PUMPS]"]
    lines += [f"{m} {a} {b}" for m, a, b in pumps]
    lines += ["", "[VALVES]", "", "[END]", ""]
    Path(path).write_text("\n".join(lines))


def split_flows(nodes, pipes, injection, ref):
    """Pipe flows (GPM) from a conductance Laplacian with node injections.

    injection[n] > 0 means water enters the pipe network at n.
    """
    idx = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    lap = np.zeros((n, n))
    cond = []
    for p in pipes:
        a, b = idx[p[1]], idx[p[2]]
        c = p[4] ** 2.63 / p[3] ** 0.54
        cond.append(c)
        lap[a, a] += c
        lap[b, b] += c
        lap[a, b] -= c
        lap[b, a] -= c
    rhs = np.array([injection.get(x, 0.0) for x in nodes])
    assert abs(rhs.sum()) < 1e-9 * max(1.0, np.abs(rhs).max())
    keep = [i for i in range(n) if i != idx[ref]]
    h = np.zeros(n)
    h[keep] = np.linalg.solve(lap[np.ix_(keep, keep)], rhs[keep])
    flows = []
    for p, c in zip(pipes, cond):
        flows.append(c * (h[idx[p[1]]] - h[idx[p[2]]]))
    return flows


def balance_check(junctions, links, flows, demand, booster):
    for j in junctions:
        s = booster.get(j, 0.0) - demand[j]
        scale = max(abs(booster.get(j, 0.0)), demand[j])
        for (lid, a, b), q in zip(links, flows):
            if a == j:
                s -= q
                scale = max(scale, abs(q))
            if b == j:
                s += q
                scale = max(scale, abs(q))
        assert abs(s) <= 1e-10 * scale, (j, s)


def write_csv(path, rows):
    out = ["period,entity,kind,value"]
    out += [f"{p},{e},{k},{fmt(v)}" for p, e, k, v in rows]
    Path(path).write_text("\n".join(out) + "\n")


def three_node(out):
    pipes = [("P23", "J2", "TK3", 1000 * FT, 8 * INCH, -0.55, -0.02, 1.0)]
    write_inp(out / "three_node.inp", ["J2"], [("R1", 0.8)], [("TK3", -0.5)], pipes, [("M12", "R1", "J2")])
    pattern = [0.8, 0.7, 0.65, 0.6, 0.65, 0.8, 1.0, 1.2, 1.3, 1.25, 1.2, 1.15,
               1.1, 1.1, 1.05, 1.0, 1.05, 1.15, 1.3, 1.35, 1.25, 1.1, 0.95, 0.85]
    base, pump, qb = 350.0, 550.0, 150.0
    vol = 20000.0
    rows = []
    for p, m in enumerate(pattern):
        d = base * m
        q23 = pump + qb - d
        balance_check(["J2"], [("M12", "R1", "J2"), ("P23", "J2", "TK3")], [pump, q23], {"J2": d}, {"J2": qb})
        rows += [(p, "M12", "flow", pump), (p, "P23", "flow", q23), (p, "J2", "demand", d),
                 (p, "J2", "booster_flow", qb), (p, "TK3", "volume", vol)]
        vol += q23 * 60.0 * GAL_FT3
    write_csv(out / "three_node_hydraulics.csv", rows)


def net1(out):
    junctions = ["J10", "J11", "J12", "J13", "J21", "J22", "J23", "J31", "J32"]
    spec = [("10", "10", "11", 10530, 18), ("11", "11", "12", 5280, 14), ("12", "12", "13", 5280, 10),
            ("21", "21", "22", 5280, 10), ("22", "22", "23", 5280, 12), ("31", "31", "32", 5280, 6),
            ("110", "2", "12", 200, 18), ("111", "11", "21", 5280, 10), ("112", "12", "22", 5280, 12),
            ("113", "13", "23", 5280, 8), ("121", "21", "31", 5280, 8), ("122", "22", "32", 5280, 6)]

    def node(n):
        return "TK2" if n == "2" else "J" + n

    # Bulk -0.5/day and wall -1 ft/day, expressed per hour.
    kb, kw = -0.5 / 24.0, -FT / 24.0
    pipes = [("P" + i, node(a), node(b), L * FT, D * INCH, kb, kw, 1.0) for i, a, b, L, D in spec]
    write_inp(out / "net1.inp", junctions, [("R9", 1.0)], [("TK2", kb)], pipes, [("M9", "R9", "J10")])
    base = {"J10": 0, "J11": 150, "J12": 150, "J13": 100, "J21": 150, "J22": 200, "J23": 150, "J31": 100, "J32": 100}
    pattern = [1.0, 1.2, 1.4, 1.6, 1.4, 1.2, 1.0, 0.8, 0.6, 0.4, 0.6, 0.8]
    boosters = {"J11": 50.0, "J22": 50.0, "J31": 50.0}
    pump = 1300.0
    vol = 240400.0
    rows = []
    nodes = junctions + ["TK2"]
    links = [(p[0], p[1], p[2]) for p in pipes] + [("M9", "R9", "J10")]
    for p in range(24):
        m = pattern[p // 2]
        demand = {j: base[j] * m for j in junctions}
        inj = {j: -demand[j] + boosters.get(j, 0.0) for j in junctions}
        inj["J10"] += pump
        inj["TK2"] = -sum(inj.values())  # tank supplies (or absorbs) the imbalance
        flows = split_flows(nodes, pipes, inj, "TK2")
        balance_check(junctions, links, flows + [pump], demand, boosters)
        for pp, q in zip(pipes, flows):
            rows.append((p, pp[0], "flow", q))
        rows.append((p, "M9", "flow", pump))
        rows += [(p, j, "demand", demand[j]) for j in junctions]
        rows += [(p, j, "booster_flow", q) for j, q in boosters.items()]
        rows.append((p, "TK2", "volume", vol))
        vol -= inj["TK2"] * 60.0 * GAL_FT3
        assert vol > 0
    write_csv(out / "net1_hydraulics.csv", rows)


def net3_scale(out, seed=3):
    """Synthetic network with the component counts of EPANET Net3."""
    rng = np.random.default_rng(seed)
    nj, ntk, npipe = 92, 3, 117
    junctions = [f"J{i + 1}" for i in range(nj)]
    tanks = [f"TK{i + 1}" for i in range(ntk)]
    pipe_nodes = junctions + tanks
    pts = {n: rng.uniform(0, 5000, 2) for n in pipe_nodes}
    order = list(rng.permutation(pipe_nodes))
    # Tanks must not be leaves of the tree only by accident; any node works.
    edges = []
    for i in range(1, len(order)):
        a = order[i]
        cands = sorted(order[:i], key=lambda b: np.linalg.norm(pts[a] - pts[b]))[:3]
        b = cands[int(rng.integers(len(cands)))]
        edges.append((b, a))
    existing = {frozenset(e) for e in edges}
    while len(edges) < npipe:
        a = pipe_nodes[int(rng.integers(len(pipe_nodes)))]
        near = sorted(pipe_nodes, key=lambda b: np.linalg.norm(pts[a] - pts[b]))[1:6]
        b = near[int(rng.integers(len(near)))]
        if frozenset((a, b)) in existing:
            continue
        existing.add(frozenset((a, b)))
        edges.append((a, b))
    pipes = []
    for i, (a, b) in enumerate(edges):
        L = max(100.0, float(np.linalg.norm(pts[a] - pts[b])))
        D = float(rng.choice([6, 8, 10, 12, 16, 20, 24])) * INCH
        pipes.append((f"P{i + 1}", a, b, L, D, -0.5, -0.05, 1.0))
    feeds = [junctions[0], junctions[1]]
    pumps = [("M1", "R1", feeds[0]), ("M2", "R2", feeds[1])]
    write_inp(out / "net3.inp", junctions, [("R1", 1.0), ("R2", 1.0)], [(t, -0.5) for t in tanks], pipes, pumps)

    base = {j: float(rng.uniform(5, 80)) for j in junctions}
    pattern = 1.0 + 0.3 * np.sin(2 * math.pi * (np.arange(24) - 6) / 24)
    vols = {t: float(rng.uniform(2e5, 4e5)) for t in tanks}
    links = [(p[0], p[1], p[2]) for p in pipes] + [(m, a, b) for m, a, b in pumps]
    rows = []
    total_base = sum(base.values())
    for p in range(24):
        demand = {j: base[j] * pattern[p] for j in junctions}
        supply = total_base * 1.0
        qm = [0.55 * supply, 0.45 * supply]
        inj = {j: -demand[j] for j in junctions}
        inj[feeds[0]] += qm[0]
        inj[feeds[1]] += qm[1]
        excess = -sum(inj.values())
        for t in tanks:
            inj[t] = excess / ntk
        flows = split_flows(pipe_nodes, pipes, inj, tanks[0])
        balance_check(junctions, links, flows + qm, demand, {})
        for pp, q in zip(pipes, flows):
            rows.append((p, pp[0], "flow", q))
        rows += [(p, m[0], "flow", q) for m, q in zip(pumps, qm)]
        rows += [(p, j, "demand", demand[j]) for j in junctions]
        for t in tanks:
            rows.append((p, t, "volume", vols[t]))
            vols[t] -= inj[t] * 60.0 * GAL_FT3
            assert vols[t] > 0
    write_csv(out / "net3_hydraulics.csv", rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    three_node(out)
    net1(out)
    net3_scale(out)


if __name__ == "__main__":
    main()
