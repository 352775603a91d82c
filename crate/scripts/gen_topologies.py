#!/usr/bin/env python3
"""Writes the topology fixtures under fixtures/topologies/.

Abilene uses the published Internet2 backbone (11 PoPs, 14 links). B4 is a
12-site reconstruction of the inter-datacenter WAN. The remaining backbones
are not redistributable here, so they are deterministic geographic graphs with
the same node and link counts: a Euclidean minimum spanning tree plus the
shortest remaining chords.

Link weights are propagation latencies in milliseconds (great-circle distance
over 200 km/ms, at least 1). Capacities are in abstract bandwidth units.
"""
import json
import math
import os
import random

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "topologies")


def km(a, b):
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6371 * math.asin(math.sqrt(h))


def weight(a, b):
    return max(1, round(km(a, b) / 200.0))


def write(name, coords, edges, capacity):
    nodes = list(coords)
    links = []
    for (u, v) in edges:
        links.append({"src": u, "dst": v, "capacity": capacity(u, v), "weight": weight(coords[u], coords[v])})
    doc = {"name": name, "nodes": nodes, "links": links}
    path = os.path.join(OUT, name.lower() + ".json")
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    print(f"{name}: {len(nodes)} nodes, {len(links)} links -> {path}")


ABILENE = {
    "STTL": (47.61, -122.33), "SNVA": (37.37, -122.04), "LOSA": (34.05, -118.24),
    "DNVR": (39.74, -104.99), "KSCY": (39.10, -94.58), "HSTN": (29.76, -95.37),
    "CHIN": (41.88, -87.63), "IPLS": (39.77, -86.16), "ATLA": (33.75, -84.39),
    "WASH": (38.91, -77.04), "NYCM": (40.71, -74.00),
}
ABILENE_LINKS = [
    ("NYCM", "CHIN"), ("NYCM", "WASH"), ("CHIN", "IPLS"), ("WASH", "ATLA"),
    ("IPLS", "ATLA"), ("IPLS", "KSCY"), ("ATLA", "HSTN"), ("KSCY", "HSTN"),
    ("KSCY", "DNVR"), ("HSTN", "LOSA"), ("DNVR", "SNVA"), ("DNVR", "STTL"),
    ("SNVA", "LOSA"), ("SNVA", "STTL"),
]

B4 = {
    "DLS": (45.60, -121.18), "CBF": (41.26, -95.86), "MYC": (36.30, -95.23),
    "LNR": (35.91, -81.54), "BKC": (33.06, -80.04), "DGC": (33.75, -84.75),
    "SGH": (50.45, 3.82), "HMN": (60.57, 27.20), "DUB": (53.35, -6.26),
    "CHW": (24.08, 120.54), "SIN": (1.35, 103.82), "HKG": (22.32, 114.17),
}
B4_LINKS = [
    ("DLS", "CBF"), ("DLS", "MYC"), ("DLS", "CHW"), ("DLS", "HKG"),
    ("CBF", "MYC"), ("CBF", "LNR"), ("CBF", "DGC"), ("MYC", "DGC"),
    ("MYC", "BKC"), ("LNR", "BKC"), ("LNR", "DGC"), ("LNR", "DUB"),
    ("BKC", "SGH"), ("DGC", "DUB"), ("SGH", "HMN"), ("SGH", "DUB"),
    ("HMN", "DUB"), ("CHW", "HKG"), ("HKG", "SIN"),
]


def synthetic(name, n_nodes, n_links, box, seed):
    rng = random.Random(seed)
    (lat0, lat1), (lon0, lon1) = box
    coords = {}
    for i in range(n_nodes):
        coords[f"{name[:3].upper()}{i:03d}"] = (rng.uniform(lat0, lat1), rng.uniform(lon0, lon1))
    names = list(coords)
    pairs = sorted(
        ((km(coords[a], coords[b]), a, b) for i, a in enumerate(names) for b in names[i + 1:]),
    )
    parent = {v: v for v in names}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    edges, rest = [], []
    for d, a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            edges.append((a, b))
        else:
            rest.append((d, a, b))
    # Chords: prefer short links that close cycles through leaf nodes first.
    degree = {v: 0 for v in names}
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    rest.sort(key=lambda t: (min(degree[t[1]], degree[t[2]]) > 1, t[0]))
    for d, a, b in rest:
        if len(edges) == n_links:
            break
        edges.append((a, b))
        degree[a] += 1
        degree[b] += 1
    assert len(edges) == n_links
    return coords, edges


def cap_from(seed, choices):
    def f(u, v):
        h = random.Random(f"{seed}:{min(u, v)}:{max(u, v)}")
        return h.choice(choices)
    return f


def main():
    os.makedirs(OUT, exist_ok=True)
    write("Abilene", ABILENE, ABILENE_LINKS, cap_from("abilene", [40, 50, 60]))
    write("B4", B4, B4_LINKS, cap_from("b4", [40, 50, 60]))
    specs = [
        ("CWIX", 21, 26, ((25, 50), (-125, -70)), 21),
        ("BTNorthAmerica", 36, 76, ((25, 50), (-125, -70)), 36),
        ("Tinet", 48, 84, ((35, 60), (-10, 30)), 48),
        ("Deltacom", 103, 151, ((25, 38), (-95, -75)), 103),
        ("Ion", 114, 135, ((38, 48), (-100, -70)), 114),
    ]
    for name, n, m, box, seed in specs:
        coords, edges = synthetic(name, n, m, box, seed)
        write(name, coords, edges, cap_from(name, [40, 50, 60]))


if __name__ == "__main__":
    main()
