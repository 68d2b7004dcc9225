#!/usr/bin/env python3
"""Recomputes corpus metrics for the URDF files in this directory.

Standalone reference for the Rust implementation: it parses the files with
xml.etree, orders siblings canonically, computes tree edit distance by
memoized forest recursion, and writes expected.json.
"""
import glob
import itertools
import json
import os
import re
import xml.etree.ElementTree as ET
from functools import lru_cache

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK = (1 << 64) - 1


def fnv1a64(data):
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return h


def load(path):
    robot = ET.parse(path).getroot()
    category = robot.get("name")
    labels = {}
    for link in robot.findall("link"):
        name = link.get("name")
        m = re.fullmatch(r"(.*)_(\d+)", name)
        stem = m.group(1) if m else name
        labels[name] = stem if "/" in stem else f"{category}/{stem}"
    children = {name: [] for name in labels}
    parent = {}
    for j in robot.findall("joint"):
        p = j.find("parent").get("link")
        c = j.find("child").get("link")
        children[p].append((c, j.get("type")))
        parent[c] = p
    root = next(n for n in labels if n not in parent)

    def build(name, tag):
        kids = [build(c, t) for c, t in children[name]]
        size = 1 + sum(k["size"] for k in kids)
        kids.sort(key=lambda k: (k["label"], k["size"], k["hash"]))
        data = labels[name].encode() + b"\x1f" + tag.encode()
        for k in kids:
            data += k["hash"].to_bytes(8, "little")
        data += b"\x1e"
        return {
            "label": labels[name],
            "tag": tag,
            "kids": kids,
            "size": size,
            "hash": fnv1a64(data),
        }

    return build(root, "root")


def ted_label(node):
    return node["label"] if node["tag"] == "root" else f'{node["label"]}[{node["tag"]}]'


def structure(node):
    s = ted_label(node)
    if node["kids"]:
        s += "(" + " ".join(structure(k) for k in node["kids"]) + ")"
    return s


def freeze(node):
    return (ted_label(node), tuple(freeze(k) for k in node["kids"]))


def forest_size(forest):
    return sum(1 + forest_size(kids) for _, kids in forest)


@lru_cache(maxsize=None)
def forest_dist(f, g):
    if not f and not g:
        return 0
    if not f:
        return forest_size(g)
    if not g:
        return forest_size(f)
    (lf, kf), (lg, kg) = f[-1], g[-1]
    return min(
        forest_dist(f[:-1] + kf, g) + 1,
        forest_dist(f, g[:-1] + kg) + 1,
        forest_dist(kf, kg) + forest_dist(f[:-1], g[:-1]) + (lf != lg),
    )


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    trees = [load(p) for p in sorted(glob.glob(os.path.join(here, "*.urdf")))]
    joints = [t["size"] - 1 for t in trees]
    n = len(trees)
    avg = sum(joints) / n
    var = sum((j - avg) ** 2 for j in joints) / n
    frozen = [freeze(t) for t in trees]
    pairs = list(itertools.combinations(range(n), 2))
    total = sum(forest_dist((frozen[i],), (frozen[j],)) for i, j in pairs)
    out = {
        "object_count": n,
        "avg_joint_number": avg,
        "joint_number_variance": var,
        "mean_pairwise_ted": total / len(pairs) if pairs else 0.0,
        "distinct_structure_count": len({structure(t) for t in trees}),
    }
    with open(os.path.join(here, "expected.json"), "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
