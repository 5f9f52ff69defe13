#!/usr/bin/env python3
"""Regenerates include/seqmatch/detail/brief_pattern.hpp.

The table is committed; this script only documents how it was produced.
Points are drawn uniformly from the integer square [-13, 13]^2 with a fixed
seed; pairs whose two points coincide are redrawn.
"""
import random
import sys

SEED = 20240611
RADIUS = 13
PAIRS = 256


def main() -> None:
    rng = random.Random(SEED)
    pairs = []
    while len(pairs) < PAIRS:
        p = [rng.randint(-RADIUS, RADIUS) for _ in range(4)]
        if (p[0], p[1]) == (p[2], p[3]):
            continue
        pairs.append(p)

    out = sys.stdout
    out.write("#pragma once\n\n#include <array>\n#include <cstdint>\n\n")
    out.write("// Generated by tools/gen_brief_pattern.py (seed %d). Do not edit.\n\n" % SEED)
    out.write("namespace seqmatch::detail {\n\n")
    out.write("struct PointPair {\n  std::int8_t x1, y1, x2, y2;\n};\n\n")
    out.write("inline constexpr std::array<PointPair, %d> kBriefPattern = {{\n" % PAIRS)
    for i in range(0, PAIRS, 4):
        row = ", ".join("{%d, %d, %d, %d}" % tuple(p) for p in pairs[i:i + 4])
        out.write("    %s,\n" % row)
    out.write("}};\n\n}  // namespace seqmatch::detail\n")


if __name__ == "__main__":
    main()
