#!/usr/bin/env python3
"""Regenerates dct_neighbor_tables.json.

The table content is the transcription of the per-lattice correlated-mode
tables (lattices 1..7).  Entry sets follow the closed-form patterns that the
printed tables realize exactly; the one spurious row of the lattice-2 table
(16 same-group/self references) is carried under "suspect_rows" and is not
part of the live data.
"""
import json

HEADERS = {
    0: [(0,0),(1,1),(2,2),(3,3),(4,4),(5,5),(6,6),(7,7),
        (0,1),(1,2),(2,3),(3,4),(4,5),(5,6),(6,7),(7,0)],
    1: [(0,2),(1,3),(2,4),(3,5),(4,6),(5,7),(7,1),(6,0),
        (0,3),(1,4),(2,5),(3,6),(4,7),(7,2),(6,1),(5,0)],
    2: [(0,4),(1,5),(2,6),(3,7),(7,3),(6,2),(5,1),(4,0),
        (0,5),(1,6),(2,7),(7,4),(6,3),(5,2),(4,1),(3,0)],
    3: [(0,6),(1,7),(7,5),(6,4),(5,3),(4,2),(3,1),(2,0),
        (0,7),(7,6),(6,5),(5,4),(4,3),(3,2),(2,1),(1,0)],
}

# Block naming: 0 = current, 1 = up, 2 = left, 3 = right, 4 = down.
BLOCK_OFFSETS = {0: (0, 0), 1: (-1, 0), 2: (0, -1), 3: (0, 1), 4: (1, 0)}

def intra_even(r, c, g):
    d = (c - r) % 8
    delta = d - 2 * g
    out = []
    for k in range(g):
        out.append((0, r, (r + 2 * k + delta) % 8))
        out.append((0, (c - 2 * k - delta) % 8, c))
    return out

def intra_odd(r, c, g):
    return [(0, (c - j) % 8, c) for j in range(2 * g)]

def inter(r, c):
    out = []
    out += [(1, k, c) for k in range(8)]   # up: whole column
    out += [(2, r, k) for k in range(8)]   # left: whole row
    out += [(3, r, k) for k in range(8)]   # right: whole row
    out += [(4, k, c) for k in range(8)]   # down: whole column
    return out

def entries_for(lattice, r, c):
    g = lattice % 4
    if lattice == 0:
        return []
    if lattice < 4:
        return intra_even(r, c, g)
    if lattice == 4:
        return inter(r, c)
    return inter(r, c) + intra_odd(r, c, g)

lattices = []
for lid in range(8):
    modes = []
    for (r, c) in HEADERS[lid % 4]:
        modes.append({"mode": [r, c],
                      "entries": [list(e) for e in entries_for(lid, r, c)]})
    lattices.append({"id": lid, "modes": modes})

# Fifth block-0 row printed in the lattice-2 table.  Every referenced mode is
# in the same group as the column mode (one is even self-referential), which
# contradicts both the per-lattice count table (4 intra for this group) and
# the lattice-6 table for the same mode group.  Suspected typo; kept here for
# the record, excluded from the live entries above.
L2_ROW5 = [(1,6),(2,7),(0,5),(7,4),(6,3),(5,2),(4,1),(3,0),
           (2,7),(1,6),(0,5),(7,4),(6,3),(5,2),(4,1),(3,0)]
suspect = [{
    "lattice": 2,
    "block": 0,
    "note": "spurious fifth intra row: same-group references, excluded",
    "entries": [{"mode": list(m), "entry": [0, e[0], e[1]]}
                for m, e in zip(HEADERS[2], L2_ROW5)],
}]

def fnv1a64(s):
    h = 0xcbf29ce484222325
    for b in s.encode():
        h ^= b
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"

canon = []
for lat in lattices:
    for m in lat["modes"]:
        canon.append("L%d|%d,%d:" % (lat["id"], m["mode"][0], m["mode"][1]) +
                     ";".join("b%d(%d,%d)" % tuple(e) for e in m["entries"]))
checksum = fnv1a64("\n".join(canon))

doc = {
    "format": "dct-lattice-neighbor-tables",
    "version": 1,
    "block_offsets": {str(k): list(v) for k, v in BLOCK_OFFSETS.items()},
    "expected_counts": [0, 2, 4, 6, 32, 34, 36, 38],
    "checksum_fnv1a64": checksum,
    "lattices": lattices,
    "suspect_rows": suspect,
}

with open("dct_neighbor_tables.json", "w") as f:
    json.dump(doc, f, indent=1)
    f.write("\n")
print("checksum", checksum)
