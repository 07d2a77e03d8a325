"""Canonical labeling of vertex-colored directed multigraphs.

Individualization-refinement with backtracking over in/out-degree
partitions.  The canonical form is the lexicographically smallest
certificate (initial colors, relabeled edge list) over all admissible
labelings; the search also reports a generating set of the color- and
structure-preserving automorphism group, which callers use for
symmetry-kill decisions (the sign map is a group homomorphism, so
generators suffice).

Multiplicities live in the adjacency map; parallel edges therefore do
not show up as automorphisms here and must be handled by the caller's
sign model.
"""

from __future__ import annotations

from typing import Hashable, Mapping, Sequence


def perm_parity(perm: Sequence[int]) -> int:
    """Sign of a permutation of 0..n-1 given in one-line notation."""
    n = len(perm)
    seen = [False] * n
    sign = 1
    for i in range(n):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def sort_parity(items: Sequence) -> int:
    """Sign of the permutation that stably sorts `items` (must be distinct)."""
    order = sorted(range(len(items)), key=lambda i: items[i])
    return perm_parity(order)


def canonical_labeling(
    n: int,
    adj: Mapping[tuple[int, int], int],
    colors: Sequence[Hashable] | None = None,
) -> tuple[tuple[int, ...], list[tuple[int, ...]]]:
    """Canonically label a colored directed multigraph.

    adj maps (tail, head) to a positive multiplicity; colors is an
    optional sequence of mutually sortable vertex colors.  Returns
    (lab, auts) where lab[v] is the canonical index of vertex v and
    auts is a list of automorphisms (old -> old, one-line notation)
    generating the automorphism group.  Deterministic.
    """
    if n == 0:
        return (), []
    outn: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    inn: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for (t, h), m in sorted(adj.items()):
        if m <= 0:
            raise ValueError("edge multiplicities must be positive")
        outn[t].append((h, m))
        inn[h].append((t, m))
    if colors is None:
        init = [0] * n
    else:
        if len(colors) != n:
            raise ValueError("one color per vertex required")
        rank = {c: i for i, c in enumerate(sorted(set(colors)))}
        init = [rank[c] for c in colors]

    def refine(col: list[int]) -> list[int]:
        ncol = len(set(col))
        while True:
            sig = []
            for v in range(n):
                so = tuple(sorted((col[u], m) for (u, m) in outn[v]))
                si = tuple(sorted((col[u], m) for (u, m) in inn[v]))
                sig.append((col[v], si, so))  # sources sort before sinks
            order = {s: i for i, s in enumerate(sorted(set(sig)))}
            col = [order[s] for s in sig]
            if len(order) == ncol:
                return col
            ncol = len(order)

    edge_items = sorted(adj.items())
    best: dict = {"cert": None, "lab": None}
    auts: list[tuple[int, ...]] = []
    aut_set: set[tuple[int, ...]] = set()

    def leaf(col: list[int]) -> None:
        lab = tuple(col)
        inv = [0] * n
        for v in range(n):
            inv[col[v]] = v
        edges = tuple(sorted((col[t], col[h], m) for (t, h), m in edge_items))
        colw = tuple(init[inv[i]] for i in range(n))
        cert = (colw, edges)
        if best["cert"] is None or cert < best["cert"]:
            best["cert"] = cert
            best["lab"] = lab
        elif cert == best["cert"]:
            blab = best["lab"]
            binv = [0] * n
            for v in range(n):
                binv[blab[v]] = v
            a = tuple(binv[lab[v]] for v in range(n))
            if a not in aut_set and any(a[i] != i for i in range(n)):
                aut_set.add(a)
                auts.append(a)

    def path_orbit(vs: list[int], path: tuple[int, ...]) -> set[int]:
        # orbit closure of vs under automorphisms fixing `path` pointwise
        stab = [a for a in auts if all(a[p] == p for p in path)]
        orbit = set(vs)
        frontier = list(vs)
        while frontier:
            x = frontier.pop()
            for a in stab:
                y = a[x]
                if y not in orbit:
                    orbit.add(y)
                    frontier.append(y)
        return orbit

    def search(col: list[int], path: tuple[int, ...]) -> None:
        col = refine(col)
        counts: dict[int, int] = {}
        for c in col:
            counts[c] = counts.get(c, 0) + 1
        target = None
        for c in sorted(counts):
            if counts[c] > 1:
                target = c
                break
        if target is None:
            leaf(col)
            return
        cell = [v for v in range(n) if col[v] == target]
        explored: list[int] = []
        for v in cell:
            if explored and v in path_orbit(explored, path):
                continue
            col2 = list(col)
            col2[v] = col[v] + n  # unique new color, deterministic
            search(col2, path + (v,))
            explored.append(v)

    search(init, ())
    return best["lab"], auts


def orbit_of(x: int, auts: Sequence[Sequence[int]]) -> set[int]:
    """Orbit of a vertex under the group generated by `auts`."""
    orbit = {x}
    frontier = [x]
    while frontier:
        y = frontier.pop()
        for a in auts:
            z = a[y]
            if z not in orbit:
                orbit.add(z)
                frontier.append(z)
    return orbit
