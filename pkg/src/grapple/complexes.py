"""Kontsevich-style graph complexes: bases, differential, Lie bracket.

Families are cut out of the full directed/undirected complexes by flags
(connected, minimum valency, no passing vertices, oriented).  The
differential is the bracket with the single-edge graph; all signs are
routed through graphcore's canonicalization.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .canon import canonical_labeling
from .graphcore import (
    EMPTY_GRAPH,
    DirectedGraph,
    FamilyMismatch,
    FamilySpec,
    GraphVector,
    canonicalize,
    graph_key,
    is_family_member,
    key_to_graph,
    loop_order,
)

__all__ = [
    "ComplexSpec", "BasisSlice", "ResourceLimit", "dgc", "gc", "gc_geq2",
    "gc_or", "dfgc", "fgc", "degree", "loop_order", "generate_basis",
    "differential", "lie_bracket", "direct_sum_map", "cohomology_dims",
    "empty_symbol_key", "graded_degree_parity",
]


class ResourceLimit(RuntimeError):
    """A basis slice exceeded the configured size bound."""


DEFAULT_MAX_SLICE = 200_000


def _max_slice(limit: int | None) -> int:
    if limit is not None:
        return limit
    env = os.environ.get("GRAPPLE_MAX_SLICE")
    return int(env) if env else DEFAULT_MAX_SLICE


@dataclass(frozen=True)
class ComplexSpec:
    """A named graph-complex family: base family plus restriction flags."""

    family: str  # "dfgc" | "fgc" | "fgcor"
    d: int
    connected: bool = False
    min_valency: int = 0
    exclude_passing_vertices: bool = False
    allow_tadpoles: bool = False

    def __post_init__(self):
        if self.family not in ("dfgc", "fgc", "fgcor"):
            raise ValueError(f"unknown family {self.family!r}")

    def family_spec(self) -> FamilySpec:
        return FamilySpec(
            d=self.d,
            directed=self.family != "fgc",
            connected=self.connected,
            min_valency=self.min_valency,
            no_passing=self.exclude_passing_vertices,
            oriented=self.family == "fgcor",
            allow_tadpoles=self.allow_tadpoles,
        )


def dgc(d: int) -> ComplexSpec:
    """Directed connected graphs, valency >= 2, no passing vertices."""
    return ComplexSpec("dfgc", d, connected=True, min_valency=2,
                       exclude_passing_vertices=True)


def gc_geq2(d: int) -> ComplexSpec:
    """Undirected connected graphs with all valencies >= 2."""
    return ComplexSpec("fgc", d, connected=True, min_valency=2)


def gc(d: int) -> ComplexSpec:
    """Undirected connected graphs with all valencies >= 3."""
    return ComplexSpec("fgc", d, connected=True, min_valency=3)


def gc_or(d: int) -> ComplexSpec:
    """Oriented (no directed cycles) connected graphs, no passing vertices."""
    return ComplexSpec("fgcor", d, connected=True, min_valency=2,
                       exclude_passing_vertices=True)


def dfgc(d: int) -> ComplexSpec:
    return ComplexSpec("dfgc", d)


def fgc(d: int) -> ComplexSpec:
    return ComplexSpec("fgc", d)


NAMED_FAMILIES = {
    "dgc": dgc, "gc": gc, "gc2": gc_geq2, "gcor": gc_or,
    "dfgc": dfgc, "fgc": fgc,
}


def empty_symbol_key(spec: ComplexSpec) -> bytes:
    """Key of the distinguished degree-zero element with no vertices."""
    key, _ = canonicalize(EMPTY_GRAPH, spec.family_spec())
    return key


def _key_dims(key: bytes) -> tuple[int, int]:
    g = key_to_graph(key)
    return g.vertex_count, g.edge_count


def degree(spec: ComplexSpec, g: DirectedGraph | bytes) -> int:
    """Cohomological degree d(v-1) + (1-d)e; the empty symbol sits in 0."""
    if isinstance(g, bytes):
        g = key_to_graph(g)
    if g.vertex_count == 0:
        return 0
    return spec.d * (g.vertex_count - 1) + (1 - spec.d) * g.edge_count


def graded_degree_parity(spec: ComplexSpec, key: bytes) -> int:
    v, e = _key_dims(key)
    if v == 0:
        return 0
    return degree(spec, key_to_graph(key)) % 2


@dataclass(frozen=True)
class BasisSlice:
    spec: ComplexSpec
    v: int
    e: int
    keys: tuple[bytes, ...]

    def __len__(self) -> int:
        return len(self.keys)


# ----------------------------------------------------------- basis generation


def _undirected_canon(v: int, pairs: tuple[tuple[int, int], ...]):
    sadj: dict[tuple[int, int], int] = {}
    for a, b in pairs:
        sadj[(a, b)] = sadj.get((a, b), 0) + 1
        if a != b:
            sadj[(b, a)] = sadj.get((b, a), 0) + 1
    lab, _ = canonical_labeling(v, sadj)
    return tuple(sorted((lab[a], lab[b]) if lab[a] <= lab[b] else (lab[b], lab[a])
                        for a, b in pairs))


def _components_count(v: int, pairs) -> int:
    parent = list(range(v))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(x) for x in range(v)})


def _undirected_classes(v: int, e: int, *, allow_tadpoles: bool, min_val: int,
                        connected: bool, limit: int):
    """Isomorph-free undirected multigraph classes on exactly v vertices and
    e edges, grown edge by edge keeping only canonical representatives."""
    if v == 0:
        return [()] if e == 0 else []
    candidates = [(i, j) for i in range(v) for j in range(i, v)
                  if allow_tadpoles or i < j]
    level: set[tuple[tuple[int, int], ...]] = {()}
    for k in range(e):
        remaining = e - k - 1
        nxt: set[tuple[tuple[int, int], ...]] = set()
        for rep in level:
            for pair in candidates:
                pairs = tuple(sorted(rep + (pair,)))
                deg = [0] * v
                for a, b in pairs:
                    deg[a] += 1
                    deg[b] += 1
                deficit = sum(max(0, min_val - x) for x in deg)
                if deficit > 2 * remaining:
                    continue
                if connected and _components_count(v, pairs) - 1 > remaining:
                    continue
                nxt.add(_undirected_canon(v, pairs))
                if len(nxt) > limit:
                    raise ResourceLimit(
                        f"undirected slice (v={v}, e={k + 1}) exceeds {limit}")
        level = nxt
        if not level:
            break
    return sorted(level)


def _orientations(pairs: tuple[tuple[int, int], ...]):
    """All direction assignments, one representative per parallel class split."""
    classes: dict[tuple[int, int], int] = {}
    for p in pairs:
        classes[p] = classes.get(p, 0) + 1
    items = sorted(classes.items())
    assignments: list[list[tuple[int, int]]] = [[]]
    for (a, b), mult in items:
        if a == b:
            assignments = [cur + [(a, a)] * mult for cur in assignments]
            continue
        new = []
        for fwd in range(mult + 1):
            block = [(a, b)] * fwd + [(b, a)] * (mult - fwd)
            new.extend(cur + block for cur in assignments)
        assignments = new
    for ass in assignments:
        yield tuple(ass)


def generate_basis(spec: ComplexSpec, v: int, e: int,
                   limit: int | None = None) -> BasisSlice:
    """Complete duplicate-free canonical basis of the (v, e) slice."""
    if v < 0 or e < 0:
        raise ValueError("v and e must be non-negative")
    cap = _max_slice(limit)
    fam = spec.family_spec()
    uclasses = _undirected_classes(
        v, e, allow_tadpoles=spec.allow_tadpoles,
        min_val=spec.min_valency, connected=spec.connected, limit=cap)
    keys: set[bytes] = set()
    for pairs in uclasses:
        if fam.directed:
            for edges in _orientations(pairs):
                g = DirectedGraph(v, edges)
                if not is_family_member(g, fam):
                    continue
                res = canonicalize(g, fam)
                if res is not None:
                    keys.add(res[0])
        else:
            g = DirectedGraph(v, pairs)
            if not is_family_member(g, fam):
                continue
            res = canonicalize(g, fam)
            if res is not None:
                keys.add(res[0])
        if len(keys) > cap:
            raise ResourceLimit(f"slice (v={v}, e={e}) exceeds {cap}")
    return BasisSlice(spec, v, e, tuple(sorted(keys)))


# ------------------------------------------------------- bracket, differential


def _insertions(g1: DirectedGraph, v: int, g2: DirectedGraph):
    """Substitute g2 into vertex v of g1; one graph per edge re-attachment.

    Vertex order of the result: g1's vertices with v removed, then g2's
    block.  For odd d this realizes the determinant-line contraction of
    the replaced vertex, which costs the caller a sign (-1)^v.  Edge
    order: g1's edges (endpoints updated) followed by g2's edges.
    """
    n1, n2 = g1.vertex_count, g2.vertex_count
    if n2 == 0:
        return
    base = n1 - 1

    def newidx(u: int) -> int:
        return u if u < v else u - 1

    incid = []  # half-edges at v: (edge index, end 0=tail/1=head)
    for i, (t, h) in enumerate(g1.edges):
        if t == v:
            incid.append((i, 0))
        if h == v:
            incid.append((i, 1))
    total = len(incid)
    g2_edges = tuple((base + t, base + h) for t, h in g2.edges)
    for mask in range(n2 ** total):
        targets = []
        m = mask
        for _ in range(total):
            targets.append(base + m % n2)
            m //= n2
        edges = []
        pick = dict(zip(incid, targets))
        for i, (t, h) in enumerate(g1.edges):
            nt = pick.get((i, 0), None)
            nh = pick.get((i, 1), None)
            edges.append((nt if nt is not None else newidx(t),
                          nh if nh is not None else newidx(h)))
        yield DirectedGraph(base + n2, tuple(edges) + g2_edges)


def _graph_compose_into(out: GraphVector, g1: DirectedGraph, g2: DirectedGraph,
                        coeff: Fraction) -> None:
    odd_d = out.family.d % 2 == 1
    n1, n2 = g1.vertex_count, g2.vertex_count
    for v in range(n1):
        # determinant-line bookkeeping for odd d: contract the vertex at
        # position v and carry the inserted block past the survivors
        sign = -1 if (odd_d and (v + n2 * (n1 - 1)) % 2) else 1
        for g in _insertions(g1, v, g2):
            out.add_graph(g, sign * coeff)


def lie_bracket(spec: ComplexSpec, x: GraphVector, y: GraphVector) -> GraphVector:
    """[x, y] = sum over insertions, graded antisymmetrized.

    The distinguished no-vertex element acts by 2 * loop order.
    """
    fam = spec.family_spec()
    if x.family != fam or y.family != fam:
        raise FamilyMismatch("bracket arguments must live in the spec's family")
    empty_key = empty_symbol_key(spec)
    out = GraphVector(fam)
    for k1, c1 in x.terms.items():
        g1 = key_to_graph(k1)
        p1 = graded_degree_parity(spec, k1)
        for k2, c2 in y.terms.items():
            g2 = key_to_graph(k2)
            p2 = graded_degree_parity(spec, k2)
            if k1 == empty_key and k2 == empty_key:
                continue
            if k1 == empty_key:
                out.add_key(k2, c1 * c2 * 2 * loop_order(g2))
                continue
            if k2 == empty_key:
                out.add_key(k1, -c1 * c2 * 2 * loop_order(g1))
                continue
            koszul = -1 if (p1 and p2) else 1
            _graph_compose_into(out, g1, g2, c1 * c2)
            _graph_compose_into(out, g2, g1, -koszul * c1 * c2)
    return out


def _edge_vector(spec: ComplexSpec) -> GraphVector:
    return GraphVector.single(spec.family_spec(), DirectedGraph(2, ((0, 1),)))


def differential(spec: ComplexSpec, x: GraphVector) -> GraphVector:
    """delta = bracket with the single-edge graph."""
    return lie_bracket(spec, _edge_vector(spec), x)


def vector_from_keys(spec: ComplexSpec, terms: dict[bytes, Fraction]) -> GraphVector:
    return GraphVector(spec.family_spec(), terms)


def single_key_vector(spec: ComplexSpec, key: bytes) -> GraphVector:
    return GraphVector(spec.family_spec(), {key: Fraction(1)})


def direct_sum_map(spec_und: ComplexSpec, key: bytes) -> GraphVector:
    """Undirected class to the signed sum over all 2^e edge directions,
    landing in the directed family with the same flags."""
    fam = spec_und.family_spec()
    if fam.directed:
        raise FamilyMismatch("direct_sum_map expects an undirected family")
    if fam.d % 2:
        raise FamilyMismatch("the direction-sum map is implemented for even d")
    spec_dir = ComplexSpec("dfgc", spec_und.d, connected=spec_und.connected,
                           min_valency=spec_und.min_valency,
                           exclude_passing_vertices=spec_und.exclude_passing_vertices,
                           allow_tadpoles=spec_und.allow_tadpoles)
    g = key_to_graph(key)
    out = GraphVector(spec_dir.family_spec())
    e = g.edge_count
    for mask in range(2 ** e):
        edges = tuple((t, h) if not (mask >> i) & 1 else (h, t)
                      for i, (t, h) in enumerate(g.edges))
        out.add_graph(DirectedGraph(g.vertex_count, edges))
    return out


def directed_counterpart(spec_und: ComplexSpec) -> ComplexSpec:
    return ComplexSpec("dfgc", spec_und.d, connected=spec_und.connected,
                       min_valency=spec_und.min_valency,
                       exclude_passing_vertices=spec_und.exclude_passing_vertices,
                       allow_tadpoles=spec_und.allow_tadpoles)


# ------------------------------------------------------------------ cohomology


def vertices_for_degree(spec: ComplexSpec, loop: int, deg: int) -> int:
    """Solve deg = d(v-1) + (1-d)(v + loop - 1) for v (connected slices)."""
    v = deg + spec.d + (spec.d - 1) * (loop - 1)
    return v


def _diff_operator(spec: ComplexSpec):
    def op(key: bytes) -> dict[bytes, Fraction]:
        return differential(spec, single_key_vector(spec, key)).terms

    return op


def cohomology_dims(spec: ComplexSpec, loop: int, degrees: tuple[int, int],
                    limit: int | None = None) -> linalg.CohomologyReport:
    """Cohomology dimensions per degree at fixed loop order.

    Slices adjacent to a resource-truncated slice are flagged as
    upper bounds; everything else is exact.
    """
    if not spec.connected:
        raise ValueError("cohomology reports require a connected family")
    lo, hi = degrees
    report = linalg.CohomologyReport()
    bases: dict[int, BasisSlice | None] = {}

    def basis_at(vv: int) -> BasisSlice | None:
        if vv not in bases:
            ee = vv + loop - 1
            if vv < 1 or ee < 0:
                bases[vv] = BasisSlice(spec, max(vv, 0), max(ee, 0), ())
            else:
                try:
                    bases[vv] = generate_basis(spec, vv, ee, limit)
                except ResourceLimit:
                    bases[vv] = None
        return bases[vv]

    op = _diff_operator(spec)
    for deg in range(lo, hi + 1):
        v = vertices_for_degree(spec, loop, deg)
        e = v + loop - 1
        label = f"loop={loop},deg={deg},v={v},e={e}"
        cur = basis_at(v)
        if cur is None:
            report.slices.append(linalg.SliceReport(label, -1, 0, 0, "unknown"))
            continue
        below, above = basis_at(v - 1), basis_at(v + 1)
        exact = True
        rank_in = rank_out = 0
        if below is None:
            exact = False
        elif len(below) and len(cur):
            rank_in = linalg.rank(linalg.assemble(op, below.keys, cur.keys))
        if above is None:
            exact = False
        elif len(cur) and len(above):
            rank_out = linalg.rank(linalg.assemble(op, cur.keys, above.keys))
        report.slices.append(linalg.SliceReport(
            label, len(cur), rank_in, rank_out,
            "exact" if exact else "upper-bound"))
    return report
