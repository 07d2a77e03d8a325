"""Directed graphs with orientation data and signed canonical forms.

A graph is stored with an explicit edge list whose order *is* the
orientation datum for even d; the implicit vertex order 0..n-1 is the
orientation datum for odd d.  Undirected families are directed graphs
modulo edge flips (free for even d, a sign per flip for odd d).
Canonicalization returns the canonical key together with the parity
sign relating the stored orientation to the canonical representative,
or None when the graph admits an orientation-reversing automorphism.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .canon import canonical_labeling, perm_parity, sort_parity


class InvalidGraph(ValueError):
    pass


class FamilyMismatch(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass(frozen=True)
class DirectedGraph:
    """A directed multigraph; the edge list order carries orientation data."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for t, h in self.edges:
            if not (0 <= t < self.vertex_count and 0 <= h < self.vertex_count):
                raise InvalidGraph(f"edge ({t},{h}) out of range for V={self.vertex_count}")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[tuple[int, int]]:
        """Per-vertex (out, in) counts; a self-loop adds one to each."""
        out = [0] * self.vertex_count
        inn = [0] * self.vertex_count
        for t, h in self.edges:
            out[t] += 1
            inn[h] += 1
        return list(zip(out, inn))

    def components(self) -> int:
        n = self.vertex_count
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t, h in self.edges:
            rt, rh = find(t), find(h)
            if rt != rh:
                parent[rt] = rh
        return len({find(v) for v in range(n)})

    def has_directed_cycle(self) -> bool:
        n = self.vertex_count
        succ = [set() for _ in range(n)]
        for t, h in self.edges:
            if t == h:
                return True
            succ[t].add(h)
        state = [0] * n  # 0 unvisited, 1 active, 2 done

        def visit(v):
            state[v] = 1
            for w in succ[v]:
                if state[w] == 1:
                    return True
                if state[w] == 0 and visit(w):
                    return True
            state[v] = 2
            return False

        return any(state[v] == 0 and visit(v) for v in range(n))


@dataclass(frozen=True)
class FamilySpec:
    """Orientation convention plus the structural flags of one graph family."""

    d: int
    directed: bool = True
    connected: bool = False
    min_valency: int = 0
    no_passing: bool = False
    oriented: bool = False
    allow_tadpoles: bool = False

    def __post_init__(self):
        if self.oriented and not self.directed:
            raise ValueError("oriented families must be directed")

    @property
    def even_d(self) -> bool:
        return self.d % 2 == 0

    def key_tag(self) -> str:
        return f"{'d' if self.directed else 'u'}{self.d % 2}"


# The distinguished extended element: the graph with no vertices and no edges.
EMPTY_GRAPH = DirectedGraph(0, ())


def loop_order(g: DirectedGraph) -> int:
    """First Betti number e - v + #components."""
    return g.edge_count - g.vertex_count + g.components()


def is_family_member(g: DirectedGraph, fam: FamilySpec) -> bool:
    """Structural membership test (symmetry kills are a separate matter)."""
    if not fam.allow_tadpoles and any(t == h for t, h in g.edges):
        return False
    if fam.min_valency > 0:
        for out, inn in g.degrees():
            if out + inn < fam.min_valency:
                return False
    if fam.no_passing and fam.directed:
        for out, inn in g.degrees():
            if out == 1 and inn == 1:
                return False
    if fam.oriented and g.has_directed_cycle():
        return False
    if fam.connected and g.vertex_count > 0 and g.components() != 1:
        return False
    return True


def _undirected_pairs(edges) -> list[tuple[int, int]]:
    return [(t, h) if t <= h else (h, t) for t, h in edges]


def canonicalize(g: DirectedGraph, fam: FamilySpec) -> tuple[bytes, int] | None:
    """Canonical key and orientation sign, or None if zero by symmetry.

    Raises InvalidGraph for graphs the family cannot represent at all
    (bad indices are caught at construction; tadpoles when forbidden).
    """
    if not fam.allow_tadpoles and any(t == h for t, h in g.edges):
        raise InvalidGraph("self-loops are not allowed in this family")
    n = g.vertex_count
    if n == 0:
        return _key(fam, 0, ()), 1

    if fam.directed:
        adj: dict[tuple[int, int], int] = {}
        for e in g.edges:
            adj[e] = adj.get(e, 0) + 1
        lab, auts = canonical_labeling(n, adj)
        auts = [_conjugate(a, lab) for a in auts]
        if fam.even_d:
            # orientation = edge order; any parallel pair kills the graph
            if any(m > 1 for m in adj.values()):
                return None
            relabeled = [(lab[t], lab[h]) for t, h in g.edges]
            sign = sort_parity(relabeled)
            canon_edges = tuple(sorted(relabeled))
            for a in auts:
                if _edge_perm_parity(canon_edges, a) < 0:
                    return None
        else:
            # orientation = vertex order; edges carry no sign
            sign = perm_parity(lab)
            relabeled = [(lab[t], lab[h]) for t, h in g.edges]
            canon_edges = tuple(sorted(relabeled))
            for a in auts:
                if perm_parity(a) < 0:
                    return None
        return _key(fam, n, canon_edges), sign

    # undirected family: label the symmetrized multigraph
    uadj: dict[tuple[int, int], int] = {}
    for p in _undirected_pairs(g.edges):
        uadj[p] = uadj.get(p, 0) + 1
    sadj: dict[tuple[int, int], int] = {}
    for (a, b), m in uadj.items():
        sadj[(a, b)] = sadj.get((a, b), 0) + m
        if a != b:
            sadj[(b, a)] = sadj.get((b, a), 0) + m
    lab, auts = canonical_labeling(n, sadj)
    auts = [_conjugate(a, lab) for a in auts]
    has_loop = any(a == b for a, b in uadj)
    if fam.even_d:
        if any(m > 1 for m in uadj.values()):
            return None
        relabeled = [(lab[t], lab[h]) if lab[t] <= lab[h] else (lab[h], lab[t])
                     for t, h in g.edges]
        sign = sort_parity(relabeled)
        canon_edges = tuple(sorted(relabeled))
        for a in auts:
            if _edge_perm_parity(canon_edges, a, undirected=True) < 0:
                return None
    else:
        if has_loop:
            return None  # the half-edge flip of a tadpole acts by -1 for odd d
        sign = perm_parity(lab)
        flips = sum(1 for t, h in g.edges if lab[t] > lab[h])
        if flips % 2:
            sign = -sign
        canon_edges = tuple(sorted((lab[t], lab[h]) if lab[t] <= lab[h]
                                   else (lab[h], lab[t]) for t, h in g.edges))
        for a in auts:
            s = perm_parity(a)
            aflips = sum(1 for x, y in canon_edges if a[x] > a[y])
            if s * (-1 if aflips % 2 else 1) < 0:
                return None
    return _key(fam, n, canon_edges), sign


def _conjugate(a, lab) -> tuple[int, ...]:
    """Transport an automorphism from stored labels to canonical labels."""
    n = len(lab)
    inv = [0] * n
    for v in range(n):
        inv[lab[v]] = v
    return tuple(lab[a[inv[i]]] for i in range(n))


def _edge_perm_parity(canon_edges, a, undirected: bool = False) -> int:
    """Parity of the edge permutation induced by vertex automorphism `a`."""
    index = {e: i for i, e in enumerate(canon_edges)}
    perm = []
    for x, y in canon_edges:
        img = (a[x], a[y])
        if undirected and img[0] > img[1]:
            img = (img[1], img[0])
        perm.append(index[img])
    return perm_parity(perm)


def _key(fam: FamilySpec, n: int, canon_edges) -> bytes:
    body = ";".join(f"{t},{h}" for t, h in canon_edges)
    return f"{fam.key_tag()}:V{n}:E{body}".encode()


def key_to_graph(key: bytes) -> DirectedGraph:
    """Rebuild the canonical representative stored in a key."""
    tag, vpart, epart = key.decode().split(":")
    n = int(vpart[1:])
    body = epart[1:]
    edges = tuple(tuple(int(x) for x in item.split(",")) for item in body.split(";")) if body else ()
    return DirectedGraph(n, edges)  # type: ignore[arg-type]


def graph_key(g: DirectedGraph, fam: FamilySpec) -> bytes | None:
    res = canonicalize(g, fam)
    return None if res is None else res[0]


class GraphVector:
    """Finite formal linear combination of canonical graph keys."""

    __slots__ = ("family", "terms")

    def __init__(self, family: FamilySpec, terms: dict[bytes, Fraction] | None = None):
        self.family = family
        self.terms: dict[bytes, Fraction] = {}
        if terms:
            for k, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[k] = c

    @classmethod
    def zero(cls, family: FamilySpec) -> "GraphVector":
        return cls(family)

    @classmethod
    def single(cls, family: FamilySpec, g: DirectedGraph, coeff=1) -> "GraphVector":
        v = cls(family)
        v.add_graph(g, coeff)
        return v

    def add_graph(self, g: DirectedGraph, coeff=1) -> None:
        res = canonicalize(g, self.family)
        if res is None:
            return
        key, sign = res
        self.add_key(key, Fraction(coeff) * sign)

    def add_key(self, key: bytes, coeff) -> None:
        c = self.terms.get(key, Fraction(0)) + Fraction(coeff)
        if c:
            self.terms[key] = c
        else:
            self.terms.pop(key, None)

    def __add__(self, other: "GraphVector") -> "GraphVector":
        if self.family != other.family:
            raise FamilyMismatch("cannot add vectors from different families")
        out = GraphVector(self.family, dict(self.terms))
        for k, c in other.terms.items():
            out.add_key(k, c)
        return out

    def scale(self, q) -> "GraphVector":
        q = Fraction(q)
        return GraphVector(self.family, {k: c * q for k, c in self.terms.items()} if q else {})

    __rmul__ = scale

    def __sub__(self, other: "GraphVector") -> "GraphVector":
        return self + other.scale(-1)

    def __eq__(self, other) -> bool:
        return (isinstance(other, GraphVector) and self.family == other.family
                and self.terms == other.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "GraphVector(0)"
        bits = ", ".join(f"{c}*{k.decode()}" for k, c in sorted(self.terms.items()))
        return f"GraphVector({bits})"


def vector_add(a: GraphVector, b: GraphVector) -> GraphVector:
    return a + b


def vector_scale(q, a: GraphVector) -> GraphVector:
    return a.scale(q)


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _expect(text: str, i: int, token: str) -> int:
    i = _skip_ws(text, i)
    if not text.startswith(token, i):
        raise ParseError(f"expected {token!r}", i)
    return i + len(token)


def _parse_int(text: str, i: int) -> tuple[int, int]:
    i = _skip_ws(text, i)
    j = i
    while j < len(text) and text[j].isdigit():
        j += 1
    if j == i:
        raise ParseError("expected integer", i)
    return int(text[i:j]), j


def parse_graph_signed(text: str) -> tuple[DirectedGraph, int]:
    """Parse `V=<int> E=[(t,h),...]` with optional trailing `O=<+|->`."""
    i = _expect(text, 0, "V")
    i = _expect(text, i, "=")
    n, i = _parse_int(text, i)
    i = _expect(text, i, "E")
    i = _expect(text, i, "=")
    i = _expect(text, i, "[")
    edges = []
    i = _skip_ws(text, i)
    if i < len(text) and text[i] == "]":
        i += 1
    else:
        while True:
            i = _expect(text, i, "(")
            t, i = _parse_int(text, i)
            i = _expect(text, i, ",")
            h, i = _parse_int(text, i)
            i = _expect(text, i, ")")
            edges.append((t, h))
            i = _skip_ws(text, i)
            if i < len(text) and text[i] == ",":
                i += 1
                continue
            i = _expect(text, i, "]")
            break
    sign = 1
    i = _skip_ws(text, i)
    if i < len(text) and text[i] == "O":
        i = _expect(text, i, "O")
        i = _expect(text, i, "=")
        i = _skip_ws(text, i)
        if i >= len(text) or text[i] not in "+-":
            raise ParseError("expected + or -", i)
        sign = 1 if text[i] == "+" else -1
        i += 1
    i = _skip_ws(text, i)
    if i != len(text):
        raise ParseError("trailing input", i)
    try:
        g = DirectedGraph(n, tuple(edges))
    except InvalidGraph as exc:
        raise ParseError(str(exc), 0) from exc
    return g, sign


def parse_graph(text: str) -> DirectedGraph:
    return parse_graph_signed(text)[0]


def serialize_graph(g: DirectedGraph) -> str:
    body = ",".join(f"({t},{h})" for t, h in g.edges)
    return f"V={g.vertex_count} E=[{body}]"
