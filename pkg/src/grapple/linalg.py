"""Exact sparse linear algebra over the rationals.

Ranks are computed twice: modulo several large primes (fast screen) and
by exact fraction-free (Bareiss) elimination over the integers.  Any
disagreement aborts; floating point is never used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

# Deterministic set of large primes below 2^31; unlucky primes only
# lower the modular rank, and the exact certification catches that.
DEFAULT_PRIMES = (2147483629, 2147483587, 2147483563)


class RankVerificationError(RuntimeError):
    """Modular and exact elimination disagreed on a rank."""


class IncompleteCodomain(ValueError):
    """A differential image left the declared codomain basis."""


class SparseRationalMatrix:
    """Sparse matrix with exact rational entries, indexed by basis position."""

    def __init__(self, rows: int, cols: int,
                 entries: dict[tuple[int, int], Fraction] | None = None):
        self.rows = rows
        self.cols = cols
        self.entries: dict[tuple[int, int], Fraction] = {}
        if entries:
            for (i, j), v in entries.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError((i, j))
                v = Fraction(v)
                if v:
                    self.entries[(i, j)] = v

    def set(self, i: int, j: int, v) -> None:
        v = Fraction(v)
        if v:
            self.entries[(i, j)] = v
        else:
            self.entries.pop((i, j), None)

    def get(self, i: int, j: int) -> Fraction:
        return self.entries.get((i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self.entries

    def dense(self) -> list[list[Fraction]]:
        m = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            m[i][j] = v
        return m

    def integer_rows(self) -> list[list[int]]:
        """Rows scaled by their denominator lcm; rank is unchanged."""
        out = []
        for i in range(self.rows):
            row = [self.get(i, j) for j in range(self.cols)]
            den = 1
            for v in row:
                den = den * v.denominator // gcd(den, v.denominator)
            out.append([int(v * den) for v in row])
        return out

    def matmul(self, other: "SparseRationalMatrix") -> "SparseRationalMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        by_row: dict[int, list[tuple[int, Fraction]]] = {}
        for (i, k), v in self.entries.items():
            by_row.setdefault(i, []).append((k, v))
        by_col: dict[int, list[tuple[int, Fraction]]] = {}
        for (k, j), v in other.entries.items():
            by_col.setdefault(k, []).append((j, v))
        out = SparseRationalMatrix(self.rows, other.cols)
        for i, row in by_row.items():
            acc: dict[int, Fraction] = {}
            for k, v in row:
                for j, w in by_col.get(k, ()):
                    acc[j] = acc.get(j, Fraction(0)) + v * w
            for j, v in acc.items():
                if v:
                    out.entries[(i, j)] = v
        return out

    def export_coordinate_text(self) -> str:
        """MatrixMarket-style coordinate listing with exact rational entries."""
        lines = [f"%%grapple rational coordinate {self.rows} {self.cols} {len(self.entries)}"]
        for (i, j), v in sorted(self.entries.items()):
            lines.append(f"{i + 1} {j + 1} {v.numerator}/{v.denominator}")
        return "\n".join(lines) + "\n"


def _rank_mod_p(int_rows: list[list[int]], p: int) -> int:
    rows = [[x % p for x in row] for row in int_rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, len(rows)):
            if rows[i][c]:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [(x * inv) % p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rowr = rows[r]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rowr)]
        r += 1
        rank += 1
        if r == len(rows):
            break
    return rank


def _rank_bareiss(int_rows: list[list[int]]) -> int:
    """Fraction-free Gaussian elimination (Bareiss), exact over Z."""
    m = [row[:] for row in int_rows if any(row)]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    prev = 1
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if m[i][c]:
                pivot = i
                break
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        for i in range(r + 1, nrows):
            xic = m[i][c]
            row_i, row_r = m[i], m[r]
            m[i] = [(pv * row_i[j] - xic * row_r[j]) // prev for j in range(ncols)]
        prev = pv
        r += 1
        rank += 1
        if r == nrows:
            break
    return rank


def rank(matrix: SparseRationalMatrix, primes=DEFAULT_PRIMES) -> int:
    """Exact rank, certified by agreement of modular and Bareiss paths."""
    if matrix.is_zero():
        return 0
    int_rows = matrix.integer_rows()
    modular = [_rank_mod_p(int_rows, p) for p in primes]
    exact = _rank_bareiss(int_rows)
    if any(r != exact for r in modular):
        raise RankVerificationError(f"modular ranks {modular} != exact rank {exact}")
    return exact


def _rref(dense: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [row[:] for row in dense]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if m[i][c]:
                pivot = i
                break
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def kernel_basis(matrix: SparseRationalMatrix) -> list[list[Fraction]]:
    """Basis of the right kernel, as exact coordinate vectors."""
    m, pivots = _rref(matrix.dense())
    free = [c for c in range(matrix.cols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [Fraction(0)] * matrix.cols
        vec[fcol] = Fraction(1)
        for r, pcol in enumerate(pivots):
            vec[pcol] = -m[r][fcol]
        basis.append(vec)
    return basis


def in_image(matrix: SparseRationalMatrix, vec: list[Fraction]) -> bool:
    """Is `vec` in the column span of `matrix`?  Exact."""
    if len(vec) != matrix.rows:
        raise ValueError("vector length must match row count")
    aug = SparseRationalMatrix(matrix.rows, matrix.cols + 1, dict(matrix.entries))
    for i, v in enumerate(vec):
        aug.set(i, matrix.cols, v)
    return rank(aug) == rank(matrix)


@dataclass
class SliceReport:
    """Cohomology bookkeeping of one grading slice."""

    label: str
    dim_basis: int
    rank_in: int
    rank_out: int
    exactness: str = "exact"  # exact | lower-bound | upper-bound

    @property
    def dim_h(self) -> int:
        return self.dim_basis - self.rank_in - self.rank_out

    def as_dict(self) -> dict:
        return {
            "slice": self.label,
            "dim_basis": self.dim_basis,
            "rank_in": self.rank_in,
            "rank_out": self.rank_out,
            "dim_H": self.dim_h,
            "exactness_flag": self.exactness,
        }


@dataclass
class CohomologyReport:
    slices: list[SliceReport] = field(default_factory=list)

    def as_dicts(self) -> list[dict]:
        return [s.as_dict() for s in self.slices]


def assemble(operator, domain_keys, codomain_keys, *, allow_truncation: bool = False
             ) -> SparseRationalMatrix:
    """Matrix of `operator` (key -> {key: coeff}) in the given bases.

    Column j holds the coordinates of operator(domain_keys[j]).  Image
    terms outside the codomain raise IncompleteCodomain unless a
    truncation was declared, in which case they are dropped.
    """
    index = {k: i for i, k in enumerate(codomain_keys)}
    mat = SparseRationalMatrix(len(codomain_keys), len(domain_keys))
    for j, key in enumerate(domain_keys):
        image = operator(key)
        for k, c in image.items():
            i = index.get(k)
            if i is None:
                if allow_truncation:
                    continue
                raise IncompleteCodomain(f"image term {k!r} not in codomain basis")
            mat.set(i, j, c)
    return mat
