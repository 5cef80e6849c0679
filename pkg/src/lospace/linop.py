"""Sparse integer matrices and composed black-box linear operators.

A SparseMatrix is coordinate-form with entries sorted by (row, col); this
row-major order is what lets the Gram operator evaluate (A^T A) v in one
pass with only the output-sized accumulator live.  Operators wrap a base
matrix with a composition descriptor:

    BASE         A
    DIAG_SCALE   diag(d) . A                     (Wiedemann preconditioner)
    SHIFT        A + diag(d)  (scalar or vector) (shifted/perturbed solves)
    AUGMENT      [[A, -b], [0, 0]]               (solve -> kernel reduction)
    GRAM         A^T A                           (never materializes A x)
    GRAM_T       A A^T + c I                     (may hold one n-vector)

``apply_mod`` computes over F_p on the chosen kernel backend; per-prime
reduced copies are cached one prime at a time and charged to the meter.
GRAM/GRAM_T stay on the pure backend so no O(nnz) reduced copy is ever
materialized; their working space stays proportional to the output
dimension.  ``apply_int`` is exact integer arithmetic; callers keep query
entries within the documented n^6 U^2 bound.

Text formats (1-indexed, decimal):

    matrix: "n m nnz" then nnz lines "i j v"
    vector: "n" then n lines of (arbitrarily large) integers
"""

from __future__ import annotations

from dataclasses import dataclass

from . import meter
from .kernels import Field, backend_for

BASE = "BASE"
DIAG_SCALE = "DIAG_SCALE"
SHIFT = "SHIFT"
AUGMENT = "AUGMENT"
GRAM = "GRAM"
GRAM_T = "GRAM_T"


class DimensionMismatch(ValueError):
    pass


class MatrixFormatError(ValueError):
    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class SparseMatrix:
    """Integer matrix in sorted coordinate form."""

    n: int
    m: int
    rows: list
    cols: list
    vals: list

    @property
    def nnz(self):
        return len(self.vals)

    @property
    def entry_bound(self):
        """U: max |entry|, at least 1."""
        return max((abs(v) for v in self.vals), default=1) or 1

    @staticmethod
    def from_entries(n, m, entries):
        seen = set()
        for i, j, _ in entries:
            if not (0 <= i < n and 0 <= j < m):
                raise DimensionMismatch(f"entry ({i},{j}) outside {n}x{m}")
            if (i, j) in seen:
                raise ValueError(f"duplicate entry at ({i},{j})")
            seen.add((i, j))
        entries = sorted(entries)
        return SparseMatrix(n, m,
                            [e[0] for e in entries],
                            [e[1] for e in entries],
                            [e[2] for e in entries])

    @staticmethod
    def from_dense(rows_of_values):
        n = len(rows_of_values)
        m = len(rows_of_values[0]) if n else 0
        entries = [(i, j, v)
                   for i, row in enumerate(rows_of_values)
                   for j, v in enumerate(row) if v]
        return SparseMatrix.from_entries(n, m, entries)

    @staticmethod
    def identity(n):
        return SparseMatrix(n, n, list(range(n)), list(range(n)), [1] * n)

    def to_dense(self):
        out = [[0] * self.m for _ in range(self.n)]
        for i, j, v in zip(self.rows, self.cols, self.vals):
            out[i][j] = v
        return out

    def scaled(self, factor):
        return SparseMatrix(self.n, self.m, list(self.rows), list(self.cols),
                            [v * factor for v in self.vals])

    def is_symmetric(self):
        if self.n != self.m:
            return False
        d = {(i, j): v for i, j, v in zip(self.rows, self.cols, self.vals)}
        return all(d.get((j, i), 0) == v for (i, j), v in d.items())

    def apply_int(self, v):
        if len(v) != self.m:
            raise DimensionMismatch(f"vector length {len(v)} != {self.m}")
        out = [0] * self.n
        for i, j, a in zip(self.rows, self.cols, self.vals):
            out[i] += a * v[j]
        return out

    def apply_transpose_int(self, v):
        if len(v) != self.n:
            raise DimensionMismatch(f"vector length {len(v)} != {self.n}")
        out = [0] * self.m
        for i, j, a in zip(self.rows, self.cols, self.vals):
            out[j] += a * v[i]
        return out


class LinearOperator:
    """Black-box operator; see module docstring for the composition kinds.

    The base of DIAG_SCALE / SHIFT / AUGMENT may itself be a LinearOperator
    (e.g. preconditioning a Gram product); those compositions run through
    the generic apply path instead of the fused kernels.
    """

    def __init__(self, kind, base, n, m, diag=None, bvec=None,
                 shift_c=0):
        self.kind = kind
        self.base = base
        self.base_is_matrix = isinstance(base, SparseMatrix)
        self.n = n
        self.m = m
        self.diag = diag          # DIAG_SCALE / SHIFT vector (by reference)
        self.bvec = bvec          # AUGMENT right-hand side (by reference)
        self.shift_c = shift_c    # GRAM_T ridge term
        self._cache_p = None
        self._cache = None
        self._cache_tok = None
        self._cache_meter = None

    # -- constructors ---------------------------------------------------

    @staticmethod
    def from_sparse(a: SparseMatrix):
        return LinearOperator(BASE, a, a.n, a.m)

    @staticmethod
    def wrap(a):
        return a if isinstance(a, LinearOperator) else LinearOperator.from_sparse(a)

    @staticmethod
    def diag_scale(d, a):
        if len(d) != a.n:
            raise DimensionMismatch("diagonal length != rows")
        return LinearOperator(DIAG_SCALE, a, a.n, a.m, diag=list(d))

    @staticmethod
    def shift(a, c):
        """A + diag(c); c is a scalar or a per-coordinate vector."""
        if a.n != a.m:
            raise DimensionMismatch("shift needs a square base")
        d = list(c) if isinstance(c, (list, tuple)) else [c] * a.n
        if len(d) != a.n:
            raise DimensionMismatch("diagonal length != rows")
        return LinearOperator(SHIFT, a, a.n, a.m, diag=d)

    @staticmethod
    def augment(a, b):
        """(n+1)-dim operator acting as [[A, -b], [0, 0]]; b by reference."""
        if a.n != a.m:
            raise DimensionMismatch("augment needs a square base")
        if len(b) != a.n:
            raise DimensionMismatch("b length != n")
        return LinearOperator(AUGMENT, a, a.n + 1, a.m + 1, bvec=b)

    @staticmethod
    def gram(a: SparseMatrix):
        return LinearOperator(GRAM, a, a.m, a.m)

    @staticmethod
    def gram_t(a: SparseMatrix, c=0):
        return LinearOperator(GRAM_T, a, a.n, a.n, shift_c=c)

    # -- entry bound of the represented matrix ---------------------------

    @property
    def entry_bound(self):
        u = self.base.entry_bound
        if self.kind == BASE:
            return u
        if self.kind == DIAG_SCALE:
            return u * max(max(abs(x) for x in self.diag), 1)
        if self.kind == SHIFT:
            return u + max(abs(x) for x in self.diag)
        if self.kind == AUGMENT:
            return max(u, max((abs(x) for x in self.bvec), default=1))
        if self.kind == GRAM:
            return self.base.n * u * u
        if self.kind == GRAM_T:
            return self.base.m * u * u + abs(self.shift_c)
        raise AssertionError(self.kind)

    @property
    def forced_backend(self):
        # Gram products stay pure: reducing A mod p on the fly per entry
        # avoids an O(nnz) reduced copy and keeps working space O(dim out).
        if self.kind in (GRAM, GRAM_T):
            return "pure"
        if not self.base_is_matrix:
            return self.base.forced_backend
        return None

    def field(self, p) -> Field:
        return Field(p, self.forced_backend or backend_for(p))

    # -- mod-p application ------------------------------------------------

    def _mod_data(self, f: Field):
        if self._cache_p == (f.p, f.backend):
            return self._cache
        self.drop_cache()
        data = {}
        bits = 0
        if self.base_is_matrix:
            a = self.base
            coo = f.coo(a.rows, a.cols, a.vals, (a.n, a.m))
            data["coo"] = coo
            bits += f.coo_bits(coo)
        if self.kind in (DIAG_SCALE, SHIFT):
            data["diag"] = f.vec(self.diag)
            bits += f.vec_bits(data["diag"])
        if self.kind == AUGMENT:
            data["bvec"] = f.vec(self.bvec)
            bits += f.vec_bits(data["bvec"])
        self._cache_meter = meter.current()
        self._cache_tok = self._cache_meter.alloc("linop.mod_cache", bits)
        self._cache_p = (f.p, f.backend)
        self._cache = data
        return data

    def drop_cache(self):
        if self._cache_tok is not None:
            self._cache_meter.free(self._cache_tok)
        self._cache_tok = None
        self._cache_meter = None
        self._cache_p = None
        self._cache = None
        if not self.base_is_matrix and isinstance(self.base, LinearOperator):
            self.base.drop_cache()

    def apply_mod(self, v, p, f: Field | None = None):
        """Exact product mod p; v and result are backend vectors."""
        f = f or self.field(p)
        if len(v) != self.m:
            raise DimensionMismatch(f"vector length {len(v)} != {self.m}")
        if self.kind == GRAM:
            # walk the original entries, reducing on the fly: no O(nnz) copy
            a = self.base
            out = [0] * a.m
            nnz = a.nnz
            k = 0
            while k < nnz:
                row = a.rows[k]
                k2 = k
                inner = 0
                while k2 < nnz and a.rows[k2] == row:
                    inner = (inner + a.vals[k2] * v[a.cols[k2]]) % p
                    k2 += 1
                for t in range(k, k2):
                    out[a.cols[t]] = (out[a.cols[t]] + a.vals[t] * inner) % p
                k = k2
            return out
        if self.kind == GRAM_T:
            a = self.base
            w = [0] * a.m
            for i, j, x in zip(a.rows, a.cols, a.vals):
                w[j] = (w[j] + x * v[i]) % p
            out = [0] * a.n
            for i, j, x in zip(a.rows, a.cols, a.vals):
                out[i] = (out[i] + x * w[j]) % p
            c = self.shift_c % p
            return [(o + c * x) % p for o, x in zip(out, v)]
        d = self._mod_data(f)

        def base_apply(w):
            if self.base_is_matrix:
                return f.matvec(d["coo"], w)
            return self.base.apply_mod(w, p, f)

        if self.kind == BASE:
            return f.matvec(d["coo"], v)
        if self.kind == DIAG_SCALE:
            return f.mul_elem(d["diag"], base_apply(v))
        if self.kind == SHIFT:
            w = base_apply(v)
            dd = d["diag"]
            out = f.zeros(self.n)
            for i in range(self.n):
                out[i] = (int(w[i]) + int(dd[i]) * int(v[i])) % p
            return out
        if self.kind == AUGMENT:
            top = base_apply(v[: self.m - 1])
            c = (-int(v[self.m - 1])) % p
            top = f.add_scaled(top, c, d["bvec"])
            out = f.zeros(self.n)
            for i in range(self.n - 1):
                out[i] = top[i]
            return out
        raise AssertionError(self.kind)

    def krylov_scalars(self, x, y, count, p, f: Field):
        """[x.y, x.My, ..., x.M^(count-1)y] using the fused kernel if possible."""
        if self.kind == BASE:
            return f.krylov(self._mod_data(f)["coo"], None, x, y, count)
        if self.kind == DIAG_SCALE and self.base_is_matrix:
            d = self._mod_data(f)
            return f.krylov(d["coo"], d["diag"], x, y, count)
        seq = []
        yy = f.copy(y)
        with meter.track("krylov.vec", 2 * f.vec_bits(yy)):
            for i in range(count):
                seq.append(f.dot(x, yy))
                if i + 1 < count:
                    yy = self.apply_mod(yy, p, f)
        return seq

    def horner_apply(self, coeffs, z, p, f: Field):
        """sum coeffs[i] M^i z with two live vectors."""
        if self.kind == BASE:
            return f.horner(self._mod_data(f)["coo"], coeffs, z)
        acc = f.scale(coeffs[-1], z)
        with meter.track("horner.vec", 2 * f.vec_bits(z)):
            for i in range(len(coeffs) - 2, -1, -1):
                acc = self.apply_mod(acc, p, f)
                acc = f.add_scaled(acc, coeffs[i], z)
        return acc

    # -- exact integer application ----------------------------------------

    def apply_int(self, v):
        if len(v) != self.m:
            raise DimensionMismatch(f"vector length {len(v)} != {self.m}")
        a = self.base
        if self.kind == BASE:
            return a.apply_int(v)
        if self.kind == DIAG_SCALE:
            return [d * w for d, w in zip(self.diag, a.apply_int(v))]
        if self.kind == SHIFT:
            w = a.apply_int(v)
            return [wi + d * vi for wi, d, vi in zip(w, self.diag, v)]
        if self.kind == AUGMENT:
            top = a.apply_int(v[:-1])
            vl = v[-1]
            return [t - vl * b for t, b in zip(top, self.bvec)] + [0]
        if self.kind == GRAM:
            out = [0] * a.m
            nnz = a.nnz
            k = 0
            while k < nnz:
                row = a.rows[k]
                k2 = k
                inner = 0
                while k2 < nnz and a.rows[k2] == row:
                    inner += a.vals[k2] * v[a.cols[k2]]
                    k2 += 1
                for t in range(k, k2):
                    out[a.cols[t]] += a.vals[t] * inner
                k = k2
            return out
        if self.kind == GRAM_T:
            w = a.apply_transpose_int(v)
            out = a.apply_int(w)
            return [o + self.shift_c * x for o, x in zip(out, v)]
        raise AssertionError(self.kind)


# -- text formats ---------------------------------------------------------------

def write_matrix(a: SparseMatrix, fp) -> None:
    fp.write(f"{a.n} {a.m} {a.nnz}\n")
    for i, j, v in zip(a.rows, a.cols, a.vals):
        fp.write(f"{i + 1} {j + 1} {v}\n")


def read_matrix(fp) -> SparseMatrix:
    lines = fp.read().split("\n")
    header = lines[0].split() if lines else []
    if len(header) != 3:
        raise MatrixFormatError(1, "expected header 'n m nnz'")
    try:
        n, m, nnz = (int(x) for x in header)
    except ValueError:
        raise MatrixFormatError(1, f"bad header {lines[0]!r}") from None
    if n < 0 or m < 0 or nnz < 0:
        raise MatrixFormatError(1, "negative dimension")
    entries = []
    for k in range(nnz):
        lineno = k + 2
        if lineno - 1 >= len(lines) or not lines[lineno - 1].strip():
            raise MatrixFormatError(lineno, "missing entry line")
        parts = lines[lineno - 1].split()
        if len(parts) != 3:
            raise MatrixFormatError(lineno, "expected 'i j v'")
        try:
            i, j, v = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise MatrixFormatError(lineno, f"bad integers {lines[lineno - 1]!r}") from None
        if not (1 <= i <= n and 1 <= j <= m):
            raise MatrixFormatError(lineno, f"index ({i},{j}) outside {n}x{m}")
        entries.append((i - 1, j - 1, v))
    try:
        return SparseMatrix.from_entries(n, m, entries)
    except ValueError as e:
        raise MatrixFormatError(1, str(e)) from None


def write_vector(v, fp) -> None:
    fp.write(f"{len(v)}\n")
    for x in v:
        fp.write(f"{x}\n")


def read_vector(fp) -> list:
    lines = fp.read().split("\n")
    if not lines or not lines[0].strip():
        raise MatrixFormatError(1, "expected vector length")
    try:
        n = int(lines[0])
    except ValueError:
        raise MatrixFormatError(1, f"bad length {lines[0]!r}") from None
    out = []
    for k in range(n):
        lineno = k + 2
        if lineno - 1 >= len(lines) or not lines[lineno - 1].strip():
            raise MatrixFormatError(lineno, "missing vector entry")
        try:
            out.append(int(lines[lineno - 1]))
        except ValueError:
            raise MatrixFormatError(lineno, f"bad integer {lines[lineno - 1]!r}") from None
    return out
