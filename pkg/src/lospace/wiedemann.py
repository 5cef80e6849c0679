"""Finite-field linear algebra through Krylov scalar sequences.

Everything here reduces to one primitive: take random x, y, build the
scalars x.y, x.My, ..., and run Berlekamp-Massey on them.  The recurrence
is always a monic factor of the minimal polynomial of M, and equals it
with constant probability once p > n, so the callers below either verify
their answer against its defining congruence and retry (kernel vectors,
solves), or rely on a degree certificate (determinants: a full-degree
recurrence *is* the characteristic polynomial, which makes its constant
term exact, no voting needed).

Space discipline: every routine holds O(1) vectors of n field elements
plus the 2n+1 scalar sequence; polynomial-of-operator products go through
Horner with two live vectors.
"""

from __future__ import annotations

import math
import random

from . import meter
from .kernels import Field
from .linop import BASE, LinearOperator, SparseMatrix

__all__ = [
    "RetriesExhausted",
    "berlekamp_massey",
    "minimal_polynomial",
    "find_kernel",
    "linsolve_zp",
    "determinant_zp",
    "FpSolver",
]


class RetriesExhausted(RuntimeError):
    """A Las Vegas loop ran out of its failure budget."""


def berlekamp_massey(seq, p, f: Field | None = None):
    """Monic minimal linear recurrence of seq over F_p, lowest degree first."""
    f = f or Field(p)
    return f.berlekamp_massey(seq)


def _as_op(a):
    return LinearOperator.wrap(a)


def _one_wiedemann_trial(op, p, f, rng):
    """One (x, y) draw: the recurrence of the Krylov scalars, monic.

    Always a factor of the minimal polynomial of the operator mod p.
    The x, y, tmp vectors die before Berlekamp-Massey runs; only the
    scalar sequence spans both phases.
    """
    n = op.n
    count = 2 * n + 1
    wordbits = 64 if f.backend == "numba" else p.bit_length() + 1
    seq_bits = count * wordbits
    with meter.track("wiedemann.seq", seq_bits):
        with meter.track("wiedemann.vecs", 3 * n * wordbits):
            x = f.rand(n, rng)
            y = f.rand(n, rng)
            seq = op.krylov_scalars(x, y, count, p, f)
            del x, y
        with meter.track("wiedemann.bm", 3 * (count + 1) * wordbits):
            return f.berlekamp_massey(seq)


def minimal_polynomial(a, p, boost=1, rng=None, f=None):
    """Best-of-`boost` Wiedemann trials; keeps the largest-degree recurrence.

    The result is always a monic factor of the minimal polynomial of
    (a mod p); it is the minimal polynomial itself with probability at
    least 1 - 2^-Omega(boost) when p > n.  Degree n ends the trials early
    since no factor can be larger.
    """
    op = _as_op(a)
    rng = rng or random.Random()
    f = f or op.field(p)
    best = [1]
    for _ in range(max(1, boost)):
        g = _one_wiedemann_trial(op, p, f, rng)
        if len(g) > len(best):
            best = g
        if len(best) == op.n + 1:
            break
    return best


def _strip_x_power(g):
    """g = X^c * gbar with gbar(0) != 0; returns (gbar, c)."""
    c = 0
    while c < len(g) - 1 and g[c] == 0:
        c += 1
    return g[c:], c


def find_kernel(a, p, delta=1e-9, rng=None, f=None):
    """A verified nonzero kernel vector of a singular (a mod p).

    Draws z, forms y = gbar(M) z for the X-free part gbar of the minimal
    polynomial, and walks y, My, ... to the last nonzero iterate.  Every
    candidate is checked against M v = 0 before being returned; failures
    (wrong recurrence, unlucky z) just burn budget.
    """
    op = _as_op(a)
    rng = rng or random.Random()
    f = f or op.field(p)
    n = op.n
    inner_budget = max(2, math.ceil(math.log(2 / delta) / math.log(p))) + 1
    outer_budget = max(3, math.ceil(math.log2(1 / delta) / 4))
    for _outer in range(outer_budget):
        g = minimal_polynomial(op, p, boost=2, rng=rng, f=f)
        gbar, c = _strip_x_power(g)
        if c == 0 and len(g) == n + 1:
            # full-degree recurrence with nonzero constant term certifies
            # invertibility; a kernel hunt cannot succeed with this g
            continue
        for _inner in range(inner_budget):
            z = f.rand(n, rng)
            with meter.track("kernel.vecs", 3 * f.vec_bits(z)):
                y = op.horner_apply(gbar, z, p, f)
                if f.is_zero(y):
                    continue
                w = y
                for _t in range(max(c, 1)):
                    wn = op.apply_mod(w, p, f)
                    if f.is_zero(wn):
                        return w
                    w = wn
    raise RetriesExhausted("no kernel vector found; is the matrix singular mod p?")


def linsolve_zp(a, b, p, delta=1e-9, rng=None, f=None):
    """Solve A x = b (mod p) for invertible (a mod p); verified before return.

    Reduces to a kernel vector of the augmented [[A, -b], [0, 0]] operator;
    the last coordinate of any nonzero kernel vector is nonzero, and
    dividing by it recovers x.
    """
    op = _as_op(a)
    if op.n != op.m:
        raise ValueError("linsolve_zp needs a square operator")
    rng = rng or random.Random()
    f = f or op.field(p)
    n = op.n
    bmod = [int(x) % p for x in b]
    aug = LinearOperator.augment(op.base if op.kind == BASE else op, bmod)
    try:
        for _ in range(6):
            try:
                ker = find_kernel(aug, p, delta / 2, rng, f)
            except RetriesExhausted:
                continue
            v = int(ker[n])
            if v == 0:
                continue
            vinv = f.inv(v)
            x = f.scale(vinv, ker[:n])
            lhs = op.apply_mod(x, p, f)
            if f.tolist(lhs) == bmod:
                return x
    finally:
        aug.drop_cache()
    raise RetriesExhausted("linsolve_zp kept failing verification")


def determinant_zp(a, p, delta=1e-9, rng=None, f=None):
    """det(a) mod p via the random-diagonal preconditioner.

    A degree-n recurrence for diag(d) A certifies the answer outright
    (it must be the characteristic polynomial, so det = (-1)^n f(0)/prod d).
    A verified kernel vector certifies 0.  Only when neither certificate
    appears within the budget does the routine fall back to reporting 0,
    which is the single probabilistic branch and has probability <= delta
    for an invertible input.
    """
    op = _as_op(a)
    if op.n != op.m:
        raise ValueError("determinant_zp needs a square operator")
    rng = rng or random.Random()
    f = f or op.field(p)
    n = op.n
    runs = max(1, math.ceil(40 * math.log(1 / delta)))
    sign = -1 if n % 2 else 1
    for run in range(runs):
        d = [rng.randrange(1, p) for _ in range(n)]
        with meter.track("det.diag", n * (p.bit_length() + 1)):
            da = LinearOperator.diag_scale(d, op.base if op.kind == "BASE" else op)
            try:
                g = _one_wiedemann_trial(da, p, f, rng)
            finally:
                da.drop_cache()
            if len(g) == n + 1:
                prod = 1
                for di in d:
                    prod = prod * di % p
                return sign * g[0] * f.inv(prod) % p
        if run == 2:
            # three failed degree certificates: likely singular; try to
            # certify that with an explicit kernel vector
            try:
                find_kernel(op, p, delta=0.05, rng=rng, f=f)
                return 0
            except RetriesExhausted:
                pass
    return 0


class FpSolver:
    """Repeated solves against one invertible matrix mod p.

    Computes the minimal polynomial once; each solve is then a Horner
    application:  x = -g(0)^-1 (g_1 I + g_2 A + ... + g_d A^(d-1)) b,
    exact whenever the cached recurrence is the true minimal polynomial
    and verified against A x = b either way.  On a verification failure
    the recurrence is rebuilt with fresh randomness.
    """

    def __init__(self, a, p, rng, delta=1e-9, f=None):
        self.op = _as_op(a)
        self.p = p
        self.rng = rng
        self.f = f or self.op.field(p)
        self.delta = delta
        self._gbar = None
        self._budget = max(6, math.ceil(math.log2(1 / delta)))
        self._poly_tok = None

    def _refresh_poly(self, boost):
        g = minimal_polynomial(self.op, self.p, boost=boost, rng=self.rng, f=self.f)
        if g[0] % self.p == 0:
            # X divides every candidate factor only if A is singular mod p;
            # for an invertible matrix this is a failed trial
            self._gbar = None
            return
        m = meter.current()
        if self._poly_tok is not None:
            m.free(self._poly_tok)
        self._poly_tok = m.alloc("fpsolver.poly", len(g) * (self.p.bit_length() + 1))
        self._meter = m
        self._gbar = g

    def solve(self, b):
        """x with A x = b (mod p), verified; raises RetriesExhausted."""
        f, p, op = self.f, self.p, self.op
        bvec = f.vec(b) if isinstance(b, list) else b
        bmod = f.tolist(bvec)
        for attempt in range(self._budget):
            if self._gbar is None:
                self._refresh_poly(boost=1 + attempt)
                if self._gbar is None:
                    continue
            g = self._gbar
            c0inv = f.inv((-g[0]) % p)
            with meter.track("fpsolver.vecs", 3 * f.vec_bits(bvec)):
                acc = op.horner_apply(g[1:], bvec, p, f)
                x = f.scale(c0inv, acc)
                if f.tolist(op.apply_mod(x, p, f)) == bmod:
                    return x
            self._gbar = None
        raise RetriesExhausted("FpSolver verification kept failing")

    def close(self):
        if self._poly_tok is not None:
            self._meter.free(self._poly_tok)
            self._poly_tok = None
