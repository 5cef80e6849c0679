"""Eigenvalues, eigenvectors and SVD on top of the rational solver.

Everything is kept on dyadic grids so that interval halving, shifts and
scaling are exact: a symmetric integer matrix A is perturbed to
B = A + D with D a nonnegative diagonal of fixed points, B is held as the
integer matrix 2^s B, and every quantity fed back into the solver is an
integer again.  The pipeline:

  perturb_spectrum   random diagonal <= eps/2 separating the eigenvalues
  inverse power      lambda ~= max(delta, |lambda_min|) via repeated
                     entry-wise-approximate solves (detects singularity,
                     bails out early when the iterates blow up, stops on a
                     plateau, capped at the worst-case iteration count)
  shift_invert       is there an eigenvalue near the interval midpoint?
  spectrum           divide and conquer over [-2U, 2U] down to leaf width
                     a fraction of the separation, then a merge filter
  eigendecompose     spectrum of B, then one gap-mode inverse power per
                     shifted matrix, streaming out one eigenpair at a time
  svd                eigendecomposition of 2^2t (A A^T + eps0 I); right
                     vectors come from the live left vector only

The base matrix may also be a black-box symmetric operator (the SVD path
wraps its Gram product this way); scaling and shifting then compose
operators instead of materializing anything.

Probabilistic failures surface as ResultCountMismatch after one retry
with a fresh perturbation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from . import meter
from .numeric import (
    FixedL,
    FloatL,
    GREATER,
    LESS,
    fixed_from_fraction,
    fl_add_same_sign,
    fl_cmp,
    fl_cmp_fraction,
    fl_div,
    fl_from_bigratio,
    fl_mul,
    fl_neg,
    fl_recip,
    fl_scale_pow2,
    fl_sqrt,
    fl_zero,
)
from .linop import LinearOperator, SparseMatrix
from .solver import RationalSolver, derive_rng

YES, NO = "YES", "NO"


class ResultCountMismatch(RuntimeError):
    """The merge filter did not deliver exactly n eigenvalues."""


def _ceil_log2(q: Fraction) -> int:
    k = 0
    v = Fraction(1)
    while v < q:
        v *= 2
        k += 1
    return k


@dataclass
class PerturbedMatrix:
    """B = base + diag(diag_scaled / 2**scale_pow), diagonal in [0, eps/2]."""

    base: object              # SparseMatrix or a symmetric LinearOperator
    diag_scaled: list
    scale_pow: int

    @property
    def n(self):
        return self.base.n

    def scaled(self, s: int):
        """2^s B; a plain integer matrix when the base is one."""
        shift = s - self.scale_pow
        if isinstance(self.base, SparseMatrix):
            d = {(i, i): v << shift for i, v in enumerate(self.diag_scaled) if v}
            for i, j, v in zip(self.base.rows, self.base.cols, self.base.vals):
                d[(i, j)] = d.get((i, j), 0) + (v << s)
            return SparseMatrix.from_entries(
                self.n, self.n, [(i, j, v) for (i, j), v in d.items() if v])
        inner = getattr(self.base, "op", self.base)
        scaled = LinearOperator.diag_scale([1 << s] * self.n, inner)
        return LinearOperator.shift(scaled, [v << shift for v in self.diag_scaled])


def perturb_spectrum(a, eps: float, rng: random.Random) -> PerturbedMatrix:
    """Random diagonal perturbation separating eigenvalues by ~eps^2/(n^4 U).

    Entries are uniform fixed points in [0, eps/2] on a grid fine enough
    that the rounding sits far below the separation target.
    """
    n, u = a.n, a.entry_bound
    gamma = Fraction(eps) ** 2 / (n ** 4 * u)
    s = max(8, _ceil_log2(Fraction(2) / gamma))
    hi = int(Fraction(eps) / 2 * (1 << s))
    diag = [rng.randrange(hi + 1) for _ in range(n)]
    return PerturbedMatrix(a, diag, s)


# -- inverse power -------------------------------------------------------------


def _norm_sq(vec_fl):
    acc = None
    for x in vec_fl:
        sq = fl_mul(x, x)
        acc = sq if acc is None else fl_add_same_sign(acc, sq)
    return acc


def _regrid(u_fl, bits):
    """Integer vector proportional to u with max magnitude ~2^bits."""
    mx = None
    for x in u_fl:
        ax = x if x.mantissa >= 0 else fl_neg(x)
        if mx is None or fl_cmp(ax, mx) == GREATER:
            mx = ax
    if mx is None or mx.is_zero():
        return None
    out = []
    for x in u_fl:
        num = x.mantissa * (1 << bits)
        den = mx.mantissa
        e = x.exponent - mx.exponent
        if e >= 0:
            num <<= e
        else:
            den <<= -e
        q, r = divmod(num, den)
        if 2 * r >= den:
            q += 1
        out.append(q)
    return out


def _unitize(u_fl):
    inv = fl_recip(fl_sqrt(_norm_sq(u_fl)))
    return [fl_mul(x, inv) for x in u_fl]


def _plateaued(history, eps, hint):
    window = 5
    need = window
    if hint is not None and history and not history[-1].is_zero():
        cur = abs(history[-1].to_fraction())
        if hint / 2 <= cur <= 2 * hint:
            need = 2 * window  # near the decision boundary: be patient
    if len(history) < max(6, need):
        return False
    lo = hi = history[-need]
    for x in history[-need:]:
        if fl_cmp(x, lo) == LESS:
            lo = x
        if fl_cmp(x, hi) == GREATER:
            hi = x
    if lo.is_zero():
        return hi.is_zero()
    return float(fl_div(hi, lo).to_fraction()) - 1.0 <= eps / 16


@dataclass
class PowerResult:
    lam: FloatL            # ~= max(delta, |lambda_min|)
    vector: list | None    # final normalized iterate (FloatL) if requested
    early_exit: bool
    iterations: int


def _inverse_power(op_int, scale_pow, eps, delta: Fraction, rng,
                   t_cap, solver_eps, want_vector=False,
                   hint: Fraction | None = None):
    """Inverse power on (op_int / 2^scale_pow); delta in unscaled units."""
    n = op_int.n
    solver = RationalSolver(op_int, solver_eps, derive_rng(rng, "solver"))
    try:
        if solver.det == 0:
            return PowerResult(fl_zero(64), None, False, 0)
        grid_bits = max(48, math.ceil(math.log2(1 / solver_eps)) + 8)
        v_int = None
        while v_int is None:
            v_int = [round(rng.gauss(0.0, 1.0) * (1 << grid_bits))
                     for _ in range(n)]
            if not any(v_int):
                v_int = None
        L = solver.L
        history = []
        lam = None
        v_fl = None
        thresh_sq = Fraction(2) / (delta * delta) if delta > 0 else None
        with meter.track("invpower.iterates", 3 * n * (grid_bits + 64)):
            for _it in range(1, t_cap + 1):
                out = solver.solve(v_int)
                # v_int sits on the 2^-grid_bits grid: bring u back to the
                # units of v before comparing norms
                u_fl = [fl_scale_pow2(x, scale_pow - grid_bits) for x in out.x]
                vnorm_sq = fl_from_bigratio(
                    sum(x * x for x in v_int), 1 << (2 * grid_bits), L)
                unorm_sq = _norm_sq(u_fl)
                if unorm_sq.is_zero():
                    return PowerResult(fl_zero(L), None, False, _it)
                ratio_sq = fl_div(unorm_sq, vnorm_sq)
                if thresh_sq is not None and \
                        fl_cmp_fraction(ratio_sq, thresh_sq) != LESS:
                    lam = fl_from_bigratio(delta.numerator, delta.denominator, L)
                    return PowerResult(lam, _unitize(u_fl), True, _it)
                lam = fl_recip(fl_sqrt(ratio_sq))
                if want_vector:
                    v_fl = u_fl
                history.append(lam)
                if _plateaued(history, eps, hint):
                    break
                nxt = _regrid(u_fl, grid_bits)
                if nxt is None:
                    break
                v_int = nxt
        vec = _unitize(v_fl) if want_vector and v_fl is not None else None
        return PowerResult(lam, vec, False, len(history))
    finally:
        solver.close()
        solver.op.drop_cache()


def _t_cap(n, eps):
    eps_s = eps / 4
    return min(800, math.ceil(28 * math.log(4 * n / eps_s) / eps))


def inv_power(a, eps: float, delta, rng=None, scale_pow: int = 0,
              solver_eps: float | None = None) -> FloatL:
    """lambda ~=_eps max(delta, min_i |lambda_i|) for symmetric integer a.

    Returns exact 0 when a is singular (the solver reports SINGULAR).
    """
    op = LinearOperator.wrap(a)
    rng = rng if isinstance(rng, random.Random) else random.Random(rng or 0)
    res = _inverse_power(op, scale_pow, eps, Fraction(delta), rng,
                         _t_cap(op.n, eps), solver_eps or 2.0 ** -40)
    return res.lam


def inv_power_gap(a, eps: float, delta, rng=None, scale_pow: int = 0,
                  solver_eps: float | None = None):
    """(lambda, v): least-magnitude eigenvalue plus its eigenvector.

    The caller guarantees the 1.1x spectral gap; convergence is then
    geometric and the iteration count only logarithmic in the accuracy.
    """
    op = LinearOperator.wrap(a)
    rng = rng if isinstance(rng, random.Random) else random.Random(rng or 0)
    cap = min(600, math.ceil(12 * math.log(4 * op.n / min(0.5, eps))) + 24)
    res = _inverse_power(op, scale_pow, max(eps, 1e-9), Fraction(delta), rng,
                         cap, solver_eps or min(2.0 ** -40, eps / 256),
                         want_vector=True)
    return res.lam, res.vector


# -- divide and conquer over the spectrum ---------------------------------------


def shift_invert(b_scaled, scale_pow: int, lo: Fraction, hi: Fraction,
                 rng) -> str:
    """NO certifies (b/2^s) has no eigenvalue in [lo, hi]; YES places one
    within the interval widened by a quarter width on each side."""
    mid = (lo + hi) / 2
    radius = (hi - lo) / 2
    m_scaled = mid * (1 << scale_pow)
    assert m_scaled.denominator == 1, "midpoint off the dyadic grid"
    shifted = LinearOperator.shift(b_scaled, -int(m_scaled))
    delta_scaled = radius * (1 << scale_pow)
    try:
        res = _inverse_power(shifted, 0, 0.1, delta_scaled, rng,
                             _t_cap(b_scaled.n, 0.1), 2.0 ** -40,
                             hint=Fraction(12, 10) * delta_scaled)
    finally:
        shifted.drop_cache()
    if fl_cmp_fraction(res.lam, Fraction(12, 10) * delta_scaled) == LESS:
        return YES
    return NO


def _extract_eigs(b: PerturbedMatrix, u: int, leaf_width: Fraction,
                  merge_gap: Fraction, rng, stats=None):
    """Ascending filtered leaf endpoints of the YES-intervals of B.

    Root interval [-2nU, 2nU] (Gershgorin keeps every eigenvalue inside
    nU + eps/2), widths halve, so depth-d endpoints live on the 4nU/2^d
    grid; scale_pow is chosen to keep every midpoint integral.
    """
    reach = b.n * u
    depth_needed = 0
    width = Fraction(4 * reach)
    while width >= leaf_width:
        width /= 2
        depth_needed += 1
    scale_pow = max(b.scale_pow, depth_needed + 4)
    b_scaled = b.scaled(scale_pow)
    if isinstance(b_scaled, SparseMatrix):
        bits = sum(v.bit_length() + 1 for v in b_scaled.vals)
    else:
        bits = b.n * (scale_pow + 8)
    found = []
    with meter.track("spectrum.bmatrix", bits):

        def node(lo_f, hi_f, depth, label):
            nrng = derive_rng(rng, "node", label)
            ans = shift_invert(b_scaled, scale_pow, lo_f, hi_f, nrng)
            if ans == NO:
                return
            if hi_f - lo_f < leaf_width:
                found.append(lo_f)
                return
            if stats is not None:
                stats[depth] = stats.get(depth, 0) + 1
            mid = (lo_f + hi_f) / 2
            node(lo_f, mid, depth + 1, label * 2 + 1)
            node(mid, hi_f, depth + 1, label * 2 + 2)

        node(Fraction(-2 * reach), Fraction(2 * reach), 0, 0)
    found.sort()
    kept = []
    for lam in found:
        if kept and lam - kept[-1] < merge_gap:
            continue
        kept.append(lam)
    return kept, scale_pow, b_scaled


def spectrum(a: SparseMatrix, eps: float, rng=None, c: int = 2, stats=None):
    """All eigenvalues of symmetric a to within +-eps, ascending FixedL list."""
    if not a.is_symmetric():
        raise ValueError("spectrum needs a symmetric matrix")
    rng = rng if isinstance(rng, random.Random) else random.Random(rng or 0)
    n, u = a.n, a.entry_bound
    sep = Fraction(eps) ** 2 / (4 * n ** 4 * u)  # separation after eps/2 perturb
    vals = []
    for attempt in range(2):
        b = perturb_spectrum(a, eps / 2, derive_rng(rng, "perturb", attempt))
        vals, scale_pow, _ = _extract_eigs(
            b, u, sep / 8, sep / 2, derive_rng(rng, "tree", attempt),
            stats=stats)
        if len(vals) == n:
            return [fixed_from_fraction(v, scale_pow) for v in vals]
    raise ResultCountMismatch(f"expected {n} eigenvalues, got {len(vals)}")


def _perturb_and_extract(a, eps: float, rng, vec_eps: float):
    """Shared front end of eigendecompose/svd: B, its eigenvalue estimates
    (accuracy a fraction of the separation), and the eigenvector budget."""
    n, u = a.n, a.entry_bound
    sep = Fraction(eps) ** 2 / (4 * n ** 4 * u)
    last = "no attempt"
    for attempt in range(2):
        b = perturb_spectrum(a, eps / 2, derive_rng(rng, "perturb", attempt))
        vals, scale_pow, b_scaled = _extract_eigs(
            b, u, sep / 16, sep / 2, derive_rng(rng, "tree", attempt))
        if len(vals) == n:
            return b_scaled, vals, scale_pow, sep
        last = f"expected {n} eigenvalues, got {len(vals)}"
    raise ResultCountMismatch(last)


def _dyadic_at_least(q: Fraction, scale_pow: int) -> Fraction:
    num = q * (1 << scale_pow)
    k = -((-num.numerator) // num.denominator)  # ceil
    return Fraction(k, 1 << scale_pow)


def _one_eigenvector(b_scaled, scale_pow, lam: Fraction, g5: Fraction,
                     delta: Fraction, vec_eps: float, rng):
    """Gap-mode inverse power against B - (lam + g5) I."""
    shift_val = (lam + g5) * (1 << scale_pow)
    assert shift_val.denominator == 1
    shifted = LinearOperator.shift(b_scaled, -int(shift_val))
    try:
        _, v_fl = inv_power_gap(shifted, vec_eps, delta * (1 << scale_pow), rng)
    finally:
        shifted.drop_cache()
    return v_fl


def eigendecompose(a: SparseMatrix, eps: float, rng=None, c: int = 2,
                   vec_eps: float | None = None):
    """Yields n (lambda_i, v_i) pairs, eigenvalues ascending, one vector
    live at a time; |lambda_i(a) - lambda_i| <= eps, |v_i|^2 in [1 +- eps],
    |A v_i - lambda_i v_i| <= eps, pairwise inner products <= eps."""
    if isinstance(a, SparseMatrix) and not a.is_symmetric():
        raise ValueError("eigendecompose needs a symmetric matrix")
    rng = rng if isinstance(rng, random.Random) else random.Random(rng or 0)
    n, u = a.n, a.entry_bound
    vec_eps = vec_eps if vec_eps is not None else (eps / (60 * n * u)) ** 2
    b_scaled, vals, scale_pow, sep = _perturb_and_extract(a, eps, rng, vec_eps)
    g5 = _dyadic_at_least(sep / 5, scale_pow)
    out_bits = max(32, math.ceil(math.log2(4 / vec_eps)) + 6)
    for i, lam in enumerate(vals):
        v_fl = _one_eigenvector(b_scaled, scale_pow, lam, g5, sep / 10,
                                vec_eps, derive_rng(rng, "vec", i))
        if v_fl is None:
            raise ResultCountMismatch(f"no eigenvector for eigenvalue {i}")
        vec = [fixed_from_fraction(x.to_fraction(), out_bits) for x in v_fl]
        yield fixed_from_fraction(lam, scale_pow), vec


class _SymmetricOperatorView:
    """The sliver of the matrix surface the eigen pipeline needs, for a
    black-box symmetric operator (the SVD's ridged Gram product)."""

    def __init__(self, op: LinearOperator, bound: int):
        self.op = op
        self.n = op.n
        self.m = op.m
        self._bound = bound

    @property
    def entry_bound(self):
        return self._bound

    @property
    def rows(self):  # pragma: no cover - PerturbedMatrix never asks
        raise TypeError("black-box operator has no entry list")


def svd(a: SparseMatrix, eps: float, rng=None):
    """Yields (u_i, sigma_i, v_i) with sigma descending for i < m, then the
    remaining null-direction columns of U as (u_i, None, None).

    sigma_i are FloatL; u_i, v_i are FixedL lists.  v_i = sigma^-1 A^T u_i
    is computed from the live u_i only.
    """
    n, m = a.n, a.m
    if n < m:
        raise ValueError("svd wants n >= m")
    rng = rng if isinstance(rng, random.Random) else random.Random(rng or 0)
    u_bound = a.entry_bound
    eps0 = Fraction(eps) / (60 * n * n * max(1, u_bound))
    t = _ceil_log2(Fraction(4) / eps0) // 2 + 2
    a_scaled = a.scaled(1 << t)
    ridge = int(eps0 * (1 << (2 * t))) + 1
    gram = LinearOperator.gram_t(a_scaled, ridge)
    eps0_eff = Fraction(ridge, 1 << (2 * t))
    bound = m * (u_bound << t) ** 2 + ridge
    view = _SymmetricOperatorView(gram, bound)
    # targets on the scaled matrix: eigenvalues of 2^2t (A A^T + eps0 I)
    eps_scaled = float(eps0_eff / 10) * (1 << (2 * t))
    vec_eps = float(eps0_eff / 10) ** 2
    bsc, vals, scale_pow, sep = _perturb_and_extract(view, eps_scaled, rng, vec_eps)
    g5 = _dyadic_at_least(sep / 5, scale_pow)
    out_bits = max(32, math.ceil(math.log2(4 / vec_eps)) + 6)
    L = 64
    for idx, i in enumerate(reversed(range(len(vals)))):
        lam = vals[i]
        v_fl = _one_eigenvector(bsc, scale_pow, lam, g5, sep / 10, vec_eps,
                                derive_rng(rng, "vec", i))
        if v_fl is None:
            raise ResultCountMismatch(f"no eigenvector for eigenvalue {i}")
        uvec = [fixed_from_fraction(x.to_fraction(), out_bits) for x in v_fl]
        if idx >= m:
            yield uvec, None, None
            continue
        lam_frac = lam / (1 << (2 * t))      # eigenvalue of A A^T + eps0
        sig_sq = lam_frac - eps0_eff
        if sig_sq <= 0:
            yield uvec, fl_zero(L), [FixedL(0, out_bits)] * m
            continue
        sigma = fl_sqrt(fl_from_bigratio(sig_sq.numerator, sig_sq.denominator, L))
        atu = _apply_t_frac(a, [x.to_fraction() for x in v_fl])
        inv_sigma = fl_recip(sigma)
        vvec = [fl_mul(fl_from_bigratio(x.numerator, x.denominator, L), inv_sigma)
                for x in atu]
        yield uvec, sigma, [fixed_from_fraction(x.to_fraction(), out_bits)
                            for x in vvec]


def _apply_t_frac(a: SparseMatrix, v):
    out = [Fraction(0)] * a.m
    for i, j, x in zip(a.rows, a.cols, a.vals):
        out[j] += x * v[i]
    return out
